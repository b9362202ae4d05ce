from grating_ddm.settings import SETTINGS, Settings


def test_environment_overrides(monkeypatch):
    monkeypatch.setenv("GDDM_DISCRETIZATION", "64")
    monkeypatch.setenv("GDDM_LOG_LEVEL", "DEBUG")
    settings = Settings()
    assert settings.DISCRETIZATION == 64
    assert settings.LOG_LEVEL == "DEBUG"


def test_defaults():
    assert SETTINGS.WINDOW_SIZE >= 4 * 3.14159
    assert SETTINGS.SIGMA_MIN < SETTINGS.SIGMA_MAX
    assert "WINDOW_SIZE" in repr(SETTINGS)
