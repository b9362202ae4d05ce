from __future__ import annotations

from pathlib import Path
from typing import Literal

from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

MODULE_PATH = Path(__file__).parents[0]


class Settings(BaseSettings):
    """Grating DDM settings."""

    WINDOW_SIZE: float = Field(
        default=120.0,
        description="Window size A of the windowed quasi-periodic Green function. Must be at least twice the period.",
    )
    DISCRETIZATION: int = Field(
        default=256,
        description="Default number of equispaced nodes n per interface.",
    )
    WOOD_TOL: float = Field(
        default=1e-6,
        description="Relative tolerance |beta_r| <= WOOD_TOL * k under which a wavenumber is reported as a Wood anomaly.",
    )

    SIGMA_SCALE: float = Field(
        default=0.5,
        description="Scale of the default complexification sigma = SIGMA_SCALE * k^(1/3) * (2 pi / d)^(2/3).",
    )
    SIGMA_MIN: float = Field(
        default=0.4, description="Lower clip of the default complexification."
    )
    SIGMA_MAX: float = Field(
        default=2.0, description="Upper clip of the default complexification."
    )

    GMRES_TOL: float = Field(
        default=1e-4, description="Default relative residual tolerance of GMRES."
    )
    GMRES_MAX_ITER: int = Field(
        default=2000, description="Default maximum number of GMRES iterations."
    )
    CONDITION_LIMIT: float = Field(
        default=1e12,
        description="Condition number estimate above which an interior Robin system is treated as singular.",
    )

    LINE_OFFSET: float = Field(
        default=0.5,
        description="Distance between the outermost profile extrema and the lines on which Rayleigh amplitudes are extracted.",
    )
    PROFILE_SAMPLES: int = Field(
        default=4096,
        description="Number of samples used to locate profile extrema before local refinement.",
    )

    MAX_WORKERS: int = Field(
        default=1, description="Default number of worker processes for campaigns."
    )
    LOG_LEVEL: Literal["DEBUG", "INFO", "WARNING", "ERROR"] = Field(
        default="WARNING", description="Log level configured by the command-line interface."
    )

    model_config = SettingsConfigDict(env_prefix="GDDM_", extra="ignore")

    def __repr__(self) -> str:
        """Summarize settings."""
        return "Grating DDM settings\n" + "\n".join(
            f"  {key} = {val}" for key, val in self.model_dump().items()
        )

    def print(self) -> None:
        """Print settings."""
        print(self.__repr__())


SETTINGS = Settings()
