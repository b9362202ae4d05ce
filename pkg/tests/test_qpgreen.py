import numpy as np
import pytest

from grating_ddm.exceptions import ConfigurationError, SingularPointError
from grating_ddm.qpgreen import (
    WindowedGreenParams,
    free_green,
    free_green_grad,
    window,
    window_derivatives,
    windowed_qp_green,
    windowed_qp_green_grad,
    windowed_qp_green_hessian,
)


def test_free_green_value():
    np.testing.assert_allclose(free_green(1.0, [1.0, 0.0]), -0.0220642 + 0.1912994j, atol=1e-7)


def test_free_green_gradient_is_radial():
    x = np.array([[0.3, 0.4]])
    grad = free_green_grad(2.0, x)
    h = 1e-6
    fd = [
        (free_green(2.0, x + [h, 0]) - free_green(2.0, x - [h, 0])) / (2 * h),
        (free_green(2.0, x + [0, h]) - free_green(2.0, x - [0, h])) / (2 * h),
    ]
    np.testing.assert_allclose(grad[0], np.ravel(fd), rtol=1e-6)


def test_free_green_at_source_raises():
    with pytest.raises(SingularPointError):
        free_green(1.0, [0.0, 0.0])


def test_window_shape():
    r = np.linspace(0, 1.5, 301)
    chi = window(r)
    np.testing.assert_allclose(chi[r <= 0.5], 1.0)
    np.testing.assert_allclose(chi[r >= 1.0], 0.0)
    assert np.all(np.diff(chi) <= 1e-15)
    assert window(0.75) == pytest.approx(np.exp(2 * np.exp(-2) / (0.5 - 1)))


def test_window_derivative_matches_finite_difference():
    r = np.array([0.6, 0.75, 0.9])
    h = 1e-6
    _, d1, d2 = window_derivatives(r)
    np.testing.assert_allclose(d1, (window(r + h) - window(r - h)) / (2 * h), rtol=1e-5)
    np.testing.assert_allclose(d2, (window(r + h) - 2 * window(r) + window(r - h)) / h**2, rtol=1e-3, atol=1e-2)


def test_window_size_must_cover_two_periods():
    with pytest.raises(ConfigurationError, match="at least twice the period"):
        WindowedGreenParams(1.3, window_size=10.0)


def test_windowed_green_is_quasi_periodic():
    params = WindowedGreenParams(2.0 + 0.5j, alpha=0.3, window_size=100.0)
    x = np.array([[0.7, 0.4], [1.9, -0.8]])
    shifted = x + [params.period, 0.0]
    np.testing.assert_allclose(
        windowed_qp_green(params, shifted),
        np.exp(1j * params.alpha * params.period) * windowed_qp_green(params, x),
        rtol=1e-6,
    )


def test_windowed_green_gradient_and_hessian():
    params = WindowedGreenParams(1.3, alpha=0.2, window_size=20.0)
    x = np.array([[0.7, 0.4]])
    h = 1e-5
    steps = np.eye(2) * h
    grad = windowed_qp_green_grad(params, x)
    fd_grad = [
        (windowed_qp_green(params, x + step) - windowed_qp_green(params, x - step)) / (2 * h) for step in steps
    ]
    np.testing.assert_allclose(grad[0], np.ravel(fd_grad), rtol=1e-6)

    hessian = windowed_qp_green_hessian(params, x)
    fd_hessian = np.array(
        [
            (windowed_qp_green_grad(params, x + step) - windowed_qp_green_grad(params, x - step)) / (2 * h)
            for step in steps
        ]
    )
    np.testing.assert_allclose(hessian[0], fd_hessian[:, 0], rtol=1e-5)
    np.testing.assert_allclose(hessian[0, 0, 1], hessian[0, 1, 0])


def test_windowed_green_solves_helmholtz():
    params = WindowedGreenParams(2.0 + 0.5j, alpha=0.3, window_size=100.0)
    x = np.array([[0.7, 0.4], [1.9, -0.8], [-2.5, 1.6]])
    value = windowed_qp_green(params, x)
    hessian = windowed_qp_green_hessian(params, x)
    laplacian = hessian[:, 0, 0] + hessian[:, 1, 1]
    np.testing.assert_allclose(laplacian + params.wavenumber**2 * value, 0.0, atol=1e-8 * np.abs(value).max())


def test_windowed_green_on_image_raises():
    params = WindowedGreenParams(1.3, window_size=20.0)
    with pytest.raises(SingularPointError):
        windowed_qp_green(params, [[params.period, 0.0]])
