"""Free-space and windowed alpha-quasi-periodic Green functions of the 2D Helmholtz equation.

The quasi-periodic Green function is approximated by the smoothly truncated image sum

    G^{q,A}(x) = sum_m exp(-i alpha m d) G_k(x1 + m d, x2) chi(r_m / A),

which converges superalgebraically in A away from Wood anomalies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.special import hankel1

from grating_ddm.exceptions import ConfigurationError, SingularPointError
from grating_ddm.geometry import TWO_PI, QuasiPeriodicity
from grating_ddm.settings import SETTINGS

SINGULAR_TOL = 1e-14


@dataclass(frozen=True)
class WindowedGreenParams:
    wavenumber: complex
    alpha: float = 0.0
    period: float = TWO_PI
    window_size: float = field(default_factory=lambda: SETTINGS.WINDOW_SIZE)

    def __post_init__(self):
        if self.window_size < 2 * self.period:
            raise ConfigurationError(
                f"Window size A = {self.window_size} must be at least twice the period {self.period}"
            )
        if complex(self.wavenumber).imag < 0:
            raise ConfigurationError(f"Wavenumber must satisfy Im k >= 0, got {self.wavenumber}")

    @classmethod
    def from_qp(cls, k: complex, qp: QuasiPeriodicity, window_size: float | None = None):
        if window_size is None:
            window_size = SETTINGS.WINDOW_SIZE
        return cls(k, qp.alpha, qp.period, window_size)

    @property
    def image_range(self) -> int:
        return math.ceil(self.window_size / self.period) + 1


def window(r) -> np.ndarray:
    """Smooth cutoff: 1 for r <= 1/2, 0 for r >= 1, C-infinity and decreasing in between."""
    return window_derivatives(r)[0]


def window_derivatives(r) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """chi(r) and its first two derivatives with respect to r."""
    shape = np.shape(r)
    r = np.atleast_1d(np.asarray(r, dtype=float))
    chi = np.where(r <= 0.5, 1.0, 0.0)
    d1 = np.zeros_like(r)
    d2 = np.zeros_like(r)
    transition = (r > 0.5) & (r < 1.0)
    if not transition.any():
        return chi.reshape(shape), d1.reshape(shape), d2.reshape(shape)

    u = 2 * r[transition] - 1
    a = np.exp(-1 / u)
    b = 1 / (u - 1)
    g = 2 * a * b
    da = a / u**2
    dda = a * (1 / u**4 - 2 / u**3)
    db = -(b**2)
    ddb = 2 * b**3
    dg = 2 * (da * b + a * db)
    ddg = 2 * (dda * b + 2 * da * db + a * ddb)

    # past this point exp(g) underflows and the derivative products are 0 * inf
    alive = g > -700
    e = np.where(alive, np.exp(np.where(alive, g, 0.0)), 0.0)
    chi[transition] = e
    d1[transition] = np.where(alive, 2 * e * dg, 0.0)
    d2[transition] = np.where(alive, 4 * e * (dg**2 + ddg), 0.0)
    return chi.reshape(shape), d1.reshape(shape), d2.reshape(shape)


class LatticeSum(NamedTuple):
    value: np.ndarray
    grad: np.ndarray | None
    hessian: np.ndarray | None


def _split(x) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != 2:
        raise ConfigurationError(f"Points must have a trailing axis of length 2, got shape {x.shape}")
    return x[..., 0], x[..., 1]


def _free_terms(k: complex, z1: np.ndarray, z2: np.ndarray, r: np.ndarray, order: int):
    """(value, grad coefficient, zz coefficient, delta coefficient) of G_k at separation z."""
    kr = k * r
    h0 = hankel1(0, kr)
    h1 = hankel1(1, kr) if order >= 1 else None
    value = 0.25j * h0
    grad = -0.25j * k * h1 / r if order >= 1 else None  # grad G = grad * z
    if order < 2:
        return value, grad, None, None
    zz = 0.25j * (-(k**2) * h0 / r**2 + 2 * k * h1 / r**3)
    delta = -0.25j * k * h1 / r  # hess G = zz * z z^T + delta * I
    return value, grad, zz, delta


def lattice_sum(
    p: WindowedGreenParams, x1, x2, order: int = 0, skip_singular: bool = False
) -> LatticeSum:
    """Windowed image sum of G_k and optionally its gradient and Hessian.

    ``grad`` has shape (2, ...) and ``hessian`` (3, ...) holding (h11, h12, h22).
    With ``skip_singular`` images coinciding with the evaluation point are left out
    instead of raising.
    """
    x1, x2 = np.broadcast_arrays(np.asarray(x1, dtype=float), np.asarray(x2, dtype=float))
    k = complex(p.wavenumber)
    d, A = p.period, p.window_size
    value = np.zeros(x1.shape, dtype=complex)
    grad = np.zeros((2, *x1.shape), dtype=complex) if order >= 1 else None
    hess = np.zeros((3, *x1.shape), dtype=complex) if order >= 2 else None

    for m in range(-p.image_range, p.image_range + 1):
        z1_all = x1 + m * d
        r_all = np.hypot(z1_all, x2)
        singular = r_all <= SINGULAR_TOL * d
        if singular.any() and not skip_singular:
            raise SingularPointError(f"Green function evaluated on the source image m = {m}")
        active = (r_all < A) & ~singular
        if not active.any():
            continue

        z1, z2, r = z1_all[active], x2[active], r_all[active]
        phase = np.exp(-1j * p.alpha * m * d)
        chi, dchi, ddchi = window_derivatives(r / A)
        dchi = dchi / A
        ddchi = ddchi / A**2
        g, gr, gzz, gdelta = _free_terms(k, z1, z2, r, order)
        value[active] += phase * g * chi
        if order >= 1:
            coef = gr * chi + g * dchi / r
            grad[0][active] += phase * coef * z1
            grad[1][active] += phase * coef * z2
        if order >= 2:
            czz = gzz * chi + 2 * gr * dchi / r + g * (ddchi / r**2 - dchi / r**3)
            cdelta = gdelta * chi + g * dchi / r
            hess[0][active] += phase * (czz * z1 * z1 + cdelta)
            hess[1][active] += phase * czz * z1 * z2
            hess[2][active] += phase * (czz * z2 * z2 + cdelta)
    return LatticeSum(value, grad, hess)


def _free(k: complex, x, order: int):
    x1, x2 = _split(x)
    r = np.hypot(x1, x2)
    if np.any(r <= SINGULAR_TOL):
        raise SingularPointError("Free-space Green function evaluated at the source point")
    return x1, x2, _free_terms(complex(k), x1, x2, r, order)


def free_green(k: complex, x) -> np.ndarray:
    """(i/4) H_0^(1)(k |x|)."""
    _, _, (value, *_) = _free(k, x, 0)
    return value


def free_green_grad(k: complex, x) -> np.ndarray:
    x1, x2, (_, grad, *_) = _free(k, x, 1)
    return np.stack([grad * x1, grad * x2], axis=-1)


def free_green_hessian(k: complex, x) -> np.ndarray:
    x1, x2, (_, _, zz, delta) = _free(k, x, 2)
    h11 = zz * x1 * x1 + delta
    h12 = zz * x1 * x2
    h22 = zz * x2 * x2 + delta
    return np.stack([np.stack([h11, h12], axis=-1), np.stack([h12, h22], axis=-1)], axis=-2)


def windowed_qp_green(p: WindowedGreenParams, x) -> np.ndarray:
    x1, x2 = _split(x)
    return lattice_sum(p, x1, x2).value


def windowed_qp_green_grad(p: WindowedGreenParams, x) -> np.ndarray:
    x1, x2 = _split(x)
    grad = lattice_sum(p, x1, x2, order=1).grad
    return np.stack([grad[0], grad[1]], axis=-1)


def windowed_qp_green_hessian(p: WindowedGreenParams, x) -> np.ndarray:
    x1, x2 = _split(x)
    h11, h12, h22 = lattice_sum(p, x1, x2, order=2).hessian
    return np.stack([np.stack([h11, h12], axis=-1), np.stack([h12, h22], axis=-1)], axis=-2)
