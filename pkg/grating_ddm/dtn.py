"""Fourier multipliers and shape-perturbation approximations of Dirichlet-to-Neumann maps.

All transmission operators follow the orientation in which the half-space DtN
with respect to the outward normal has the symbol -i beta_r. Perturbation terms
are assembled on a 3/2-refined grid and projected back so that products of the
profile with trigonometric densities do not alias.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Literal, NamedTuple

import numpy as np
from scipy.linalg import block_diag

from grating_ddm.exceptions import ConfigurationError
from grating_ddm.fourier import QuasiPeriodicBasis
from grating_ddm.geometry import GratingProfile, QuasiPeriodicity, sqrt_branch
from grating_ddm.settings import SETTINGS

logger = logging.getLogger(__name__)

Family = Literal["semi", "slab", "flat", "despres", "hilbert", "numerical"]
Side = Literal["up", "down"]
MAX_ORDER = 2


@dataclass(frozen=True, eq=False)
class FourierMultiplier:
    """Diagonal operator in the alpha-quasi-periodic Fourier basis; ``symbol`` is in FFT mode order."""

    symbol: np.ndarray
    basis: QuasiPeriodicBasis

    @property
    def n(self) -> int:
        return self.basis.n

    @property
    def qp(self) -> QuasiPeriodicity:
        return self.basis.qp

    def __getitem__(self, r: int) -> complex:
        return complex(self.symbol[r % self.n])

    def apply(self, values: np.ndarray) -> np.ndarray:
        return self.basis.apply(self.symbol, values)

    @cached_property
    def matrix(self) -> np.ndarray:
        return self.basis.multiplier_matrix(self.symbol)

    def __matmul__(self, other):
        if isinstance(other, FourierMultiplier):
            return FourierMultiplier(self.symbol * other.symbol, self.basis)
        return self.apply(other)


@dataclass(frozen=True, eq=False)
class TransmissionOperator:
    matrix: np.ndarray
    family: Family
    qp: QuasiPeriodicity
    wavenumber: complex | None = None
    order: int | None = None
    sigma: float | None = None

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    def apply(self, values: np.ndarray) -> np.ndarray:
        return self.matrix @ values

    def __matmul__(self, values: np.ndarray) -> np.ndarray:
        return self.matrix @ values


class SlabOperator(NamedTuple):
    """2x2 DtN blocks of a bounded layer; first index is the target interface."""

    top_top: TransmissionOperator
    top_bottom: TransmissionOperator
    bottom_top: TransmissionOperator
    bottom_bottom: TransmissionOperator


def complexify(k: complex, sigma: float) -> complex:
    return complex(k) + 1j * sigma


def default_sigma(k: float, period: float) -> float:
    """Damping sigma = scale * k^(1/3) * (2 pi / d)^(2/3), clipped to [SIGMA_MIN, SIGMA_MAX]."""
    raw = SETTINGS.SIGMA_SCALE * abs(k) ** (1 / 3) * (2 * np.pi / period) ** (2 / 3)
    return float(np.clip(raw, SETTINGS.SIGMA_MIN, SETTINGS.SIGMA_MAX))


def _beta_symbol(k: complex, basis: QuasiPeriodicBasis) -> np.ndarray:
    return sqrt_branch(complex(k) ** 2 - basis.alpha_r**2)


def beta_multiplier(k: complex, qp: QuasiPeriodicity, n: int) -> FourierMultiplier:
    """Multiplier r -> (k^2 - alpha_r^2)^(1/2) on the branch with sqrt(1) = 1."""
    basis = QuasiPeriodicBasis(n, qp)
    symbol = _beta_symbol(k, basis)
    k = complex(k)
    if k.imag == 0 and np.any(np.abs(symbol) <= 1e-14 * max(1.0, abs(k))):
        wood = basis.modes[np.abs(symbol) <= 1e-14 * max(1.0, abs(k))]
        raise ConfigurationError(f"Wavenumber k = {k.real} hits a Wood anomaly at modes {wood.tolist()}")
    return FourierMultiplier(symbol, basis)


def _check_order(order: int) -> None:
    if order not in range(MAX_ORDER + 1):
        raise ConfigurationError(f"Perturbation order must be 0, 1 or 2, got {order}")


def _fine_size(n: int) -> int:
    return 2 * math.ceil(3 * n / 4)


def dtn_series_semi(
    k_or_kappa: complex,
    profile: GratingProfile,
    side: Side,
    L: int,
    qp: QuasiPeriodicity,
    n: int,
) -> TransmissionOperator:
    """Order-L shape-perturbation DtN of the semi-infinite domain on ``side`` of ``profile``.

    The roughness is absorbed into the deviation eps * F~, so the result is
    Y_0 + Y_1 + ... + Y_L with Y_l homogeneous of degree l in the deviation.
    The lower domain uses Y^-_l = (-1)^l Y^+_l.
    """
    _check_order(L)
    if side not in ("up", "down"):
        raise ConfigurationError(f"Unknown side for semi-infinite DtN: {side}")
    if L > 0 and not profile.smooth and not profile.is_flat:
        raise ConfigurationError("Perturbation orders L >= 1 require a smooth profile")

    kappa = complex(k_or_kappa)
    coarse = beta_multiplier(kappa, qp, n)
    zeroth = -1j * coarse.matrix
    if L == 0 or profile.is_flat:
        return TransmissionOperator(zeroth, "semi", qp, kappa, L)

    basis = coarse.basis
    m = _fine_size(n)
    fine = basis.refined(m)
    beta = fine.multiplier_matrix(_beta_symbol(kappa, fine))
    derivative = fine.derivative_matrix
    shape = np.diag(profile.deviation(fine.nodes)).astype(complex)
    slope = np.diag(profile.derivative(fine.nodes, 1)).astype(complex)

    def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
        return a @ b - b @ a

    terms = [-1j * beta]
    terms.append(slope @ derivative - commutator(beta, shape) @ beta)
    if L >= 2:
        half_square = shape @ shape / 2
        terms.append(
            1j * beta @ (-commutator(beta, half_square) @ beta + shape @ commutator(beta, shape) @ beta)
        )

    sign = 1 if side == "up" else -1
    total = sum(sign**order * term for order, term in enumerate(terms))
    matrix = basis.truncation_matrix(m) @ total @ basis.interpolation_matrix(m)
    logger.debug(f"Semi-infinite DtN series: side={side}, L={L}, n={n}, fine grid {m}")
    return TransmissionOperator(matrix, "semi", qp, kappa, L)


def _stable_hyperbolic(z: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(coth z, csch z, exp(-2 s z)) with s = sign(Re z), free of overflow."""
    s = np.where(z.real >= 0, 1.0, -1.0)
    w2 = np.exp(-2 * s * z)
    coth = s * (1 + w2) / (1 - w2)
    csch = 2 * s * np.exp(-s * z) / (1 - w2)
    return coth, csch, w2


def _shch_over_sinh(order: int, z: np.ndarray, w2: np.ndarray) -> np.ndarray:
    """shch_order(z) / sinh(z) with shch_n(z) = (e^z - (-1)^n e^-z) / 2."""
    p = (-1) ** order
    return np.where(z.real >= 0, (1 - p * w2) / (1 - w2), (p - w2) / (1 - w2))


def _shch_zero(order: int) -> float:
    return float(order % 2)


def dtn_series_slab(
    k_or_kappa: complex,
    top: GratingProfile,
    bottom: GratingProfile,
    L: int,
    qp: QuasiPeriodicity,
    n: int,
) -> SlabOperator:
    """Order-L shape-perturbation DtN of the bounded layer between ``top`` and ``bottom``.

    Outward normals on both interfaces. The recursion loses accuracy through
    cancellation for rough profiles; it is evaluated as is.
    """
    _check_order(L)
    for profile in (top, bottom):
        if L > 0 and not profile.smooth and not profile.is_flat:
            raise ConfigurationError("Perturbation orders L >= 1 require smooth profiles")
    height = top.mean_height - bottom.mean_height
    if height <= 0:
        raise ConfigurationError(f"Layer thickness must be positive, got {height}")

    kappa = complex(k_or_kappa)
    basis = QuasiPeriodicBasis(n, qp)
    flat = L == 0 or (top.is_flat and bottom.is_flat)
    grid = basis if flat else basis.refined(_fine_size(n))
    size = grid.n

    ib = 1j * _beta_symbol(kappa, grid)
    z = height * ib
    coth, csch, w2 = _stable_hyperbolic(z)
    if kappa.imag == 0 and np.any(np.abs(1 - w2) < 1e-12):
        raise ConfigurationError(f"Slab DtN symbol is singular for k = {kappa.real} and thickness {height}")

    def blocks(a, b, c, d) -> np.ndarray:
        return np.block(
            [[grid.multiplier_matrix(a), grid.multiplier_matrix(b)], [grid.multiplier_matrix(c), grid.multiplier_matrix(d)]]
        )

    terms = [blocks(ib * coth, -ib * csch, -ib * csch, ib * coth)]
    if not flat:
        top_shape = top.deviation(grid.nodes).astype(complex)
        bottom_shape = bottom.deviation(grid.nodes).astype(complex)

        def profile_power(order: int) -> np.ndarray:
            scale = 1 / math.factorial(order)
            return np.diag(np.concatenate([top_shape**order, bottom_shape**order]) * scale)

        def correction(order: int, index: int, bottom_sign: float) -> np.ndarray:
            power = ib**order
            ratio = power * _shch_over_sinh(index, z, w2)
            corner = power * _shch_zero(index) * csch
            sign = (-1) ** order
            return profile_power(order) @ blocks(
                ratio, -sign * corner if index == order + 1 else sign * corner, bottom_sign * corner, sign * ratio
            )

        inverse_ib = block_diag(*[grid.multiplier_matrix(1 / ib)] * 2)
        derivative = block_diag(grid.derivative_matrix, grid.derivative_matrix)
        k_squared = kappa**2
        for order in range(1, L + 1):
            c_n = correction(order, order + 1, -1.0)
            term = -k_squared * c_n @ inverse_ib - derivative @ c_n @ inverse_ib @ derivative
            for lower in range(order):
                term = term - terms[lower] @ correction(order - lower, order - lower, 1.0)
            terms.append(term)

    total = sum(terms)
    if not flat:
        restrict = block_diag(*[basis.truncation_matrix(size)] * 2)
        extend = block_diag(*[basis.interpolation_matrix(size)] * 2)
        total = restrict @ total @ extend
    logger.debug(f"Slab DtN series: h={height:.4g}, L={L}, n={n}")

    def wrap(matrix: np.ndarray) -> TransmissionOperator:
        return TransmissionOperator(matrix, "slab", qp, kappa, L)

    return SlabOperator(
        wrap(total[:n, :n]), wrap(total[:n, n:]), wrap(total[n:, :n]), wrap(total[n:, n:])
    )


def flat_transmission(k: complex, sigma: float, qp: QuasiPeriodicity, n: int) -> TransmissionOperator:
    """-i beta_D(k + i sigma), the complexified half-space DtN."""
    if sigma <= 0:
        raise ConfigurationError(f"Complexification sigma must be positive, got {sigma}")
    kappa = complexify(k, sigma)
    matrix = -1j * beta_multiplier(kappa, qp, n).matrix
    return TransmissionOperator(matrix, "flat", qp, kappa, 0, sigma)


def despres_operator(n: int, qp: QuasiPeriodicity | None = None) -> TransmissionOperator:
    """Classical Robin operator, -i times the identity in the outward-normal orientation."""
    return TransmissionOperator(-1j * np.eye(n, dtype=complex), "despres", qp or QuasiPeriodicity())


def hilbert_operator(n: int, qp: QuasiPeriodicity) -> TransmissionOperator:
    """-i T with T = d/dt (log-kernel convolution) d/dt + I, whose symbol is |m| + 1."""
    basis = QuasiPeriodicBasis(n, qp)
    symbol = np.abs(basis.modes) + 1.0
    return TransmissionOperator(-1j * basis.multiplier_matrix(symbol), "hilbert", qp)


def is_coercive(op: TransmissionOperator, samples: int = 50, seed: int = 0) -> bool:
    """Whether Im <Z phi, phi> < 0 on random trigonometric densities."""
    basis = QuasiPeriodicBasis(op.n, op.qp)
    rng = np.random.default_rng(seed)
    band = np.abs(basis.modes) <= op.n // 4
    for _ in range(samples):
        coefficients = np.zeros(op.n, dtype=complex)
        coefficients[band] = rng.standard_normal(band.sum()) + 1j * rng.standard_normal(band.sum())
        phi = basis.inverse(coefficients)
        if np.vdot(phi, op.matrix @ phi).imag >= 0:
            return False
    return True
