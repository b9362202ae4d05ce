"""Nystrom discretization of the weighted quasi-periodic boundary integral operators.

Single-layer densities are weighted: they absorb the arc-length factor |y'|, so
every operator integrates against dy1 over one period and normals are the
non-unit upward normals (-F', 1) stored on the grids. Self-interactions use the
Martensen-Kussmaul splitting of the nearest image's logarithmic singularity;
interactions between distinct, separated curves use the trapezoidal rule.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Literal

import numpy as np
from scipy.special import jv

from grating_ddm.exceptions import UnsupportedGeometryError
from grating_ddm.fourier import QuasiPeriodicBasis
from grating_ddm.geometry import TWO_PI, InterfaceGrid, QuasiPeriodicity, vertical_gap
from grating_ddm.qpgreen import WindowedGreenParams, lattice_sum, window

logger = logging.getLogger(__name__)

Kind = Literal["S", "K", "KT", "N"]
_ORDER = {"S": 0, "K": 1, "KT": 1, "N": 2}
EULER_GAMMA = np.euler_gamma


@dataclass(frozen=True, eq=False)
class NystromOperator:
    """Dense matrix of a weighted operator from ``source`` nodal densities to ``target`` nodes."""

    matrix: np.ndarray
    source: InterfaceGrid
    target: InterfaceGrid
    kind: Kind
    wavenumber: complex

    def __matmul__(self, density: np.ndarray) -> np.ndarray:
        return self.matrix @ density

    def apply(self, density: np.ndarray) -> np.ndarray:
        return self.matrix @ density

    def dump(self, path: str | Path) -> None:
        """Write the matrix as raw row-major complex128 (debugging aid, not a stable format)."""
        np.ascontiguousarray(self.matrix, dtype=np.complex128).tofile(Path(path))


def mk_weights(n: int) -> np.ndarray:
    """Weights R_q with int_0^{2pi} ln(4 sin^2((t_i - tau)/2)) f(tau) dtau ~ sum_j R_{(i-j) mod n} f(tau_j)."""
    delta = TWO_PI * np.arange(n) / n
    m = np.arange(1, n // 2)
    series = (np.cos(np.outer(delta, m)) / m).sum(axis=1)
    return -(2 * TWO_PI / n) * series - (2 * TWO_PI / n**2) * np.cos(n * delta / 2)


def _circulant(column: np.ndarray) -> np.ndarray:
    n = column.size
    index = np.subtract.outer(np.arange(n), np.arange(n)) % n
    return column[index]


def is_self_interaction(src: InterfaceGrid, tgt: InterfaceGrid) -> bool:
    return src is tgt or (src.profile == tgt.profile and src.n == tgt.n)


def _check_separated(src: InterfaceGrid, tgt: InterfaceGrid) -> None:
    if vertical_gap(src.profile, tgt.profile) <= 0 and vertical_gap(tgt.profile, src.profile) <= 0:
        low, high = sorted((src.profile.mean_height, tgt.profile.mean_height))
        raise UnsupportedGeometryError(f"Interfaces around heights {low:.6g} and {high:.6g} touch")


def _separations(tgt: InterfaceGrid, src: InterfaceGrid) -> tuple[np.ndarray, np.ndarray]:
    z1 = np.subtract.outer(tgt.points[:, 0], src.points[:, 0])
    z2 = np.subtract.outer(tgt.points[:, 1], src.points[:, 1])
    return z1, z2


def _kernel(kind: Kind, params: WindowedGreenParams, tgt, src, z1, z2, skip_singular: bool):
    terms = lattice_sum(params, z1, z2, _ORDER[kind], skip_singular=skip_singular)
    nx, ny = tgt.normals, src.normals
    if kind == "S":
        return terms.value
    if kind == "KT":
        return nx[:, 0, None] * terms.grad[0] + nx[:, 1, None] * terms.grad[1]
    if kind == "K":
        return -(ny[None, :, 0] * terms.grad[0] + ny[None, :, 1] * terms.grad[1])
    h11, h12, h22 = terms.hessian
    return -(
        nx[:, 0, None] * (h11 * ny[None, :, 0] + h12 * ny[None, :, 1])
        + nx[:, 1, None] * (h12 * ny[None, :, 0] + h22 * ny[None, :, 1])
    )


def _log_coefficient(kind: Kind, k: complex, grid: InterfaceGrid, zn1, z2, r):
    """Coefficient of ln(4 sin^2((t - tau)/2)) in the nearest-image kernel."""
    if kind == "S":
        return -jv(0, k * r) / (2 * TWO_PI)
    r_safe = np.where(r == 0, 1.0, r)
    j1_over_r = np.where(r == 0, k / 2, jv(1, k * r_safe) / r_safe)
    if kind == "KT":
        normal = grid.normals[:, None, :]
        projection = zn1 * normal[..., 0] + z2 * normal[..., 1]
        return k / (2 * TWO_PI) * j1_over_r * projection
    normal = grid.normals[None, :, :]
    projection = zn1 * normal[..., 0] + z2 * normal[..., 1]
    return -k / (2 * TWO_PI) * j1_over_r * projection


def _diagonal_limit(kind: Kind, k: complex, grid: InterfaceGrid) -> np.ndarray:
    """Limit of the smooth remainder of the nearest image on the diagonal."""
    if kind == "S":
        scale = grid.jacobian * grid.period / TWO_PI
        return 0.25j - (EULER_GAMMA + np.log(k / 2) + np.log(scale)) / TWO_PI
    # both double-layer kernels tend to n.x'' / (4 pi |x'|^2)
    return grid.second_derivative / (2 * TWO_PI * grid.jacobian**2)


def _mk_matrix(
    kind: Kind, params: WindowedGreenParams, grid: InterfaceGrid, multiplier: np.ndarray | None = None
) -> np.ndarray:
    k = complex(params.wavenumber)
    n, d = grid.n, grid.period
    z1, z2 = _separations(grid, grid)
    full = _kernel(kind, params, grid, grid, z1, z2, skip_singular=True)

    image = -np.rint(z1 / d)
    zn1 = z1 + image * d
    r = np.hypot(zn1, z2)
    delta = TWO_PI * zn1 / d
    cutoff = window(np.abs(delta) / np.pi)
    log_part = _log_coefficient(kind, k, grid, zn1, z2, r) * np.exp(-1j * params.alpha * image * d) * cutoff

    diagonal = np.diag_indices(n)
    log_kernel = np.log(4 * np.sin(delta / 2) ** 2 + np.eye(n))
    remainder = full - log_part * log_kernel
    remainder[diagonal] = full[diagonal] + _diagonal_limit(kind, k, grid)
    if multiplier is not None:
        log_part = log_part * multiplier
        remainder = remainder * multiplier

    return d / TWO_PI * (_circulant(mk_weights(n)) * log_part + TWO_PI / n * remainder)


def _assemble(
    kind: Kind,
    k: complex,
    src: InterfaceGrid,
    tgt: InterfaceGrid,
    qp: QuasiPeriodicity,
    window_size: float | None,
) -> NystromOperator:
    params = WindowedGreenParams.from_qp(k, qp, window_size)
    start = time.perf_counter()
    if is_self_interaction(src, tgt):
        if kind == "N":
            matrix = _hypersingular_self(params, src, qp)
        else:
            matrix = _mk_matrix(kind, params, src)
    else:
        _check_separated(src, tgt)
        z1, z2 = _separations(tgt, src)
        matrix = src.weight * _kernel(kind, params, tgt, src, z1, z2, skip_singular=False)
    logger.debug(
        f"Assembled {kind} ({tgt.n}x{src.n}, k={k}) in {time.perf_counter() - start:.3f}s"
    )
    return NystromOperator(matrix, src, tgt, kind, k)


def _hypersingular_self(params: WindowedGreenParams, grid: InterfaceGrid, qp: QuasiPeriodicity) -> np.ndarray:
    """N = D S D + k^2 S[n_x . n_y] (Maue's identity in the x1 parametrization)."""
    if not grid.profile.smooth:
        logger.warning("Hypersingular operator on a non-smooth profile: expect reduced convergence order")
    k = complex(params.wavenumber)
    derivative = QuasiPeriodicBasis(grid.n, qp).derivative_matrix
    single = _mk_matrix("S", params, grid)
    normals_dot = np.outer(grid.derivative, grid.derivative) + 1.0
    weighted = _mk_matrix("S", params, grid, multiplier=normals_dot)
    return derivative @ single @ derivative + k**2 * weighted


def assemble_single_layer(k, src, tgt, qp, A=None) -> NystromOperator:
    """Weighted single layer: phi -> int_0^d G(x - y(y1)) phi(y1) dy1."""
    return _assemble("S", k, src, tgt, qp, A)


def assemble_adjoint_double_layer(k, src, tgt, qp, A=None) -> NystromOperator:
    """Weighted adjoint double layer with the target's upward normal, jump terms excluded."""
    return _assemble("KT", k, src, tgt, qp, A)


def assemble_double_layer(k, src, tgt, qp, A=None) -> NystromOperator:
    """Double layer with the source's upward normal acting on unweighted densities, jump excluded."""
    return _assemble("K", k, src, tgt, qp, A)


def assemble_hypersingular(k, src, tgt, qp, A=None) -> NystromOperator:
    """Upward normal derivative (target normal) of the double layer."""
    return _assemble("N", k, src, tgt, qp, A)
