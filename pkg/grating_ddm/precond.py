"""Double-sweep preconditioner and exact block LU of the DD system."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy.linalg import lu_solve
from scipy.sparse.linalg import LinearOperator

from grating_ddm.ddm import BlockTridiagonalSystem
from grating_ddm.exceptions import ConfigurationError
from grating_ddm.rtr import lu_factor_checked

logger = logging.getLogger(__name__)

Mode = Literal["approximate", "exact"]


@dataclass(frozen=True, eq=False)
class SweepFactors:
    """Factors of B = (I + lower part)(I + upper part), or LU factors of every pivot block T_j."""

    system: BlockTridiagonalSystem
    mode: Mode = "approximate"
    pivots: tuple | None = None


def factorize(system: BlockTridiagonalSystem, mode: Mode = "approximate") -> SweepFactors:
    if mode == "approximate":
        return SweepFactors(system, mode)
    if mode != "exact":
        raise ConfigurationError(f"Unsupported sweep mode: {mode}")

    n = system.n
    pivots = [lu_factor_checked(system.diagonal_block(0), "Pivot block T_0")]
    for j in range(1, system.n_interfaces):
        # L_{j-1} T_{j-1}^{-1} U_{j-1} only fills the (2, 1) sub-block
        coupling = np.zeros((2 * n, n), dtype=complex)
        coupling[:n] = system.u_blocks[j - 1]
        solved = lu_solve(pivots[-1], coupling)[n:]
        block = system.diagonal_block(j)
        block[n:, :n] -= system.l_blocks[j - 1] @ solved
        pivots.append(lu_factor_checked(block, f"Pivot block T_{j}"))
    logger.debug(f"Exact block LU of {system.n_interfaces} pivot blocks")
    return SweepFactors(system, mode, tuple(pivots))


def _approximate_sweep(system: BlockTridiagonalSystem, r: np.ndarray) -> np.ndarray:
    z = r.reshape(system.n_interfaces, 2, system.n).copy()
    for j in range(1, system.n_interfaces):
        z[j, 1] -= system.l_blocks[j - 1] @ z[j - 1, 1]
    for j in range(system.n_interfaces - 2, -1, -1):
        z[j, 0] -= system.u_blocks[j] @ z[j + 1, 0]
    return z.reshape(-1)


def _exact_sweep(factors: SweepFactors, r: np.ndarray) -> np.ndarray:
    system, n = factors.system, factors.system.n
    count = system.n_interfaces
    y = r.reshape(count, 2 * n).copy()
    for j in range(1, count):
        carried = lu_solve(factors.pivots[j - 1], y[j - 1])
        y[j, n:] -= system.l_blocks[j - 1] @ carried[n:]
    z = np.empty_like(y)
    z[-1] = lu_solve(factors.pivots[-1], y[-1])
    for j in range(count - 2, -1, -1):
        rhs = y[j].copy()
        rhs[:n] -= system.u_blocks[j] @ z[j + 1, :n]
        z[j] = lu_solve(factors.pivots[j], rhs)
    return z.reshape(-1)


def apply_sweep(factors: SweepFactors, r: np.ndarray) -> np.ndarray:
    """Solve B z = r (approximate mode) or A z = r (exact mode) by a downward then upward sweep."""
    r = np.asarray(r, dtype=complex)
    if r.shape != (factors.system.shape[0],):
        raise ConfigurationError(f"Vector of shape {r.shape} does not match system size {factors.system.shape[0]}")
    if factors.mode == "approximate":
        return _approximate_sweep(factors.system, r)
    return _exact_sweep(factors, r)


def preconditioned_apply(system: BlockTridiagonalSystem, factors: SweepFactors, x: np.ndarray) -> np.ndarray:
    return apply_sweep(factors, system.apply(x))


def preconditioner(factors: SweepFactors) -> LinearOperator:
    shape = factors.system.shape
    return LinearOperator(shape, matvec=lambda r: apply_sweep(factors, r), dtype=complex)


def preconditioned_operator(system: BlockTridiagonalSystem, factors: SweepFactors) -> LinearOperator:
    return LinearOperator(system.shape, matvec=lambda x: preconditioned_apply(system, factors, x), dtype=complex)
