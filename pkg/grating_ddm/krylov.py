"""GMRES with modified Gram-Schmidt, one reorthogonalization pass and complex Givens rotations."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular
from scipy.sparse.linalg import aslinearoperator

from grating_ddm.exceptions import ConfigurationError
from grating_ddm.settings import SETTINGS

logger = logging.getLogger(__name__)

BREAKDOWN_TOL = 1e-14


@dataclass(frozen=True)
class GmresConfig:
    rel_tol: float = field(default_factory=lambda: SETTINGS.GMRES_TOL)
    max_iter: int = field(default_factory=lambda: SETTINGS.GMRES_MAX_ITER)
    restart: int | None = None

    def __post_init__(self):
        if not 0 < self.rel_tol < 1:
            raise ConfigurationError(f"GMRES tolerance must lie in (0, 1), got {self.rel_tol}")
        if self.max_iter < 1:
            raise ConfigurationError(f"GMRES needs at least one iteration, got max_iter={self.max_iter}")
        if self.restart is not None and self.restart < 1:
            raise ConfigurationError(f"GMRES restart length must be positive, got {self.restart}")


@dataclass(frozen=True)
class SolveReport:
    """Iteration count and relative residual history (first entry 1.0) of one solve."""

    iterations: int
    residual_history: tuple[float, ...]
    converged: bool

    @property
    def final_residual(self) -> float:
        return self.residual_history[-1]


def _cycle(apply, r0: np.ndarray, scale: float, steps: int, tol: float, history: list[float]):
    """One Arnoldi cycle from residual r0; returns (correction, steps taken, converged)."""
    size = r0.size
    basis = np.zeros((steps + 1, size), dtype=complex)
    hessenberg = np.zeros((steps + 1, steps), dtype=complex)
    cosines = np.zeros(steps, dtype=complex)
    sines = np.zeros(steps, dtype=complex)
    g = np.zeros(steps + 1, dtype=complex)

    beta = np.linalg.norm(r0)
    basis[0] = r0 / beta
    g[0] = beta
    taken = 0
    converged = False
    for j in range(steps):
        w = apply(basis[j])
        for _ in range(2):
            for i in range(j + 1):
                projection = np.vdot(basis[i], w)
                hessenberg[i, j] += projection
                w = w - projection * basis[i]
        norm = np.linalg.norm(w)
        hessenberg[j + 1, j] = norm

        for i in range(j):
            upper, lower = hessenberg[i, j], hessenberg[i + 1, j]
            hessenberg[i, j] = np.conj(cosines[i]) * upper + np.conj(sines[i]) * lower
            hessenberg[i + 1, j] = -sines[i] * upper + cosines[i] * lower
        a, b = hessenberg[j, j], hessenberg[j + 1, j]
        denominator = np.hypot(abs(a), abs(b))
        cosines[j], sines[j] = a / denominator, b / denominator
        hessenberg[j, j] = denominator
        hessenberg[j + 1, j] = 0.0
        g[j + 1] = -sines[j] * g[j]
        g[j] = np.conj(cosines[j]) * g[j]

        taken = j + 1
        history.append(abs(g[j + 1]) / scale)
        if history[-1] <= tol:
            converged = True
            break
        if norm <= BREAKDOWN_TOL * beta:
            converged = True  # invariant subspace: the least-squares solution is exact
            break
        basis[j + 1] = w / norm

    y = solve_triangular(hessenberg[:taken, :taken], g[:taken])
    return basis[:taken].T @ y, taken, converged


def gmres(op, b: np.ndarray, cfg: GmresConfig | None = None, M=None, x0: np.ndarray | None = None):
    """Solve op x = b, left-preconditioned by M when given (i.e. M op x = M b).

    Returns the solution and a SolveReport; residuals are those of the
    (preconditioned) system GMRES minimizes, relative to its right-hand side.
    """
    cfg = cfg or GmresConfig()
    op = aslinearoperator(op)
    if op.shape[0] != op.shape[1]:
        raise ConfigurationError(f"GMRES needs a square operator, got shape {op.shape}")
    b = np.asarray(b, dtype=complex)
    if not np.all(np.isfinite(b)):
        raise ConfigurationError("Right-hand side contains non-finite entries")

    if M is None:
        apply, rhs = op.matvec, b
    else:
        M = aslinearoperator(M)

        def apply(x):
            return M.matvec(op.matvec(x))

        rhs = M.matvec(b)

    x = np.zeros_like(b) if x0 is None else np.asarray(x0, dtype=complex).copy()
    scale = np.linalg.norm(rhs)
    if scale == 0:
        return np.zeros_like(b), SolveReport(0, (0.0,), True)

    history = [np.linalg.norm(rhs - apply(x)) / scale]
    iterations, converged = 0, history[0] <= cfg.rel_tol
    while not converged and iterations < cfg.max_iter:
        steps = min(cfg.restart or cfg.max_iter, cfg.max_iter - iterations)
        residual = rhs - apply(x)
        correction, taken, converged = _cycle(apply, residual, scale, steps, cfg.rel_tol, history)
        x = x + correction
        iterations += taken

    report = SolveReport(iterations, tuple(float(h) for h in history), converged)
    if converged:
        logger.info(f"GMRES converged in {iterations} iterations (relative residual {report.final_residual:.3e})")
    else:
        logger.warning(
            f"GMRES stopped after {iterations} iterations at relative residual {report.final_residual:.3e}"
        )
    return x, report
