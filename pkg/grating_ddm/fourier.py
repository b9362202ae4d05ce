"""Trigonometric transforms of alpha-quasi-periodic nodal values."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from grating_ddm.geometry import QuasiPeriodicity


def _along_rows(vector: np.ndarray, values: np.ndarray) -> np.ndarray:
    return vector if values.ndim == 1 else vector[:, None]


@dataclass(frozen=True, eq=False)
class QuasiPeriodicBasis:
    """Nodal <-> modal maps for f(x1) = sum_r f_r exp(i alpha_r x1) sampled at x1_m = m d / n.

    Modes are stored in FFT order, r = 0, 1, ..., n/2 - 1, -n/2, ..., -1.
    Transforms act along the first axis so matrices are handled column-wise.
    """

    n: int
    qp: QuasiPeriodicity

    @property
    def period(self) -> float:
        return self.qp.period

    @cached_property
    def modes(self) -> np.ndarray:
        return np.fft.fftfreq(self.n, 1.0 / self.n).astype(int)

    @cached_property
    def nodes(self) -> np.ndarray:
        return self.period * np.arange(self.n) / self.n

    @cached_property
    def phase(self) -> np.ndarray:
        return np.exp(1j * self.qp.alpha * self.nodes)

    @cached_property
    def alpha_r(self) -> np.ndarray:
        return self.qp.alpha_r(self.modes)

    def forward(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values, dtype=complex)
        periodic = values * _along_rows(self.phase.conj(), values)
        return np.fft.fft(periodic, axis=0) / self.n

    def inverse(self, coefficients: np.ndarray) -> np.ndarray:
        coefficients = np.asarray(coefficients, dtype=complex)
        periodic = np.fft.ifft(coefficients, axis=0) * self.n
        return periodic * _along_rows(self.phase, periodic)

    def apply(self, symbol: np.ndarray, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values, dtype=complex)
        return self.inverse(_along_rows(np.asarray(symbol), values) * self.forward(values))

    def multiplier_matrix(self, symbol: np.ndarray) -> np.ndarray:
        return self.apply(symbol, np.eye(self.n, dtype=complex))

    @cached_property
    def derivative_symbol(self) -> np.ndarray:
        symbol = 1j * self.alpha_r
        symbol[self.n // 2] = 0.0  # unpaired Nyquist mode
        return symbol

    @cached_property
    def derivative_matrix(self) -> np.ndarray:
        return self.multiplier_matrix(self.derivative_symbol)

    def refined(self, m: int) -> QuasiPeriodicBasis:
        return QuasiPeriodicBasis(m, self.qp)

    def interpolation_matrix(self, m: int) -> np.ndarray:
        """(m x n) trigonometric interpolation onto m >= n equispaced nodes."""
        fine = self.refined(m)
        padded = np.zeros((m, self.n), dtype=complex)
        padded[np.mod(self.modes, m)] = self.forward(np.eye(self.n, dtype=complex))
        return fine.inverse(padded)

    def truncation_matrix(self, m: int) -> np.ndarray:
        """(n x m) projection of values on m >= n nodes onto the n coarse modes."""
        fine = self.refined(m)
        coefficients = fine.forward(np.eye(m, dtype=complex))[np.mod(self.modes, m)]
        return self.inverse(coefficients)
