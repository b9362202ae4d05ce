"""Fields, Rayleigh amplitudes, efficiencies and energy balance of a solved DD system."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd

from grating_ddm.ddm import BlockTridiagonalSystem, incident_traces
from grating_ddm.exceptions import ConfigurationError, UnsupportedGeometryError
from grating_ddm.fourier import QuasiPeriodicBasis
from grating_ddm.geometry import LayerStack, QuasiPeriodicity
from grating_ddm.rtr import RtRBlock
from grating_ddm.settings import SETTINGS

logger = logging.getLogger(__name__)

PROPAGATING_TOL = 1e-12
GRAZING_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class RayleighExpansion:
    """Amplitudes B_r^+ of the reflected and B_r^- of the transmitted plane waves, FFT mode order."""

    orders: np.ndarray
    up: np.ndarray
    down: np.ndarray
    beta_up: np.ndarray
    beta_down: np.ndarray

    def _propagating(self, beta: np.ndarray) -> np.ndarray:
        return (np.abs(beta.imag) <= PROPAGATING_TOL) & (beta.real > 0)

    @property
    def propagating_up(self) -> np.ndarray:
        return self.orders[self._propagating(self.beta_up)]

    @property
    def propagating_down(self) -> np.ndarray:
        return self.orders[self._propagating(self.beta_down)]

    def amplitude_up(self, r: int) -> complex:
        return complex(self.up[r % len(self.orders)])

    def amplitude_down(self, r: int) -> complex:
        return complex(self.down[r % len(self.orders)])

    @property
    def incidence_beta(self) -> float:
        return float(self.beta_up[0].real)


def _default_distance(block: RtRBlock) -> float:
    return 4 * block.qp.period / block.n


def check_inside(block: RtRBlock, points: np.ndarray, min_distance: float | None = None) -> None:
    """Raise unless every point lies in the subdomain, at least ``min_distance`` (vertically) from its boundaries."""
    distance = _default_distance(block) if min_distance is None else min_distance
    x1, x2 = points[:, 0], points[:, 1]
    if "top" in block.boundaries:
        gap = block.boundaries["top"].profile.value(x1) - x2
        if np.any(gap < distance):
            raise UnsupportedGeometryError(f"Evaluation point above or within {distance:.3g} of the top of {block.name}")
    if "bottom" in block.boundaries:
        gap = x2 - block.boundaries["bottom"].profile.value(x1)
        if np.any(gap < distance):
            raise UnsupportedGeometryError(
                f"Evaluation point below or within {distance:.3g} of the bottom of {block.name}"
            )
    if block.internal is not None:
        gap = np.abs(x2 - block.internal.profile.value(x1))
        if np.any(gap < distance):
            raise UnsupportedGeometryError(f"Evaluation point within {distance:.3g} of the interface inside {block.name}")


def reconstruct_field(
    system: BlockTridiagonalSystem,
    x: np.ndarray,
    subdomain: int,
    points,
    min_distance: float | None = None,
    total: bool = False,
) -> np.ndarray:
    """Field of ``subdomain`` for the solved Robin data ``x``.

    Subdomain 0 carries the scattered field; ``total`` adds the incident wave.
    """
    if not 0 <= subdomain < len(system.subdomains):
        raise ConfigurationError(f"Subdomain index {subdomain} outside 0..{len(system.subdomains) - 1}")
    block = system.subdomains[subdomain]
    points = np.atleast_2d(np.asarray(points, dtype=float))
    check_inside(block, points, min_distance)
    values = block.evaluate(system.incoming(subdomain, x), points)
    if total and subdomain == 0:
        alpha, beta = system.stack.qp.incidence(system.stack.wavenumbers[0])
        values = values + np.exp(1j * alpha * points[:, 0] - 1j * beta * points[:, 1])
    return values


def _line(block: RtRBlock, side: str, offset: float) -> float:
    low, high = block.boundaries[side].profile.extrema
    return high + offset if side == "bottom" else low - offset


def rayleigh_amplitudes(
    system: BlockTridiagonalSystem,
    x: np.ndarray,
    line_offset: float | None = None,
    heights: tuple[float, float] | None = None,
) -> RayleighExpansion:
    """Rayleigh amplitudes from the field sampled on one horizontal line above and one below the structure."""
    offset = SETTINGS.LINE_OFFSET if line_offset is None else line_offset
    top_block, bottom_block = system.subdomains[0], system.subdomains[-1]
    if heights is None:
        heights = (_line(top_block, "bottom", offset), _line(bottom_block, "top", offset))
    stack, n = system.stack, system.n
    basis = QuasiPeriodicBasis(n, stack.qp)

    def sample(block_index: int, height: float) -> np.ndarray:
        points = np.column_stack([basis.nodes, np.full(n, height)])
        try:
            return reconstruct_field(system, x, block_index, points, min_distance=0.0)
        except UnsupportedGeometryError as exc:
            raise UnsupportedGeometryError(f"Rayleigh line x2 = {height:g} intersects a profile") from exc

    up_height, down_height = heights
    beta_up = stack.qp.beta(stack.wavenumbers[0], basis.modes)
    beta_down = stack.qp.beta(stack.wavenumbers[-1], basis.modes)
    up = basis.forward(sample(0, up_height)) * np.exp(-1j * beta_up * up_height)
    down = basis.forward(sample(len(system.subdomains) - 1, down_height)) * np.exp(1j * beta_down * down_height)
    return RayleighExpansion(basis.modes, up, down, beta_up, beta_down)


def _efficiency_weights(expansion: RayleighExpansion) -> tuple[np.ndarray, np.ndarray]:
    incidence = expansion.incidence_beta
    if incidence <= GRAZING_TOL:
        raise ConfigurationError("Grazing incidence (beta_00 ~ 0) cannot normalize the energy balance")
    up = np.where(expansion._propagating(expansion.beta_up), expansion.beta_up.real / incidence, 0.0)
    down = np.where(expansion._propagating(expansion.beta_down), expansion.beta_down.real / incidence, 0.0)
    return up, down


def efficiencies(expansion: RayleighExpansion) -> pd.DataFrame:
    """Efficiency of every propagating reflected and transmitted order."""
    up_weight, down_weight = _efficiency_weights(expansion)
    rows = []
    for direction, amplitudes, weights in (
        ("reflected", expansion.up, up_weight),
        ("transmitted", expansion.down, down_weight),
    ):
        for order, amplitude, weight in zip(expansion.orders, amplitudes, weights):
            if weight > 0:
                rows.append(
                    {
                        "direction": direction,
                        "order": int(order),
                        "efficiency": weight * abs(amplitude) ** 2,
                        "amplitude_real": amplitude.real,
                        "amplitude_imag": amplitude.imag,
                    }
                )
    return pd.DataFrame(rows).sort_values(["direction", "order"], ignore_index=True)


def energy_balance(expansion: RayleighExpansion, stack: LayerStack) -> float:
    """|1 - total reflected efficiency - total transmitted efficiency| for a lossless stack."""
    if any(np.iscomplexobj(k) and np.imag(k) != 0 for k in stack.wavenumbers):
        raise ConfigurationError("Energy balance requires real wavenumbers")
    up_weight, down_weight = _efficiency_weights(expansion)
    reflected = np.sum(up_weight * np.abs(expansion.up) ** 2)
    transmitted = np.sum(down_weight * np.abs(expansion.down) ** 2)
    defect = abs(1 - reflected - transmitted)
    logger.info(f"Energy balance: R = {reflected:.6f}, T = {transmitted:.6f}, defect {defect:.2e}")
    return float(defect)


def interface_mismatch(system: BlockTridiagonalSystem, x: np.ndarray) -> np.ndarray:
    """Per interface, max |u_j - u_{j+1}| and max |d_n u_j + d_n u_{j+1}| (outward normals)."""
    mismatch = np.zeros((system.n_interfaces, 2))
    n = system.n
    for j in range(system.n_interfaces):
        upper, lower = system.subdomains[j], system.subdomains[j + 1]
        g_upper, g_lower = system.incoming(j, x), system.incoming(j + 1, x)
        i_upper, i_lower = upper.sides.index("bottom"), lower.sides.index("top")
        trace_upper = upper.dirichlet(g_upper)[i_upper * n : (i_upper + 1) * n]
        trace_lower = lower.dirichlet(g_lower)[i_lower * n : (i_lower + 1) * n]
        normal_upper = upper.neumann(g_upper)[i_upper * n : (i_upper + 1) * n]
        normal_lower = lower.neumann(g_lower)[i_lower * n : (i_lower + 1) * n]
        if j == 0:
            value, derivative = incident_traces(system.stack, upper.boundaries["bottom"])
            trace_upper = trace_upper + value
            normal_upper = normal_upper + derivative
        mismatch[j] = np.max(np.abs(trace_upper - trace_lower)), np.max(np.abs(normal_upper + normal_lower))
    return mismatch


def fresnel(k0: float, k1: float, qp: QuasiPeriodicity | None = None, height: float = 0.0) -> tuple[complex, complex]:
    """Zeroth-order reflection and transmission amplitudes of a flat interface at ``height``."""
    qp = qp or QuasiPeriodicity()
    beta0, beta1 = complex(qp.beta(k0)), complex(qp.beta(k1))
    reflection = (beta0 - beta1) / (beta0 + beta1) * np.exp(-2j * beta0 * height)
    transmission = 2 * beta0 / (beta0 + beta1) * np.exp(1j * (beta1 - beta0) * height)
    return complex(reflection), complex(transmission)
