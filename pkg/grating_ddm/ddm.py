"""Block-tridiagonal quasi-optimal domain decomposition system.

Subdomains are numbered 0 ... M + 1 from the top and interfaces 0 ... M, with
interface j between subdomains j and j + 1. The unknowns of interface j are

    f_{j,j+1}: incoming Robin data of subdomain j on its bottom boundary,
    f_{j+1,j}: incoming Robin data of subdomain j + 1 on its top boundary,

stored in that order, interface after interface. With S^j the RtR map of
subdomain j the system reads

    f_{j,j+1} + S^{j+1}_{tt} f_{j+1,j} + S^{j+1}_{tb} f_{j+1,j+2} = b_{j,j+1}
    f_{j+1,j} + S^j_{bb} f_{j,j+1} + S^j_{bt} f_{j,j-1} = b_{j+1,j}

so D_j = [[I, S^{j+1}_tt], [S^j_bb, I]], U_j = [[S^{j+1}_tb, 0], [0, 0]] and
L_j = [[0, 0], [0, S^{j+1}_bt]] (L_j sits in block row j + 1).
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, replace
from typing import Callable, Literal, Sequence

import numpy as np
from scipy.linalg import eigvals
from scipy.sparse.linalg import LinearOperator

from grating_ddm.dtn import (
    TransmissionOperator,
    complexify,
    default_sigma,
    despres_operator,
    dtn_series_semi,
    dtn_series_slab,
    flat_transmission,
    hilbert_operator,
)
from grating_ddm.exceptions import ConfigurationError
from grating_ddm.geometry import GratingProfile, InterfaceGrid, LayerStack, build_grid, default_strip_cuts
from grating_ddm.rtr import RtRBlock, rtr_layer, rtr_semi_infinite, rtr_strip
from grating_ddm.settings import SETTINGS

logger = logging.getLogger(__name__)

Scheme = Literal["layer_Zslab", "layer_Zsemi", "strip"]
FamilyName = Literal["quasi_optimal", "despres", "hilbert"]
SCHEMES = ("layer_Zslab", "layer_Zsemi", "strip")
FAMILIES = ("quasi_optimal", "despres", "hilbert")
MAX_SPECTRUM_SIZE = 20_000


@dataclass(frozen=True, eq=False)
class RobinData:
    """Per-interface pairs (f_{j,j+1}, f_{j+1,j})."""

    into_upper: tuple[np.ndarray, ...]
    into_lower: tuple[np.ndarray, ...]

    def interface(self, j: int) -> tuple[np.ndarray, np.ndarray]:
        return self.into_upper[j], self.into_lower[j]

    def __len__(self) -> int:
        return len(self.into_upper)


@dataclass(frozen=True, eq=False)
class BlockTridiagonalSystem:
    """The DD operator stored through the non-identity n x n sub-blocks of its block rows."""

    d_upper: tuple[np.ndarray, ...]
    d_lower: tuple[np.ndarray, ...]
    u_blocks: tuple[np.ndarray, ...]
    l_blocks: tuple[np.ndarray, ...]
    rhs: np.ndarray
    subdomains: tuple[RtRBlock, ...]
    stack: LayerStack
    scheme: Scheme
    interface_grids: tuple[InterfaceGrid, ...]

    @property
    def n(self) -> int:
        return self.d_upper[0].shape[0]

    @property
    def n_interfaces(self) -> int:
        return len(self.d_upper)

    @property
    def shape(self) -> tuple[int, int]:
        size = 2 * self.n * self.n_interfaces
        return size, size

    def diagonal_block(self, j: int) -> np.ndarray:
        n = self.n
        block = np.eye(2 * n, dtype=complex)
        block[:n, n:] = self.d_upper[j]
        block[n:, :n] = self.d_lower[j]
        return block

    def upper_block(self, j: int) -> np.ndarray:
        n = self.n
        block = np.zeros((2 * n, 2 * n), dtype=complex)
        block[:n, :n] = self.u_blocks[j]
        return block

    def lower_block(self, j: int) -> np.ndarray:
        n = self.n
        block = np.zeros((2 * n, 2 * n), dtype=complex)
        block[n:, n:] = self.l_blocks[j]
        return block

    def apply(self, x: np.ndarray) -> np.ndarray:
        blocks = np.asarray(x, dtype=complex).reshape(self.n_interfaces, 2, self.n)
        y = blocks.copy()
        for j in range(self.n_interfaces):
            y[j, 0] += self.d_upper[j] @ blocks[j, 1]
            y[j, 1] += self.d_lower[j] @ blocks[j, 0]
        for j in range(self.n_interfaces - 1):
            y[j, 0] += self.u_blocks[j] @ blocks[j + 1, 0]
            y[j + 1, 1] += self.l_blocks[j] @ blocks[j, 1]
        return y.reshape(-1)

    def densify(self) -> np.ndarray:
        size, step = self.shape[0], 2 * self.n
        dense = np.zeros((size, size), dtype=complex)
        for j in range(self.n_interfaces):
            rows = slice(j * step, (j + 1) * step)
            dense[rows, rows] = self.diagonal_block(j)
            if j + 1 < self.n_interfaces:
                following = slice((j + 1) * step, (j + 2) * step)
                dense[rows, following] = self.upper_block(j)
                dense[following, rows] = self.lower_block(j)
        return dense

    def as_linear_operator(self) -> LinearOperator:
        return LinearOperator(self.shape, matvec=self.apply, dtype=complex)

    def split(self, x: np.ndarray) -> RobinData:
        blocks = np.asarray(x).reshape(self.n_interfaces, 2, self.n)
        return RobinData(tuple(blocks[:, 0]), tuple(blocks[:, 1]))

    def join(self, data: RobinData) -> np.ndarray:
        return np.stack([np.stack(data.interface(j)) for j in range(len(data))]).reshape(-1)

    def incoming(self, subdomain: int, x: np.ndarray) -> np.ndarray:
        """Incoming Robin data of ``subdomain`` stacked in the order of its RtR sides."""
        data = self.split(x)
        by_side = {}
        if subdomain > 0:
            by_side["top"] = data.into_lower[subdomain - 1]
        if subdomain < self.n_interfaces:
            by_side["bottom"] = data.into_upper[subdomain]
        return np.concatenate([by_side[side] for side in self.subdomains[subdomain].sides])


@dataclass(frozen=True)
class TransmissionPolicy:
    """Operator family, perturbation order and per-layer complexification."""

    family: FamilyName = "quasi_optimal"
    order: int = 0
    sigma: float | tuple[float, ...] | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ConfigurationError(f"Unsupported transmission operator family: {self.family}")
        if isinstance(self.sigma, Sequence):
            object.__setattr__(self, "sigma", tuple(float(value) for value in self.sigma))
        values = self.sigma if isinstance(self.sigma, tuple) else () if self.sigma is None else (self.sigma,)
        if any(value < 0 for value in values):
            raise ConfigurationError(f"Complexification sigma must be non-negative, got {self.sigma}")

    def require_media(self, count: int) -> None:
        """A per-medium sigma tuple must cover every medium of the stack."""
        if isinstance(self.sigma, tuple) and len(self.sigma) < count:
            raise ConfigurationError(
                f"Per-medium sigma has {len(self.sigma)} values, the stack has {count} media"
            )

    def sigma_for(self, j: int, k: float, period: float) -> float:
        if self.sigma is None:
            return default_sigma(k, period)
        if isinstance(self.sigma, tuple):
            return self.sigma[j]
        return float(self.sigma)

    def kappa(self, stack: LayerStack, j: int) -> complex:
        k = stack.wavenumbers[j]
        return complexify(k, self.sigma_for(j, k, stack.qp.period))


def _strip_stack(stack: LayerStack) -> LayerStack:
    if stack.strip_cuts is None:
        stack = replace(stack, strip_cuts=default_strip_cuts(stack))
    stack.require_valid(strip=True)
    return stack


def interface_profiles(stack: LayerStack, scheme: Scheme) -> tuple[GratingProfile, ...]:
    """Profiles carrying the DD unknowns: material interfaces, or flat cuts for the strip scheme."""
    if scheme == "strip":
        return tuple(GratingProfile.flat(c, stack.qp.period) for c in stack.strip_cuts)
    return stack.profiles


def transmission_operators(
    stack: LayerStack, scheme: Scheme, policy: TransmissionPolicy, n: int
) -> tuple[list[TransmissionOperator], list[TransmissionOperator]]:
    """(z_down, z_up) per interface.

    z_down[j] approximates the DtN of the subdomain below interface j and is the
    incoming operator of the subdomain above it; z_up[j] the converse.
    """
    qp = stack.qp
    count = len(interface_profiles(stack, scheme))
    if policy.family == "despres":
        op = despres_operator(n, qp)
        return [op] * count, [op] * count
    if policy.family == "hilbert":
        op = hilbert_operator(n, qp)
        return [op] * count, [op] * count

    if scheme == "strip":
        ops = [
            flat_transmission(stack.wavenumbers[j], policy.sigma_for(j, stack.wavenumbers[j], qp.period), qp, n)
            for j in range(count)
        ]
        return ops, ops

    profiles, L = stack.profiles, policy.order
    last = len(profiles) - 1
    z_down, z_up = [], []
    for j, profile in enumerate(profiles):
        below, above = policy.kappa(stack, j + 1), policy.kappa(stack, j)
        if scheme == "layer_Zsemi" or j == last:
            z_down.append(dtn_series_semi(below, profile, "down", L, qp, n))
        else:
            z_down.append(dtn_series_slab(below, profile, profiles[j + 1], L, qp, n).top_top)
        if scheme == "layer_Zsemi" or j == 0:
            z_up.append(dtn_series_semi(above, profile, "up", L, qp, n))
        else:
            z_up.append(dtn_series_slab(above, profiles[j - 1], profile, L, qp, n).bottom_bottom)
    return z_down, z_up


def _subdomains(stack, scheme, z_down, z_up, n, A) -> list[RtRBlock]:
    qp, k = stack.qp, stack.wavenumbers
    if scheme == "strip":
        cuts = stack.strip_cuts
        last = len(cuts) - 1
        blocks = [rtr_semi_infinite(k[0], GratingProfile.flat(cuts[0], qp.period), z_down[0], z_up[0], qp, n, A)]
        for j in range(1, last + 1):
            blocks.append(
                rtr_strip(
                    k[j - 1],
                    k[j],
                    stack.profiles[j - 1],
                    cuts[j - 1],
                    cuts[j],
                    z_up[j - 1],
                    z_down[j],
                    qp,
                    n,
                    A,
                    z_top_out=z_down[j - 1],
                    z_bot_out=z_up[j],
                )
            )
        blocks.append(
            rtr_semi_infinite(
                k[-1], GratingProfile.flat(cuts[-1], qp.period), z_up[-1], z_down[-1], qp, n, A, domain="below"
            )
        )
        return blocks

    profiles = stack.profiles
    blocks = [rtr_semi_infinite(k[0], profiles[0], z_down[0], z_up[0], qp, n, A)]
    for j in range(1, len(profiles)):
        blocks.append(
            rtr_layer(k[j], profiles[j - 1], profiles[j], z_up[j - 1], z_down[j - 1], z_down[j], z_up[j], qp, n, A)
        )
    blocks.append(rtr_semi_infinite(k[-1], profiles[-1], z_up[-1], z_down[-1], qp, n, A, domain="below"))
    return blocks


def incident_traces(stack: LayerStack, grid: InterfaceGrid, amplitude: complex = 1.0):
    """(u_inc, d u_inc / d n_0) on ``grid`` with n_0 the outward normal of the top domain."""
    alpha, beta = stack.qp.incidence(stack.wavenumbers[0])
    x1, x2 = grid.points[:, 0], grid.points[:, 1]
    value = amplitude * np.exp(1j * alpha * x1 - 1j * beta * x2)
    normal_derivative = (1j * alpha * grid.derivative + 1j * beta) * value
    return value, normal_derivative


def assemble_rhs(
    stack: LayerStack,
    scheme: Scheme,
    z_down: Sequence[TransmissionOperator],
    z_up: Sequence[TransmissionOperator],
    n: int,
    amplitude: complex = 1.0,
) -> np.ndarray:
    """Right-hand side: only the two entries of interface 0 are driven by the incident wave."""
    if scheme == "strip":
        stack = _strip_stack(stack)
    grid = build_grid(interface_profiles(stack, scheme)[0], n)
    value, normal_derivative = incident_traces(stack, grid, amplitude)
    rhs = np.zeros((len(z_down), 2, n), dtype=complex)
    rhs[0, 0] = -(normal_derivative + z_down[0].matrix @ value)
    rhs[0, 1] = -(normal_derivative - z_up[0].matrix @ value)
    return rhs.reshape(-1)


def assemble_system(
    stack: LayerStack,
    scheme: Scheme = "layer_Zsemi",
    L: int = 0,
    sigma: float | Sequence[float] | None = None,
    n: int | None = None,
    A: float | None = None,
    family: FamilyName = "quasi_optimal",
    amplitude: complex = 1.0,
) -> BlockTridiagonalSystem:
    if scheme not in SCHEMES:
        raise ConfigurationError(f"Unsupported decomposition scheme: {scheme}")
    n = SETTINGS.DISCRETIZATION if n is None else n
    if scheme == "strip":
        stack = _strip_stack(stack)
    else:
        stack.require_valid()

    start = time.perf_counter()
    policy = TransmissionPolicy(family, L, sigma)
    policy.require_media(len(stack.wavenumbers))
    z_down, z_up = transmission_operators(stack, scheme, policy, n)
    blocks = _subdomains(stack, scheme, z_down, z_up, n, A)
    count = len(blocks) - 1

    system = BlockTridiagonalSystem(
        d_upper=tuple(blocks[j + 1].block("top", "top") for j in range(count)),
        d_lower=tuple(blocks[j].block("bottom", "bottom") for j in range(count)),
        u_blocks=tuple(blocks[j + 1].block("top", "bottom") for j in range(count - 1)),
        l_blocks=tuple(blocks[j + 1].block("bottom", "top") for j in range(count - 1)),
        rhs=assemble_rhs(stack, scheme, z_down, z_up, n, amplitude),
        subdomains=tuple(blocks),
        stack=stack,
        scheme=scheme,
        interface_grids=tuple(blocks[j].boundaries["bottom"] for j in range(count)),
    )
    logger.info(
        f"Assembled {scheme} system ({family}, L={L}): {count} interfaces, "
        f"dimension {system.shape[0]}, {time.perf_counter() - start:.2f}s"
    )
    return system


def dense_spectrum(
    system: BlockTridiagonalSystem, apply: Callable[[np.ndarray], np.ndarray] | None = None
) -> np.ndarray:
    """Eigenvalues of the densified DD operator, left-multiplied by ``apply`` when given."""
    size = system.shape[0]
    if size > MAX_SPECTRUM_SIZE:
        raise ConfigurationError(f"System of dimension {size} is too large for a dense spectrum")
    dense = system.densify()
    if apply is not None:
        dense = np.column_stack([apply(column) for column in dense.T])
    return eigvals(dense)
