"""Discrete Robin-to-Robin maps of semi-infinite domains, bounded layers and strips.

A subdomain solve represents its field by layer potentials with densities on
its boundaries (and, for strips, on the material interface inside). Incoming
Robin data g = d_n u + Z_in u on each boundary side determine the densities
through one dense LU solve; the outgoing data are d_n u - Z_out u, so

    S[t, s] = delta_ts I - (Z_in[t] + Z_out[t]) W[t, s]

with W the incoming-data-to-Dirichlet-trace map.

Orientation table (upward normal n = (-F', 1) on every grid):

    ===========================  ====================  ====================
    limit onto the density's      from above             from below
    own interface
    ===========================  ====================  ====================
    single layer, d_n             -1/2 phi + K^T phi     +1/2 phi + K^T phi
    double layer, trace           +1/2 psi + K psi       -1/2 psi + K psi
    ===========================  ====================  ====================

A subdomain lies below its ``top`` boundary (outward normal +n) and above its
``bottom`` boundary (outward normal -n).
"""

from __future__ import annotations

import logging
import time
import warnings
from dataclasses import dataclass
from functools import cached_property
from typing import Literal, NamedTuple

import numpy as np
from frozendict import frozendict
from scipy.linalg import LinAlgWarning, get_lapack_funcs, lu_factor, lu_solve

from grating_ddm import biops
from grating_ddm.dtn import SlabOperator, TransmissionOperator, beta_multiplier
from grating_ddm.exceptions import IllPosedError, UnsupportedGeometryError
from grating_ddm.geometry import GratingProfile, InterfaceGrid, QuasiPeriodicity, build_grid
from grating_ddm.qpgreen import WindowedGreenParams, lattice_sum
from grating_ddm.settings import SETTINGS

logger = logging.getLogger(__name__)

Side = Literal["top", "bottom"]
Region = Literal["all", "above", "below"]

NORMAL_DERIVATIVE_JUMP = {"above": -0.5, "below": 0.5}
DOUBLE_LAYER_JUMP = {"above": 0.5, "below": -0.5}
OUTWARD_SIGN = {"top": 1.0, "bottom": -1.0}
EVALUATED_FROM = {"top": "below", "bottom": "above"}
STRIP_REGION = {"top": "above", "bottom": "below"}


def lu_factor_checked(matrix: np.ndarray, label: str):
    """LU factors of ``matrix``; IllPosedError when its condition estimate exceeds CONDITION_LIMIT."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LinAlgWarning)
        lu, piv = lu_factor(matrix)
    (gecon,) = get_lapack_funcs(("gecon",), (lu,))
    rcond, _ = gecon(lu, np.linalg.norm(matrix, 1), norm="1")
    condition = np.inf if rcond == 0 else 1 / rcond
    if not np.isfinite(condition) or condition > SETTINGS.CONDITION_LIMIT:
        raise IllPosedError(f"{label} is numerically singular (condition estimate {condition:.3g})")
    logger.debug(f"{label}: size {matrix.shape[0]}, condition estimate {condition:.3g}")
    return lu, piv


def _as_matrix(op) -> np.ndarray:
    return op.matrix if isinstance(op, TransmissionOperator) else np.asarray(op, dtype=complex)


class Potential(NamedTuple):
    """One layer potential of a subdomain representation."""

    kind: Literal["S", "D"]
    grid: InterfaceGrid
    wavenumber: complex
    offset: int
    region: Region = "all"

    @property
    def span(self) -> slice:
        return slice(self.offset, self.offset + self.grid.n)

    def covers(self, region: Region) -> bool:
        return self.region == "all" or self.region == region


class _OperatorCache:
    def __init__(self, qp: QuasiPeriodicity, window_size: float):
        self.qp = qp
        self.window_size = window_size
        self._store: dict = {}

    def get(self, kind: str, k: complex, src: InterfaceGrid, tgt: InterfaceGrid) -> np.ndarray:
        key = (kind, complex(k), id(src), id(tgt))
        if key not in self._store:
            builder = {
                "S": biops.assemble_single_layer,
                "K": biops.assemble_double_layer,
                "KT": biops.assemble_adjoint_double_layer,
                "N": biops.assemble_hypersingular,
            }[kind]
            self._store[key] = builder(k, src, tgt, self.qp, self.window_size).matrix
        return self._store[key]

    def trace(self, potential: Potential, target: InterfaceGrid, evaluated_from: str, derivative: bool):
        """Dirichlet trace or upward normal derivative of ``potential`` on ``target``."""
        own = potential.grid is target
        k, src = potential.wavenumber, potential.grid
        identity = np.eye(target.n)
        if potential.kind == "S":
            if not derivative:
                return self.get("S", k, src, target)
            jump = NORMAL_DERIVATIVE_JUMP[evaluated_from] * identity if own else 0.0
            return jump + self.get("KT", k, src, target)
        if derivative:
            return self.get("N", k, src, target)
        jump = DOUBLE_LAYER_JUMP[evaluated_from] * identity if own else 0.0
        return jump + self.get("K", k, src, target)


@dataclass(frozen=True, eq=False)
class RtRBlock:
    """Robin-to-Robin map of one subdomain, with the data needed to rebuild its field.

    ``blocks[(target, source)]`` and ``traces[(target, source)]`` are n x n
    matrices indexed by boundary side; stacked vectors follow ``sides``.
    """

    name: str
    sides: tuple[Side, ...]
    blocks: frozendict
    traces: frozendict
    z_in: frozendict
    z_out: frozendict
    boundaries: frozendict
    solve_map: np.ndarray
    potentials: tuple[Potential, ...]
    qp: QuasiPeriodicity
    window_size: float
    internal: InterfaceGrid | None = None

    @property
    def n(self) -> int:
        return self.boundaries[self.sides[0]].n

    def block(self, target: Side, source: Side) -> np.ndarray:
        return self.blocks[(target, source)]

    @cached_property
    def matrix(self) -> np.ndarray:
        return np.block([[self.blocks[(t, s)] for s in self.sides] for t in self.sides])

    @cached_property
    def trace_matrix(self) -> np.ndarray:
        return np.block([[self.traces[(t, s)] for s in self.sides] for t in self.sides])

    def apply(self, g: np.ndarray) -> np.ndarray:
        return self.matrix @ g

    def densities(self, g: np.ndarray) -> np.ndarray:
        return self.solve_map @ g

    def dirichlet(self, g: np.ndarray) -> np.ndarray:
        return self.trace_matrix @ g

    def neumann(self, g: np.ndarray) -> np.ndarray:
        """Outward normal derivatives d_n u = g - Z_in u on every side."""
        traces = self.dirichlet(g).reshape(len(self.sides), self.n)
        data = np.asarray(g).reshape(len(self.sides), self.n)
        return np.concatenate([data[i] - self.z_in[side] @ traces[i] for i, side in enumerate(self.sides)])

    def region_of(self, points: np.ndarray) -> np.ndarray:
        if self.internal is None:
            return np.full(len(points), "all")
        above = points[:, 1] > self.internal.profile.value(points[:, 0])
        return np.where(above, "above", "below")

    def evaluate(self, g: np.ndarray, points) -> np.ndarray:
        """Field of the subdomain solve with incoming data ``g`` at off-boundary ``points``."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        density = self.densities(g)
        regions = self.region_of(points)
        values = np.zeros(len(points), dtype=complex)
        for potential in self.potentials:
            mask = (regions == "all") | (regions == potential.region) | (potential.region == "all")
            if mask.any():
                values[mask] += _potential_field(
                    potential, density[potential.span], points[mask], self.qp, self.window_size
                )
        return values


def _potential_field(potential: Potential, density, points, qp, window_size) -> np.ndarray:
    grid = potential.grid
    params = WindowedGreenParams.from_qp(potential.wavenumber, qp, window_size)
    z1 = np.subtract.outer(points[:, 0], grid.points[:, 0])
    z2 = np.subtract.outer(points[:, 1], grid.points[:, 1])
    if potential.kind == "S":
        kernel = lattice_sum(params, z1, z2).value
    else:
        grad = lattice_sum(params, z1, z2, order=1).grad
        kernel = -(grad[0] * grid.normals[None, :, 0] + grad[1] * grid.normals[None, :, 1])
    return grid.weight * kernel @ density


def _sum_rows(cache, target, evaluated_from, potentials, derivative, size) -> np.ndarray:
    row = np.zeros((target.n, size), dtype=complex)
    for potential in potentials:
        row[:, potential.span] += cache.trace(potential, target, evaluated_from, derivative)
    return row


def _solve_rtr(
    name: str,
    boundaries: dict[Side, InterfaceGrid],
    z_in: dict[Side, np.ndarray],
    z_out: dict[Side, np.ndarray],
    potentials: list[Potential],
    qp: QuasiPeriodicity,
    window_size: float | None,
    internal: InterfaceGrid | None = None,
) -> RtRBlock:
    window_size = SETTINGS.WINDOW_SIZE if window_size is None else window_size
    start = time.perf_counter()
    cache = _OperatorCache(qp, window_size)
    sides = tuple(boundaries)
    n = boundaries[sides[0]].n
    size = max(p.offset + p.grid.n for p in potentials)

    def region_potentials(region: Region) -> list[Potential]:
        return [p for p in potentials if p.covers(region)]

    robin_rows, trace_rows = [], {}
    for side in sides:
        grid = boundaries[side]
        region = STRIP_REGION[side] if internal is not None else "all"
        local = region_potentials(region)
        evaluated_from = EVALUATED_FROM[side]
        values = _sum_rows(cache, grid, evaluated_from, local, False, size)
        normal = _sum_rows(cache, grid, evaluated_from, local, True, size)
        robin_rows.append(OUTWARD_SIGN[side] * normal + z_in[side] @ values)
        trace_rows[side] = values

    if internal is not None:
        above, below = region_potentials("above"), region_potentials("below")
        for derivative in (False, True):
            robin_rows.append(
                _sum_rows(cache, internal, "above", above, derivative, size)
                - _sum_rows(cache, internal, "below", below, derivative, size)
            )

    system = np.vstack(robin_rows)
    factors = lu_factor_checked(system, f"Interior system of {name}")
    embedding = np.zeros((size, n * len(sides)), dtype=complex)
    embedding[: n * len(sides)] = np.eye(n * len(sides))
    solve_map = lu_solve(factors, embedding)

    blocks, traces = {}, {}
    for i, target in enumerate(sides):
        for j, source in enumerate(sides):
            trace = trace_rows[target] @ solve_map[:, j * n : (j + 1) * n]
            traces[(target, source)] = trace
            identity = np.eye(n) if i == j else 0.0
            blocks[(target, source)] = identity - (z_in[target] + z_out[target]) @ trace

    logger.debug(f"RtR map {name} ({system.shape[0]} unknowns) in {time.perf_counter() - start:.3f}s")
    return RtRBlock(
        name=name,
        sides=sides,
        blocks=frozendict(blocks),
        traces=frozendict(traces),
        z_in=frozendict(z_in),
        z_out=frozendict(z_out),
        boundaries=frozendict(boundaries),
        solve_map=solve_map,
        potentials=tuple(potentials),
        qp=qp,
        window_size=window_size,
        internal=internal,
    )


def rtr_semi_infinite(
    k: complex,
    profile: GratingProfile,
    z_in,
    z_out,
    qp: QuasiPeriodicity,
    n: int,
    A: float | None = None,
    domain: Literal["above", "below"] = "above",
) -> RtRBlock:
    """RtR map of the semi-infinite domain on the ``domain`` side of ``profile``.

    The domain above the profile sees it as its bottom boundary; the domain
    below sees it as its top boundary.
    """
    if domain not in ("above", "below"):
        raise UnsupportedGeometryError(f"Unknown semi-infinite domain: {domain}")
    grid = build_grid(profile, n)
    side: Side = "bottom" if domain == "above" else "top"
    return _solve_rtr(
        f"semi-infinite domain {domain} height {profile.mean_height:g}",
        {side: grid},
        {side: _as_matrix(z_in)},
        {side: _as_matrix(z_out)},
        [Potential("S", grid, k, 0)],
        qp,
        A,
    )


def _layer(name, k, top_grid, bottom_grid, z_top_in, z_top_out, z_bot_in, z_bot_out, qp, A) -> RtRBlock:
    n = top_grid.n
    return _solve_rtr(
        name,
        {"top": top_grid, "bottom": bottom_grid},
        {"top": _as_matrix(z_top_in), "bottom": _as_matrix(z_bot_in)},
        {"top": _as_matrix(z_top_out), "bottom": _as_matrix(z_bot_out)},
        [Potential("S", top_grid, k, 0), Potential("S", bottom_grid, k, n)],
        qp,
        A,
    )


def rtr_layer(
    k: complex,
    top: GratingProfile,
    bottom: GratingProfile,
    z_top_in,
    z_top_out,
    z_bot_in,
    z_bot_out,
    qp: QuasiPeriodicity,
    n: int,
    A: float | None = None,
) -> RtRBlock:
    """RtR map of the bounded layer between two non-touching profiles (single layers on both)."""
    return _layer(
        f"layer {top.mean_height:g}..{bottom.mean_height:g}",
        k,
        build_grid(top, n),
        build_grid(bottom, n),
        z_top_in,
        z_top_out,
        z_bot_in,
        z_bot_out,
        qp,
        A,
    )


def rtr_homogeneous_strip(
    k: complex,
    c_top: float,
    c_bot: float,
    z_top,
    z_bot,
    qp: QuasiPeriodicity,
    n: int,
    A: float | None = None,
    z_top_out=None,
    z_bot_out=None,
) -> RtRBlock:
    """RtR map of a homogeneous strip c_bot < x2 < c_top."""
    if c_top <= c_bot:
        raise UnsupportedGeometryError(f"Strip cuts must satisfy c_top > c_bot, got {c_top} <= {c_bot}")
    period = qp.period
    return _layer(
        f"strip {c_top:g}..{c_bot:g}",
        k,
        build_grid(GratingProfile.flat(c_top, period), n),
        build_grid(GratingProfile.flat(c_bot, period), n),
        z_top,
        z_top if z_top_out is None else z_top_out,
        z_bot,
        z_bot if z_bot_out is None else z_bot_out,
        qp,
        A,
    )


def rtr_strip(
    k_above: complex,
    k_below: complex,
    profile_inside: GratingProfile,
    c_top: float,
    c_bot: float,
    z_top,
    z_bot,
    qp: QuasiPeriodicity,
    n: int,
    A: float | None = None,
    z_top_out=None,
    z_bot_out=None,
) -> RtRBlock:
    """RtR map of the strip c_bot < x2 < c_top containing one material interface.

    Single layers on both cuts, plus a single and a double layer on the
    interface, shared by the two media; the interface rows impose continuity
    of the field and of its normal derivative.
    """
    low, high = profile_inside.extrema
    if not (c_top > high and c_bot < low):
        raise UnsupportedGeometryError(
            f"Strip cuts ({c_top}, {c_bot}) do not enclose the interface range [{low:.6g}, {high:.6g}]"
        )
    period = qp.period
    top_grid = build_grid(GratingProfile.flat(c_top, period), n)
    bottom_grid = build_grid(GratingProfile.flat(c_bot, period), n)
    inside = build_grid(profile_inside, n)
    potentials = [
        Potential("S", top_grid, k_above, 0, "above"),
        Potential("S", bottom_grid, k_below, n, "below"),
        Potential("S", inside, k_above, 2 * n, "above"),
        Potential("D", inside, k_above, 3 * n, "above"),
        Potential("S", inside, k_below, 2 * n, "below"),
        Potential("D", inside, k_below, 3 * n, "below"),
    ]
    return _solve_rtr(
        f"strip {c_top:g}..{c_bot:g} around height {profile_inside.mean_height:g}",
        {"top": top_grid, "bottom": bottom_grid},
        {"top": _as_matrix(z_top), "bottom": _as_matrix(z_bot)},
        {
            "top": _as_matrix(z_top if z_top_out is None else z_top_out),
            "bottom": _as_matrix(z_bot if z_bot_out is None else z_bot_out),
        },
        potentials,
        qp,
        A,
        internal=inside,
    )


def numerical_dtn(
    k: complex,
    profile: GratingProfile,
    domain: Literal["above", "below"],
    qp: QuasiPeriodicity,
    n: int,
    A: float | None = None,
) -> TransmissionOperator:
    """Outward-normal DtN of a semi-infinite domain from its single-layer representation."""
    grid = build_grid(profile, n)
    cache = _OperatorCache(qp, SETTINGS.WINDOW_SIZE if A is None else A)
    single = cache.get("S", k, grid, grid)
    adjoint = cache.get("KT", k, grid, grid)
    side: Side = "bottom" if domain == "above" else "top"
    jump = NORMAL_DERIVATIVE_JUMP[EVALUATED_FROM[side]]
    normal = OUTWARD_SIGN[side] * (jump * np.eye(n) + adjoint)
    factors = lu_factor_checked(single.T, f"Single layer of the {domain} domain")
    matrix = lu_solve(factors, normal.T).T
    return TransmissionOperator(matrix, "numerical", qp, complex(k))



def numerical_slab_dtn(
    k: complex,
    top: GratingProfile,
    bottom: GratingProfile,
    qp: QuasiPeriodicity,
    n: int,
    A: float | None = None,
) -> SlabOperator:
    """Outward-normal DtN blocks of the layer between ``top`` and ``bottom`` from single layers on both."""
    grids = {"top": build_grid(top, n), "bottom": build_grid(bottom, n)}
    cache = _OperatorCache(qp, SETTINGS.WINDOW_SIZE if A is None else A)
    potentials = [Potential("S", grid, complex(k), i * n) for i, grid in enumerate(grids.values())]
    trace = np.vstack(
        [_sum_rows(cache, grid, EVALUATED_FROM[side], potentials, False, 2 * n) for side, grid in grids.items()]
    )
    normal = np.vstack(
        [
            OUTWARD_SIGN[side] * _sum_rows(cache, grid, EVALUATED_FROM[side], potentials, True, 2 * n)
            for side, grid in grids.items()
        ]
    )
    factors = lu_factor_checked(trace.T, "Single layers of the bounded layer")
    matrix = lu_solve(factors, normal.T).T
    spans = {"top": slice(0, n), "bottom": slice(n, 2 * n)}

    def block(target: Side, source: Side) -> TransmissionOperator:
        return TransmissionOperator(matrix[spans[target], spans[source]], "numerical", qp, complex(k))

    return SlabOperator(block("top", "top"), block("top", "bottom"), block("bottom", "top"), block("bottom", "bottom"))


def flat_rtr_symbol(k: complex, z_in_symbol, z_out_symbol, qp: QuasiPeriodicity, n: int) -> np.ndarray:
    """Mode-wise RtR symbol (-i beta - z_out) / (-i beta + z_in) of a flat semi-infinite domain."""
    dtn = -1j * beta_multiplier(k, qp, n).symbol
    return (dtn - np.asarray(z_out_symbol)) / (dtn + np.asarray(z_in_symbol))
