"""Periodic grating profiles, interface grids and layered-medium configurations."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Literal, Protocol

import numpy as np
from scipy.optimize import minimize_scalar

from grating_ddm.exceptions import ConfigurationError, UnsupportedGeometryError
from grating_ddm.settings import SETTINGS

logger = logging.getLogger(__name__)

TWO_PI = 2 * np.pi
MIN_NODES = 16


def sqrt_branch(z):
    """Square root with sqrt(1) = 1 and the branch cut on the negative imaginary axis.

    Negative real arguments map to the positive imaginary axis and arguments in
    the upper half plane have a positive real part.
    """
    z = np.asarray(z, dtype=complex)
    return np.exp(0.25j * np.pi) * np.sqrt(-1j * z)


class ProfileShape(Protocol):
    """A 2pi-periodic shape g(theta), theta = 2 pi x1 / d."""

    smooth: bool

    def __call__(self, theta: np.ndarray) -> np.ndarray: ...

    def derivative(self, theta: np.ndarray, order: int = 1) -> np.ndarray: ...


@dataclass(frozen=True)
class CosineSeries:
    """Finite trigonometric series sum_m a_m cos(m theta) + b_m sin(m theta), m >= 1."""

    cos: tuple[float, ...] = ()
    sin: tuple[float, ...] = ()
    smooth: bool = True

    def _terms(self, coeffs: tuple[float, ...], theta: np.ndarray):
        for m, coeff in enumerate(coeffs, start=1):
            if coeff:
                yield m, coeff, m * theta

    def __call__(self, theta: np.ndarray) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        out = np.zeros_like(theta)
        for _, a, arg in self._terms(self.cos, theta):
            out += a * np.cos(arg)
        for _, b, arg in self._terms(self.sin, theta):
            out += b * np.sin(arg)
        return out

    def derivative(self, theta: np.ndarray, order: int = 1) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        out = np.zeros_like(theta)
        # d^p/dtheta^p cos(m theta) = m^p cos(m theta + p pi / 2)
        for m, a, arg in self._terms(self.cos, theta):
            out += a * m**order * np.cos(arg + order * np.pi / 2)
        for m, b, arg in self._terms(self.sin, theta):
            out += b * m**order * np.sin(arg + order * np.pi / 2)
        return out


@dataclass(frozen=True)
class Triangle:
    """Symmetric triangle wave of unit peak-to-peak height with a crest at theta = 0."""

    smooth: bool = False

    def __call__(self, theta: np.ndarray) -> np.ndarray:
        t = np.mod(np.asarray(theta, dtype=float) / TWO_PI, 1.0)
        return np.abs(2 * t - 1) - 0.5

    def derivative(self, theta: np.ndarray, order: int = 1) -> np.ndarray:
        t = np.mod(np.asarray(theta, dtype=float) / TWO_PI, 1.0)
        if order == 1:
            return np.sign(2 * t - 1) / np.pi
        return np.zeros_like(t)


@dataclass(frozen=True)
class Lamellar:
    """Steep continuous graph standing in for a lamellar (rectangular) grating."""

    steepness: float = 8.0
    smooth: bool = False

    def __call__(self, theta: np.ndarray) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        return np.tanh(self.steepness * np.cos(theta)) / (2 * np.tanh(self.steepness))

    def derivative(self, theta: np.ndarray, order: int = 1) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        s = self.steepness
        u = s * np.cos(theta)
        sech2 = 1 / np.cosh(u) ** 2
        scale = 2 * np.tanh(s)
        if order == 1:
            return -s * np.sin(theta) * sech2 / scale
        if order == 2:
            return (
                -s * np.cos(theta) * sech2
                - 2 * s**2 * np.sin(theta) ** 2 * sech2 * np.tanh(u)
            ) / scale
        raise ConfigurationError(f"Unsupported derivative order for lamellar profile: {order}")


def rough_shape(scale: float = 2.5 * np.pi) -> CosineSeries:
    """Three-term rough profile scale * (0.4 cos x - 0.2 cos 2x + 0.4 cos 3x)."""
    return CosineSeries(cos=(0.4 * scale, -0.2 * scale, 0.4 * scale))


@dataclass(frozen=True)
class GratingProfile:
    """Periodic interface x2 = mean_height + roughness * shape(2 pi x1 / period)."""

    mean_height: float = 0.0
    roughness: float = 0.0
    shape: ProfileShape = field(default_factory=CosineSeries)
    period: float = TWO_PI

    def __post_init__(self):
        if self.period <= 0:
            raise ConfigurationError(f"Profile period must be positive, got {self.period}")
        if self.roughness < 0:
            raise ConfigurationError(f"Profile roughness must be non-negative, got {self.roughness}")

    @classmethod
    def flat(cls, height: float = 0.0, period: float = TWO_PI) -> GratingProfile:
        return cls(mean_height=height, roughness=0.0, period=period)

    @classmethod
    def cosine_series(
        cls,
        coeffs: tuple[float, ...],
        roughness: float = 1.0,
        mean_height: float = 0.0,
        period: float = TWO_PI,
        sin: tuple[float, ...] = (),
    ) -> GratingProfile:
        return cls(mean_height, roughness, CosineSeries(cos=tuple(coeffs), sin=tuple(sin)), period)

    @classmethod
    def rough(cls, roughness: float, mean_height: float = 0.0, period: float = TWO_PI) -> GratingProfile:
        return cls(mean_height, roughness, rough_shape(), period)

    @classmethod
    def triangle(cls, height: float, mean_height: float = 0.0, period: float = TWO_PI) -> GratingProfile:
        return cls(mean_height, height, Triangle(), period)

    @classmethod
    def lamellar(
        cls, height: float, mean_height: float = 0.0, period: float = TWO_PI, steepness: float = 8.0
    ) -> GratingProfile:
        return cls(mean_height, height, Lamellar(steepness), period)

    @property
    def smooth(self) -> bool:
        return self.shape.smooth

    @property
    def is_flat(self) -> bool:
        return self.roughness == 0.0

    def _theta(self, x1) -> np.ndarray:
        return TWO_PI * np.asarray(x1, dtype=float) / self.period

    def deviation(self, x1) -> np.ndarray:
        """The perturbation roughness * shape, i.e. F - mean_height."""
        return self.roughness * self.shape(self._theta(x1))

    def value(self, x1) -> np.ndarray:
        return self.mean_height + self.deviation(x1)

    def derivative(self, x1, order: int = 1) -> np.ndarray:
        scale = (TWO_PI / self.period) ** order
        return self.roughness * scale * self.shape.derivative(self._theta(x1), order)

    def second_derivative(self, x1) -> np.ndarray:
        return self.derivative(x1, 2)

    def shifted(self, offset: float) -> GratingProfile:
        return replace(self, mean_height=self.mean_height + offset)

    @cached_property
    def extrema(self) -> tuple[float, float]:
        """(min, max) of the profile by dense sampling and local refinement."""
        if self.is_flat:
            return self.mean_height, self.mean_height
        samples = SETTINGS.PROFILE_SAMPLES
        x1 = np.linspace(0, self.period, samples, endpoint=False)
        values = self.value(x1)
        step = self.period / samples

        def refine(index: int, sign: float) -> float:
            center = x1[index]
            result = minimize_scalar(
                lambda x: sign * float(self.value(x)),
                bounds=(center - step, center + step),
                method="bounded",
                options={"xatol": 1e-12},
            )
            refined = sign * result.fun
            return min(refined, values[index]) if sign > 0 else max(refined, values[index])

        return refine(int(np.argmin(values)), 1.0), refine(int(np.argmax(values)), -1.0)


@dataclass(frozen=True)
class QuasiPeriodicity:
    """Bloch phase alpha and period d of the quasi-periodic setting."""

    alpha: float = 0.0
    period: float = TWO_PI

    def __post_init__(self):
        if self.period <= 0:
            raise ConfigurationError(f"Period must be positive, got {self.period}")

    def alpha_r(self, r) -> np.ndarray:
        return self.alpha + TWO_PI * np.asarray(r) / self.period

    def beta(self, k: complex, r=0) -> np.ndarray:
        return sqrt_branch(k**2 - self.alpha_r(r) ** 2)

    def incidence(self, k0: float) -> tuple[float, complex]:
        """(alpha, beta) of the incident plane wave exp(i alpha x1 - i beta x2)."""
        return self.alpha, complex(self.beta(k0, 0))


@dataclass(frozen=True)
class LayerStack:
    """Layers Omega_0 ... Omega_{N+1} separated by the profiles Gamma_0 ... Gamma_N (top to bottom)."""

    profiles: tuple[GratingProfile, ...]
    wavenumbers: tuple[float, ...]
    qp: QuasiPeriodicity = field(default_factory=QuasiPeriodicity)
    strip_cuts: tuple[float, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "profiles", tuple(self.profiles))
        object.__setattr__(self, "wavenumbers", tuple(self.wavenumbers))
        if not self.profiles:
            raise ConfigurationError("A layer stack needs at least one interface.")
        if len(self.wavenumbers) != len(self.profiles) + 1:
            raise ConfigurationError(
                f"{len(self.profiles)} interfaces require {len(self.profiles) + 1} wavenumbers, got {len(self.wavenumbers)}"
            )
        if any(k <= 0 for k in self.wavenumbers):
            raise ConfigurationError(f"Wavenumbers must be positive, got {self.wavenumbers}")
        for profile in self.profiles:
            if not math.isclose(profile.period, self.qp.period):
                raise ConfigurationError(
                    f"Profile period {profile.period} differs from the stack period {self.qp.period}"
                )
        if self.strip_cuts is not None:
            object.__setattr__(self, "strip_cuts", tuple(self.strip_cuts))

    @property
    def n_interfaces(self) -> int:
        return len(self.profiles)

    def require_valid(self, strip: bool = False) -> None:
        """Raise if validate_stack reports geometric violations."""
        diagnostics = validate_stack(self)
        fatal = [v for v in diagnostics.violations if v.kind != "wood" and (strip or v.kind != "strip_cut")]
        if fatal:
            raise UnsupportedGeometryError("; ".join(v.message for v in fatal))
        for violation in diagnostics.violations:
            if violation.kind == "wood":
                raise ConfigurationError(violation.message)


@dataclass(frozen=True, eq=False)
class InterfaceGrid:
    """Equispaced nodes on one interface.

    ``normals`` holds the non-unit upward normal (-F', 1). The outward normal of
    the domain above the interface is its negation, that of the domain below is
    the normal itself.
    """

    profile: GratingProfile
    n: int
    nodes: np.ndarray
    points: np.ndarray
    derivative: np.ndarray
    second_derivative: np.ndarray
    jacobian: np.ndarray
    normals: np.ndarray

    @property
    def period(self) -> float:
        return self.profile.period

    @property
    def weight(self) -> float:
        return self.profile.period / self.n

    @property
    def theta(self) -> np.ndarray:
        return TWO_PI * self.nodes / self.profile.period

    def outward_normal(self, domain: Literal["above", "below"]) -> np.ndarray:
        if domain == "above":
            return -self.normals
        if domain == "below":
            return self.normals
        raise ConfigurationError(f"Unknown domain side: {domain}")


def build_grid(profile: GratingProfile, n: int) -> InterfaceGrid:
    """Sample a profile on n equispaced nodes x1_m = m d / n; n must be even and at least MIN_NODES."""
    if n % 2 or n < MIN_NODES:
        raise ConfigurationError(f"Node count must be even and at least {MIN_NODES}, got {n}")
    nodes = profile.period * np.arange(n) / n
    heights = profile.value(nodes)
    slope = profile.derivative(nodes, 1)
    curvature = profile.derivative(nodes, 2)
    return InterfaceGrid(
        profile=profile,
        n=n,
        nodes=nodes,
        points=np.column_stack([nodes, heights]),
        derivative=slope,
        second_derivative=curvature,
        jacobian=np.sqrt(1 + slope**2),
        normals=np.column_stack([-slope, np.ones(n)]),
    )


def stacked_profiles(
    count: int,
    spacing: float,
    roughness: float,
    shape: ProfileShape,
    period: float = TWO_PI,
    top: float = 0.0,
) -> tuple[GratingProfile, ...]:
    """Profiles F_l = top - l * spacing + roughness * shape, l = 0 ... count - 1."""
    return tuple(
        GratingProfile(top - index * spacing, roughness, shape, period) for index in range(count)
    )


def vertical_gap(upper: GratingProfile, lower: GratingProfile) -> float:
    """Sampled min over x1 of upper(x1) - lower(x1)."""
    x1 = np.linspace(0, upper.period, SETTINGS.PROFILE_SAMPLES, endpoint=False)
    return float(np.min(upper.value(x1) - lower.value(x1)))


@dataclass(frozen=True)
class Violation:
    kind: Literal["order", "overlap", "strip_cut", "wood"]
    message: str
    location: tuple[int, ...] = ()


@dataclass(frozen=True)
class StackDiagnostics:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def of_kind(self, kind: str) -> list[Violation]:
        return [v for v in self.violations if v.kind == kind]


def _wood_violations(stack: LayerStack, wood_tol: float) -> list[Violation]:
    found = []
    qp = stack.qp
    for j, k in enumerate(stack.wavenumbers):
        scale = qp.period / TWO_PI
        low = math.floor((-k - qp.alpha) * scale) - 1
        high = math.ceil((k - qp.alpha) * scale) + 1
        for r in range(low, high + 1):
            if abs(qp.beta(k, r)) <= wood_tol * k:
                found.append(
                    Violation(
                        "wood",
                        f"Wavenumber k_{j} = {k} is a Wood anomaly for mode r = {r}",
                        (j, r),
                    )
                )
    return found


def validate_stack(stack: LayerStack, wood_tol: float | None = None) -> StackDiagnostics:
    """Collect ordering, overlap, strip-cut and Wood-anomaly violations without raising."""
    wood_tol = SETTINGS.WOOD_TOL if wood_tol is None else wood_tol
    violations: list[Violation] = []
    extrema = [profile.extrema for profile in stack.profiles]

    for j in range(stack.n_interfaces - 1):
        gap = vertical_gap(stack.profiles[j], stack.profiles[j + 1])
        if stack.profiles[j].mean_height <= stack.profiles[j + 1].mean_height:
            violations.append(
                Violation("order", f"Interfaces {j} and {j + 1} are not ordered top to bottom", (j, j + 1))
            )
        if gap <= 0:
            violations.append(
                Violation(
                    "overlap",
                    f"Interface {j} does not lie above interface {j + 1} everywhere (min gap {gap:.6g})",
                    (j, j + 1),
                )
            )

    cuts = stack.strip_cuts
    if cuts is not None:
        if len(cuts) != stack.n_interfaces + 1:
            violations.append(
                Violation(
                    "strip_cut",
                    f"{stack.n_interfaces} interfaces require {stack.n_interfaces + 1} strip cuts, got {len(cuts)}",
                )
            )
        else:
            for j, (low, high) in enumerate(extrema):
                if not cuts[j] > high:
                    violations.append(
                        Violation("strip_cut", f"Cut c_{j} = {cuts[j]} is not above interface {j} (max {high:.6g})", (j,))
                    )
                if not cuts[j + 1] < low:
                    violations.append(
                        Violation(
                            "strip_cut",
                            f"Cut c_{j + 1} = {cuts[j + 1]} is not below interface {j} (min {low:.6g})",
                            (j + 1,),
                        )
                    )

    violations.extend(_wood_violations(stack, wood_tol))
    if violations:
        logger.debug(f"Stack validation found {len(violations)} violations")
    return StackDiagnostics(tuple(violations))


def default_strip_cuts(stack: LayerStack, offset: float | None = None) -> tuple[float, ...]:
    """Cuts above the top profile, below the bottom one and midway through every gap."""
    offset = SETTINGS.LINE_OFFSET if offset is None else offset
    extrema = [profile.extrema for profile in stack.profiles]
    cuts = [extrema[0][1] + offset]
    for j in range(1, stack.n_interfaces):
        gap_top, gap_bottom = extrema[j - 1][0], extrema[j][1]
        if gap_top <= gap_bottom:
            raise UnsupportedGeometryError(
                f"No horizontal strip separates interfaces {j - 1} and {j}: "
                f"min of interface {j - 1} is {gap_top:.6g}, max of interface {j} is {gap_bottom:.6g}"
            )
        cuts.append(0.5 * (gap_top + gap_bottom))
    cuts.append(extrema[-1][0] - offset)
    return tuple(cuts)
