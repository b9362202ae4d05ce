"""Experiment files: schema, loading and the cells of a campaign grid.

An experiment is a YAML (or JSON) document, e.g.::

    name: many_layers_shallow
    profile: {type: cosine-series, coeffs: [1.0]}
    layer_spacing: 3.3
    roughness: [0.02]
    layers: [9, 19, 29]
    wavenumbers:
      - {slope: 1.0, offset: 1.3}
    scheme: [layer_Zsemi]
    orders: [0]
    gmres: {rel_tol: 1.0e-6}
    precond: [none, sweep]

Every sweep axis is a list; the campaign runs the cartesian product.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from pathlib import Path
from typing import Literal

from monty.serialization import loadfn
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from grating_ddm.ddm import FamilyName, Scheme
from grating_ddm.exceptions import ConfigurationError
from grating_ddm.geometry import (
    MIN_NODES,
    TWO_PI,
    CosineSeries,
    GratingProfile,
    LayerStack,
    Lamellar,
    ProfileShape,
    QuasiPeriodicity,
    Triangle,
    rough_shape,
    stacked_profiles,
)
from grating_ddm.krylov import GmresConfig
from grating_ddm.settings import SETTINGS

PrecondName = Literal["none", "sweep", "exact"]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ProfileSpec(_Strict):
    """Shape of every interface; ``height`` multiplies the swept roughness."""

    type: Literal["cosine-series", "rough", "triangle", "lamellar", "flat"] = "cosine-series"
    coeffs: tuple[float, ...] = (1.0,)
    sin: tuple[float, ...] = ()
    height: float = Field(default=1.0, ge=0)
    steepness: float = Field(default=8.0, gt=0)

    def shape(self) -> ProfileShape:
        if self.type == "cosine-series":
            return CosineSeries(cos=self.coeffs, sin=self.sin)
        if self.type == "rough":
            return rough_shape()
        if self.type == "triangle":
            return Triangle()
        if self.type == "lamellar":
            return Lamellar(self.steepness)
        return CosineSeries()

    def amplitude(self, roughness: float) -> float:
        return 0.0 if self.type == "flat" else self.height * roughness


class WavenumberLaw(_Strict):
    """Either explicit ``values`` k_0 ... k_{N+1} or the affine law k_l = slope * l + offset."""

    values: tuple[float, ...] | None = None
    slope: float | None = None
    offset: float | None = None

    @model_validator(mode="after")
    def _one_form(self) -> WavenumberLaw:
        affine = self.slope is not None and self.offset is not None
        if (self.values is None) == (not affine):
            raise ValueError("give either 'values' or both 'slope' and 'offset'")
        return self

    @property
    def label(self) -> str:
        if self.values is not None:
            return "[" + ", ".join(f"{k:g}" for k in self.values) + "]"
        return f"{self.slope:g}*l + {self.offset:g}"

    def resolve(self, count: int) -> tuple[float, ...]:
        """Wavenumbers of ``count`` layers."""
        if self.values is not None:
            if len(self.values) != count:
                raise ConfigurationError(f"{count} layers need {count} wavenumbers, got {len(self.values)}")
            return tuple(self.values)
        return tuple(self.slope * index + self.offset for index in range(count))


class GmresSpec(_Strict):
    rel_tol: float = Field(default_factory=lambda: SETTINGS.GMRES_TOL)
    max_iter: int = Field(default_factory=lambda: SETTINGS.GMRES_MAX_ITER)
    restart: int | None = None

    def to_config(self) -> GmresConfig:
        return GmresConfig(self.rel_tol, self.max_iter, self.restart)


class OutputSpec(_Strict):
    directory: Path = Path("results")
    table: str = "campaign.csv"
    spectrum: str = "spectrum.csv"
    efficiencies: str = "efficiencies.csv"


class ExperimentConfig(_Strict):
    name: str
    period: float = Field(default=TWO_PI, gt=0)
    alpha: float = 0.0
    profile: ProfileSpec = ProfileSpec()
    layer_spacing: float = Field(default=3.3, gt=0)
    roughness: tuple[float, ...] = (0.0,)
    layers: tuple[int, ...] = (0,)
    wavenumbers: tuple[WavenumberLaw, ...]
    scheme: tuple[Scheme, ...] = ("layer_Zsemi",)
    family: tuple[FamilyName, ...] = ("quasi_optimal",)
    orders: tuple[int, ...] = (0,)
    sigma: float | tuple[float, ...] | None = None
    n: int = Field(default_factory=lambda: SETTINGS.DISCRETIZATION, ge=MIN_NODES, multiple_of=2)
    window_size: float = Field(default_factory=lambda: SETTINGS.WINDOW_SIZE)
    amplitude: float = 1.0
    gmres: GmresSpec = GmresSpec()
    precond: tuple[PrecondName, ...] = ("none", "sweep")
    strip_cuts: tuple[float, ...] | None = None
    line_offset: float = Field(default_factory=lambda: SETTINGS.LINE_OFFSET)
    output: OutputSpec = OutputSpec()

    @field_validator("roughness", "layers", "wavenumbers", "scheme", "family", "orders", "precond")
    @classmethod
    def _non_empty(cls, value):
        if not value:
            raise ValueError("sweep axis must not be empty")
        return value

    @field_validator("layers")
    @classmethod
    def _layer_counts(cls, value):
        if any(count < 0 for count in value):
            raise ValueError(f"layer counts must be non-negative, got {value}")
        return value

    @field_validator("sigma")
    @classmethod
    def _non_negative_sigma(cls, value):
        values = value if isinstance(value, tuple) else () if value is None else (value,)
        if any(v < 0 for v in values):
            raise ValueError(f"sigma must be non-negative, got {value}")
        return value

    @model_validator(mode="after")
    def _sigma_covers_media(self) -> ExperimentConfig:
        media = max(self.layers) + 2
        if isinstance(self.sigma, tuple) and len(self.sigma) < media:
            raise ValueError(f"per-medium sigma has {len(self.sigma)} values, the deepest stack has {media} media")
        return self

    @property
    def qp(self) -> QuasiPeriodicity:
        return QuasiPeriodicity(self.alpha, self.period)

    def cells(self) -> list[Cell]:
        """The sweep grid in a fixed order; the strip scheme ignores the series order."""
        cells = {}
        for layers, roughness, law, scheme, family, order in itertools.product(
            self.layers, self.roughness, self.wavenumbers, self.scheme, self.family, self.orders
        ):
            if scheme == "strip" or family != "quasi_optimal":
                order = 0
            cell = Cell(layers, roughness, law, scheme, family, order)
            cells.setdefault(cell, None)
        return list(cells)

    def build_stack(self, cell: Cell) -> LayerStack:
        """Stack of N + 1 shifted copies of the profile, N = cell.layers, with top interface at x2 = 0."""
        profiles = stacked_profiles(
            cell.layers + 1,
            self.layer_spacing,
            self.profile.amplitude(cell.roughness),
            self.profile.shape(),
            self.period,
        )
        return LayerStack(
            profiles,
            cell.law.resolve(cell.layers + 2),
            self.qp,
            strip_cuts=self.strip_cuts,
        )


@dataclass(frozen=True)
class Cell:
    """One point of the sweep grid."""

    layers: int
    roughness: float
    law: WavenumberLaw
    scheme: Scheme
    family: FamilyName
    order: int

    def row(self) -> dict:
        return {
            "N": self.layers,
            "epsilon": self.roughness,
            "k_law": self.law.label,
            "scheme": self.scheme,
            "family": self.family,
            "L": self.order,
        }


def load_config(path: str | Path) -> ExperimentConfig:
    """Read and validate an experiment file."""
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"Experiment file not found: {path}")
    try:
        return ExperimentConfig.model_validate(loadfn(path))
    except ValidationError as exc:
        raise ConfigurationError(f"Invalid experiment file {path}:\n{exc}") from exc
