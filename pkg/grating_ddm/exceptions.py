"""Exceptions raised by the solver."""

from __future__ import annotations


class ConfigurationError(ValueError):
    """Invalid discretization, operator or experiment parameters."""


class SingularPointError(ValueError):
    """A kernel was evaluated on one of its source images."""


class UnsupportedGeometryError(ValueError):
    """Touching interfaces, infeasible cuts or evaluation points too close to a boundary."""


class IllPosedError(RuntimeError):
    """A dense interior or sweep system is numerically singular."""
