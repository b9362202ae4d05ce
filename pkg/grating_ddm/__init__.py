from __future__ import annotations

from importlib.metadata import PackageNotFoundError, version

from grating_ddm.ddm import BlockTridiagonalSystem, assemble_system
from grating_ddm.geometry import GratingProfile, LayerStack, QuasiPeriodicity
from grating_ddm.krylov import GmresConfig, gmres
from grating_ddm.precond import factorize, preconditioner
from grating_ddm.settings import MODULE_PATH, SETTINGS

try:
    __version__ = version("grating-ddm")
except PackageNotFoundError:  # pragma: no cover
    # package is not installed
    pass

__all__ = [
    "MODULE_PATH",
    "SETTINGS",
    "BlockTridiagonalSystem",
    "GmresConfig",
    "GratingProfile",
    "LayerStack",
    "QuasiPeriodicity",
    "assemble_system",
    "factorize",
    "gmres",
    "preconditioner",
]
