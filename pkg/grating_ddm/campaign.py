"""Solve single configurations and run iteration-count campaigns over a sweep grid."""

from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial
from pathlib import Path

import numpy as np
import pandas as pd

from grating_ddm.config import Cell, ExperimentConfig, PrecondName
from grating_ddm.ddm import BlockTridiagonalSystem, assemble_system, dense_spectrum
from grating_ddm.exceptions import ConfigurationError, IllPosedError, UnsupportedGeometryError
from grating_ddm.krylov import SolveReport, gmres
from grating_ddm.post import RayleighExpansion, efficiencies, energy_balance, rayleigh_amplitudes
from grating_ddm.precond import apply_sweep, factorize, preconditioner
from grating_ddm.settings import SETTINGS

logger = logging.getLogger(__name__)

SKIPPABLE = (UnsupportedGeometryError, ConfigurationError, IllPosedError)
TABLE_COLUMNS = (
    "N",
    "epsilon",
    "k_law",
    "scheme",
    "family",
    "L",
    "precond",
    "iterations",
    "converged",
    "energy_defect",
    "wall_time",
    "status",
)
SPECTRUM_COLUMNS = ("N", "epsilon", "k_law", "scheme", "family", "L", "precond", "re", "im", "status")
SWEEP_MODES = {"sweep": "approximate", "exact": "exact"}


@dataclass(frozen=True, eq=False)
class SolveOutcome:
    """Solution of one cell with one preconditioner, and what was measured on it."""

    cell: Cell
    precond: PrecondName
    system: BlockTridiagonalSystem
    solution: np.ndarray
    report: SolveReport
    expansion: RayleighExpansion
    energy_defect: float
    wall_time: float

    @property
    def efficiencies(self) -> pd.DataFrame:
        return efficiencies(self.expansion)


def _assemble(config: ExperimentConfig, cell: Cell) -> BlockTridiagonalSystem:
    return assemble_system(
        config.build_stack(cell),
        scheme=cell.scheme,
        L=cell.order,
        sigma=config.sigma,
        n=config.n,
        A=config.window_size,
        family=cell.family,
        amplitude=config.amplitude,
    )


def _solve_system(
    config: ExperimentConfig, cell: Cell, system: BlockTridiagonalSystem, precond: PrecondName, started: float
) -> SolveOutcome:
    M = None if precond == "none" else preconditioner(factorize(system, SWEEP_MODES[precond]))
    x, report = gmres(system.as_linear_operator(), system.rhs, config.gmres.to_config(), M=M)
    expansion = rayleigh_amplitudes(system, x, line_offset=config.line_offset)
    defect = energy_balance(expansion, system.stack)
    return SolveOutcome(cell, precond, system, x, report, expansion, defect, time.perf_counter() - started)


def solve(config: ExperimentConfig, cell: Cell | None = None, precond: PrecondName = "sweep") -> SolveOutcome:
    """Assemble and solve one cell (the first of the grid by default)."""
    cell = cell or config.cells()[0]
    if precond not in ("none", *SWEEP_MODES):
        raise ConfigurationError(f"Unsupported preconditioner: {precond}")
    started = time.perf_counter()
    outcome = _solve_system(config, cell, _assemble(config, cell), precond, started)
    logger.info(
        f"{config.name} {cell.row()} [{precond}]: {outcome.report.iterations} iterations, "
        f"energy defect {outcome.energy_defect:.2e}"
    )
    return outcome


def _skipped(cell: Cell, precond: PrecondName, reason: Exception) -> dict:
    return {
        **cell.row(),
        "precond": precond,
        "iterations": None,
        "converged": False,
        "energy_defect": None,
        "wall_time": None,
        "status": f"skipped: {reason}",
    }


def run_cell(config: ExperimentConfig, cell: Cell) -> list[dict]:
    """Table rows of one cell, one per preconditioner; the system is assembled once."""
    started = time.perf_counter()
    try:
        system = _assemble(config, cell)
    except SKIPPABLE as exc:
        logger.warning(f"Skipping {cell.row()}: {exc}")
        return [_skipped(cell, precond, exc) for precond in config.precond]
    assembly_time = time.perf_counter() - started

    rows = []
    for precond in config.precond:
        try:
            outcome = _solve_system(config, cell, system, precond, time.perf_counter())
        except SKIPPABLE as exc:
            logger.warning(f"Skipping {cell.row()} [{precond}]: {exc}")
            rows.append(_skipped(cell, precond, exc))
            continue
        rows.append(
            {
                **cell.row(),
                "precond": precond,
                "iterations": outcome.report.iterations,
                "converged": outcome.report.converged,
                "energy_defect": outcome.energy_defect,
                "wall_time": assembly_time + outcome.wall_time,
                "status": "ok" if outcome.report.converged else "not converged",
            }
        )
    return rows


def _run_cell(args: tuple[ExperimentConfig, Cell]) -> list[dict]:
    return run_cell(*args)


def _map_cells(function, config: ExperimentConfig, workers: int | None) -> list:
    tasks = [(config, cell) for cell in config.cells()]
    workers = SETTINGS.MAX_WORKERS if workers is None else workers
    if workers < 1:
        raise ConfigurationError(f"Worker count must be positive, got {workers}")
    logger.info(f"{config.name}: {len(tasks)} cells on {workers} worker(s)")
    if workers == 1 or len(tasks) == 1:
        return [function(task) for task in tasks]
    with ProcessPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(function, tasks))


def _write(frame: pd.DataFrame, directory: Path, filename: str) -> Path:
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / filename
    frame.to_csv(path, index=False)
    logger.info(f"Wrote {len(frame)} rows to {path}")
    return path


def run_campaign(
    config: ExperimentConfig,
    precond: PrecondName | None = None,
    out: str | Path | None = None,
    workers: int | None = None,
) -> pd.DataFrame:
    """Iteration counts and energy defects of every cell, written to ``<out>/<output.table>``.

    ``precond`` restricts the run to a single preconditioner.
    """
    if precond is not None:
        config = config.model_copy(update={"precond": (precond,)})
    rows = [row for cell_rows in _map_cells(_run_cell, config, workers) for row in cell_rows]
    frame = pd.DataFrame(rows, columns=list(TABLE_COLUMNS))
    _write(frame, Path(out) if out is not None else config.output.directory, config.output.table)
    return frame


def _spectrum(system: BlockTridiagonalSystem, precond: PrecondName) -> np.ndarray:
    if precond == "none":
        return dense_spectrum(system)
    return dense_spectrum(system, partial(apply_sweep, factorize(system, SWEEP_MODES[precond])))


def _skipped_spectrum(cell: Cell, precond: PrecondName, reason: Exception) -> dict:
    return {**cell.row(), "precond": precond, "re": None, "im": None, "status": f"skipped: {reason}"}


def _spectrum_rows(args: tuple[ExperimentConfig, Cell]) -> list[dict]:
    config, cell = args
    try:
        system = _assemble(config, cell)
    except SKIPPABLE as exc:
        logger.warning(f"Skipping spectrum of {cell.row()}: {exc}")
        return [_skipped_spectrum(cell, precond, exc) for precond in config.precond]
    rows = []
    for precond in config.precond:
        try:
            eigenvalues = _spectrum(system, precond)
        except SKIPPABLE as exc:
            logger.warning(f"Skipping spectrum of {cell.row()} [{precond}]: {exc}")
            rows.append(_skipped_spectrum(cell, precond, exc))
            continue
        rows.extend(
            {**cell.row(), "precond": precond, "re": value.real, "im": value.imag, "status": "ok"}
            for value in eigenvalues
        )
    return rows


def emit_spectrum(
    config: ExperimentConfig,
    precond: PrecondName | None = None,
    out: str | Path | None = None,
    workers: int | None = None,
) -> pd.DataFrame:
    """Eigenvalues (Re, Im) of the DD operator, and of its preconditioned version, per cell.

    Cells or preconditioners that fail keep one row with empty eigenvalues and a ``skipped`` status.
    """
    if precond is not None:
        config = config.model_copy(update={"precond": (precond,)})
    rows = [row for cell_rows in _map_cells(_spectrum_rows, config, workers) for row in cell_rows]
    frame = pd.DataFrame(rows, columns=list(SPECTRUM_COLUMNS))
    _write(frame, Path(out) if out is not None else config.output.directory, config.output.spectrum)
    return frame
