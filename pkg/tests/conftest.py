# conftest file for pytest
from __future__ import annotations

from pathlib import Path

import pytest

from grating_ddm.ddm import assemble_system
from grating_ddm.geometry import CosineSeries, GratingProfile, LayerStack, QuasiPeriodicity, stacked_profiles
from grating_ddm.krylov import GmresConfig, gmres


@pytest.fixture(scope="session")
def experiments_dir():
    """The path to the checked-in experiment files."""
    return Path(__file__).parents[1] / "experiments"


@pytest.fixture(scope="session")
def qp():
    return QuasiPeriodicity(alpha=0.2)


@pytest.fixture(scope="session")
def two_interface_stack():
    """Two shallow cosine gratings 3.3 apart between three media."""
    profiles = stacked_profiles(2, 3.3, 0.1, CosineSeries(cos=(2.5,)))
    return LayerStack(profiles, (1.3, 2.3, 3.3))


@pytest.fixture(scope="session")
def two_interface_system(two_interface_stack):
    return assemble_system(two_interface_stack, scheme="layer_Zsemi", L=0, n=32, A=40.0)


@pytest.fixture(scope="session")
def flat_interface_stack(qp):
    return LayerStack((GratingProfile.flat(0.0),), (1.3, 2.3), qp)


@pytest.fixture(scope="session")
def flat_interface_solution(flat_interface_stack):
    """(system, solution) of a single flat interface at high accuracy."""
    system = assemble_system(flat_interface_stack, n=32, A=300.0)
    x, report = gmres(system.as_linear_operator(), system.rhs, GmresConfig(rel_tol=1e-11, max_iter=200))
    assert report.converged
    return system, x
