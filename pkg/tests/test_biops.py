import logging

import numpy as np
import pytest

from grating_ddm.biops import (
    assemble_adjoint_double_layer,
    assemble_double_layer,
    assemble_hypersingular,
    assemble_single_layer,
    mk_weights,
)
from grating_ddm.exceptions import UnsupportedGeometryError
from grating_ddm.geometry import GratingProfile, QuasiPeriodicity, build_grid

# complex wavenumbers keep the windowed lattice sums converged to roundoff at moderate A
K = 1.3 + 0.5j
A = 100.0


def mode(grid, qp, r):
    return np.exp(1j * qp.alpha_r(r) * grid.nodes)


def test_mk_weights_integrate_log_kernel():
    n = 32
    t = 2 * np.pi * np.arange(n) / n
    weights = mk_weights(n)
    np.testing.assert_allclose(weights.sum(), 0.0, atol=1e-12)
    index = np.subtract.outer(np.arange(n), np.arange(n)) % n
    # int_0^{2pi} ln(4 sin^2((t - tau)/2)) cos(m tau) dtau = -2 pi cos(m t) / m
    for m in (1, 3):
        np.testing.assert_allclose(weights[index] @ np.cos(m * t), -2 * np.pi * np.cos(m * t) / m, atol=1e-12)


@pytest.mark.parametrize("r", [0, 1, -2])
def test_single_layer_on_flat_interface(qp, r):
    grid = build_grid(GratingProfile.flat(0.0), 32)
    single = assemble_single_layer(K, grid, grid, qp, A)
    beta = qp.beta(K, r)
    np.testing.assert_allclose(single @ mode(grid, qp, r), 0.5j / beta * mode(grid, qp, r), atol=1e-8)


def test_adjoint_double_layer_vanishes_on_flat_interface(qp):
    grid = build_grid(GratingProfile.flat(0.0), 16)
    np.testing.assert_allclose(assemble_adjoint_double_layer(K, grid, grid, qp, A).matrix, 0.0, atol=1e-12)
    np.testing.assert_allclose(assemble_double_layer(K, grid, grid, qp, A).matrix, 0.0, atol=1e-12)


@pytest.mark.parametrize("r", [0, 1, -2])
def test_hypersingular_on_flat_interface(qp, r):
    grid = build_grid(GratingProfile.flat(0.0), 32)
    hyper = assemble_hypersingular(K, grid, grid, qp, A)
    beta = qp.beta(K, r)
    np.testing.assert_allclose(hyper @ mode(grid, qp, r), 0.5j * beta * mode(grid, qp, r), atol=1e-7)


def test_single_layer_between_parallel_lines(qp):
    source = build_grid(GratingProfile.flat(0.0), 32)
    target = build_grid(GratingProfile.flat(-1.0), 32)
    beta = qp.beta(K, 1)
    single = assemble_single_layer(K, source, target, qp, A)
    expected = 0.5j / beta * np.exp(1j * beta) * mode(target, qp, 1)
    np.testing.assert_allclose(single @ mode(source, qp, 1), expected, atol=1e-8)

    # onto a flat line the adjoint double layer is the vertical derivative
    adjoint = assemble_adjoint_double_layer(K, source, target, qp, A)
    np.testing.assert_allclose(adjoint @ mode(source, qp, 1), -1j * beta * expected, atol=1e-8)


def test_single_layer_is_symmetric_on_curved_interface():
    qp = QuasiPeriodicity(alpha=0.0)
    grid = build_grid(GratingProfile.cosine_series((0.3,)), 32)
    matrix = assemble_single_layer(K, grid, grid, qp, A).matrix
    np.testing.assert_allclose(matrix, matrix.T, atol=1e-10)


def test_calderon_identities_on_curved_interface(qp):
    grid = build_grid(GratingProfile.cosine_series((1.0,), roughness=0.3), 64)
    single, double, adjoint, hyper = (
        assemble(K, grid, grid, qp, A).matrix
        for assemble in (
            assemble_single_layer,
            assemble_double_layer,
            assemble_adjoint_double_layer,
            assemble_hypersingular,
        )
    )
    identity = np.eye(grid.n)
    for r in range(-2, 3):
        phi = mode(grid, qp, r)
        scale = np.linalg.norm(phi)
        assert np.linalg.norm((single @ hyper - double @ double + identity / 4) @ phi) < 1e-6 * scale
        assert np.linalg.norm((double @ single - single @ adjoint) @ phi) < 1e-6 * scale
        assert np.linalg.norm((hyper @ double - adjoint @ hyper) @ phi) < 1e-5 * scale


def test_touching_interfaces_are_rejected(qp):
    upper = build_grid(GratingProfile.cosine_series((0.6,)), 16)
    lower = build_grid(GratingProfile.flat(-0.5), 16)
    with pytest.raises(UnsupportedGeometryError, match="touch"):
        assemble_single_layer(K, upper, lower, qp, A)


def test_hypersingular_warns_on_corners(qp, caplog):
    grid = build_grid(GratingProfile.triangle(0.5), 16)
    with caplog.at_level(logging.WARNING, logger="grating_ddm.biops"):
        assemble_hypersingular(K, grid, grid, qp, A)
    assert len([r for r in caplog.records if "non-smooth" in r.getMessage()]) == 1


def test_dump_writes_raw_matrix(qp, tmp_path):
    grid = build_grid(GratingProfile.flat(0.0), 16)
    single = assemble_single_layer(K, grid, grid, qp, A)
    path = tmp_path / "single.bin"
    single.dump(path)
    np.testing.assert_array_equal(np.fromfile(path, dtype=np.complex128).reshape(16, 16), single.matrix)
