import numpy as np
import pytest

from grating_ddm.dtn import despres_operator, hilbert_operator
from grating_ddm.exceptions import IllPosedError, UnsupportedGeometryError
from grating_ddm.fourier import QuasiPeriodicBasis
from grating_ddm.geometry import GratingProfile
from grating_ddm.rtr import (
    flat_rtr_symbol,
    lu_factor_checked,
    numerical_dtn,
    rtr_homogeneous_strip,
    rtr_semi_infinite,
    rtr_strip,
)

KAPPA = 1.3 + 0.5j
A = 100.0


def test_flat_symbol_vanishes_for_exact_dtn(qp):
    beta = np.array([qp.beta(KAPPA, r) for r in QuasiPeriodicBasis(16, qp).modes])
    symbol = flat_rtr_symbol(KAPPA, -1j * np.ones(16), -1j * beta, qp, 16)
    np.testing.assert_allclose(symbol, 0.0, atol=1e-14)


@pytest.mark.parametrize("domain", ["above", "below"])
def test_flat_semi_infinite_rtr_is_a_multiplier(qp, domain):
    n = 16
    basis = QuasiPeriodicBasis(n, qp)
    z_in, z_out = despres_operator(n, qp), hilbert_operator(n, qp)
    block = rtr_semi_infinite(KAPPA, GratingProfile.flat(0.0), z_in, z_out, qp, n, A=A, domain=domain)
    side = "bottom" if domain == "above" else "top"
    symbol = flat_rtr_symbol(KAPPA, -1j * np.ones(n), -1j * (np.abs(basis.modes) + 1.0), qp, n)
    np.testing.assert_allclose(block.block(side, side), basis.multiplier_matrix(symbol), atol=1e-6)


def test_flat_semi_infinite_traces(qp):
    n = 16
    basis = QuasiPeriodicBasis(n, qp)
    block = rtr_semi_infinite(KAPPA, GratingProfile.flat(0.0), despres_operator(n, qp), despres_operator(n, qp), qp, n, A=A)
    r = 2
    mode = np.exp(1j * qp.alpha_r(r) * basis.nodes)
    beta = complex(qp.beta(KAPPA, r))
    trace = mode / (-1j * beta - 1j)
    np.testing.assert_allclose(block.dirichlet(mode), trace, atol=1e-6)
    np.testing.assert_allclose(block.neumann(mode), -1j * beta * trace, atol=1e-6)


@pytest.mark.parametrize("domain", ["above", "below"])
def test_exact_dtn_makes_the_boundary_transparent(qp, domain):
    n = 32
    profile = GratingProfile.cosine_series((1.0,), roughness=0.3)
    exact = numerical_dtn(KAPPA, profile, domain, qp, n, A=60.0)
    block = rtr_semi_infinite(KAPPA, profile, despres_operator(n, qp), exact, qp, n, A=60.0, domain=domain)
    side = "bottom" if domain == "above" else "top"
    np.testing.assert_allclose(block.block(side, side), 0.0, atol=1e-8)


def test_strip_with_matched_media_is_homogeneous(qp):
    n = 64
    z = despres_operator(n, qp)
    profile = GratingProfile.cosine_series((1.0,), roughness=0.3)
    strip = rtr_strip(KAPPA, KAPPA, profile, 1.0, -1.0, z, z, qp, n, A=60.0)
    homogeneous = rtr_homogeneous_strip(KAPPA, 1.0, -1.0, z, z, qp, n, A=60.0)
    assert strip.sides == homogeneous.sides == ("top", "bottom")
    np.testing.assert_allclose(strip.matrix, homogeneous.matrix, atol=1e-4)


def test_strip_cuts_must_enclose_the_interface(qp):
    z = despres_operator(16, qp)
    profile = GratingProfile.cosine_series((1.0,), roughness=0.5)
    with pytest.raises(UnsupportedGeometryError, match="do not enclose"):
        rtr_strip(KAPPA, KAPPA, profile, 0.4, -1.0, z, z, qp, 16)
    with pytest.raises(UnsupportedGeometryError, match="c_top > c_bot"):
        rtr_homogeneous_strip(KAPPA, -1.0, 1.0, z, z, qp, 16)


def test_unknown_domain(qp):
    z = despres_operator(16, qp)
    with pytest.raises(UnsupportedGeometryError, match="Unknown semi-infinite domain"):
        rtr_semi_infinite(KAPPA, GratingProfile.flat(), z, z, qp, 8, domain="left")


def test_singular_matrix_is_ill_posed():
    with pytest.raises(IllPosedError, match="numerically singular"):
        lu_factor_checked(np.zeros((4, 4)), "Zero matrix")


@pytest.mark.slow
@pytest.mark.parametrize("roughness", [0.0, 0.02])
def test_exact_dtn_transparency_at_full_resolution(qp, roughness):
    n = 256
    profile = GratingProfile.cosine_series((1.0,), roughness=roughness)
    exact = numerical_dtn(1.3, profile, "above", qp, n, A=120.0)
    block = rtr_semi_infinite(1.3, profile, despres_operator(n, qp), exact, qp, n, A=120.0)
    assert np.linalg.norm(block.block("bottom", "bottom"), 2) <= 1e-4
