from dataclasses import replace

import numpy as np
import pytest

from grating_ddm.ddm import (
    TransmissionPolicy,
    assemble_system,
    dense_spectrum,
    interface_profiles,
    transmission_operators,
)
from grating_ddm.exceptions import ConfigurationError, UnsupportedGeometryError
from grating_ddm.geometry import CosineSeries, LayerStack, QuasiPeriodicity, stacked_profiles


def test_apply_matches_dense_operator(two_interface_system):
    rng = np.random.default_rng(3)
    size = two_interface_system.shape[0]
    x = rng.standard_normal(size) + 1j * rng.standard_normal(size)
    np.testing.assert_allclose(two_interface_system.apply(x), two_interface_system.densify() @ x, atol=1e-12)


def test_system_layout(two_interface_system):
    n = two_interface_system.n
    assert two_interface_system.n_interfaces == 2
    assert two_interface_system.shape == (4 * n, 4 * n)
    assert len(two_interface_system.u_blocks) == len(two_interface_system.l_blocks) == 1
    assert len(two_interface_system.subdomains) == 3
    assert two_interface_system.subdomains[0].sides == ("bottom",)
    assert two_interface_system.subdomains[1].sides == ("top", "bottom")


def test_only_the_top_interface_is_driven(two_interface_system):
    n = two_interface_system.n
    rhs = two_interface_system.rhs
    assert np.linalg.norm(rhs[: 2 * n]) > 0
    np.testing.assert_array_equal(rhs[2 * n :], 0.0)


def test_split_join_and_incoming(two_interface_system):
    n = two_interface_system.n
    x = np.arange(two_interface_system.shape[0], dtype=complex)
    data = two_interface_system.split(x)
    assert len(data) == 2
    np.testing.assert_array_equal(data.interface(1)[0], x[2 * n : 3 * n])
    np.testing.assert_array_equal(two_interface_system.join(data), x)
    np.testing.assert_array_equal(two_interface_system.incoming(0, x), x[:n])
    np.testing.assert_array_equal(
        two_interface_system.incoming(1, x), np.concatenate([x[n : 2 * n], x[2 * n : 3 * n]])
    )
    np.testing.assert_array_equal(two_interface_system.incoming(2, x), x[3 * n :])


def test_dense_spectrum_size(two_interface_system):
    eigenvalues = dense_spectrum(two_interface_system)
    assert eigenvalues.shape == (two_interface_system.shape[0],)
    assert np.all(np.isfinite(eigenvalues))


def test_unknown_scheme_and_family(two_interface_stack):
    with pytest.raises(ConfigurationError, match="Unsupported decomposition scheme"):
        assemble_system(two_interface_stack, scheme="checkerboard", n=16)
    with pytest.raises(ConfigurationError, match="Unsupported transmission operator family"):
        TransmissionPolicy(family="impedance")


def test_strip_scheme_needs_separable_interfaces():
    profiles = stacked_profiles(2, 1.0, 0.3, CosineSeries(cos=(2.5,)))
    stack = LayerStack(profiles, (1.3, 2.3, 3.3), QuasiPeriodicity(alpha=0.2))
    with pytest.raises(UnsupportedGeometryError, match="No horizontal strip"):
        assemble_system(stack, scheme="strip", n=16)


def test_strip_operators_are_flat_transmissions(two_interface_stack):
    stack = replace(two_interface_stack, strip_cuts=(0.5, -1.65, -3.8))
    z_down, z_up = transmission_operators(stack, "strip", TransmissionPolicy(sigma=0.5), 16)
    assert len(z_down) == len(interface_profiles(stack, "strip")) == 3
    assert all(op.family == "flat" for op in z_down)
    assert z_down[1] is z_up[1]


@pytest.mark.parametrize("family", ["despres", "hilbert"])
def test_classical_families_share_one_operator(two_interface_stack, family):
    z_down, z_up = transmission_operators(two_interface_stack, "layer_Zsemi", TransmissionPolicy(family), 16)
    assert {op.family for op in z_down + z_up} == {family}


def test_quasi_optimal_orientation(two_interface_stack):
    policy = TransmissionPolicy(sigma=0.5)
    z_down, z_up = transmission_operators(two_interface_stack, "layer_Zslab", policy, 16)
    # the top subdomain only sees the half space above, the bottom one only the half space below
    assert z_up[0].family == "semi"
    assert z_down[-1].family == "semi"
    assert z_down[0].family == "slab"
    assert z_up[1].family == "slab"
    assert z_down[0].wavenumber == pytest.approx(2.3 + 0.5j)
    assert z_up[0].wavenumber == pytest.approx(1.3 + 0.5j)


def test_per_layer_sigma(two_interface_stack):
    policy = TransmissionPolicy(sigma=[0.4, 0.6, 0.8])
    assert policy.kappa(two_interface_stack, 2) == pytest.approx(3.3 + 0.8j)


def test_per_layer_sigma_must_cover_every_medium(two_interface_stack):
    with pytest.raises(ConfigurationError, match="Per-medium sigma has 2 values, the stack has 3 media"):
        assemble_system(two_interface_stack, sigma=(0.4, 0.6), n=16)
    with pytest.raises(ConfigurationError, match="non-negative"):
        TransmissionPolicy(sigma=(0.4, -0.6, 0.8))


def test_coupling_blocks_annihilate(two_interface_system):
    for j in range(two_interface_system.n_interfaces - 1):
        upper, lower = two_interface_system.upper_block(j), two_interface_system.lower_block(j)
        np.testing.assert_array_equal(lower @ upper, 0.0)
        np.testing.assert_array_equal(upper @ lower, 0.0)
