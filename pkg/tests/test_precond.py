import numpy as np
import pytest

from grating_ddm.ddm import BlockTridiagonalSystem, assemble_system, dense_spectrum
from grating_ddm.exceptions import ConfigurationError
from grating_ddm.geometry import CosineSeries, LayerStack, stacked_profiles
from grating_ddm.krylov import GmresConfig, gmres
from grating_ddm.precond import apply_sweep, factorize, preconditioned_operator, preconditioner


def _random_blocks(rng, count, n, scale):
    return tuple(scale * (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) for _ in range(count))


def _system(count=4, n=3, diagonal=0.3, coupling=0.3, seed=0) -> BlockTridiagonalSystem:
    rng = np.random.default_rng(seed)
    return BlockTridiagonalSystem(
        d_upper=_random_blocks(rng, count, n, diagonal),
        d_lower=_random_blocks(rng, count, n, diagonal),
        u_blocks=_random_blocks(rng, count - 1, n, coupling),
        l_blocks=_random_blocks(rng, count - 1, n, coupling),
        rhs=np.ones(2 * count * n, dtype=complex),
        subdomains=(),
        stack=None,
        scheme="layer_Zsemi",
        interface_grids=(),
    )


def _without_diagonal(system: BlockTridiagonalSystem) -> BlockTridiagonalSystem:
    zeros = tuple(np.zeros_like(block) for block in system.d_upper)
    return BlockTridiagonalSystem(
        zeros, zeros, system.u_blocks, system.l_blocks, system.rhs, (), None, system.scheme, ()
    )


@pytest.fixture
def residual():
    rng = np.random.default_rng(11)
    return rng.standard_normal(24) + 1j * rng.standard_normal(24)


def test_exact_sweep_is_block_lu(residual):
    system = _system()
    np.testing.assert_allclose(apply_sweep(factorize(system, "exact"), residual), np.linalg.solve(system.densify(), residual))


def test_approximate_sweep_drops_the_interface_blocks(residual):
    system = _system()
    expected = np.linalg.solve(_without_diagonal(system).densify(), residual)
    np.testing.assert_allclose(apply_sweep(factorize(system), residual), expected)


def test_uncoupled_sweep_is_identity(residual):
    system = _system(coupling=0.0)
    np.testing.assert_allclose(apply_sweep(factorize(system), residual), residual)


def test_single_interface_exact_sweep():
    system = _system(count=1)
    r = np.arange(6, dtype=complex)
    np.testing.assert_allclose(apply_sweep(factorize(system, "exact"), r), np.linalg.solve(system.densify(), r))


def test_bad_mode_and_shape(residual):
    system = _system()
    with pytest.raises(ConfigurationError, match="Unsupported sweep mode"):
        factorize(system, "jacobi")
    with pytest.raises(ConfigurationError, match="does not match system size"):
        apply_sweep(factorize(system), residual[:-1])


def test_preconditioned_operator(residual):
    system = _system()
    factors = factorize(system, "exact")
    np.testing.assert_allclose(preconditioned_operator(system, factors) @ residual, residual, atol=1e-10)


def test_exact_preconditioner_solves_in_one_step(two_interface_system):
    M = preconditioner(factorize(two_interface_system, "exact"))
    x, report = gmres(two_interface_system.as_linear_operator(), two_interface_system.rhs, GmresConfig(1e-8), M=M)
    assert report.converged
    assert report.iterations <= 2
    np.testing.assert_allclose(two_interface_system.apply(x), two_interface_system.rhs, atol=1e-6)


def _layered(layers, roughness, spacing=3.3):
    """N + 1 cosine gratings 2.5 eps cos x1 stacked ``spacing`` apart, k_l = l + 1.3."""
    profiles = stacked_profiles(layers + 1, spacing, roughness, CosineSeries(cos=(2.5,)))
    return LayerStack(profiles, tuple(index + 1.3 for index in range(layers + 2)))


def _iterations(system, sweep=True):
    M = preconditioner(factorize(system)) if sweep else None
    _, report = gmres(system.as_linear_operator(), system.rhs, GmresConfig(rel_tol=1e-4, max_iter=2000), M=M)
    assert report.converged
    return report.iterations


@pytest.mark.slow
def test_sweep_iterations_do_not_grow_with_layers():
    systems = [assemble_system(_layered(layers, 0.02), n=128) for layers in (9, 19, 29)]
    swept = [_iterations(system) for system in systems]
    assert all(8 <= count <= 21 for count in swept)
    assert max(swept) - min(swept) <= 3
    plain = [_iterations(system, sweep=False) for system in systems]
    assert plain[0] > 40
    assert plain[0] < plain[1] < plain[2]


@pytest.mark.slow
def test_swept_strip_scheme_beats_swept_layer_scheme():
    stack = _layered(9, 0.5)
    strip = _iterations(assemble_system(stack, scheme="strip", n=128))
    layer = _iterations(assemble_system(stack, scheme="layer_Zsemi", L=0, n=128))
    assert strip < layer


@pytest.mark.slow
def test_quasi_optimal_operators_outperform_despres():
    stack = _layered(9, 0.1)
    despres = assemble_system(stack, family="despres", n=64)
    quasi_optimal = assemble_system(stack, L=0, n=64)
    assert _iterations(despres, sweep=False) >= 3 * _iterations(quasi_optimal, sweep=False)

    def clustered(system):
        return np.mean(np.abs(dense_spectrum(system) - 1) <= 0.5)

    assert clustered(quasi_optimal) > clustered(despres)
