import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bogoexp.errors import ConfigError, DegeneracyError, ResourceError
from bogoexp.model import (
    TorusSpec,
    build_kernels,
    build_torus_model,
    hartree_energy,
    hartree_solve,
    make_model,
    mean_field,
    random_gapped_model,
    random_positive_model,
    smallest_pair_eigenvalue,
    stationarity_residual,
    uniform_torus,
)


def projected_gradient_minimum(model, starts=64, seed=123, steps=20000):
    """Independent minimizer: Riemannian gradient descent on the unit sphere
    from many random starts, returning the lowest energy found."""
    rng = np.random.default_rng(seed)
    M = model.M
    scale = np.linalg.norm(model.T, 2) + np.linalg.norm(model.V.reshape(M * M, M * M), 2)
    eta = 0.5 / scale
    best = np.inf
    for _ in range(starts):
        phi = rng.normal(size=M) + 1j * rng.normal(size=M)
        phi /= np.linalg.norm(phi)
        for _ in range(steps):
            F = model.T + mean_field(model.V, np.outer(phi, phi.conj()))
            g = F @ phi - np.vdot(phi, F @ phi) * phi
            if np.linalg.norm(g) < 1e-11:
                break
            phi = phi - eta * g
            phi /= np.linalg.norm(phi)
        best = min(best, hartree_energy(model, phi))
    return best


def test_make_model_rejects_bad_input():
    with pytest.raises(ConfigError):
        make_model(np.array([[0, 1], [0, 0]]), np.zeros((2,) * 4))
    with pytest.raises(ConfigError):
        make_model(np.eye(2), np.zeros((3,) * 4))
    V = np.zeros((2,) * 4)
    V[0, 0, 0, 0] = -1.0
    with pytest.raises(ConfigError):
        make_model(np.eye(2), V, positive_type=True)
    assert not make_model(np.eye(2), V).positive_type


@given(st.integers(2, 4), st.integers(0, 10**6))
def test_random_models_are_symmetric_and_positive(M, seed):
    m = random_positive_model(M, np.random.default_rng(seed))
    V = m.V
    assert np.allclose(V, V.transpose(1, 0, 3, 2))
    assert np.allclose(V, V.transpose(2, 3, 0, 1).conj())
    assert m.positive_type and smallest_pair_eigenvalue(V) >= -1e-10
    assert np.allclose(m.T, m.T.conj().T)


def test_torus_hartree_is_the_constant_mode(torus):
    sol = hartree_solve(torus)
    zero = torus.torus.modes.index((0,))
    assert abs(abs(sol.phi[zero]) - 1) < 1e-12
    assert sol.eH == pytest.approx(1.5 / (4 * np.pi), abs=1e-14)
    assert sol.muH == pytest.approx(1.5 / (2 * np.pi), abs=1e-14)


def test_torus_spec_validation():
    with pytest.raises(ConfigError):
        TorusSpec(d=3, Kcut=1)
    with pytest.raises(ResourceError):
        build_torus_model(uniform_torus(2, 4, 1.0))


@given(st.integers(0, 10**6), st.sampled_from([3, 4]))
def test_hartree_stationarity_and_aufbau(seed, M):
    model, sol = random_gapped_model(M, np.random.default_rng(seed), min_gap=0.05)
    assert abs(np.linalg.norm(sol.phi) - 1) < 1e-12
    assert stationarity_residual(model, sol.phi) < 1e-9
    assert np.max(np.abs(sol.h @ sol.phi)) < 1e-9
    w = np.linalg.eigvalsh(sol.h)
    assert abs(w[0]) < 1e-9 and w[1] == pytest.approx(sol.gH)
    assert np.allclose(sol.basis.conj().T @ sol.basis, np.eye(M), atol=1e-12)


@pytest.mark.parametrize("seed", [0, 1, 2])
@pytest.mark.parametrize("M", [3, 4])
def test_hartree_matches_multistart_gradient_oracle(seed, M):
    model, sol = random_gapped_model(M, np.random.default_rng(100 + seed))
    oracle = projected_gradient_minimum(model)
    assert sol.eH <= oracle + 1e-8
    assert abs(sol.eH - oracle) < 1e-8


def test_degenerate_mean_field_raises():
    with pytest.raises(DegeneracyError):
        hartree_solve(make_model(np.zeros((2, 2)), np.zeros((2,) * 4)))


def test_hartree_is_deterministic(random3):
    model, sol = random3
    again = hartree_solve(model)
    assert np.array_equal(sol.phi, again.phi)


@given(st.integers(0, 10**6))
def test_kernel_vanishing_identities(seed):
    model, sol = random_gapped_model(3, np.random.default_rng(seed), min_gap=0.05)
    k = build_kernels(sol, model)
    W = k.W
    assert abs(W[0, 0, 0, 0]) < 1e-12
    assert np.max(np.abs(W[0, 0, 0, 1:])) < 1e-10
    assert np.max(np.abs(W[1:, 0, 1:, 0])) < 1e-10
    assert np.allclose(k.K1, k.K1.conj().T, atol=1e-12)
    assert np.allclose(k.K2, k.K2.T, atol=1e-12)
    assert np.allclose(k.K4, k.K4.transpose(1, 0, 3, 2), atol=1e-12)


def test_torus_kernels(torus):
    sol = hartree_solve(torus)
    k = build_kernels(sol, torus)
    g = 1.5 / (2 * np.pi)
    assert np.allclose(k.K1, g * np.eye(2), atol=1e-14)
    assert np.allclose(np.abs(k.K2), g * np.array([[0, 1], [1, 0]]), atol=1e-14)
    assert np.max(np.abs(k.K3)) < 1e-14
    assert np.allclose(k.eps, [1.0, 1.0])
