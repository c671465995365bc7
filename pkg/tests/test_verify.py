import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bogoexp.errors import ConfigError, UnsupportedError
from bogoexp.expansion import prepare
from bogoexp.model import make_model
from bogoexp.verify import (
    cluster,
    energy_convergence_study,
    exact_spectrum,
    excitation_identity_check,
    fit_slope,
    number_bound_constant,
    projector_convergence_study,
    spectrum_consistency_check,
    wavefunction_convergence_study,
)


@pytest.fixture(scope="module")
def free():
    return make_model(np.diag([0.0, 1.0, 1.6]), np.zeros((3,) * 4))


def test_exact_spectrum_basic(random3):
    model, _ = random3
    spec = exact_spectrum(model, 6, count=4)
    assert spec.hermiticity <= 1e-12
    assert len(spec.energies) == 4 and np.all(np.diff(spec.energies) > 0)


def test_exact_spectrum_free(free):
    spec = exact_spectrum(free, 3)
    assert spec.energies[0] == 0 and spec.energies[1] == pytest.approx(1.0)


def test_cluster_on_torus(torus, torus_ctx):
    rep1 = cluster(torus, torus_ctx.sol, torus_ctx.sd, 30, 1)
    assert sum(rep1.degeneracies) == 2 and rep1.complete
    means = [cluster(torus, torus_ctx.sol, torus_ctx.sd, 30, k).mean for k in range(3)]
    assert means == sorted(means)
    assert np.all(np.diff(rep1.indices) == 1)


def test_cluster_free_is_exact(free):
    ctx = prepare(free, 6, 3)
    for k, expect in enumerate([0.0, 1.0, 1.6]):
        assert cluster(free, ctx.sol, ctx.sd, 12, k).mean == pytest.approx(expect, abs=1e-12)


@given(st.floats(0.5, 3.0), st.floats(-3, 1))
def test_fit_slope_recovers_power_law(p, logc):
    lam = np.array([1 / 9, 1 / 13, 1 / 19, 1 / 27, 1 / 39])
    fit = fit_slope(lam, np.exp(logc) * lam**p, threshold=p - 0.01, min_r2=0.99)
    assert fit.slope == pytest.approx(p, abs=1e-9) and fit.r2 == pytest.approx(1.0)
    assert fit.passed


def test_fit_slope_guards():
    lam = [0.1, 0.05, 0.02, 0.01, 0.005]
    assert fit_slope(lam, [0.0] * 5, 1.0).exact_zero
    few = fit_slope(lam, [1e-3, 1e-4, 0, 0, 0], 1.0)
    assert not few.passed and "four" in few.note
    excl = fit_slope(lam, [1e-2, 1e-3, 1e-4, 1e-5, 1e-6], 1.0, exclude=[True, False, False, False, False])
    assert excl.used == [1, 2, 3, 4]


def test_oracle_self_consistency(random3):
    model, sol = random3
    from bogoexp.model import build_kernels

    k = build_kernels(sol, model)
    for N in (4, 7):
        assert spectrum_consistency_check(model, sol, k, N) < 1e-9
        assert excitation_identity_check(model, sol, k, N) < 1e-9
    c = number_bound_constant(model, sol, k, 8)
    assert np.isfinite(c) and c > 0


def test_free_studies_flag_exact_zero(free):
    Ns = (10, 12, 14, 16)
    for fn in (energy_convergence_study, wavefunction_convergence_study, projector_convergence_study):
        res = fn(free, 0, 1, Ns, nmax=8)
        assert res.fit.exact_zero and res.fit.passed


def test_study_input_validation(torus):
    with pytest.raises(ConfigError):
        energy_convergence_study(torus, 0, 1, (10, 14, 20), nmax=8)
    with pytest.raises(ConfigError):
        energy_convergence_study(torus, 0, 1, (8, 14, 20, 28), nmax=8)
    with pytest.raises(UnsupportedError):
        wavefunction_convergence_study(torus, 1, 1, (10, 14, 20, 28), nmax=8)


def test_projector_study_observables(torus):
    A = np.diag([1.0, 0.0, 1.0])  # occupation of the +-1 modes
    res = projector_convergence_study(torus, 0, 0, (10, 14, 20, 28), nmax=8, observables={"pm1": A})
    obs = res.observables["pm1"]
    assert obs.fit.slope > 0.8
    assert res.fit.slope > 0.3
    assert res.csv().startswith("# projector trace-norm error")
