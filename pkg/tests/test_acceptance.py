"""One test per acceptance criterion; each prints and records a PASS/FAIL
line that is repeated in the terminal summary."""

import time

import numpy as np
import pytest
import sympy as sp
from conftest import ACCEPTANCE

from bogoexp.bogoliubov import diagonalize_quadratic, quasifree_groundstate_check, quasiparticle_match
from bogoexp.expansion import (
    energy_closed_forms,
    energy_coefficients,
    energy_coefficients_iterative,
    prepare,
    projector_coefficients,
    projector_from_wavefunctions,
    rdm1_coefficients,
    remainder_identity_check,
    taylor_coefficients,
    torus_rdm_closed_form,
    wavefunction_coefficients,
)
from bogoexp.fock import FockBasis, build_Kops, substitution_rules_check
from bogoexp.model import build_kernels, random_gapped_model
from bogoexp.verify import (
    energy_convergence_study,
    excitation_identity_check,
    projector_convergence_study,
    wavefunction_convergence_study,
)

NLIST = (10, 14, 20, 28, 40)


def record(number, title, passed, detail):
    line = f"{'PASS' if passed else 'FAIL'} criterion {number}: {title} ({detail})"
    ACCEPTANCE[number] = line
    print(line)
    assert passed, line


def test_criterion_1_excitation_hamiltonian_identity():
    start = time.perf_counter()
    model, sol = random_gapped_model(3, np.random.default_rng(2024))
    kernels = build_kernels(sol, model)
    residuals = {N: excitation_identity_check(model, sol, kernels, N) for N in (5, 8)}
    elapsed = time.perf_counter() - start
    worst = max(residuals.values())
    record(1, "excitation Hamiltonian equals conjugated H_N", worst <= 1e-9 and elapsed < 10,
           f"max residual {worst:.2e} <= 1e-9, {elapsed:.2f} s < 10 s")


def test_criterion_2_substitution_rules():
    model, sol = random_gapped_model(3, np.random.default_rng(7))
    res = substitution_rules_check(sol, 4)
    worst = max(res.values())
    record(2, "four substitution rules, M=3, N=4", worst <= 1e-10, f"max residual {worst:.2e} <= 1e-10")


def test_criterion_3_bogoliubov_consistency(torus):
    ctx = prepare(torus, 12, 3)
    quad = diagonalize_quadratic(ctx.kernels)
    E0 = ctx.sd.levels[0].energy
    gap_dev = max(quasiparticle_match(quad, lv.energy)[0] for lv in ctx.sd.levels)
    first_gap = abs((ctx.sd.levels[1].energy - E0) - quad.d[0])
    g = torus.torus.coupling((1,))
    disp = float(np.max(np.abs(quad.d - np.sqrt(1 + 2 * g))))
    ok = gap_dev <= 1e-6 and first_gap <= 1e-6 and disp <= 1e-12
    record(3, "quasiparticle energies vs truncated-Fock gaps; torus dispersion", ok,
           f"gap deviation {max(gap_dev, first_gap):.2e} <= 1e-6, dispersion deviation {disp:.2e} <= 1e-12")


def test_criterion_4_taylor_and_remainders(random3):
    x = sp.symbols("x")
    table = taylor_coefficients(8)
    taylor_dev = 0.0
    for l in range(9):
        series = sp.series((1 - x) ** (sp.Rational(1, 2) - l), x, 0, 9).removeO()
        for j in range(9):
            taylor_dev = max(taylor_dev, abs(table.c[j][l] - float(series.coeff(x, j))))
    lam, n = sp.symbols("lam n")
    f = sp.expand(sp.series(sp.sqrt((1 - (n - 1) * lam) * (1 - n * lam)), lam, 0, 9).removeO())
    for l in range(9):
        for nv in range(6):
            exact = float(f.coeff(lam, l).subs(n, nv))
            ours = sum(table.d[l][j] * (nv - 1) ** j for j in range(l + 1))
            taylor_dev = max(taylor_dev, abs(exact - ours))
    model, sol = random3
    kops = build_Kops(build_kernels(sol, model), FockBasis(2, 7))
    rem = max(remainder_identity_check(kops, taylor_coefficients(6), a, N)["residual"]
              for a in range(4) for N in (7, 20))
    record(4, "Taylor tables and remainder identity", taylor_dev <= 1e-14 and rem <= 1e-10,
           f"table deviation {taylor_dev:.1e} <= 1e-14, remainder residual {rem:.2e} <= 1e-10")


@pytest.mark.parametrize("which", ["random", "torus"])
def test_criterion_5_expansion_algebra(which, random3_ctx, torus_ctx):
    ctx = random3_ctx if which == "random" else torus_ctx
    sd, hj = ctx.sd, ctx.hj
    P = [projector_coefficients(sd, hj, 0, l).dense() for l in range(4)]
    tr = max(abs(np.trace(P[l])) for l in range(1, 4))
    conv = max(float(np.max(np.abs(sum(P[j] @ P[l - j] for j in range(l + 1)) - P[l]))) for l in range(1, 4))
    E = energy_coefficients(sd, hj, 0, 3)
    Ei = energy_coefficients_iterative(sd, hj, 0, 3)
    c1, c2 = energy_closed_forms(sd, hj, 0)
    edev = max(max(abs(a - b) for a, b in zip(E, Ei)), abs(E[1] - c1), abs(E[2] - c2))
    wf = wavefunction_coefficients(sd, hj, 0, 3, projectors=P, energies=E)
    wdev = max(float(np.max(np.abs(projector_from_wavefunctions(wf, l) - P[l]))) for l in range(3))
    aodd = max(abs(wf.alpha[1]), abs(wf.alpha[3]))
    ok = tr <= 1e-9 and conv <= 1e-9 and wdev <= 1e-9 and edev <= 1e-9 and aodd <= 1e-12
    key = "5a" if which == "random" else "5b"
    record(key, f"expansion algebra on the {which} model", ok,
           f"trace {tr:.1e}, convolution {conv:.1e}, wavefunction projector {wdev:.1e}, "
           f"energy formulas {edev:.1e} (all <= 1e-9), odd alpha {aodd:.1e} <= 1e-12")


def test_criterion_6_convergence_slopes(torus):
    start = time.perf_counter()
    parts, ok = [], True
    for a in (0, 1, 2):
        fit = energy_convergence_study(torus, 0, a, NLIST).fit
        ok &= fit.slope >= a + 0.8 and fit.r2 >= 0.98
        parts.append(f"energy a={a}: {fit.slope:.3f} (R2 {fit.r2:.4f})")
    for a in (0, 1, 2):
        fit = wavefunction_convergence_study(torus, 0, a, NLIST).fit
        ok &= fit.slope >= (a + 1) / 2 - 0.2
        parts.append(f"wavefunction a={a}: {fit.slope:.3f}")
    for a in (0, 1):
        fit = projector_convergence_study(torus, 0, a, NLIST).fit
        ok &= fit.slope >= (a + 1) / 2 - 0.2
        parts.append(f"projector a={a}: {fit.slope:.3f}")
    elapsed = time.perf_counter() - start
    record(6, "convergence slopes on the torus", ok and elapsed < 300,
           "; ".join(parts) + f"; {elapsed:.0f} s < 300 s")


def test_criterion_7_rdm_closed_form(torus):
    devs = []
    for nmax in (12, 14):
        ctx = prepare(torus, nmax, 1)
        P1 = projector_coefficients(ctx.sd, ctx.hj, 0, 1)
        _, g1 = rdm1_coefficients(ctx.sd, P1, 0, ctx.sol)
        devs.append(float(np.max(np.abs(g1 - torus_rdm_closed_form(torus, ctx.sol)))))
    record(7, "one-body density matrix vs torus closed form", devs[0] <= 1e-6 and devs[1] < devs[0],
           f"nmax=12: {devs[0]:.2e} <= 1e-6, nmax=14: {devs[1]:.2e}")


def test_criterion_8_wick_rule(torus_ctx):
    rep = quasifree_groundstate_check(torus_ctx.sd)
    odd = max(rep["one_point_max"], rep["three_point_max"])
    record(8, "Wick rule on the Bogoliubov ground state, nmax=12",
           odd <= 1e-9 and rep["four_point_residual"] <= 1e-8,
           f"1-/3-point {odd:.1e} <= 1e-9, 4-point residual {rep['four_point_residual']:.1e} <= 1e-8")


def test_criterion_9_degenerate_level(torus):
    fit = energy_convergence_study(torus, 1, 1, NLIST).fit
    record(9, "degenerate level n=1, trace-averaged energy", fit.slope >= 1.8,
           f"slope {fit.slope:.3f} >= 1.8")
