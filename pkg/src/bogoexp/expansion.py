"""Perturbative coefficients around the Bogoliubov Hamiltonian.

Everything here is an algebraic identity on the truncated Fock space: the
operator coefficients H_j are built from the kernel operators, and the
energy, projector and wavefunction coefficients are sums over ordered
products of H_j and reduced resolvents O_k of H0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import comb, factorial, sqrt

import numpy as np

from .bogoliubov import SpectralData, reduced_resolvent
from .combinatorics import compositions, weak_compositions
from .errors import CheckFailed, ConfigError, UnsupportedError
from .fock import FockOperator, _one_body_second_quantized, number_function, number_operator

MAX_ORDER = 6


# ------------------------------------------------------------------ Taylor


@dataclass(frozen=True)
class CoefficientTable:
    """``c[j][l]`` is c_j^(l) and ``d[j][nu]`` is d_{j,nu}; exact rationals
    are kept alongside the floats."""

    jmax: int
    c_exact: tuple
    d_exact: tuple
    c: tuple = field(init=False)
    d: tuple = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "c", tuple(tuple(float(x) for x in row) for row in self.c_exact))
        object.__setattr__(self, "d", tuple(tuple(float(x) for x in row) for row in self.d_exact))

    def cj(self, j):
        """c_j = c_j^(0), the Taylor coefficients of sqrt(1 - x)."""
        return self.c[j][0]


def _c_exact(j, l):
    if j == 0:
        return Fraction(1)
    num = Fraction(1)
    for i in range(j):
        num *= Fraction(2 * l - 1 + 2 * i, 2)
    return num / factorial(j)


def taylor_coefficients(jmax) -> CoefficientTable:
    if jmax < 0:
        raise ConfigError("jmax must be non-negative", jmax=jmax)
    c = tuple(tuple(_c_exact(j, l) for l in range(jmax + 1)) for j in range(jmax + 1))
    d = tuple(
        tuple(
            sum((c[l][0] * c[nu - l][0] * c[j - nu][l] for l in range(nu + 1)), Fraction(0))
            for nu in range(j + 1)
        )
        for j in range(jmax + 1)
    )
    return CoefficientTable(jmax=jmax, c_exact=c, d_exact=d)


def _scalar_parts(N, table):
    lam = 1.0 / (N - 1)

    def f3(n):
        return sqrt(max(N - n, 0)) / (N - 1)

    def f2(n):
        return sqrt(max((N - n) * (N - n - 1), 0)) / (N - 1)

    def R3(a, n):
        series = sum(table.cj(l) * lam ** (l + 0.5) * (n - 1) ** l for l in range(a + 1))
        return (f3(n) - series) / lam ** (a + 1.5)

    def R2(a, n):
        series = sum(
            lam**l * sum(table.d[l][j] * (n - 1) ** j for j in range(l + 1)) for l in range(a + 1)
        )
        return (f2(n) - series) / lam ** (a + 1)

    return lam, f2, f3, R2, R3


def scalar_remainder_check(a, N, nvals):
    """Evaluate the scalar Taylor remainders of the two square roots and
    compare against their polynomial bounds."""
    table = taylor_coefficients(a + 1)
    _, _, _, R2, R3 = _scalar_parts(N, table)
    rows = []
    for n in nvals:
        if not 0 <= n <= N:
            raise ConfigError("n outside [0, N]", n=n, N=N)
        r3, r2 = R3(a, n), R2(a, n)
        b3 = 2 ** (a + 1) * (n + 1) ** (a + 1)
        b2 = (a + 1) ** 2 * 4 ** (a + 1) * (n + 1) ** (a + 1)
        rows.append({
            "n": n, "R3": r3, "bound3": b3, "R2": r2, "bound2": b2,
            "holds": abs(r3) <= b3 and abs(r2) <= b2,
        })
    return {"a": a, "N": N, "rows": rows, "holds": all(r["holds"] for r in rows)}


# -------------------------------------------------------- operator coefficients


class HjBuilder:
    """Lazily built operator coefficients H_j on the basis of ``kops``."""

    def __init__(self, kops, table=None, H0=None):
        self.kops = kops
        self.basis = kops.basis
        self.table = table or taylor_coefficients(MAX_ORDER + 2)
        self._cache = {}
        if H0 is not None:
            self._cache[0] = H0

    def __call__(self, j):
        if j not in self._cache:
            self._cache[j] = build_Hj(self.kops, self.table, j)
        return self._cache[j]


def _power(basis, shift, p):
    return number_function(basis, lambda n: float(n + shift) ** p)


def build_Hj(kops, table, j) -> FockOperator:
    b = kops.basis
    if j == 0:
        H = kops.K0 + kops.K1 + kops.K2 + kops.K2.H
        return FockOperator(b, H.matrix, {-2, 0, 2}, check=False)
    if j == 1:
        H = kops.K3 + kops.K3.H
        return FockOperator(b, H.matrix, {-1, 1}, check=False)
    if j == 2:
        t2 = kops.K2 @ _power(b, -0.5, 1)
        H = (-1.0) * (_power(b, -1, 1) @ kops.K1) - (t2 + t2.H) + kops.K4
        return FockOperator(b, H.matrix, {-2, 0, 2}, check=False)
    i = (j + 1) // 2
    if j % 2:
        if i - 1 > table.jmax:
            raise ConfigError("coefficient table too short", needed=i - 1)
        t3 = kops.K3 @ _power(b, -1, i - 1)
        H = table.cj(i - 1) * (t3 + t3.H)
        return FockOperator(b, H.matrix, {-1, 1}, check=False)
    if i > table.jmax:
        raise ConfigError("coefficient table too short", needed=i)
    mat = None
    for nu in range(i + 1):
        t2 = kops.K2 @ _power(b, -1, nu)
        term = table.d[i][nu] * (t2 + t2.H)
        mat = term if mat is None else mat + term
    return FockOperator(b, mat.matrix, {-2, 2}, check=False)


def build_H_less(kops, N) -> FockOperator:
    """Excitation Hamiltonian with positive-part clamped square roots and the
    number-conserving terms continued to all sectors of the basis."""
    b = kops.basis
    lam = 1.0 / (N - 1)
    t2 = kops.K2 @ number_function(b, lambda n: sqrt(max((N - n) * (N - n - 1), 0)) * lam)
    t3 = kops.K3 @ number_function(b, lambda n: sqrt(max(N - n, 0)) * lam)
    H = (
        kops.K0
        + number_function(b, lambda n: 1 - (n - 1) * lam) @ kops.K1
        + t2 + t2.H + t3 + t3.H
        + lam * kops.K4
    )
    return H


def build_remainder(kops, table, a, N) -> FockOperator:
    """R_a assembled from the scalar remainders of the two square roots."""
    b = kops.basis
    lam, _, f3, R2, R3 = _scalar_parts(N, table)
    s = sqrt(lam)

    def K2R(k):
        t = kops.K2 @ number_function(b, lambda n: R2(k, n))
        return t + t.H

    def K3R(k):
        t = kops.K3 @ number_function(b, lambda n: R3(k, n))
        return t + t.H

    NK1 = _power(b, -1, 1) @ kops.K1
    if a == 0:
        t = kops.K3 @ number_function(b, lambda n: sqrt(max(N - n, 0) * lam))
        return (t + t.H) + s * (K2R(0) - NK1) + s * kops.K4
    if a == 1:
        return (-1.0) * NK1 + K2R(0) + s * K3R(0) + kops.K4
    j = a // 2
    if a % 2 == 0:
        return K3R(j - 1) + s * K2R(j)
    return K2R(j) + s * K3R(j)


def remainder_identity_check(kops, table, a, N):
    """max |H^< - sum_j lam^(j/2) H_j - lam^((a+1)/2) R_a| on the basis."""
    if kops.basis.nmax > N:
        raise ConfigError("basis cutoff must not exceed N", nmax=kops.basis.nmax, N=N)
    lam = 1.0 / (N - 1)
    lhs = build_H_less(kops, N).dense()
    rhs = lam ** ((a + 1) / 2) * build_remainder(kops, table, a, N).dense()
    for j in range(a + 1):
        rhs = rhs + lam ** (j / 2) * build_Hj(kops, table, j).dense()
    residual = float(np.max(np.abs(lhs - rhs), initial=0.0))
    return {"a": a, "N": N, "residual": residual, "holds": residual <= 1e-10}


# -------------------------------------------------------------- chain products


class _Chains:
    """Memoized products ``op_1 op_2 ... op_k X`` for tokens ('H', j) and
    ('O', k), applied to a fixed block of columns ``X``."""

    def __init__(self, sd, hj, n, X):
        self.sd, self.hj, self.n, self.X = sd, hj, n, X
        self.memo = {(): X}

    def op(self, token):
        kind, idx = token
        if kind == "H":
            return self.hj(idx).matrix
        return reduced_resolvent(self.sd, self.n, idx).matrix

    def __call__(self, seq):
        seq = tuple(seq)
        if seq not in self.memo:
            self.memo[seq] = self.op(seq[0]) @ self(seq[1:])
        return self.memo[seq]


def _check_order(a):
    if a > MAX_ORDER:
        raise UnsupportedError(f"expansion order {a} exceeds the enumeration guard {MAX_ORDER}", order=a)


def _real(value, what):
    if abs(value.imag) > 1e-10 * max(1.0, abs(value.real)):
        raise CheckFailed(f"{what} has a non-negligible imaginary part", real=value.real, imag=value.imag)
    return float(value.real)


def trace_terms(sd, hj, n, total):
    """Yield (j, m, value) for every term of the trace formula with
    |j| = total. Odd totals give the terms that vanish by parity."""
    lv = sd.level(n)
    X = lv.vectors
    chains = _Chains(sd, hj, n, X)
    for nu in range(1, total + 1):
        for j in compositions(total, nu):
            for m in weak_compositions(nu - 1, nu - 1):
                seq = [("H", j[0])]
                for mu in range(nu - 1):
                    seq += [("O", m[mu]), ("H", j[mu + 1])]
                Y = chains(seq)
                kappa = 1 + sum(1 for x in m if x == 0)
                value = np.trace(X.conj().T @ Y) / kappa
                yield j, m, complex(value)


def energy_coefficients(sd: SpectralData, hj, n, a):
    """[E_0, ..., E_a] for level ``n`` from the trace formula (averaged over
    the level's multiplicity)."""
    _check_order(a)
    lv = sd.level(n)
    out = [lv.energy]
    for l in range(1, a + 1):
        total = sum(v for _, _, v in trace_terms(sd, hj, n, 2 * l))
        out.append(_real(total / lv.multiplicity, f"E_{l}"))
    return out


def energy_coefficients_iterative(sd, hj, n, a):
    """Energies from the Rayleigh-Schroedinger style recursion; only O_1
    appears and even H_j are shifted by the lower-order energies."""
    _check_order(a)
    lv = sd.level(n)
    if lv.multiplicity != 1:
        raise UnsupportedError(
            "iterative formula needs a non-degenerate level; use energy_coefficients",
            level=n, multiplicity=lv.multiplicity,
        )
    chi = lv.vectors[:, 0]
    O1 = reduced_resolvent(sd, n, 1).matrix
    E = [lv.energy]
    memo = {}

    def shifted(j):
        H = hj(j).matrix
        if j % 2 == 0 and j // 2 < len(E):
            return H, E[j // 2]
        return H, 0.0

    def tail(js):
        # O1 H'_{j1} O1 H'_{j2} ... O1 H_{j_last} chi, the last factor unshifted
        if js not in memo:
            if len(js) == 1:
                memo[js] = O1 @ (hj(js[0]).matrix @ chi)
            else:
                H, e = shifted(js[0])
                v = tail(js[1:])
                memo[js] = O1 @ (H @ v - e * v)
        return memo[js]

    for l in range(1, a + 1):
        total = 0.0 + 0.0j
        for nu in range(1, 2 * l + 1):
            for j in compositions(2 * l, nu):
                if nu == 1:
                    total += np.vdot(chi, hj(j[0]).matrix @ chi)
                else:
                    total += np.vdot(hj(j[0]).matrix @ chi, tail(j[1:]))
        E.append(_real(total, f"E_{l}"))
        memo.clear()
    return E


def energy_closed_forms(sd, hj, n):
    """E_1 and E_2 from their explicit second- and fourth-order forms."""
    lv = sd.level(n)
    if lv.multiplicity != 1:
        raise UnsupportedError("closed forms need a non-degenerate level", level=n)
    chi = lv.vectors[:, 0]
    O1 = reduced_resolvent(sd, n, 1).matrix
    O2 = reduced_resolvent(sd, n, 2).matrix
    H = {j: hj(j).matrix for j in range(1, 5)}
    E1 = np.vdot(chi, H[2] @ chi) + np.vdot(chi, H[1] @ (O1 @ (H[1] @ chi)))
    E2 = 0.0 + 0.0j
    for nu in range(1, 5):
        for j in compositions(4, nu):
            v = H[j[-1]] @ chi
            for jj in reversed(j[:-1]):
                v = H[jj] @ (O1 @ v)
            E2 += np.vdot(chi, v)
    E2 -= E1 * np.vdot(chi, H[1] @ (O2 @ (H[1] @ chi)))
    return _real(E1, "E_1"), _real(E2, "E_2")


def projector_coefficients(sd, hj, n, l) -> FockOperator:
    """P_l for level ``n``: minus the sum of O_{k1} H_{j1} ... H_{j_nu} O_{k_{nu+1}}."""
    _check_order(l)
    if l == 0:
        return sd.projector(n)
    dim = sd.basis.dim
    chains = _Chains(sd, hj, n, np.eye(dim, dtype=complex))
    total = np.zeros((dim, dim), dtype=complex)
    for nu in range(1, l + 1):
        for j in compositions(l, nu):
            for k in weak_compositions(nu, nu + 1):
                seq = []
                for mu in range(nu):
                    seq += [("O", k[mu]), ("H", j[mu])]
                seq.append(("O", k[nu]))
                total -= chains(seq)
    return FockOperator(sd.basis, total, None, check=False)


# ------------------------------------------------------------- wavefunctions


@dataclass
class WavefunctionCoefficients:
    chi: list  # chi_0 .. chi_a
    chi_tilde: list  # chi~_0 = chi_0, chi~_1, ...
    alpha: list
    iterative_deviation: float
    projectors: list


def wavefunction_coefficients(sd, hj, n, a, projectors=None, energies=None):
    _check_order(a)
    lv = sd.level(n)
    if lv.multiplicity != 1:
        raise UnsupportedError("wavefunction coefficients need a non-degenerate level", level=n)
    chi0 = lv.vectors[:, 0]
    P = list(projectors) if projectors is not None else []
    for l in range(len(P), a + 1):
        P.append(projector_coefficients(sd, hj, n, l))
    Pm = [p.dense() if isinstance(p, FockOperator) else np.asarray(p) for p in P]

    # chi~_l = sum over compositions j of l of P_{j1} ... P_{j_nu} chi_0
    memo = {(): chi0}

    def word(js):
        if js not in memo:
            memo[js] = Pm[js[0]] @ word(js[1:])
        return memo[js]

    tilde = [chi0]
    for l in range(1, a + 1):
        v = np.zeros_like(chi0)
        for nu in range(1, l + 1):
            for j in compositions(l, nu):
                v = v + word(j)
        tilde.append(v)

    alpha = [1.0 + 0.0j]
    for l in range(1, a + 1):
        s = 0.0 + 0.0j
        for j in weak_compositions(l, 4):
            if j[0] < l and j[1] < l:
                s += alpha[j[0]] * alpha[j[1]] * np.vdot(tilde[j[2]], tilde[j[3]])
        alpha.append(-0.5 * s)
    chi = [chi0] + [sum(alpha[j] * tilde[l - j] for j in range(l + 1)) for l in range(1, a + 1)]

    # the simplified recursion with O_1 and energy-shifted H_j
    if energies is None:
        energies = energy_coefficients(sd, hj, n, a // 2)
    O1 = reduced_resolvent(sd, n, 1).matrix
    tmemo = {}

    def it(js):
        if js not in tmemo:
            if len(js) == 1:
                tmemo[js] = O1 @ (hj(js[0]).matrix @ chi0)
            else:
                v = it(js[1:])
                Hv = hj(js[0]).matrix @ v
                if js[0] % 2 == 0:
                    Hv = Hv - energies[js[0] // 2] * v
                tmemo[js] = O1 @ Hv
        return tmemo[js]

    deviation = 0.0
    for l in range(1, a + 1):
        v = np.zeros_like(chi0)
        for nu in range(1, l + 1):
            for j in compositions(l, nu):
                v = v + it(j)
        deviation = max(deviation, float(np.max(np.abs(v - tilde[l]))))
    if deviation > 1e-9 * max(1.0, max(float(np.max(np.abs(t))) for t in tilde)):
        raise CheckFailed("iterative and projector-based wavefunction coefficients disagree", deviation=deviation)
    return WavefunctionCoefficients(
        chi=chi, chi_tilde=tilde, alpha=alpha, iterative_deviation=deviation, projectors=P
    )


def projector_from_wavefunctions(wf: WavefunctionCoefficients, l):
    """sum_k |chi_k><chi_{l-k}|."""
    return sum(np.outer(wf.chi[k], wf.chi[l - k].conj()) for k in range(l + 1))


# ------------------------------------------------------------ one-body RDM


def rdm1_coefficients(sd, P1, n, sol):
    """Leading and first-order coefficients of the one-body density matrix
    in the original basis, ``(gamma_0, gamma_1)``."""
    basis = sd.basis
    L = basis.modes
    lv = sd.level(n)
    P0 = lv.projector()
    P1m = P1.dense() if hasattr(P1, "dense") else np.asarray(P1)
    lows = [basis.lower_matrix(i) for i in range(L)]
    G = np.zeros((L + 1, L + 1), dtype=complex)
    for m in range(L):
        # Tr a_m P1 and Tr a*_m P1
        G[m + 1, 0] = np.trace(lows[m] @ P1m)
        G[0, m + 1] = np.trace(lows[m].conj().T @ P1m)
        for k in range(L):
            # Tr a*_k a_m P0
            G[m + 1, k + 1] = np.trace((lows[k].conj().T @ lows[m]) @ P0)
    Nop = number_operator(basis).dense()
    G[0, 0] = -np.trace(P0 @ Nop)
    B = sol.basis
    gamma1 = B @ G @ B.conj().T
    gamma0 = lv.multiplicity * np.outer(sol.phi, sol.phi.conj())
    return gamma0, gamma1


def torus_rdm_closed_form(model, sol):
    """-sum_k g_k^2 |phi><phi| + sum_k g_k^2 |phi_k><phi_k|, g_k = a_k (1 - a_k^2)^(-1/2)
    with a_k = v_k / (k^2 + v_k + sqrt(k^4 + 2 k^2 v_k)) and v_k the pair
    coupling of mode k."""
    spec = model.torus
    if spec is None:
        raise ConfigError("closed form exists only for torus models")
    modes = spec.modes
    M = len(modes)
    out = np.zeros((M, M), dtype=complex)
    zero = modes.index(tuple([0] * spec.d))
    for i, k in enumerate(modes):
        if i == zero:
            continue
        k2 = float(sum(x * x for x in k))
        v = spec.coupling(k)
        alpha = v / (k2 + v + sqrt(k2 * k2 + 2 * k2 * v))
        g2 = alpha**2 / (1 - alpha**2)
        out[i, i] += g2
        out[zero, zero] -= g2
    return out


# --------------------------------------------------------------- observables


def second_quantize(A, m, M, N):
    """Normalized m-body operator on the N-particle space of M modes, as a
    dense matrix. m = 1: A is M x M; m = 2: A[m,n,p,q] = <e_m e_n|A|e_p e_q>."""
    from .fock import FockBasis, build_HN
    from .model import make_model

    if m == 1:
        full = FockBasis(M, N)
        top = full.sector(N)
        return (_one_body_second_quantized(full, np.asarray(A))[top, top] / N).toarray()
    if m == 2:
        if N < 2:
            raise ConfigError("two-body observable needs N >= 2")
        # the two-body part of H_N with T = 0 is (1/(N-1)) (1/2) sum A a*a*aa
        model = make_model(np.zeros((M, M)), A, positive_type=False)
        return build_HN(model, N) * (N - 1) / comb(N, 2)
    raise UnsupportedError("only one- and two-body observables are supported", m=m)


def observable_expansion(A, m, model, sol, kernels, N, n, a, nmax, exact=True):
    """Coefficients Tr(A_exc P_l) for l = 0..a, with A_exc the conjugated
    observable compressed to sectors <= nmax, plus the exact value from
    the N-body spectrum."""
    from .bogoliubov import build_H0, spectral_data
    from .fock import FockBasis, build_Kops, excitation_map

    nmax = min(nmax, N)
    U = excitation_map(sol, N)
    A_N = second_quantize(A, m, model.M, N)
    A_exc = U @ A_N @ U.conj().T
    basis = FockBasis(model.M - 1, nmax)
    A_c = A_exc[: basis.dim, : basis.dim]
    kops = build_Kops(kernels, basis)
    H0 = build_H0(kops)
    sd = spectral_data(H0, n + 1)
    hj = HjBuilder(kops, H0=H0)
    series = []
    for l in range(a + 1):
        P = projector_coefficients(sd, hj, n, l).dense()
        series.append(complex(np.trace(A_c @ P)))
    out = {"series": series}
    if exact:
        from .fock import build_HN
        from .verify import cluster_levels

        H = build_HN(model, N)
        w, X = np.linalg.eigh(H)
        idx = cluster_levels(w - N * sol.eH, sd, n)
        Pn = X[:, idx] @ X[:, idx].conj().T
        out["exact"] = complex(np.trace(A_N @ Pn))
        out["lambda"] = 1.0 / (N - 1)
    return out


# ------------------------------------------------------------------ results


@dataclass
class ExpansionContext:
    """Hartree solution, kernels and the truncated H0 spectrum at one cutoff."""

    model: object
    sol: object
    kernels: object
    kops: object
    sd: SpectralData
    hj: HjBuilder
    nmax: int


def prepare(model, nmax, levels=1, sol=None, kernels=None):
    from .bogoliubov import build_H0, diagonalize_quadratic, spectral_data
    from .fock import FockBasis, build_Kops
    from .model import build_kernels, hartree_solve

    if sol is None:
        sol = hartree_solve(model)
    if kernels is None:
        kernels = build_kernels(sol, model)
    basis = FockBasis(model.M - 1, nmax)
    kops = build_Kops(kernels, basis)
    H0 = build_H0(kops)
    quad = diagonalize_quadratic(kernels) if model.M > 1 else None
    sd = spectral_data(H0, levels, quadratic=quad)
    return ExpansionContext(model, sol, kernels, kops, sd, HjBuilder(kops, H0=H0), nmax)


@dataclass
class ExpansionResult:
    n: int
    a: int
    nmax: int
    E: list
    alpha: list
    chi: list
    Pcoeffs: list
    diagnostics: dict
    provenance: dict

    def summary(self):
        return {
            "n": self.n, "a": self.a, "nmax": self.nmax,
            "E": [float(e) for e in self.E],
            "alpha": [[float(x.real), float(x.imag)] for x in self.alpha],
            "diagnostics": self.diagnostics,
            "provenance": self.provenance,
        }


def _coefficients(ctx, n, a):
    sd, hj = ctx.sd, ctx.hj
    E = energy_coefficients(sd, hj, n, a)
    P = [projector_coefficients(sd, hj, n, l) for l in range(a + 1)]
    wf = None
    if sd.level(n).multiplicity == 1:
        wf = wavefunction_coefficients(sd, hj, n, a, projectors=P, energies=E)
    return E, P, wf


def expand(model, n, a, nmax, sol=None, kernels=None, stability_tol=1e-6):
    """All coefficients for level ``n`` up to order ``a`` at cutoff ``nmax``,
    with the changes under nmax -> nmax + 2 as truncation diagnostics."""
    _check_order(a)
    ctx = prepare(model, nmax, n + 1, sol, kernels)
    E, P, wf = _coefficients(ctx, n, a)
    ctx2 = prepare(model, nmax + 2, n + 1, ctx.sol, ctx.kernels)
    E2, _, wf2 = _coefficients(ctx2, n, a)
    dE = [abs(x - y) for x, y in zip(E, E2)]
    relE = [d / max(1.0, abs(x)) for d, x in zip(dE, E)]
    diag = {
        "nmax": nmax,
        "nmax_check": nmax + 2,
        "energy_delta": dE,
        "energy_flagged": [r >= stability_tol for r in relE],
    }
    prov = {"energy": "trace formula", "projector": "resolvent sum"}
    alpha, chi = [], []
    if wf is not None:
        alpha, chi = wf.alpha, wf.chi
        diag["alpha_delta"] = [abs(x - y) for x, y in zip(wf.alpha, wf2.alpha)]
        diag["alpha_odd_max"] = max((abs(wf.alpha[l]) for l in range(1, a + 1, 2)), default=0.0)
        diag["iterative_deviation"] = wf.iterative_deviation
        if n == 0 or ctx.sd.level(n).multiplicity == 1:
            Ei = energy_coefficients_iterative(ctx.sd, ctx.hj, n, a)
            diag["iterative_energy_deviation"] = max(abs(x - y) for x, y in zip(E, Ei))
            prov["energy_cross_check"] = "iterative formula"
        prov["wavefunction"] = "projector words with alpha recursion"
    diag["trace_max"] = max((abs(np.trace(p.dense())) for p in P[1:]), default=0.0)
    diag["hermiticity_max"] = max(float(np.max(np.abs(p.dense() - p.dense().conj().T))) for p in P)
    return ExpansionResult(n=n, a=a, nmax=nmax, E=E, alpha=alpha, chi=chi, Pcoeffs=P,
                           diagnostics=diag, provenance=prov)
