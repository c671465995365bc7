"""Exact diagonalization oracle and error-versus-coupling convergence studies."""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .bogoliubov import cluster_eigenvalues
from .errors import AssignmentError, ConfigError, UnsupportedError
from .expansion import (
    _check_order,
    energy_coefficients,
    prepare,
    projector_coefficients,
    wavefunction_coefficients,
)
from .fock import build_excitation_hamiltonian, build_HN, excitation_map, fock_dimension

DEFAULT_NLIST = (10, 14, 20, 28, 40)
ZERO_ERROR = 1e-12


@dataclass
class ExactSpectrum:
    N: int
    energies: np.ndarray  # distinct eigenvalues
    multiplicities: list
    evals: np.ndarray  # all eigenvalues, ascending
    evecs: np.ndarray
    groups: list  # indices into evals per distinct eigenvalue
    hermiticity: float


def exact_spectrum(model, N, count=None, cluster_tol=1e-9):
    """Eigen-decomposition of H_N; ``count`` limits the reported distinct levels."""
    H = build_HN(model, N)
    herm = float(np.max(np.abs(H - H.conj().T)))
    evals, evecs = np.linalg.eigh(H)
    groups = cluster_eigenvalues(evals, cluster_tol)
    if count is not None:
        groups = groups[:count]
    return ExactSpectrum(
        N=N,
        energies=np.array([float(np.mean(evals[g])) for g in groups]),
        multiplicities=[len(g) for g in groups],
        evals=evals,
        evecs=evecs,
        groups=groups,
        hermiticity=herm,
    )


@dataclass
class ClusterReport:
    n: int
    indices: np.ndarray  # eigenvalue positions (with multiplicity) assigned to level n
    energies: list  # distinct member excitation energies
    degeneracies: list
    mean: float
    expected_multiplicity: int

    @property
    def complete(self):
        return sum(self.degeneracies) == self.expected_multiplicity


def cluster_levels(exc_evals, sd, n):
    """Positions of the excitation energies that fall in the window of
    Bogoliubov level ``n``; raises if a value lies in two windows or the
    window's content is not contiguous."""
    if n >= len(sd.contour):
        raise ConfigError("level beyond the computed range", level=n, available=len(sd.contour))
    windows = [(lv.energy, r) for lv, r in zip(sd.levels, sd.contour)]
    center, radius = windows[n]
    hits = []
    for i, e in enumerate(exc_evals):
        inside = [m for m, (c, r) in enumerate(windows) if abs(e - c) <= r]
        if len(inside) > 1:
            raise AssignmentError("eigenvalue lies in two level windows", energy=float(e), levels=inside)
        if inside == [n]:
            hits.append(i)
    idx = np.array(hits, dtype=int)
    if len(idx) and np.any(np.diff(idx) != 1):
        raise AssignmentError("cluster is not a contiguous range of eigenvalues", level=n)
    return idx


def cluster(model, sol, sd, N, n, tol=1e-9, spectrum=None):
    """Cluster of N-body levels converging to Bogoliubov level ``n``."""
    spec = spectrum if spectrum is not None else exact_spectrum(model, N, cluster_tol=tol)
    exc = spec.evals - N * sol.eH
    idx = cluster_levels(exc, sd, n)
    energies, degs = [], []
    for g in cluster_eigenvalues(exc[idx], tol) if len(idx) else []:
        energies.append(float(np.mean(exc[idx][g])))
        degs.append(len(g))
    expected = sd.level(n).multiplicity
    mean = float(np.sum(exc[idx]) / expected) if len(idx) else float("nan")
    return ClusterReport(n, idx, energies, degs, mean, expected)


# ------------------------------------------------------------------ fitting


@dataclass
class SlopeFit:
    lambdas: list
    errors: list
    slope: float = float("nan")
    intercept: float = float("nan")
    r2: float = float("nan")
    used: list = field(default_factory=list)
    exact_zero: bool = False
    threshold: float = float("nan")
    min_r2: float = 0.0
    note: str = ""

    @property
    def passed(self):
        if self.exact_zero:
            return True
        if not np.isfinite(self.slope):
            return False
        return self.slope >= self.threshold and self.r2 >= self.min_r2

    def as_dict(self):
        return {
            "slope": self.slope, "intercept": self.intercept, "r2": self.r2,
            "pass": bool(self.passed), "threshold": self.threshold, "min_r2": self.min_r2,
            "exact_zero": self.exact_zero, "points": len(self.used), "note": self.note,
        }


def fit_slope(lambdas, errors, threshold, min_r2=0.0, exclude=None):
    """Least-squares line through (log lambda, log error) for the strictly
    positive errors not excluded."""
    lam = np.asarray(lambdas, dtype=float)
    err = np.asarray(errors, dtype=float)
    fit = SlopeFit(list(lam), list(err), threshold=threshold, min_r2=min_r2)
    if np.all(err < ZERO_ERROR):
        fit.exact_zero = True
        fit.note = "all errors below the zero threshold"
        return fit
    keep = err > 0
    if exclude is not None:
        keep &= ~np.asarray(exclude, dtype=bool)
    fit.used = [int(i) for i in np.nonzero(keep)[0]]
    if keep.sum() < 4:
        fit.note = "fewer than four usable points"
        return fit
    x, y = np.log(lam[keep]), np.log(err[keep])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss = float(np.sum((y - y.mean()) ** 2))
    fit.slope, fit.intercept = float(slope), float(intercept)
    fit.r2 = 1.0 - float(np.sum(resid**2)) / ss if ss > 0 else 1.0
    return fit


@dataclass
class StudyResult:
    kind: str
    n: int
    a: int
    nmax: int
    rows: list  # dicts with N, lambda, error, diagnostic and components
    fit: SlopeFit
    header: str

    def csv(self, fmt="%.17g"):
        out = io.StringIO()
        out.write(f"# {self.header}\n")
        keys = list(self.rows[0].keys()) if self.rows else ["N", "lambda", "error"]
        out.write(",".join(keys) + "\n")
        for r in self.rows:
            out.write(",".join(str(r[k]) if isinstance(r[k], (int, np.integer)) else fmt % r[k] for k in keys) + "\n")
        return out.getvalue()

    def summary(self):
        return {"kind": self.kind, "n": self.n, "a": self.a, "nmax": self.nmax, **self.fit.as_dict()}


def _check_nlist(Nlist, nmax):
    Nlist = sorted(int(N) for N in Nlist)
    if len(Nlist) < 4:
        raise ConfigError("at least four N values are needed for a slope fit", Nlist=Nlist)
    if Nlist[0] <= max(2, nmax):
        raise ConfigError("every N must exceed the coefficient cutoff", Nlist=Nlist, nmax=nmax)
    return Nlist


def _contexts(model, nmax, n, sol=None):
    ctx = prepare(model, nmax, n + 1, sol)
    ctx2 = prepare(model, nmax + 2, n + 1, ctx.sol, ctx.kernels)
    return ctx, ctx2


def energy_convergence_study(model, n, a, Nlist=DEFAULT_NLIST, nmax=None, sol=None):
    """|cluster mean - N e_H - sum_l lambda^l E_l| against lambda = 1/(N-1)."""
    _check_order(a)
    nmax = nmax if nmax is not None else default_nmax(a)
    Nlist = _check_nlist(Nlist, nmax)
    ctx, ctx2 = _contexts(model, nmax, n, sol)
    E = energy_coefficients(ctx.sd, ctx.hj, n, a)
    E2 = energy_coefficients(ctx2.sd, ctx2.hj, n, a)
    rows = []
    for N in Nlist:
        lam = 1.0 / (N - 1)
        rep = cluster(model, ctx.sol, ctx.sd, N, n)
        if not rep.complete:
            raise AssignmentError("cluster multiplicity differs from the level multiplicity",
                                  N=N, found=sum(rep.degeneracies), expected=rep.expected_multiplicity)
        approx = sum(lam**l * E[l] for l in range(a + 1))
        diag = abs(sum(lam**l * (E2[l] - E[l]) for l in range(a + 1)))
        rows.append({"N": N, "lambda": lam, "error": abs(rep.mean - approx), "diagnostic": diag,
                     "cluster_mean": rep.mean, "approximation": approx})
    errs = [r["error"] for r in rows]
    excl = [r["diagnostic"] > r["error"] for r in rows]
    fit = fit_slope([r["lambda"] for r in rows], errs, a + 0.8, 0.98, excl)
    return StudyResult("energy", n, a, nmax, rows, fit,
                       "energy expansion error, bound lambda^(a+1)")


def _pad(X, dim):
    out = np.zeros((dim,) * X.ndim, dtype=complex)
    out[tuple(slice(0, s) for s in X.shape)] = X
    return out


def _excitation_eigen(ctx, N):
    H = build_excitation_hamiltonian(ctx.kernels, ctx.sol, ctx.model, N).dense()
    return np.linalg.eigh(0.5 * (H + H.conj().T))


def projector_convergence_study(model, n, a, Nlist=DEFAULT_NLIST, nmax=None, observables=None, sol=None):
    """Trace-norm error of the projector expansion and, for each one-body
    observable given, the error of its expectation series."""
    _check_order(a)
    nmax = nmax if nmax is not None else default_nmax(a)
    Nlist = _check_nlist(Nlist, nmax)
    ctx, ctx2 = _contexts(model, nmax, n, sol)
    P = [projector_coefficients(ctx.sd, ctx.hj, n, l).dense() for l in range(a + 1)]
    P2 = [projector_coefficients(ctx2.sd, ctx2.hj, n, l).dense() for l in range(a + 1)]
    observables = dict(observables or {})
    rows, obs_rows = [], {k: [] for k in observables}
    L = model.M - 1
    for N in Nlist:
        lam = 1.0 / (N - 1)
        dim = fock_dimension(L, N)
        w, X = _excitation_eigen(ctx, N)
        idx = cluster_levels(w, ctx.sd, n)
        if len(idx) != ctx.sd.level(n).multiplicity:
            raise AssignmentError("cluster multiplicity differs from the level multiplicity",
                                  N=N, found=len(idx), expected=ctx.sd.level(n).multiplicity)
        Pex = X[:, idx] @ X[:, idx].conj().T
        approx = sum(lam ** (l / 2) * _pad(P[l], dim) for l in range(a + 1))
        approx2 = sum(lam ** (l / 2) * _pad(P2[l], fock_dimension(L, nmax + 2)) for l in range(a + 1))
        diff = Pex - approx
        err = float(np.sum(np.abs(np.linalg.eigvalsh(0.5 * (diff + diff.conj().T)))))
        d2 = _pad(approx, max(dim, approx2.shape[0]))[: approx2.shape[0], : approx2.shape[0]] - approx2
        diag = float(np.sum(np.abs(np.linalg.eigvalsh(0.5 * (d2 + d2.conj().T)))))
        rows.append({"N": N, "lambda": lam, "error": err, "diagnostic": diag})
        if observables:
            U = excitation_map(ctx.sol, N)
            for name, A in observables.items():
                from .expansion import second_quantize

                A_N = second_quantize(A, 1, model.M, N)
                A_exc = U @ A_N @ U.conj().T
                exact = float(np.real(np.trace(A_exc @ Pex)))
                series = float(np.real(sum(lam ** (l / 2) * np.trace(A_exc[: P[l].shape[0], : P[l].shape[0]] @ P[l])
                                           for l in range(a + 1))))
                obs_rows[name].append({"N": N, "lambda": lam, "error": abs(exact - series)})
    fit = fit_slope([r["lambda"] for r in rows], [r["error"] for r in rows], (a + 1) / 2 - 0.2,
                    exclude=[r["diagnostic"] > r["error"] for r in rows])
    result = StudyResult("projector", n, a, nmax, rows, fit,
                         "projector trace-norm error, bound lambda^((a+1)/2)")
    result.observables = {
        name: StudyResult("observable", n, a, nmax, r,
                          fit_slope([x["lambda"] for x in r], [x["error"] for x in r], (a + 2) / 2 - 0.2),
                          f"expectation error of {name}, bound lambda^((a+2)/2)")
        for name, r in obs_rows.items()
    }
    return result


def _align(target, v):
    """``v`` times the unit phase maximizing Re <target, v>."""
    ov = np.vdot(target, v)
    if abs(ov) == 0:
        return v
    return v * (np.conj(ov) / abs(ov))


def wavefunction_convergence_study(model, n, a, Nlist=DEFAULT_NLIST, nmax=None, sol=None):
    """Norm distance between the exact eigenvector and the truncated series,
    compared in the excitation space after conjugation with the excitation map."""
    _check_order(a)
    nmax = nmax if nmax is not None else default_nmax(a)
    Nlist = _check_nlist(Nlist, nmax)
    ctx, ctx2 = _contexts(model, nmax, n, sol)
    if ctx.sd.level(n).multiplicity != 1:
        raise UnsupportedError("wavefunction study needs a non-degenerate level", level=n)
    wf = wavefunction_coefficients(ctx.sd, ctx.hj, n, a)
    wf2 = wavefunction_coefficients(ctx2.sd, ctx2.hj, n, a)
    L = model.M - 1
    rows = []
    for N in Nlist:
        lam = 1.0 / (N - 1)
        dim = fock_dimension(L, N)
        spec = exact_spectrum(model, N)
        rep = cluster(model, ctx.sol, ctx.sd, N, n, spectrum=spec)
        if len(rep.indices) != 1:
            raise AssignmentError("expected a single eigenvalue in the cluster", N=N, found=len(rep.indices))
        psi = spec.evecs[:, rep.indices[0]]
        chi_exact = excitation_map(ctx.sol, N) @ psi
        approx = sum(lam ** (l / 2) * _pad(wf.chi[l], dim) for l in range(a + 1))
        approx2 = sum(lam ** (l / 2) * _pad(wf2.chi[l], max(dim, len(wf2.chi[0]))) for l in range(a + 1))
        err = float(np.linalg.norm(_align(approx, chi_exact) - approx))
        diag = float(np.linalg.norm(_pad(approx, len(approx2)) - approx2))
        rows.append({"N": N, "lambda": lam, "error": err, "diagnostic": diag})
    fit = fit_slope([r["lambda"] for r in rows], [r["error"] for r in rows], (a + 1) / 2 - 0.2,
                    exclude=[r["diagnostic"] > r["error"] for r in rows])
    return StudyResult("wavefunction", n, a, nmax, rows, fit,
                       "wavefunction norm error, bound lambda^((a+1)/2)")


def default_nmax(a):
    """Smallest coefficient cutoff resolving order ``a`` (three particles per
    order from the cubic terms, plus a pair), raised to a practical floor."""
    return max(2 + 3 * a, 8)


def excitation_identity_check(model, sol, kernels, N):
    """max |U (H_N - N e_H) U* - H_exc| with H_exc assembled from the kernels."""
    U = excitation_map(sol, N)
    H = build_HN(model, N)
    lhs = U @ (H - N * sol.eH * np.eye(H.shape[0])) @ U.conj().T
    rhs = build_excitation_hamiltonian(kernels, sol, model, N).dense()
    return float(np.max(np.abs(lhs - rhs)))


def spectrum_consistency_check(model, sol, kernels, N):
    """Largest eigenvalue difference between H_exc and H_N - N e_H."""
    a = np.linalg.eigvalsh(build_HN(model, N)) - N * sol.eH
    H = build_excitation_hamiltonian(kernels, sol, model, N).dense()
    b = np.linalg.eigvalsh(0.5 * (H + H.conj().T))
    return float(np.max(np.abs(a - b)))


def number_bound_constant(model, sol, kernels, N):
    """Smallest c with N_exc + 1 <= c (H_exc + N^(1/3)) on the truncated
    space, from a generalized eigenvalue problem (reported, not asserted)."""
    from scipy.linalg import eigh

    from .fock import FockBasis

    H = build_excitation_hamiltonian(kernels, sol, model, N).dense()
    rhs = 0.5 * (H + H.conj().T) + N ** (1 / 3) * np.eye(H.shape[0])
    wmin = np.linalg.eigvalsh(rhs)[0]
    if wmin <= 0:
        return float("inf")
    lhs = np.diag(FockBasis(model.M - 1, N).totals + 1.0)
    return float(eigh(lhs, rhs, eigvals_only=True)[-1])
