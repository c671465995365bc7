"""Quadratic Hamiltonian H0: symplectic diagonalization, truncated-space
spectrum, spectral projectors and reduced resolvents."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import CheckFailed, ConfigError, DegeneracyError
from .fock import FockOperator, number_operator

SQRT_FLOOR = 1e-14


def psd_sqrt(X):
    """Square root of a Hermitian positive semidefinite matrix."""
    w, U = np.linalg.eigh(0.5 * (X + X.conj().T))
    w = np.maximum(w, SQRT_FLOOR)
    return (U * np.sqrt(w)) @ U.conj().T


@dataclass(frozen=True, eq=False)
class BogoliubovMap:
    """Columns of ``U`` and ``V`` are the quasiparticle modes:
    ``b_j = sum_m conj(U[m,j]) a_m - conj(V[m,j]) a*_m``."""

    U: np.ndarray
    V: np.ndarray

    @property
    def hs_norm_V(self):
        return float(np.linalg.norm(self.V))

    @property
    def C_V(self):
        """Constant of the quasi-free number-moment bound."""
        return 2 * self.hs_norm_V**2 + np.linalg.norm(self.U, 2) ** 2 + 1

    def symplectic_residual(self):
        """Largest violation of U*U = 1 + V*V, UU* = 1 + conj(V) V^T,
        U^T V symmetric and U V* symmetric."""
        U, V = self.U, self.V
        I = np.eye(U.shape[0])
        parts = [
            U.conj().T @ U - V.conj().T @ V - I,
            U @ U.conj().T - V.conj() @ V.T - I,
            U.T @ V - V.T @ U,
            U @ V.conj().T - V.conj() @ U.T,
        ]
        return max(float(np.max(np.abs(p), initial=0.0)) for p in parts)

    def pair_amplitudes(self):
        """``Z`` with ground state proportional to exp(1/2 sum Z_mn a*_m a*_n) vacuum."""
        return (self.V @ np.linalg.inv(self.U)).conj()


@dataclass(frozen=True, eq=False)
class QuadraticDiagonalization:
    map: BogoliubovMap
    d: np.ndarray
    E00: float
    A: np.ndarray
    B: np.ndarray


def quadratic_blocks(kernels):
    A = np.diag(np.asarray(kernels.eps, dtype=complex)) + kernels.K1
    return 0.5 * (A + A.conj().T), 0.5 * (kernels.K2 + kernels.K2.T)


def diagonalize_quadratic(kernels) -> QuadraticDiagonalization:
    A, B = quadratic_blocks(kernels)
    L = A.shape[0]
    if L == 0:
        return QuadraticDiagonalization(BogoliubovMap(np.zeros((0, 0)), np.zeros((0, 0))), np.zeros(0), 0.0, A, B)
    real = bool(np.all(np.abs(A.imag) < 1e-14) and np.all(np.abs(B.imag) < 1e-14))
    if real and np.linalg.eigvalsh((A - B).real)[0] <= 0:
        raise DegeneracyError("A - B is not positive definite")
    big = np.block([[A, B], [B.conj(), A.conj()]])
    try:
        Lc = np.linalg.cholesky(0.5 * (big + big.conj().T))
    except np.linalg.LinAlgError as exc:
        raise DegeneracyError("block matrix of H0 is not positive definite") from exc
    K = Lc.conj().T
    S = np.diag(np.r_[np.ones(L), -np.ones(L)])
    Wm = K @ S @ K.conj().T
    w, X = np.linalg.eigh(0.5 * (Wm + Wm.conj().T))
    # eigh sorts ascending: the top L are the positive branch
    pos = X[:, L:]
    d = w[L:]
    Tpos = sla.solve_triangular(K, pos * np.sqrt(d), lower=False)
    U = Tpos[:L]
    V = Tpos[L:]
    if real:
        # real symmetric route: D^2 = spec of (A+B)^1/2 (A-B) (A+B)^1/2
        R = psd_sqrt((A + B).real)
        d_real = np.sqrt(np.maximum(np.linalg.eigvalsh(R @ (A - B).real @ R), 0.0))
        if np.max(np.abs(d_real - d)) > 1e-9 * max(1.0, float(np.max(d))):
            raise CheckFailed("symplectic routes disagree", real_route=d_real.tolist(), general=d.tolist())
        d = d_real
    bmap = BogoliubovMap(U=U, V=V)
    res = bmap.symplectic_residual()
    if res > 1e-10:
        raise CheckFailed("Bogoliubov map violates the symplectic relations", residual=res)
    E00 = 0.5 * (float(np.sum(d)) - float(np.real(np.trace(A))))
    return QuadraticDiagonalization(map=bmap, d=d, E00=E00, A=A, B=B)


def build_H0(kops) -> FockOperator:
    H = kops.K0 + kops.K1 + kops.K2 + kops.K2.H
    return FockOperator(kops.basis, H.matrix, {-2, 0, 2}, check=False)


# ---------------------------------------------------------------- spectrum


@dataclass
class Level:
    energy: float
    multiplicity: int
    vectors: np.ndarray  # columns
    indices: np.ndarray  # positions in the full eigen-decomposition

    def projector(self):
        return self.vectors @ self.vectors.conj().T


@dataclass
class SpectralData:
    basis: object
    H0: FockOperator
    evals: np.ndarray
    evecs: np.ndarray
    levels: list
    gaps: list  # g^(n) = E^(n+1) - E^(n)
    contour: list  # half-gap radii
    d: np.ndarray = None
    E00: float = None
    cross_check: list = None
    reliable: int = 0
    _resolvents: dict = field(default_factory=dict, repr=False)

    @property
    def ground(self):
        return self.levels[0].vectors[:, 0]

    def level(self, n):
        if n >= len(self.levels):
            raise ConfigError("level beyond the computed range", level=n, available=len(self.levels))
        return self.levels[n]

    def projector(self, n):
        return FockOperator(self.basis, self.level(n).projector(), None, check=False)


def cluster_eigenvalues(evals, tol=1e-8):
    """Group sorted eigenvalues; neighbours closer than tol*max(1,|E|) merge."""
    groups = [[0]]
    for i in range(1, len(evals)):
        if evals[i] - evals[groups[-1][-1]] <= tol * max(1.0, abs(evals[i])):
            groups[-1].append(i)
        else:
            groups.append([i])
    return groups


def _phase_columns(X):
    from .model import fix_phase

    return np.column_stack([fix_phase(X[:, j]) for j in range(X.shape[1])]) if X.shape[1] else X


def spectral_data(H0: FockOperator, count=None, cluster_tol=1e-8, quadratic=None):
    """Full eigen-decomposition of the truncated H0, clustered into levels.

    Only the lower three quarters of the truncated spectrum count as
    reliable; asking for more levels than fit there is an error.
    """
    basis = H0.basis
    Hd = H0.dense()
    Hd = 0.5 * (Hd + Hd.conj().T)
    evals, evecs = np.linalg.eigh(Hd)
    groups = cluster_eigenvalues(evals, cluster_tol)
    reliable_dim = int(np.floor(0.75 * len(evals)))
    reliable = sum(1 for g in groups if g[-1] < reliable_dim)
    if count is None:
        count = reliable
    if count > reliable:
        raise ConfigError(
            "requested levels exceed the reliable part of the truncated spectrum",
            requested=count, reliable=reliable,
        )
    levels = []
    for g in groups[: count + 1]:
        idx = np.array(g)
        vecs = evecs[:, idx]
        if len(idx) == 1:
            vecs = _phase_columns(vecs)
        levels.append(Level(float(np.mean(evals[idx])), len(idx), vecs, idx))
    gaps = [levels[i + 1].energy - levels[i].energy for i in range(len(levels) - 1)]
    levels = levels[:count]
    gaps = gaps[:count]
    contour = [0.5 * gaps[0]] + [0.5 * min(gaps[i - 1], gaps[i]) for i in range(1, len(gaps))]
    sd = SpectralData(
        basis=basis, H0=H0, evals=evals, evecs=evecs, levels=levels, gaps=gaps,
        contour=contour, reliable=reliable,
    )
    if quadratic is not None:
        sd.d = np.asarray(quadratic.d)
        sd.E00 = quadratic.E00
        sd.cross_check = [quasiparticle_match(quadratic, lv.energy) for lv in levels]
    return sd


def quasiparticle_match(quadratic, energy, max_quanta=12):
    """Closest E00 + sum nu_j d_j to ``energy``; returns (deviation, nu)."""
    d = np.asarray(quadratic.d)
    best = (np.inf, None)
    target = energy - quadratic.E00
    limit = target + 1.0 + (d[0] if len(d) else 0)
    for total in range(max_quanta + 1):
        if len(d) and total * d[0] > limit:
            break
        for nu in itertools.product(range(total + 1), repeat=len(d)):
            if sum(nu) != total:
                continue
            dev = abs(float(np.dot(nu, d)) - target)
            if dev < best[0]:
                best = (dev, tuple(nu))
    return best


def reduced_resolvent(sd: SpectralData, n, k) -> FockOperator:
    """Q (E_n - H0)^-k Q on the truncated space; k = 0 gives -P_n."""
    key = (n, k)
    if key not in sd._resolvents:
        lv = sd.level(n)
        if k == 0:
            mat = -lv.projector()
        else:
            mask = np.ones(len(sd.evals), dtype=bool)
            mask[lv.indices] = False
            w = (lv.energy - sd.evals[mask]) ** (-float(k))
            X = sd.evecs[:, mask]
            mat = (X * w) @ X.conj().T
        sd._resolvents[key] = FockOperator(sd.basis, mat, None, check=False)
    return sd._resolvents[key]


# ----------------------------------------------------------- ground checks


def _ladder_dense(basis):
    L = basis.modes
    lows = [basis.lower_matrix(i).toarray() for i in range(L)]
    return lows + [a.conj().T for a in lows]


def quasifree_groundstate_check(sd: SpectralData, bmap: BogoliubovMap = None):
    """Wick's rule and vanishing odd moments on the numerical ground state.

    Operators are the 2L ladder operators ``a_1..a_L, a*_1..a*_L``.
    """
    chi = sd.ground
    ops = _ladder_dense(sd.basis)
    n = len(ops)
    applied = [op @ chi for op in ops]
    one = np.array([np.vdot(chi, v) for v in applied])
    two = np.array([[np.vdot(ops[i].conj().T @ chi, applied[j]) for j in range(n)] for i in range(n)])
    three = 0.0
    four = 0.0
    # suffix vectors O_k O_l chi, reused across the 3- and 4-point loops
    pair_vec = {(k, l): ops[k] @ applied[l] for k in range(n) for l in range(n)}
    left = [ops[i].conj().T @ chi for i in range(n)]
    for i in range(n):
        for j in range(n):
            Lij = ops[j].conj().T @ left[i]  # (O_i O_j)^* chi
            for k in range(n):
                three = max(three, abs(np.vdot(Lij, applied[k])))
                for l in range(n):
                    val = np.vdot(Lij, pair_vec[(k, l)])
                    wick = two[i, j] * two[k, l] + two[i, k] * two[j, l] + two[i, l] * two[j, k]
                    four = max(four, abs(val - wick))
    report = {
        "one_point_max": float(np.max(np.abs(one), initial=0.0)),
        "three_point_max": float(three),
        "four_point_residual": float(four),
    }
    if bmap is not None:
        L = sd.basis.modes
        # <a*_m a_n> = (V V^*)_{mn}, <a_m a_n> = (U V^*)_{mn}
        dens = two[L:, :L]
        pair = two[:L, :L]
        report["density_deviation"] = float(np.max(np.abs(dens - bmap.V @ bmap.V.conj().T), initial=0.0))
        report["pairing_deviation"] = float(np.max(np.abs(pair - bmap.U @ bmap.V.conj().T), initial=0.0))
    return report


def number_moment_check(sd: SpectralData, bmap: BogoliubovMap, bmax=3):
    """<chi, (N+1)^b chi> <= C_V^b b^b for the numerical ground state."""
    chi = sd.ground
    nvals = sd.basis.totals + 1.0
    C = bmap.C_V
    rows = []
    for b in range(1, bmax + 1):
        lhs = float(np.sum(np.abs(chi) ** 2 * nvals**b))
        rhs = float(C**b * b**b)
        rows.append({"b": b, "moment": lhs, "bound": rhs, "holds": lhs <= rhs})
    return rows


def number_operator_bound_check(sd: SpectralData, quadratic: QuadraticDiagonalization, sectors=None):
    """Smallest eigenvalue of c(H0 - E0 + 1) - (N + 1) on the sectors up to
    ``sectors`` (compressed), with c = C_V max(1, 1/d_0)."""
    basis = sd.basis
    c = quadratic.map.C_V * max(1.0, 1.0 / float(quadratic.d[0]))
    top = basis.nmax if sectors is None else sectors
    keep = basis.totals <= top
    H = sd.H0.dense()[np.ix_(keep, keep)]
    Nn = np.diag(basis.totals[keep] + 1.0)
    E0 = sd.levels[0].energy
    X = c * (H - (E0 - 1.0) * np.eye(len(Nn))) - Nn
    smallest = float(np.linalg.eigvalsh(0.5 * (X + X.conj().T))[0])
    return {"constant": c, "smallest_eigenvalue": smallest, "holds": smallest >= -1e-8}


def number_expectation(sd, n=0):
    N = number_operator(sd.basis).dense()
    return float(np.real(np.trace(sd.level(n).projector() @ N)))
