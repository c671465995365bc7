"""Truncated bosonic Fock spaces, ladder operators, the excitation
Hamiltonian and the map from N-particle states to excitation vectors."""

from __future__ import annotations

from dataclasses import dataclass
from math import comb, sqrt

import numpy as np
import scipy.sparse as sp

from .combinatorics import weak_compositions
from .errors import CheckFailed, ConfigError, check_dense_budget


class FockBasis:
    """Occupation states of ``modes`` bosonic modes with total number at most
    ``nmax``, ordered by total number, then lexicographically."""

    def __init__(self, modes, nmax):
        if modes < 0 or nmax < 0:
            raise ConfigError("modes and nmax must be non-negative", modes=modes, nmax=nmax)
        self.modes = int(modes)
        self.nmax = int(nmax)
        states = []
        offsets = [0]
        for n in range(nmax + 1):
            sector = list(weak_compositions(n, modes)) if modes else ([()] if n == 0 else [])
            states.extend(sector)
            offsets.append(len(states))
        self.states = np.array(states, dtype=np.int64).reshape(len(states), modes)
        self.sector_offsets = np.array(offsets, dtype=np.int64)
        self.totals = self.states.sum(axis=1) if modes else np.zeros(len(states), dtype=np.int64)
        self._index = {s: i for i, s in enumerate(states)}
        self._ladders = {}

    @property
    def dim(self):
        return len(self.states)

    def __len__(self):
        return self.dim

    def __repr__(self):
        return f"FockBasis(modes={self.modes}, nmax={self.nmax}, dim={self.dim})"

    def index(self, occupation):
        return self._index[tuple(int(x) for x in occupation)]

    def sector(self, n):
        return slice(int(self.sector_offsets[n]), int(self.sector_offsets[n + 1]))

    def vacuum(self):
        v = np.zeros(self.dim, dtype=complex)
        v[0] = 1.0
        return v

    def lower_matrix(self, mode):
        """Sparse annihilator for a 0-based ``mode``."""
        if mode not in self._ladders:
            rows, cols, vals = [], [], []
            for j, s in enumerate(self.states):
                k = s[mode]
                if k > 0:
                    t = list(s)
                    t[mode] -= 1
                    rows.append(self._index[tuple(t)])
                    cols.append(j)
                    vals.append(sqrt(k))
            self._ladders[mode] = sp.csr_matrix(
                (np.array(vals, dtype=complex), (rows, cols)), shape=(self.dim, self.dim)
            )
        return self._ladders[mode]


def fock_dimension(modes, nmax):
    if modes == 0:
        return 1
    return comb(nmax + modes, modes)


class NParticleBasis(FockBasis):
    """Occupations of ``M`` modes with exactly ``N`` particles."""

    def __init__(self, M, N):
        self.M = int(M)
        self.N = int(N)
        states = list(weak_compositions(N, M))
        self.modes = self.M
        self.nmax = self.N
        self.states = np.array(states, dtype=np.int64).reshape(len(states), M)
        self.sector_offsets = np.array([0, len(states)])
        self.totals = np.full(len(states), N)
        self._index = {s: i for i, s in enumerate(states)}
        self._ladders = {}


# ----------------------------------------------------------------- operators


class FockOperator:
    """Matrix on a :class:`FockBasis` tagged with the number changes it can
    cause. ``sector_shift=None`` means no structure is claimed."""

    def __init__(self, basis, matrix, sector_shift=None, check=True):
        self.basis = basis
        if sp.issparse(matrix):
            matrix = sp.csr_matrix(matrix)
        else:
            matrix = np.asarray(matrix)
        if matrix.shape != (basis.dim, basis.dim):
            raise ConfigError("operator shape does not match basis", shape=list(matrix.shape))
        self.matrix = matrix
        self.sector_shift = None if sector_shift is None else frozenset(int(d) for d in sector_shift)
        if check and self.sector_shift is not None:
            self._check_shift()

    def _check_shift(self):
        if sp.issparse(self.matrix):
            coo = self.matrix.tocoo()
            r, c, v = coo.row, coo.col, coo.data
        else:
            r, c = np.nonzero(self.matrix)
            v = self.matrix[r, c]
        keep = np.abs(v) > 0
        shifts = set(np.unique(self.basis.totals[r[keep]] - self.basis.totals[c[keep]]).tolist())
        bad = shifts - self.sector_shift
        if bad:
            raise CheckFailed(
                "operator has entries outside its declared number shifts",
                declared=sorted(self.sector_shift), found=sorted(bad),
            )

    def dense(self):
        if sp.issparse(self.matrix):
            return self.matrix.toarray()
        return np.array(self.matrix)

    def sparse(self):
        return sp.csr_matrix(self.matrix)

    @property
    def H(self):
        shift = None if self.sector_shift is None else {-d for d in self.sector_shift}
        return FockOperator(self.basis, self.matrix.conj().T, shift, check=False)

    def _combine(self, other, op):
        if isinstance(other, FockOperator):
            if other.basis is not self.basis:
                raise ConfigError("operators live on different bases")
            return other
        raise TypeError(op)

    def __add__(self, other):
        other = self._combine(other, "+")
        if self.sector_shift is None or other.sector_shift is None:
            shift = None
        else:
            shift = self.sector_shift | other.sector_shift
        return FockOperator(self.basis, self.matrix + other.matrix, shift, check=False)

    def __sub__(self, other):
        return self + (-1.0) * other

    def __rmul__(self, scalar):
        return FockOperator(self.basis, scalar * self.matrix, self.sector_shift, check=False)

    __mul__ = __rmul__

    def __neg__(self):
        return (-1.0) * self

    def __matmul__(self, other):
        other = self._combine(other, "@")
        if self.sector_shift is None or other.sector_shift is None:
            shift = None
        else:
            shift = {a + b for a in self.sector_shift for b in other.sector_shift}
        return FockOperator(self.basis, self.matrix @ other.matrix, shift, check=False)

    def apply(self, vec):
        return self.matrix @ vec


def ladder(basis: FockBasis, mode: int):
    """Creation and annihilation operators for excitation ``mode`` (1-based).

    Creation beyond ``nmax`` is dropped.
    """
    if not 1 <= mode <= basis.modes:
        raise ConfigError("mode out of range", mode=mode, modes=basis.modes)
    low = basis.lower_matrix(mode - 1)
    return {
        "raise": FockOperator(basis, low.conj().T.tocsr(), {1}, check=False),
        "lower": FockOperator(basis, low, {-1}, check=False),
    }


def number_operator(basis):
    return FockOperator(basis, sp.diags(basis.totals.astype(complex)).tocsr(), {0}, check=False)


def number_function(basis, f):
    """Diagonal operator ``f(N)`` evaluated on each number sector."""
    values = np.array([f(int(n)) for n in basis.totals], dtype=complex)
    return FockOperator(basis, sp.diags(values).tocsr(), {0}, check=False)


# --------------------------------------------------------- kernel operators


@dataclass
class Kops:
    basis: FockBasis
    K0: FockOperator
    K1: FockOperator
    K2: FockOperator
    K3: FockOperator
    K4: FockOperator


def build_Kops(kernels, basis: FockBasis) -> Kops:
    L = basis.modes
    if kernels.K1.shape != (L, L):
        raise ConfigError("kernel and basis dimensions differ", kernel_modes=kernels.K1.shape[0], modes=L)
    A = [basis.lower_matrix(i) for i in range(L)]
    R = [a.conj().T.tocsr() for a in A]
    dim = basis.dim
    zero = sp.csr_matrix((dim, dim), dtype=complex)

    eps = np.asarray(kernels.eps, dtype=float)
    K0 = sp.diags((basis.states @ eps).astype(complex) if L else np.zeros(dim, complex)).tocsr()

    K1 = zero.copy()
    K2 = zero.copy()
    K3 = zero.copy()
    K4 = zero.copy()
    for m in range(L):
        for n in range(L):
            if kernels.K1[m, n] != 0:
                K1 = K1 + kernels.K1[m, n] * (R[m] @ A[n])
            if kernels.K2[m, n] != 0:
                K2 = K2 + 0.5 * kernels.K2[m, n] * (R[m] @ R[n])
    RR = {(m, n): R[m] @ R[n] for m in range(L) for n in range(L)}
    for (m, n), rr in RR.items():
        row3 = kernels.K3[m, n]
        for p in range(L):
            if row3[p] != 0:
                K3 = K3 + row3[p] * (rr @ A[p])
        row4 = kernels.K4[m, n]
        for p in range(L):
            for q in range(L):
                if row4[p, q] != 0:
                    K4 = K4 + 0.5 * row4[p, q] * (rr @ (A[q] @ A[p]))
    return Kops(
        basis=basis,
        K0=FockOperator(basis, K0, {0}, check=False),
        K1=FockOperator(basis, K1.tocsr(), {0}),
        K2=FockOperator(basis, K2.tocsr(), {2}),
        K3=FockOperator(basis, K3.tocsr(), {1}),
        K4=FockOperator(basis, K4.tocsr(), {0}),
    )


# ----------------------------------------------------- N-particle Hamiltonian


def _one_body_second_quantized(basis, X):
    """sum X[m, p] a*_m a_p on a basis that is closed under number-conserving
    moves (any FockBasis or NParticleBasis)."""
    M = basis.modes
    A = [basis.lower_matrix(i) for i in range(M)]
    out = sp.csr_matrix((basis.dim, basis.dim), dtype=complex)
    for m in range(M):
        for p in range(M):
            if X[m, p] != 0:
                out = out + X[m, p] * (A[m].conj().T @ A[p])
    return out.tocsr()


def build_HN(model, N):
    """H_N on the symmetric N-particle space, as a dense Hermitian matrix.

    The two-body part is assembled as ``P^* (V (x) 1) P`` with ``P`` the stack
    of pair annihilators ``a_p a_q`` mapping into the (N-2)-particle sector.
    """
    if N < 2:
        raise ConfigError("N must be at least 2", N=N)
    M = model.M
    dim = comb(N + M - 1, M - 1)
    check_dense_budget(dim, "N-particle Hamiltonian")
    full = FockBasis(M, N)
    top = full.sector(N)
    mid = full.sector(N - 1)
    low = full.sector(N - 2)
    A = [full.lower_matrix(i) for i in range(M)]
    A_top = [a[mid, top] for a in A]
    A_mid = [a[low, mid] for a in A]
    one = sp.vstack(A_top).tocsr()
    H1 = one.conj().T @ sp.kron(sp.csr_matrix(model.T), sp.identity(one.shape[0] // M)) @ one
    pairs = sp.vstack([A_mid[q] @ A_top[p] for p in range(M) for q in range(M)]).tocsr()
    Vmat = sp.csr_matrix(np.asarray(model.V).reshape(M * M, M * M))
    dlow = low.stop - low.start
    H2 = pairs.conj().T @ sp.kron(Vmat, sp.identity(dlow)) @ pairs
    H = (H1 + (0.5 / (N - 1)) * H2).toarray()
    return 0.5 * (H + H.conj().T)


# ------------------------------------------------------------ excitation map


def rotation_operator(B, N):
    """Second-quantized one-body unitary on the N-particle sector of M modes.

    Column ``j`` holds, in the original occupation basis, the state whose
    occupations ``states[j]`` refer to the columns of ``B``.
    """
    M = B.shape[0]
    full = FockBasis(M, N)
    A = [full.lower_matrix(i) for i in range(M)]
    # creators of the rotated modes, b*_i = sum_j B[j, i] a*_j
    creators = []
    for i in range(M):
        c = sp.csr_matrix((full.dim, full.dim), dtype=complex)
        for j in range(M):
            if B[j, i] != 0:
                c = c + B[j, i] * A[j].conj().T
        creators.append(c.tocsr())
    # column vectors per state, built sector by sector
    prev = {tuple([0] * M): full.vacuum()}
    for n in range(1, N + 1):
        sl = full.sector(n)
        cur = {}
        for s in full.states[sl]:
            s = tuple(int(x) for x in s)
            i = max(k for k in range(M) if s[k] > 0)
            t = list(s)
            t[i] -= 1
            cur[s] = (creators[i] @ prev[tuple(t)]) / sqrt(s[i])
        prev = cur
    sl = full.sector(N)
    G = np.column_stack([prev[tuple(int(x) for x in s)][sl] for s in full.states[sl]]) if N > 0 else np.ones((1, 1))
    return G


def excitation_map(sol, N):
    """Unitary from the N-particle space (original occupation basis) to the
    excitation Fock space over the M-1 excited modes of ``h`` with nmax = N."""
    B = sol.basis
    M = B.shape[0]
    check_dense_budget(comb(N + M - 1, M - 1), "excitation map")
    G = rotation_operator(B, N)
    npb = NParticleBasis(M, N)
    fb = FockBasis(M - 1, N)
    perm = np.array([fb.index(s[1:]) for s in npb.states])
    U = np.zeros_like(G)
    U[perm, :] = G.conj().T
    return U


def excitation_hamiltonian_factors(N):
    """Number functions multiplying K1, K2 (to its right), K3 (to its right)."""
    lam = 1.0 / (N - 1)

    def f1(n):
        return (N - n) * lam

    def f2(n):
        return sqrt(max((N - n) * (N - n - 1), 0)) * lam

    def f3(n):
        return sqrt(max(N - n, 0)) * lam

    return f1, f2, f3


def build_excitation_hamiltonian(kernels, sol, model, N, kops=None):
    if N < 2:
        raise ConfigError("N must be at least 2", N=N)
    check_dense_budget(fock_dimension(model.M - 1, N), "excitation Hamiltonian")
    if kops is None:
        kops = build_Kops(kernels, FockBasis(model.M - 1, N))
    basis = kops.basis
    if basis.nmax != N:
        raise ConfigError("excitation Hamiltonian needs nmax = N", nmax=basis.nmax, N=N)
    f1, f2, f3 = excitation_hamiltonian_factors(N)
    t2 = kops.K2 @ number_function(basis, f2)
    t3 = kops.K3 @ number_function(basis, f3)
    H = (
        kops.K0
        + number_function(basis, f1) @ kops.K1
        + t2 + t2.H
        + t3 + t3.H
        + (1.0 / (N - 1)) * kops.K4
    )
    return H


# ----------------------------------------------------------------- dumping


def dump_operator(op: FockOperator, fmt="%.17g"):
    """Text form: one JSON header line, then ``row col re im`` sorted."""
    import json

    header = {
        "M": op.basis.modes + 1,
        "nmax": op.basis.nmax,
        "sector_shift": None if op.sector_shift is None else sorted(op.sector_shift),
    }
    coo = sp.coo_matrix(op.matrix)
    order = np.lexsort((coo.col, coo.row))
    lines = [json.dumps(header, sort_keys=True)]
    for k in order:
        v = coo.data[k]
        if v == 0:
            continue
        lines.append(f"{coo.row[k]} {coo.col[k]} {fmt % v.real} {fmt % v.imag}")
    return "\n".join(lines) + "\n"


def load_operator(text, basis=None):
    import json

    lines = text.strip().splitlines()
    header = json.loads(lines[0])
    if basis is None:
        basis = FockBasis(header["M"] - 1, header["nmax"])
    rows, cols, vals = [], [], []
    for line in lines[1:]:
        r, c, re, im = line.split()
        rows.append(int(r))
        cols.append(int(c))
        vals.append(float(re) + 1j * float(im))
    m = sp.csr_matrix((np.array(vals, dtype=complex), (rows, cols)), shape=(basis.dim, basis.dim))
    return FockOperator(basis, m, header["sector_shift"])


def substitution_rules_check(sol, N, f=None, g=None, rng=None):
    """Conjugate the four condensate/excitation bilinears with the excitation
    map and compare with their number-function replacements.

    ``f`` and ``g`` are vectors orthogonal to the condensate (random if not
    given). Returns the max-entry residual of each rule.
    """
    B = sol.basis
    M = B.shape[0]
    rng = np.random.default_rng(0) if rng is None else rng
    phi = B[:, 0]

    def perp(v):
        if v is None:
            v = rng.normal(size=M) + 1j * rng.normal(size=M)
        v = np.asarray(v, dtype=complex)
        return v - phi * np.vdot(phi, v)

    f, g = perp(f), perp(g)
    full = FockBasis(M, N)
    top = full.sector(N)
    A = [full.lower_matrix(i) for i in range(M)]

    def create(v):
        return sum(v[i] * A[i].conj().T for i in range(M))

    def annihilate(v):
        return sum(np.conj(v[i]) * A[i] for i in range(M))

    U = excitation_map(sol, N)
    exc = FockBasis(M - 1, N)
    Ae = [exc.lower_matrix(i) for i in range(M - 1)]
    fe, ge = (B.conj().T @ f)[1:], (B.conj().T @ g)[1:]
    cf = sum(fe[i] * Ae[i].conj().T for i in range(M - 1)).toarray()
    ag = sum(np.conj(ge[i]) * Ae[i] for i in range(M - 1)).toarray()
    root = np.diag(np.sqrt(np.maximum(N - exc.totals, 0)).astype(complex))
    Nexc = np.diag((N - exc.totals).astype(complex))

    pairs = {
        "phi_phi": (create(phi) @ annihilate(phi), Nexc),
        "f_phi": (create(f) @ annihilate(phi), cf @ root),
        "phi_g": (create(phi) @ annihilate(g), root @ ag),
        "f_g": (create(f) @ annihilate(g), cf @ ag),
    }
    out = {}
    for name, (op, target) in pairs.items():
        conj = U @ op[top, top].toarray() @ U.conj().T
        out[name] = float(np.max(np.abs(conj - target)))
    return out
