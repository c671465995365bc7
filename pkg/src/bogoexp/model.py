"""Finite mean-field models, the Hartree minimization and the interaction
kernels expressed in the eigenbasis of the mean-field operator.

Conventions
-----------
``V[m, n, p, q] = <e_m e_n, v e_p e_q>`` so that the two-body part of the
N-particle Hamiltonian reads ``(lam/2) sum V[m,n,p,q] a*_m a*_n a_q a_p`` with
``lam = 1/(N-1)``. The density matrix of a unit vector ``phi`` is
``rho[p, m] = phi_p conj(phi_m)``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ConvergenceError, DegeneracyError, ResourceError

HERMITIAN_RTOL = 1e-12
POSITIVE_TYPE_TOL = 1e-10
# bytes allowed for a dense interaction tensor
TENSOR_BUDGET = 2 * 10**8
# residual at which Newton iterations take over from damped mixing
NEWTON_SWITCH = 1e-4
# iterations without halving the residual before a start is abandoned
STALL_WINDOW = 300


def _symmetrize_tensor(V):
    V = 0.5 * (V + V.transpose(1, 0, 3, 2))
    return 0.5 * (V + V.transpose(2, 3, 0, 1).conj())


def pair_form(V):
    """Matrix ``Q[(a, b), (n, q)] = V[b, n, a, q]``.

    ``Q`` is Hermitian by the two tensor symmetries and ``<F, Q F>`` is the
    interaction energy of the two-point density ``F``, so the interaction is
    positive type iff ``Q >= 0``. For real tensors this coincides with the
    arrangement ``(m p), (n q) -> V[m, n, p, q]``.
    """
    M = V.shape[0]
    X = V.transpose(2, 0, 1, 3)
    return X.reshape(M * M, M * M)


def smallest_pair_eigenvalue(V):
    Q = pair_form(V)
    Q = 0.5 * (Q + Q.conj().T)
    return float(np.linalg.eigvalsh(Q)[0])


@dataclass(frozen=True, eq=False)
class ModelSpec:
    T: np.ndarray
    V: np.ndarray
    label: str = ""
    positive_type: bool = False
    torus: "TorusSpec | None" = None

    @property
    def M(self):
        return self.T.shape[0]


def make_model(T, V, label="", positive_type=None, torus=None):
    """Validate ``T`` and ``V`` and return a :class:`ModelSpec`.

    ``V`` is symmetrized so that both index symmetries hold exactly. When
    ``positive_type`` is None it is detected; when True it is checked.
    """
    T = np.array(T, dtype=complex)
    V = np.array(V, dtype=complex)
    if T.ndim != 2 or T.shape[0] != T.shape[1] or T.shape[0] < 1:
        raise ConfigError("T must be a non-empty square matrix", shape=list(T.shape))
    M = T.shape[0]
    if V.shape != (M, M, M, M):
        raise ConfigError("V must have shape (M, M, M, M)", shape=list(V.shape), M=M)
    scale = max(1.0, float(np.max(np.abs(T))))
    if np.max(np.abs(T - T.conj().T)) > HERMITIAN_RTOL * scale:
        raise ConfigError("T is not Hermitian")
    T = 0.5 * (T + T.conj().T)
    V = _symmetrize_tensor(V)
    is_pos = smallest_pair_eigenvalue(V) >= -POSITIVE_TYPE_TOL if M * M <= 4096 else False
    if positive_type is None:
        positive_type = is_pos
    elif positive_type and not is_pos:
        raise ConfigError("interaction flagged positive type but its pair form has a negative eigenvalue")
    T.setflags(write=False)
    V.setflags(write=False)
    return ModelSpec(T=T, V=V, label=label, positive_type=bool(positive_type), torus=torus)


def random_positive_model(M, rng, terms=3, complex_=True, label="random", strength=1.0):
    """Random model with positive-type interaction.

    ``V[m,n,p,q] = sum_r g_r A_r[m,p] A_r[n,q]`` with Hermitian ``A_r`` and
    ``g_r >= 0`` is positive type: its pair form is a sum of rank-one
    positive matrices.
    """
    def herm():
        X = rng.normal(size=(M, M))
        if complex_:
            X = X + 1j * rng.normal(size=(M, M))
        return 0.5 * (X + X.conj().T)

    T = herm()
    V = np.zeros((M,) * 4, dtype=complex)
    for _ in range(terms):
        A = herm()
        V += strength * rng.uniform(0.2, 1.0) * np.einsum("mp,nq->mnpq", A, A)
    return make_model(T, V, label=label, positive_type=True)


def random_gapped_model(M, rng, min_gap=0.1, attempts=50, **kwargs):
    """Draw random positive-type models until the Hartree problem has a
    non-degenerate minimizer with spectral gap at least ``min_gap``.

    Returns ``(model, solution)``.
    """
    for _ in range(attempts):
        model = random_positive_model(M, rng, **kwargs)
        try:
            sol = hartree_solve(model)
        except DegeneracyError:
            continue
        if sol.gH >= min_gap:
            return model, sol
    raise ConvergenceError("no gapped random model found", attempts=attempts, min_gap=min_gap)


# --------------------------------------------------------------------- torus


@dataclass(frozen=True)
class TorusSpec:
    """Plane waves on [0, 2pi)^d with |k|_inf <= Kcut and kinetic energy |k|^2.

    ``vhat`` maps integer momenta to Fourier coefficients; the interaction
    tensor carries the extra factor (2pi)^-d of the plane-wave normalization.
    """

    d: int
    Kcut: int
    vhat: tuple = ()

    def __post_init__(self):
        if self.d not in (1, 2):
            raise ConfigError("torus dimension must be 1 or 2", d=self.d)
        if self.Kcut < 0:
            raise ConfigError("Kcut must be non-negative", Kcut=self.Kcut)
        table = {}
        for k, value in dict(self.vhat).items():
            k = tuple(int(x) for x in np.atleast_1d(k))
            if len(k) != self.d:
                raise ConfigError("momentum has wrong dimension", k=list(k))
            if max(abs(x) for x in k) > 2 * self.Kcut:
                raise ConfigError("momentum beyond 2*Kcut", k=list(k))
            if value < 0:
                raise ConfigError("vhat must be non-negative", k=list(k))
            table[k] = float(value)
        for k, value in table.items():
            mk = tuple(-x for x in k)
            if abs(table.get(mk, 0.0) - value) > 1e-14 * max(1.0, value):
                raise ConfigError("vhat must be even, vhat(-k) = vhat(k)", k=list(k))
        object.__setattr__(self, "vhat", tuple(sorted(table.items())))

    def coefficient(self, k):
        return dict(self.vhat).get(tuple(k), 0.0)

    def coupling(self, k):
        """The number multiplying the pair kernels at momentum ``k``."""
        return self.coefficient(k) / (2 * np.pi) ** self.d

    @property
    def modes(self):
        r = range(-self.Kcut, self.Kcut + 1)
        return [tuple(k) for k in itertools.product(r, repeat=self.d)]

    @property
    def M(self):
        return (2 * self.Kcut + 1) ** self.d


def torus_from_couplings(d, Kcut, couplings):
    """TorusSpec whose pair kernels carry exactly ``couplings[k]``.

    Closed-form dispersion relations are usually quoted in terms of this
    number rather than the Fourier coefficient.
    """
    scale = (2 * np.pi) ** d
    return TorusSpec(d=d, Kcut=Kcut, vhat=tuple((k, g * scale) for k, g in dict(couplings).items()))


def uniform_torus(d, Kcut, value):
    """Every momentum up to 2*Kcut gets the same coefficient."""
    r = range(-2 * Kcut, 2 * Kcut + 1)
    return TorusSpec(d=d, Kcut=Kcut, vhat=tuple((k, value) for k in itertools.product(r, repeat=d)))


def build_torus_model(spec: TorusSpec, label=None):
    M = spec.M
    need = 16 * M**4
    if need > TENSOR_BUDGET:
        raise ResourceError(
            f"torus tensor with M={M} needs {need / 2**20:.0f} MiB", required_bytes=need, M=M
        )
    modes = np.array(spec.modes, dtype=int).reshape(M, spec.d)
    T = np.diag((modes**2).sum(axis=1).astype(float))
    V = np.zeros((M,) * 4, dtype=complex)
    index = {tuple(k): i for i, k in enumerate(modes)}
    for m, n, p in itertools.product(range(M), repeat=3):
        kq = modes[m] + modes[n] - modes[p]
        q = index.get(tuple(kq))
        if q is not None:
            V[m, n, p, q] = spec.coupling(tuple(modes[m] - modes[p]))
    if label is None:
        label = f"torus d={spec.d} Kcut={spec.Kcut}"
    return make_model(T, V, label=label, positive_type=True, torus=spec)


# ------------------------------------------------------------------- Hartree


def mean_field(V, rho):
    """MF[m, p] = sum_{n,q} V[m,n,p,q] rho[q,n]."""
    return np.einsum("mnpq,qn->mp", V, rho)


def hartree_energy_rho(model, rho):
    return float(np.real(np.trace(model.T @ rho) + 0.5 * np.trace(mean_field(model.V, rho) @ rho)))


def hartree_energy(model, phi):
    return hartree_energy_rho(model, np.outer(phi, phi.conj()))


def fix_phase(v):
    """Rotate so the largest-magnitude entry (first one on ties) is real positive."""
    mags = np.abs(v)
    i = int(np.argmax(mags >= mags.max() * (1 - 1e-9)))
    if mags[i] == 0:
        return v
    return v * (abs(v[i]) / v[i])


@dataclass(frozen=True, eq=False)
class HartreeSolution:
    phi: np.ndarray
    eH: float
    muH: float
    h: np.ndarray
    gH: float
    q: np.ndarray
    iterations: int
    residual: float
    basis: np.ndarray  # columns: eigenvectors of h, column 0 equals phi
    eps: np.ndarray  # eigenvalues of h on the excitation modes
    energy_history: list = field(default_factory=list)

    @property
    def M(self):
        return self.phi.shape[0]


def _scf_from(model, phi, max_iter, switch_tol, damping):
    """Damped self-consistent iteration on unit vectors.

    Each step mixes ``phi`` with the ground vector ``u`` of its mean-field
    operator (phase aligned), ``phi <- normalize((1 - t) phi + t u)``. This is
    a descent direction, so ``t`` starts at ``damping`` and is halved until
    the energy does not increase. Stops at residual ``switch_tol``; Newton
    iterations finish the job.
    """
    T, V = model.T, model.V
    history = [hartree_energy(model, phi)]
    residuals = []
    for it in range(1, max_iter + 1):
        F = T + mean_field(V, np.outer(phi, phi.conj()))
        F = 0.5 * (F + F.conj().T)
        mu = np.real(phi.conj() @ F @ phi)
        res = float(np.linalg.norm(F @ phi - mu * phi))
        residuals.append(res)
        if res <= switch_tol:
            return phi, it, history, residuals
        if it > STALL_WINDOW and res > 0.5 * min(residuals[-STALL_WINDOW:-1]):
            raise ConvergenceError(
                "Hartree iteration stalled", step=it, residual_history=residuals[-20:]
            )
        _, X = np.linalg.eigh(F)
        u = X[:, 0]
        overlap = np.vdot(u, phi)
        if abs(overlap) > 0:
            u = u * (overlap / abs(overlap))
        t = damping
        while True:
            trial = (1 - t) * phi + t * u
            trial = trial / np.linalg.norm(trial)
            E_new = hartree_energy(model, trial)
            if E_new <= history[-1] + 1e-12 * max(1.0, abs(history[-1])) or t < 1e-10:
                break
            t *= 0.5
        if E_new > history[-1] + 1e-12 * max(1.0, abs(history[-1])):
            # no descent at working precision: hand over to Newton
            return phi, it, history, residuals
        phi = trial
        history.append(E_new)
    raise ConvergenceError(
        f"Hartree iteration did not converge in {max_iter} steps",
        residual_history=residuals[-20:],
    )


def _is_aufbau(model, phi):
    """phi is a lowest eigenvector of its own mean-field operator."""
    F = model.T + mean_field(model.V, np.outer(phi, phi.conj()))
    w = np.linalg.eigvalsh(0.5 * (F + F.conj().T))
    mu = np.real(phi.conj() @ F @ phi)
    return mu <= w[0] + 1e-9 * max(1.0, abs(w[0]))


def stationarity_residual(model, phi):
    F = model.T + mean_field(model.V, np.outer(phi, phi.conj()))
    mu = np.real(phi.conj() @ F @ phi)
    return float(np.linalg.norm(F @ phi - mu * phi))


def _newton(model, phi, tol, max_iter=50):
    """Newton iteration for (T + MF(phi) - mu) phi = 0, |phi| = 1.

    The map is not complex-differentiable, so it is written over the reals;
    the gauge direction i*phi is a null direction, handled by least squares.
    """
    T, V = model.T, model.V
    M = model.M
    phi = phi / np.linalg.norm(phi)
    mu = np.real(phi.conj() @ (T + mean_field(V, np.outer(phi, phi.conj()))) @ phi)
    res = stationarity_residual(model, phi)
    for _ in range(max_iter):
        if res <= tol:
            break
        MF = mean_field(V, np.outer(phi, phi.conj()))
        K = np.einsum("mnpr,n,p->mr", V, phi.conj(), phi)
        Y = np.einsum("mspq,p,q->ms", V, phi, phi)
        G = (T + MF) @ phi - mu * phi
        A = T + MF + K - mu * np.eye(M)
        # d G = A dphi + Y conj(dphi) - dmu phi ; d(|phi|^2)/2 = Re<phi, dphi>
        J = np.zeros((2 * M + 1, 2 * M + 1))
        J[:M, :M] = (A + Y).real
        J[:M, M:2 * M] = (-A.imag + Y.imag)
        J[M:2 * M, :M] = (A + Y).imag
        J[M:2 * M, M:2 * M] = (A.real - Y.real)
        J[:M, -1] = -phi.real
        J[M:2 * M, -1] = -phi.imag
        J[-1, :M] = phi.real
        J[-1, M:2 * M] = phi.imag
        rhs = -np.concatenate([G.real, G.imag, [0.5 * (np.vdot(phi, phi).real - 1)]])
        step = np.linalg.lstsq(J, rhs, rcond=1e-13)[0]
        phi = phi + step[:M] + 1j * step[M:2 * M]
        mu = mu + step[-1]
        phi = phi / np.linalg.norm(phi)
        new_res = stationarity_residual(model, phi)
        if new_res > 10 * res and res < 1e-6:
            break
        res = new_res
    return phi, res


def _direct_minimize(model, starts):
    from scipy.optimize import minimize

    M = model.M

    def fun(x):
        z = x[:M] + 1j * x[M:]
        r = np.linalg.norm(z)
        v = z / r
        F = model.T + mean_field(model.V, np.outer(v, v.conj()))
        E = float(np.real(v.conj() @ (model.T + 0.5 * (F - model.T)) @ v))
        g = 2 * (F @ v - np.real(v.conj() @ F @ v) * v) / r
        return E, np.concatenate([g.real, g.imag])

    best = None
    for v in starts:
        out = minimize(fun, np.concatenate([v.real, v.imag]), jac=True, method="BFGS",
                       options={"gtol": 1e-10, "maxiter": 5000})
        if best is None or out.fun < best.fun:
            best = out
    z = best.x[:M] + 1j * best.x[M:]
    return z / np.linalg.norm(z)


def hartree_solve(model: ModelSpec, max_iter=5000, tol=1e-12, damping=0.5, seed=0, random_starts=3):
    """Minimize the Hartree functional by damped self-consistent iteration.

    Each start runs the damped iteration of :func:`_scf_from` and is
    finished by Newton steps on the stationarity equation. Starts are the
    ground state of ``T`` and ``random_starts`` random unit vectors drawn from
    ``seed``; the lowest-energy converged stationary point wins.
    """
    if tol <= 0:
        raise ConfigError("tol must be positive", tol=tol)
    if not 0 < damping <= 1:
        raise ConfigError("damping must lie in (0, 1]", damping=damping)
    M = model.M
    rng = np.random.default_rng(seed)
    starts = [np.linalg.eigh(model.T)[1][:, 0]]
    for _ in range(random_starts):
        v = rng.normal(size=M) + 1j * rng.normal(size=M)
        starts.append(v / np.linalg.norm(v))

    candidates = []
    failures = []
    for v in starts:
        try:
            phi, its, hist, scf_res = _scf_from(model, v, max_iter, max(tol, NEWTON_SWITCH), damping)
            phi, res = _newton(model, phi, tol)
            if res > tol or not _is_aufbau(model, phi):
                # Newton left the basin; iterate closer before retrying
                phi, its2, hist2, scf_res = _scf_from(model, phi if res <= 1e-2 else v, max_iter, max(tol, 1e-9), damping)
                its += its2
                hist = hist + hist2
                phi, res = _newton(model, phi, tol)
        except ConvergenceError as exc:
            failures.append(exc.as_dict())
            continue
        if res > tol or not _is_aufbau(model, phi):
            failures.append({"residual": res, "residual_history": scf_res[-20:]})
            continue
        phi = fix_phase(phi / np.linalg.norm(phi))
        candidates.append((hartree_energy(model, phi), phi, its, res, hist))
    if not candidates:
        # self-consistent iteration typically cycles when the mean-field
        # ground state is degenerate; a direct minimization tells us which
        phi = _direct_minimize(model, starts)
        phi, res = _newton(model, phi, tol)
        if res > tol:
            raise ConvergenceError("no Hartree start converged", failures=failures)
        phi = fix_phase(phi)
        candidates.append((hartree_energy(model, phi), phi, 0, res, []))

    best_E = min(c[0] for c in candidates)
    close = [c for c in candidates if c[0] <= best_E + 1e-10 * max(1.0, abs(best_E))]
    close.sort(key=lambda c: tuple(-np.abs(c[1]).round(10)))
    E, phi, its, res, hist = close[0]
    return _finish(model, phi, its, res, hist)


def _finish(model, phi, iterations, residual, history):
    M = model.M
    MF = mean_field(model.V, np.outer(phi, phi.conj()))
    F = model.T + MF
    F = 0.5 * (F + F.conj().T)
    mu = float(np.real(phi.conj() @ F @ phi))
    h = F - mu * np.eye(M)
    w, X = np.linalg.eigh(h)
    if M > 1:
        gH = float(w[1])
        if gH <= 1e-10:
            raise DegeneracyError(
                "mean-field operator has a degenerate ground state", gap=gH
            )
    else:
        gH = float("inf")
    B = X.copy()
    B[:, 0] = phi
    B, R = np.linalg.qr(B)
    B = B * (np.sign(np.real(np.diag(R))) + (np.real(np.diag(R)) == 0))
    B[:, 0] = phi
    for j in range(1, M):
        B[:, j] = fix_phase(B[:, j])
    eps = np.real(np.einsum("am,ab,bm->m", B.conj(), h, B))[1:]
    q = np.eye(M) - np.outer(phi, phi.conj())
    eH = hartree_energy(model, phi)
    return HartreeSolution(
        phi=phi, eH=eH, muH=mu, h=h, gH=gH, q=q, iterations=iterations,
        residual=residual, basis=B, eps=eps, energy_history=list(history),
    )


# ------------------------------------------------------------------- kernels


@dataclass(frozen=True, eq=False)
class Kernels:
    """Kernels in the eigenbasis of ``h``; excitation indices 1..M-1 of
    that basis are stored at array positions 0..M-2."""

    K: np.ndarray
    K1: np.ndarray
    K2: np.ndarray
    K3: np.ndarray
    K4: np.ndarray
    W: np.ndarray
    eps: np.ndarray
    basis: np.ndarray

    @property
    def L(self):
        return self.K1.shape[0]


def build_kernels(sol: HartreeSolution, model: ModelSpec) -> Kernels:
    B, phi, V = sol.basis, sol.phi, model.V
    if B.shape[0] != model.M:
        raise ConfigError("solution and model dimensions differ")
    K = np.einsum("mnpq,p,n->mq", V, phi, phi.conj())
    Vh = np.einsum("am,bn,abcd,cp,dq->mnpq", B.conj(), B.conj(), V, B, B, optimize=True)
    MFh = Vh[:, 0, :, 0]
    c = MFh[0, 0]
    I = np.eye(model.M)
    W = (
        Vh
        - np.einsum("mp,nq->mnpq", MFh, I)
        - np.einsum("mp,nq->mnpq", I, MFh)
        + c * np.einsum("mp,nq->mnpq", I, I)
    )
    e = slice(1, None)
    return Kernels(
        K=K,
        K1=W[0, e, e, 0].copy(),
        K2=W[e, e, 0, 0].copy(),
        K3=W[e, e, e, 0].copy(),
        K4=W[e, e, e, e].copy(),
        W=W,
        eps=sol.eps.copy(),
        basis=B,
    )
