"""Hamiltonian and one-body actions on CI vectors, Davidson ground-state solver."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
import scipy.linalg

from .detspace import DetSpace, to_bits
from .integrals import IntegralSet, OneBodyOperator

__all__ = [
    "CIVector",
    "SolveOptions",
    "GroundState",
    "ConvergenceError",
    "sigma",
    "hamiltonian_diagonal",
    "solve_ground",
    "solve_lowest",
    "davidson",
    "dense_hamiltonian",
    "dense_one_body",
    "dense_ground_energies",
    "apply_one_body",
    "DENSE_CAP",
]

log = logging.getLogger(__name__)

DENSE_CAP = 5000


class ConvergenceError(RuntimeError):
    def __init__(self, msg, residual=np.inf, iterations=0):
        super().__init__(msg)
        self.residual = residual
        self.iterations = iterations


@dataclass
class CIVector:
    space: DetSpace
    amp: np.ndarray = field(repr=False)

    def __post_init__(self):
        amp = np.asarray(self.amp, dtype=complex)
        if amp.shape != self.space.shape:
            amp = amp.reshape(self.space.shape)
        if not np.all(np.isfinite(amp)):
            raise ValueError("CI amplitudes must be finite")
        self.amp = amp

    @classmethod
    def zeros(cls, space: DetSpace) -> "CIVector":
        return cls(space, np.zeros(space.shape, dtype=complex))

    @classmethod
    def determinant(cls, space: DetSpace, astring, bstring) -> "CIVector":
        """Unit vector on the determinant with the given occupied orbitals."""
        from .detspace import string_address

        c = cls.zeros(space)
        c.amp[string_address(tuple(astring), space.norb, space.na),
              string_address(tuple(bstring), space.norb, space.nb)] = 1.0
        return c

    @classmethod
    def random(cls, space: DetSpace, rng: np.random.Generator, complex_amp=True,
               spin_symmetric=False) -> "CIVector":
        """Normalized random vector; ``spin_symmetric`` makes the alpha/beta grid symmetric."""
        amp = rng.standard_normal(space.shape)
        if complex_amp:
            amp = amp + 1j * rng.standard_normal(space.shape)
        if spin_symmetric:
            if space.na != space.nb:
                raise ValueError("spin-symmetric vectors need na == nb")
            amp = amp + amp.T
        return cls(space, amp).normalized()

    def norm(self) -> float:
        return float(np.linalg.norm(self.amp))

    def normalized(self) -> "CIVector":
        return CIVector(self.space, self.amp / self.norm())

    def vdot(self, other: "CIVector") -> complex:
        return complex(np.vdot(self.amp, other.amp))

    def copy(self) -> "CIVector":
        return CIVector(self.space, self.amp.copy())

    def __add__(self, other):
        return CIVector(self.space, self.amp + other.amp)

    def __sub__(self, other):
        return CIVector(self.space, self.amp - other.amp)

    def __mul__(self, s):
        return CIVector(self.space, self.amp * s)

    __rmul__ = __mul__


@dataclass(frozen=True)
class SolveOptions:
    tol: float = 1e-8
    max_iter: int = 200
    max_subspace: int = 20
    seed: int = 0

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.max_subspace < 2:
            raise ValueError("max_subspace must be >= 2")


@dataclass
class GroundState:
    energy: float
    vector: CIVector
    residual: float
    iterations: int

    def __iter__(self):
        yield self.energy
        yield self.vector


def _check_space(H: IntegralSet, space: DetSpace):
    if H.norb != space.norb:
        raise ValueError(f"integrals have {H.norb} orbitals, space has {space.norb}")


# ---------------------------------------------------------------------------
# sigma


def _effective_one_body(H: IntegralSet) -> np.ndarray:
    # h_ps - 1/2 sum_q (pq|qs) absorbs the reordering E_pq E_qs
    return H.h - 0.5 * np.einsum("pqqs->ps", H.eri)


def _one_body_action(space: DetSpace, a: np.ndarray, C: np.ndarray) -> np.ndarray:
    Aa = space.one_body_matrix("a", a)
    Ab = space.one_body_matrix("b", a)
    return Aa @ C + (Ab @ C.T).T


def _sigma_array(H: IntegralSet, space: DetSpace, C: np.ndarray) -> np.ndarray:
    n = space.norb
    nA, nB = space.shape
    out = _one_body_action(space, _effective_one_body(H), C)
    out = out + H.e_core * C
    if not np.any(H.eri):
        return out
    va, ha = space.stacked_excitations("a")
    vb, hb = space.stacked_excitations("b")
    # D[rs] = E_rs C, both spin channels
    D = (va @ C).reshape(n * n, nA, nB)
    D += (vb @ C.T).reshape(n * n, nB, nA).transpose(0, 2, 1)
    G = 0.5 * (H.eri.reshape(n * n, n * n) @ D.reshape(n * n, -1)).reshape(n * n, nA, nB)
    out = out + ha @ G.reshape(n * n * nA, nB)
    out = out + (hb @ G.transpose(0, 2, 1).reshape(n * n * nB, nA)).T
    return out


def sigma(H: IntegralSet, space: DetSpace, c: CIVector) -> CIVector:
    """``H c`` including the core energy."""
    _check_space(H, space)
    if c.amp.shape != space.shape:
        raise ValueError(f"vector shape {c.amp.shape} does not match space {space.shape}")
    return CIVector(space, _sigma_array(H, space, c.amp))


def hamiltonian_diagonal(H: IntegralSet, space: DetSpace) -> np.ndarray:
    """Diagonal of H on the ``(alpha, beta)`` grid."""
    _check_space(H, space)
    occa, occb = space.occupations
    hd = np.diag(H.h)
    J = np.einsum("ppqq->pq", H.eri)
    K = np.einsum("pqqp->pq", H.eri)
    ea = occa @ hd + 0.5 * np.einsum("ip,pq,iq->i", occa, J - K, occa)
    eb = occb @ hd + 0.5 * np.einsum("ip,pq,iq->i", occb, J - K, occb)
    eab = occa @ J @ occb.T
    return ea[:, None] + eb[None, :] + eab + H.e_core


# ---------------------------------------------------------------------------
# Davidson


def _orthonormalize_against(t, V, extra):
    for _ in range(2):
        if V.shape[1]:
            t = t - V @ (V.T @ t)
        for u in extra:
            t = t - u * (u @ t)
    return t


def davidson(matvec, diag, guesses, nroots=1, tol=1e-8, max_iter=200, max_subspace=20, seed=0):
    """Lowest ``nroots`` eigenpairs of a real symmetric operator.

    ``matvec`` maps an ``(n, k)`` block to ``(n, k)``; ``diag`` is the diagonal used as
    preconditioner.  Returns ``(eigenvalues, eigenvectors, residual norms, iterations)``.
    """
    n = diag.size
    nroots = min(nroots, n)
    max_subspace = max(max_subspace, 2 * nroots)
    rng = np.random.default_rng(seed)
    V, _ = np.linalg.qr(np.asarray(guesses, dtype=float).reshape(n, -1))
    AV = matvec(V)
    best = np.inf
    X_prev = None
    for it in range(1, max_iter + 1):
        Hs = V.T @ AV
        theta, y = np.linalg.eigh(0.5 * (Hs + Hs.T))
        theta, y = theta[:nroots], y[:, :nroots]
        X, AX = V @ y, AV @ y
        R = AX - X * theta
        rnorm = np.linalg.norm(R, axis=0)
        best = min(best, float(rnorm.max()))
        log.debug("davidson iter %d  theta=%s  residual=%.3e", it, theta, rnorm.max())
        if np.all(rnorm <= tol) or V.shape[1] >= n:
            return theta, X, rnorm, it
        todo = [k for k in range(nroots) if rnorm[k] > tol]
        if V.shape[1] + len(todo) > max_subspace:
            # thick restart: current and previous Ritz vectors span the collapsed space
            keep = X if X_prev is None else np.hstack([X, X_prev])
            Q, rr = np.linalg.qr(keep)
            Q = Q[:, np.abs(np.diag(rr)) > 1e-8 * np.abs(rr[0, 0])]
            coef = np.linalg.lstsq(V, Q, rcond=None)[0]
            V, AV = Q, AV @ coef
        X_prev = X
        new = []
        for k in todo:
            denom = theta[k] - diag
            denom = np.where(np.abs(denom) < 1e-8, np.copysign(1e-8, denom), denom)
            for t in (R[:, k] / denom, R[:, k]):
                t = _orthonormalize_against(t / np.linalg.norm(t), V, new)
                nt = np.linalg.norm(t)
                if nt > 1e-3:
                    new.append(t / nt)
                    break
        if not new:
            t = _orthonormalize_against(rng.standard_normal(n), V, [])
            new.append(t / np.linalg.norm(t))
        T = np.column_stack(new)
        V = np.hstack([V, T])
        AV = np.hstack([AV, matvec(T)])
    raise ConvergenceError(f"Davidson did not converge in {max_iter} iterations "
                           f"(best residual {best:.3e})", best, max_iter)


def _start_guesses(diag: np.ndarray, nroots: int, seed: int) -> np.ndarray:
    # unit vectors on the lowest-diagonal determinants, with a small seeded admixture
    # so that no symmetry sector is excluded from the search
    n = diag.size
    order = np.argsort(diag, kind="stable")[:nroots]
    rng = np.random.default_rng(seed)
    G = np.zeros((n, len(order)))
    G[order, np.arange(len(order))] = 1.0
    if n > len(order):
        noise = rng.standard_normal(G.shape)
        G += 1e-2 * noise / np.linalg.norm(noise, axis=0)
    return G


def _fix_phase(amp: np.ndarray) -> np.ndarray:
    flat = amp.ravel()
    k = int(np.argmax(np.abs(flat)))
    if abs(flat[k]) == 0:
        return amp
    return amp * (abs(flat[k]) / flat[k])


def solve_lowest(H: IntegralSet, space: DetSpace, nroots=1, opts: SolveOptions | None = None):
    """Lowest ``nroots`` eigenpairs as a list of :class:`GroundState`."""
    opts = opts or SolveOptions()
    _check_space(H, space)
    if space.dimension == 0:
        raise ValueError("empty determinant space")
    shape = space.shape
    diag = hamiltonian_diagonal(H, space).ravel()

    def matvec(X):
        cols = [_sigma_array(H, space, x.reshape(shape)).ravel() for x in X.T]
        return np.column_stack(cols)

    theta, X, rnorm, it = davidson(matvec, diag, _start_guesses(diag, nroots, opts.seed),
                                   nroots=nroots, tol=opts.tol, max_iter=opts.max_iter,
                                   max_subspace=opts.max_subspace, seed=opts.seed)
    out = []
    for k in range(len(theta)):
        amp = _fix_phase(X[:, k].reshape(shape) / np.linalg.norm(X[:, k]))
        out.append(GroundState(float(theta[k]), CIVector(space, amp), float(rnorm[k]), it))
    return out


def solve_ground(H: IntegralSet, space: DetSpace | None = None,
                 opts: SolveOptions | None = None) -> GroundState:
    """Lowest eigenpair of ``H`` (core energy included).

    The returned vector is normalized, and its largest-magnitude amplitude is
    real and positive.  Raises :class:`ConvergenceError` when the residual stays
    above ``opts.tol``.
    """
    space = space or DetSpace.from_integrals(H)
    return solve_lowest(H, space, 1, opts)[0]


# ---------------------------------------------------------------------------
# dense oracles (Slater-Condon rules on spin-orbital bit strings)


def _determinants(space: DetSpace) -> list[int]:
    shift = space.norb
    return [to_bits(a) | (to_bits(b) << shift) for a in space.astrings for b in space.bstrings]


def _apply_ops(bits: int, ops) -> tuple[int, int] | None:
    """Apply ``(kind, orbital)`` operators right to left; kind is +1 create, -1 annihilate."""
    sign = 1
    for kind, p in reversed(ops):
        mask = 1 << p
        if (kind < 0) != bool(bits & mask):
            return None
        if bin(bits & (mask - 1)).count("1") % 2:
            sign = -sign
        bits ^= mask
    return sign, bits


def _check_cap(space: DetSpace, cap: int):
    if space.dimension > cap:
        raise ValueError(f"dimension {space.dimension} exceeds the dense cap {cap}")


def dense_hamiltonian(H: IntegralSet, space: DetSpace | None = None, cap: int = DENSE_CAP) -> np.ndarray:
    """Explicit Hamiltonian matrix over determinants, alpha-major row ordering."""
    space = space or DetSpace.from_integrals(H)
    _check_space(H, space)
    _check_cap(space, cap)
    n = space.norb
    dets = _determinants(space)
    index = {d: k for k, d in enumerate(dets)}
    spat = lambda so: so % n  # noqa: E731
    spin = lambda so: so // n  # noqa: E731
    h, g = H.h, H.eri

    def anti(p, q, r, s):
        # <pq||rs> over spin orbitals, chemist integrals underneath
        v = 0.0
        if spin(p) == spin(r) and spin(q) == spin(s):
            v += g[spat(p), spat(r), spat(q), spat(s)]
        if spin(p) == spin(s) and spin(q) == spin(r):
            v -= g[spat(p), spat(s), spat(q), spat(r)]
        return v

    M = np.zeros((len(dets), len(dets)))
    for k, d in enumerate(dets):
        occ = [p for p in range(2 * n) if d >> p & 1]
        vir = [p for p in range(2 * n) if not d >> p & 1]
        e = H.e_core + sum(h[spat(i), spat(i)] for i in occ)
        e += 0.5 * sum(anti(i, j, i, j) for i in occ for j in occ)
        M[k, k] = e
        for i in occ:
            for a in vir:
                if spin(a) != spin(i):
                    continue
                sign, d2 = _apply_ops(d, [(1, a), (-1, i)])
                k2 = index[d2]
                if k2 <= k:
                    continue
                v = h[spat(a), spat(i)] + sum(anti(a, j, i, j) for j in occ)
                M[k2, k] = M[k, k2] = sign * v
        for i, j in combinations(occ, 2):
            for a, b in combinations(vir, 2):
                if sorted((spin(a), spin(b))) != sorted((spin(i), spin(j))):
                    continue
                sign, d2 = _apply_ops(d, [(1, a), (1, b), (-1, j), (-1, i)])
                k2 = index[d2]
                if k2 <= k:
                    continue
                M[k2, k] = M[k, k2] = sign * anti(a, b, i, j)
    return M


def dense_one_body(A, space: DetSpace, cap: int = DENSE_CAP) -> np.ndarray:
    """Explicit matrix of the spin-summed one-body operator ``sum_pq A_pq E_pq``."""
    A = A.matrix if isinstance(A, OneBodyOperator) else np.asarray(A)
    _check_cap(space, cap)
    n = space.norb
    dets = _determinants(space)
    index = {d: k for k, d in enumerate(dets)}
    M = np.zeros((len(dets), len(dets)), dtype=complex if np.iscomplexobj(A) else float)
    for k, d in enumerate(dets):
        occ = [p for p in range(2 * n) if d >> p & 1]
        for i in occ:
            for a in range(2 * n):
                if a // n != i // n:
                    continue
                res = _apply_ops(d, [(1, a), (-1, i)])
                if res is None:
                    continue
                sign, d2 = res
                M[index[d2], k] += sign * A[a % n, i % n]
    return M


# ---------------------------------------------------------------------------
# one-body action


def apply_one_body(A, c: CIVector) -> CIVector:
    """``(sum_pq A_pq sum_sigma c+_{p sigma} c_{q sigma}) c``."""
    A = A.matrix if isinstance(A, OneBodyOperator) else np.asarray(A)
    if A.shape != (c.space.norb,) * 2:
        raise ValueError(f"operator shape {A.shape} does not match norb={c.space.norb}")
    return CIVector(c.space, _one_body_action(c.space, A, c.amp))


def dense_ground_energies(H: IntegralSet, space: DetSpace | None = None, k: int = 1) -> np.ndarray:
    """Lowest ``k`` eigenvalues of the dense Hamiltonian."""
    M = dense_hamiltonian(H, space)
    return scipy.linalg.eigh(M, eigvals_only=True, subset_by_index=[0, min(k, len(M)) - 1])
