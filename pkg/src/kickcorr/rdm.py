"""One- and two-body reduced density matrices from CI vectors.

Every matrix here is a Gram matrix of annihilated vectors:
``D[i, j] = <c_i psi | c_j psi>`` and ``D2[i, k, j, l] = <c_k c_i psi | c_l c_j psi>``,
which equals ``<psi| c+_i c+_k c_l c_j |psi>``.  Two-body arrays are indexed
``[i, k, j, l]`` (creation pair, then annihilation pair) so that the composite
``(i k) x (j l)`` matrix is Hermitian.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ci import CIVector
from .detspace import annihilation_operators

__all__ = [
    "OneRDM",
    "TwoRDMBlock",
    "NaturalOrbitals",
    "SpinDensities",
    "one_rdm",
    "two_rdm_block",
    "two_rdm_blocks",
    "natural_orbitals",
    "spin_squared",
    "trace_down",
    "spin_densities",
    "spin_orbital_rdms",
    "energy_from_rdms",
    "NORM_TOL",
]

NORM_TOL = 1e-8
SPIN_TOL = 1e-10


@dataclass(frozen=True)
class OneRDM:
    m: np.ndarray
    channel: str
    nelec: int

    @property
    def norb(self) -> int:
        return self.m.shape[0]


@dataclass(frozen=True)
class TwoRDMBlock:
    kind: str
    t: np.ndarray
    na: int
    nb: int

    @property
    def norb(self) -> int:
        return self.t.shape[0]

    @property
    def matrix(self) -> np.ndarray:
        n = self.norb
        return self.t.reshape(n * n, n * n)

    @property
    def npairs(self) -> int:
        """Expected trace: ordered same-spin pairs or alpha-beta pairs."""
        if self.kind == "AA":
            return self.na * (self.na - 1)
        if self.kind == "BB":
            return self.nb * (self.nb - 1)
        return self.na * self.nb


@dataclass(frozen=True)
class NaturalOrbitals:
    f: np.ndarray
    u: np.ndarray


def _check_norm(c: CIVector):
    nrm = c.norm()
    if abs(nrm - 1.0) > NORM_TOL:
        raise ValueError(f"CI vector is not normalized (norm {nrm:.12g})")


def _as_real(m: np.ndarray) -> np.ndarray:
    if np.iscomplexobj(m) and np.abs(m.imag).max(initial=0.0) < 1e-14:
        return m.real.copy()
    return m


def _annihilated_alpha(c: CIVector, C: np.ndarray, ne: int) -> np.ndarray:
    """``[c_j C]`` for all ``j``; shape ``(norb, nstr(ne-1), ncols)`` acting on rows."""
    n = c.space.norb
    ops = annihilation_operators(n, ne)
    return np.stack([op @ C for op in ops])


def _gram(V: np.ndarray) -> np.ndarray:
    M = V.reshape(V.shape[0], -1)
    return M.conj() @ M.T


def one_rdm(c: CIVector, channel: str = "a", check_spin: bool = False) -> OneRDM:
    """Spin-channel 1-RDM ``D[i, j] = <c+_i c_j>``.

    With ``check_spin`` the other channel is built as well and must agree
    within 1e-10 (true for the alpha/beta-symmetric states treated here).
    """
    _check_norm(c)
    sp = c.space
    ne = sp.count(channel)
    if ne == 0:
        m = np.zeros((sp.norb, sp.norb))
    elif channel == "a":
        m = _gram(_annihilated_alpha(c, c.amp, ne))
    else:
        m = _gram(_annihilated_alpha(c, c.amp.T, ne))
    d = OneRDM(_as_real(m), channel, ne)
    if check_spin:
        other = one_rdm(c, "b" if channel == "a" else "a")
        if np.abs(other.m - d.m).max() > SPIN_TOL:
            raise ValueError("alpha and beta 1-RDMs differ; state is not spin symmetric")
    return d


def two_rdm_block(c: CIVector, kind: str) -> TwoRDMBlock:
    """One spin block ``AA``, ``BB`` or ``AB`` of the 2-RDM."""
    _check_norm(c)
    sp = c.space
    n, na, nb = sp.norb, sp.na, sp.nb
    kind = kind.upper()
    if kind in ("AA", "BB"):
        ne = na if kind == "AA" else nb
        C = c.amp if kind == "AA" else c.amp.T
        if ne < 2:
            return TwoRDMBlock(kind, np.zeros((n,) * 4), na, nb)
        W = _annihilated_alpha(c, C, ne)                      # [j, I-1, cols]
        ops = annihilation_operators(n, ne - 1)
        V = np.stack([np.stack([op @ W[j] for op in ops]) for j in range(n)])  # [j, l, ...]
    elif kind == "AB":
        if na < 1 or nb < 1:
            return TwoRDMBlock(kind, np.zeros((n,) * 4), na, nb)
        W = _annihilated_alpha(c, c.amp, na)                  # [j, Ia-1, Ib]
        ops = annihilation_operators(n, nb)
        # beta annihilation passes na-1 alpha creators
        sign = -1.0 if (na - 1) % 2 else 1.0
        V = sign * np.stack([np.stack([W[j] @ op.T for op in ops]) for j in range(n)])
    else:
        raise ValueError(f"unknown block kind {kind!r}")
    D = _gram(V.reshape(n * n, *V.shape[2:]))
    return TwoRDMBlock(kind, _as_real(D).reshape((n,) * 4), na, nb)


def two_rdm_blocks(c: CIVector) -> tuple[TwoRDMBlock, TwoRDMBlock]:
    """The ``AA`` and ``AB`` blocks."""
    return two_rdm_block(c, "AA"), two_rdm_block(c, "AB")


def natural_orbitals(d: OneRDM, degeneracy_tol: float = 1e-10) -> NaturalOrbitals:
    """Occupations in descending order and the unitary ``u`` with ``u^H D u = diag(f)``.

    Inside a degenerate cluster the basis is rebuilt from the cluster projector
    by Gram-Schmidt over the unit vectors, so the result does not depend on the
    arbitrary basis returned by the eigensolver; vectors are then ordered by the
    position of their largest component, which is made real and positive.
    """
    w, v = np.linalg.eigh(d.m)
    w, v = w[::-1], v[:, ::-1]
    n = len(w)
    cols = []
    start = 0
    while start < n:
        stop = start + 1
        while stop < n and abs(w[stop] - w[start]) <= degeneracy_tol:
            stop += 1
        block = v[:, start:stop]
        if stop - start > 1:
            P = block @ block.conj().T
            basis = []
            for e in np.eye(n):
                x = P @ e
                for b in basis:
                    x = x - b * (b.conj() @ x)
                nx = np.linalg.norm(x)
                if nx > 1e-6:
                    basis.append(x / nx)
                if len(basis) == stop - start:
                    break
            basis.sort(key=lambda x: int(np.argmax(np.abs(x) > np.abs(x).max() - 1e-12)))
            block = np.column_stack(basis)
        cols.append(block)
        start = stop
    u = np.hstack(cols)
    for k in range(n):
        j = int(np.argmax(np.abs(u[:, k]) > np.abs(u[:, k]).max() - 1e-12))
        u[:, k] *= abs(u[j, k]) / u[j, k]
    return NaturalOrbitals(w.copy(), _as_real(u))


def spin_squared(ab: TwoRDMBlock, nb: int | None = None, na: int | None = None) -> float:
    """``<S^2> = N_beta - sum_ij D2[i, jbar; j, ibar] + Sz^2 + Sz``."""
    nb = ab.nb if nb is None else nb
    na = ab.na if na is None else na
    sz = 0.5 * (na - nb)
    val = nb - np.einsum("ijji->", ab.t) + sz * sz + sz
    return float(np.real(val))


def trace_down(b: TwoRDMBlock, channel: str = "a") -> OneRDM:
    """Recover a 1-RDM by partial trace of a 2-RDM block.

    ``AA``/``BB``: ``sum_k D2[i, k, j, k] / (N - 1)``.  ``AB``: tracing the beta
    pair gives the alpha 1-RDM (``/ N_beta``), tracing the alpha pair gives beta.
    """
    if b.kind in ("AA", "BB"):
        ne = b.na if b.kind == "AA" else b.nb
        if ne < 2:
            raise ValueError(f"{b.kind} trace-down needs at least two electrons in the channel")
        return OneRDM(np.einsum("ikjk->ij", b.t) / (ne - 1), "a" if b.kind == "AA" else "b", ne)
    if channel == "a":
        if b.nb < 1:
            raise ValueError("AB trace-down to alpha needs a beta electron")
        return OneRDM(np.einsum("ikjk->ij", b.t) / b.nb, "a", b.na)
    if b.na < 1:
        raise ValueError("AB trace-down to beta needs an alpha electron")
    return OneRDM(np.einsum("kikj->ij", b.t) / b.na, "b", b.nb)


@dataclass(frozen=True)
class SpinDensities:
    """All spin-resolved 1- and 2-RDM blocks of one state."""

    d1a: OneRDM
    d1b: OneRDM
    aa: TwoRDMBlock
    bb: TwoRDMBlock
    ab: TwoRDMBlock

    @property
    def na(self) -> int:
        return self.aa.na

    @property
    def nb(self) -> int:
        return self.aa.nb

    @property
    def norb(self) -> int:
        return self.d1a.norb


def spin_densities(c: CIVector) -> SpinDensities:
    return SpinDensities(one_rdm(c, "a"), one_rdm(c, "b"),
                         two_rdm_block(c, "AA"), two_rdm_block(c, "BB"), two_rdm_block(c, "AB"))


def spin_orbital_rdms(dens: SpinDensities) -> tuple[np.ndarray, np.ndarray]:
    """1-RDM ``(2n, 2n)`` and 2-RDM ``(2n, 2n, 2n, 2n)`` over spin orbitals (alpha first)."""
    n = dens.norb
    d1 = np.zeros((2 * n, 2 * n), dtype=np.result_type(dens.d1a.m, dens.d1b.m))
    d1[:n, :n] = dens.d1a.m
    d1[n:, n:] = dens.d1b.m
    ab = dens.ab.t
    d2 = np.zeros((2 * n,) * 4, dtype=np.result_type(dens.aa.t, dens.bb.t, ab))
    a, b = slice(0, n), slice(n, 2 * n)
    d2[a, a, a, a] = dens.aa.t
    d2[b, b, b, b] = dens.bb.t
    d2[a, b, a, b] = ab
    d2[b, a, b, a] = ab.transpose(1, 0, 3, 2)
    d2[a, b, b, a] = -ab.transpose(0, 1, 3, 2)
    d2[b, a, a, b] = -ab.transpose(1, 0, 2, 3)
    return d1, d2


def energy_from_rdms(H, dens: SpinDensities) -> float:
    """Energy from the integrals contracted with the spin-resolved RDMs."""
    g = H.eri
    e1 = np.einsum("pq,pq->", H.h, dens.d1a.m + dens.d1b.m)
    same = dens.aa.t + dens.bb.t
    e2 = 0.5 * np.einsum("pqrs,prqs->", g, same) + np.einsum("pqrs,prqs->", g, dens.ab.t)
    return float(np.real(H.e_core + e1 + e2))
