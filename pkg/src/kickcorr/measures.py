"""Cumulant matrices, Frobenius norms, von Neumann entropies, Carlen-Lieb slack.

Logarithms are natural throughout.  The second cumulant is
``Delta2 = D2 / 2 - D1 ^ D1`` with the wedge product
``(A ^ B)[i,k,j,l] = (A[i,j] B[k,l] - A[i,l] B[k,j]) / 2``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .rdm import OneRDM, SpinDensities, TwoRDMBlock, spin_orbital_rdms

__all__ = [
    "CumulantBlock",
    "EntropyReport",
    "InvalidDensityError",
    "cumulant_block",
    "cumulant_blocks",
    "frobenius_norm",
    "pair_entropy",
    "one_body_entropy",
    "carlen_lieb_check",
    "entropy_report",
    "spectrum_entropy",
    "EIG_FLOOR",
]

EIG_FLOOR = 1e-14
NEGATIVE_TOL = 1e-8


class InvalidDensityError(ValueError):
    """A density matrix has an eigenvalue below ``-NEGATIVE_TOL`` or no weight at all."""


@dataclass(frozen=True)
class CumulantBlock:
    kind: str
    t: np.ndarray

    @property
    def matrix(self) -> np.ndarray:
        n = self.t.shape[0]
        return self.t.reshape(n * n, n * n)


def cumulant_block(block: TwoRDMBlock, d1: OneRDM, d1b: OneRDM | None = None) -> CumulantBlock:
    """Connected part of one 2-RDM block.

    Same-spin blocks subtract the antisymmetrized product of ``d1``; the ``AB``
    block has no exchange term because the 1-RDM has no alpha-beta elements, and
    uses ``d1`` for the alpha pair and ``d1b`` (default ``d1``) for the beta pair.
    """
    a = d1.m
    n = a.shape[0]
    if block.t.shape != (n,) * 4:
        raise ValueError(f"block shape {block.t.shape} does not match a {n}-orbital 1-RDM")
    if block.kind in ("AA", "BB"):
        wedge = 0.5 * (np.einsum("ij,kl->ikjl", a, a) - np.einsum("il,kj->ikjl", a, a))
    else:
        b = a if d1b is None else d1b.m
        if b.shape != a.shape:
            raise ValueError("alpha and beta 1-RDMs differ in size")
        wedge = 0.5 * np.einsum("ij,kl->ikjl", a, b)
    return CumulantBlock(block.kind, 0.5 * block.t - wedge)


def cumulant_blocks(d1: OneRDM, aa: TwoRDMBlock, ab: TwoRDMBlock,
                    d1b: OneRDM | None = None) -> tuple[CumulantBlock, CumulantBlock]:
    return cumulant_block(aa, d1), cumulant_block(ab, d1, d1b)


def frobenius_norm(b) -> float:
    t = b.t if hasattr(b, "t") else np.asarray(b)
    return float(np.sqrt(np.sum(np.abs(t) ** 2)))


def spectrum_entropy(w: np.ndarray) -> float:
    """``-sum w ln w`` over a normalized spectrum, ignoring ``w <= EIG_FLOOR``."""
    if w.min(initial=0.0) < -NEGATIVE_TOL:
        raise InvalidDensityError(f"eigenvalue {w.min():.3e} below -{NEGATIVE_TOL}")
    w = w[w > EIG_FLOOR]
    return max(0.0, float(-np.sum(w * np.log(w))))


def _normalized_spectrum(m: np.ndarray, trace: float) -> np.ndarray:
    if trace <= 0 or abs(np.trace(m).real) < EIG_FLOOR:
        raise InvalidDensityError("density matrix has zero trace; entropy undefined")
    return np.linalg.eigvalsh(0.5 * (m + m.conj().T)) / trace


def pair_entropy(b: TwoRDMBlock) -> float:
    """Entropy of a 2-RDM block normalized to unit trace."""
    return spectrum_entropy(_normalized_spectrum(b.matrix, b.npairs))


def one_body_entropy(d: OneRDM) -> tuple[float, float]:
    """``(entropy, purity)`` of the 1-RDM normalized by its electron count."""
    w = _normalized_spectrum(d.m, d.nelec)
    return spectrum_entropy(w), float(np.sum(w * w))


def carlen_lieb_check(s1: float, s12: float, purity: float) -> tuple[float, float]:
    """Slack in ``2 S1 - S12 >= ln(2/(1 - Tr rho1^2)) >= ln(2/(1 - exp(-S1)))``."""
    if purity >= 1.0 - 1e-14:
        raise InvalidDensityError("purity is 1 (single occupied orbital); bound undefined")
    gap1 = 2.0 * s1 - s12 - math.log(2.0 / (1.0 - purity))
    gap2 = 2.0 * s1 - s12 - math.log(2.0 / (1.0 - math.exp(-s1)))
    return gap1, gap2


@dataclass(frozen=True)
class EntropyReport:
    """Entropy measures of one state.

    ``gap1``/``gap2`` use the same-spin (``AA``) pair state, the fermionic
    channel the bounds apply to.  ``gap1_ab``/``gap2_ab`` are the same
    expressions evaluated on the alpha-beta block; that pair state is not
    antisymmetric, so these may be negative.  ``*_so`` quantities use the full
    spin-orbital 1- and 2-RDM.  ``floor_*`` is ``S12 - 2 ln N_alpha``.
    Fields are ``None`` when the channel holds too few electrons.
    """

    s1: float | None
    purity: float | None
    s_aa: float | None
    s_ab: float | None
    s0_aa: float | None
    s0_ab: float | None
    gap1: float | None
    gap2: float | None
    gap1_ab: float | None
    gap2_ab: float | None
    floor_aa: float | None
    floor_ab: float | None
    s1_so: float | None
    s_so: float | None
    gap1_so: float | None
    gap2_so: float | None

    def as_dict(self) -> dict:
        return asdict(self)


def entropy_report(dens: SpinDensities) -> EntropyReport:
    na, nb = dens.na, dens.nb
    s1 = purity = s_aa = s_ab = s0_aa = s0_ab = None
    gap1 = gap2 = gap1_ab = gap2_ab = floor_aa = floor_ab = None
    if na >= 1:
        s1, purity = one_body_entropy(dens.d1a)
    if na >= 2:
        s_aa = pair_entropy(dens.aa)
        s0_aa = math.log(na * (na - 1) / 2)
        floor_aa = s_aa - 2 * math.log(na)
        gap1, gap2 = carlen_lieb_check(s1, s_aa, purity)
    if na >= 1 and nb >= 1:
        s_ab = pair_entropy(dens.ab)
        s0_ab = math.log(na * nb)
        floor_ab = s_ab - 2 * math.log(na)
        if purity < 1.0 - 1e-14:
            gap1_ab, gap2_ab = carlen_lieb_check(s1, s_ab, purity)

    s1_so = s_so = gap1_so = gap2_so = None
    ntot = na + nb
    if ntot >= 2:
        d1, d2 = spin_orbital_rdms(dens)
        m = 2 * dens.norb
        w1 = _normalized_spectrum(d1, ntot)
        s1_so, purity_so = spectrum_entropy(w1), float(np.sum(w1 * w1))
        s_so = spectrum_entropy(_normalized_spectrum(d2.reshape(m * m, m * m), ntot * (ntot - 1)))
        gap1_so, gap2_so = carlen_lieb_check(s1_so, s_so, purity_so)
    return EntropyReport(s1, purity, s_aa, s_ab, s0_aa, s0_ab, gap1, gap2, gap1_ab, gap2_ab,
                         floor_aa, floor_ab, s1_so, s_so, gap1_so, gap2_so)
