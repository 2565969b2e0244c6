"""Closed-form maximal-spin state of six singly occupied orbitals (dissociated H6).

Six electrons (three alpha, three beta) sit one per orbital, and every
determinant carries the same coefficient when written in orbital order
``a+_{1 s1} a+_{2 s2} ... a+_{6 s6}``.  That is the ``S = 3, M_S = 0``
member of the 20-fold degenerate manifold.  Reordering each determinant
into the alpha-block-first convention used by :mod:`kickcorr.detspace`
introduces a sign per determinant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .ci import CIVector
from .detspace import DetSpace, string_address

__all__ = ["Kappa7Reference", "build_kappa7_state", "kappa7_reference", "KAPPA7_SPACE"]

KAPPA7_SPACE = (6, 3, 3)
NORB = 6


def _reorder_sign(alpha, beta) -> int:
    # moving each beta creator past the alpha creators of higher orbitals
    inversions = sum(1 for b in beta for a in alpha if a > b)
    return -1 if inversions % 2 else 1


def build_kappa7_state(space: DetSpace | None = None) -> CIVector:
    """The 20-determinant ``S = 3`` state with alpha and beta strings complementary."""
    space = space or DetSpace(*KAPPA7_SPACE)
    if (space.norb, space.na, space.nb) != KAPPA7_SPACE:
        raise ValueError(f"kappa=7 state needs a (6, 3, 3) space, got "
                         f"({space.norb}, {space.na}, {space.nb})")
    c = CIVector.zeros(space)
    for a in space.astrings:
        b = tuple(o for o in range(NORB) if o not in a)
        c.amp[string_address(a, NORB, 3), string_address(b, NORB, 3)] = _reorder_sign(a, b)
    return c.normalized()


@dataclass(frozen=True)
class Kappa7Reference:
    one_rdm: np.ndarray
    two_rdm_aa: np.ndarray
    two_rdm_ab: np.ndarray
    cumulant_aa: np.ndarray
    cumulant_ab: np.ndarray
    norm_aa: float
    norm_ab: float
    s_aa: float
    s_ab: float
    s1: float
    purity: float
    s_squared: float


def _rational_tensors():
    F = Fraction
    d1 = [[F(1, 2) if i == j else F(0) for j in range(NORB)] for i in range(NORB)]
    shape = (NORB,) * 4
    aa = np.full(shape, F(0), dtype=object)
    ab = np.full(shape, F(0), dtype=object)
    for i in range(NORB):
        for j in range(NORB):
            if i != j:
                aa[i, j, i, j] = F(4, 20)
                aa[i, j, j, i] = -F(4, 20)
                ab[i, j, i, j] = F(6, 20)
                ab[i, j, j, i] = -F(6, 20)
    cum_aa = np.full(shape, F(0), dtype=object)
    cum_ab = np.full(shape, F(0), dtype=object)
    for i in range(NORB):
        for j in range(NORB):
            delta = 1 if i == j else 0
            if i != j:
                cum_aa[i, j, i, j] = -F(1, 40)
                cum_aa[i, j, j, i] = F(1, 40)
            cum_ab[i, j, i, j] = F(1, 40) - F(6, 40) * delta
            cum_ab[i, j, j, i] = -F(6, 40) + F(1, 40) * delta
    return d1, aa, ab, cum_aa, cum_ab


def kappa7_reference() -> Kappa7Reference:
    """Exact density matrices, cumulants, norms and entropies of the kappa=7 state."""
    d1, aa, ab, cum_aa, cum_ab = _rational_tensors()
    norm_sq_aa = sum(x * x for x in cum_aa.ravel())
    norm_sq_ab = sum(x * x for x in cum_ab.ravel())
    # sum_ij D2[i, jbar; j, ibar]
    exch = sum(ab[i, j, j, i] for i in range(NORB) for j in range(NORB))
    to_f = np.vectorize(float)
    return Kappa7Reference(
        one_rdm=np.array(to_f(np.array(d1, dtype=object)), dtype=float),
        two_rdm_aa=to_f(aa).astype(float),
        two_rdm_ab=to_f(ab).astype(float),
        cumulant_aa=to_f(cum_aa).astype(float),
        cumulant_ab=to_f(cum_ab).astype(float),
        norm_aa=math.sqrt(norm_sq_aa),
        norm_ab=math.sqrt(norm_sq_ab),
        # 15 equal nonzero eigenvalues in either normalized block, six in the 1-RDM
        s_aa=math.log(15),
        s_ab=math.log(15),
        s1=math.log(6),
        purity=1 / 6,
        s_squared=float(3 - exch),
    )
