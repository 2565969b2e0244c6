"""Alpha/beta occupation strings and their connectivity.

A determinant is ``|I_alpha, I_beta>`` with all alpha creators to the left of
all beta creators, orbitals ascending inside each block.  CI amplitudes are
stored on the ``(alpha string, beta string)`` grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations
from math import comb

import numpy as np
import scipy.sparse as sp

__all__ = [
    "SpinString",
    "DetSpace",
    "enumerate_strings",
    "string_address",
    "single_excitations",
    "annihilate",
    "annihilation_operators",
    "MAX_ORBITALS",
]

MAX_ORBITALS = 64

SpinString = tuple[int, ...]


def _check_string(s: SpinString, norb: int, ne: int | None = None):
    if any(b <= a for a, b in zip(s, s[1:])):
        raise ValueError(f"string {s} is not strictly increasing")
    if s and not 0 <= s[0] <= s[-1] < norb:
        raise ValueError(f"string {s} has orbitals outside [0, {norb})")
    if ne is not None and len(s) != ne:
        raise ValueError(f"string {s} holds {len(s)} electrons, expected {ne}")


def enumerate_strings(norb: int, ne: int) -> list[SpinString]:
    """All ``C(norb, ne)`` strings in lexicographic order."""
    if not 0 <= ne <= norb:
        raise ValueError(f"need 0 <= ne <= norb, got ne={ne}, norb={norb}")
    if norb > MAX_ORBITALS:
        raise ValueError(f"norb={norb} exceeds the {MAX_ORBITALS}-bit string width")
    return list(combinations(range(norb), ne))


def string_address(s: SpinString, norb: int, ne: int | None = None) -> int:
    """Lexicographic rank of ``s`` among all strings with the same electron count.

    Counts, position by position, the strings that share the prefix but place a
    smaller orbital at that position.
    """
    ne = len(s) if ne is None else ne
    _check_string(tuple(s), norb, ne)
    addr = 0
    prev = -1
    for k, o in enumerate(s):
        for v in range(prev + 1, o):
            addr += comb(norb - 1 - v, ne - 1 - k)
        prev = o
    return addr


def to_bits(s: SpinString) -> int:
    b = 0
    for o in s:
        b |= 1 << o
    return b


def single_excitations(s: SpinString, norb: int) -> list[tuple[int, int, int, SpinString]]:
    """Entries ``(p, q, sign, target)`` with ``c+_p c_q |s> = sign |target>``.

    Diagonal entries ``p == q`` are included for every occupied ``q``.
    """
    s = tuple(s)
    _check_string(s, norb)
    occ = set(s)
    out = []
    for q in s:
        for p in range(norb):
            if p != q and p in occ:
                continue
            lo, hi = min(p, q), max(p, q)
            between = sum(1 for o in s if lo < o < hi)
            target = tuple(sorted((occ - {q}) | {p}))
            out.append((p, q, -1 if between % 2 else 1, target))
    return out


def annihilate(s: SpinString, p: int) -> tuple[int, SpinString] | None:
    """``c_p |s> = sign |s without p>``, or ``None`` when ``p`` is empty."""
    if p not in s:
        return None
    k = s.index(p)
    return (-1 if k % 2 else 1), s[:k] + s[k + 1:]


@dataclass(frozen=True)
class DetSpace:
    norb: int
    na: int
    nb: int
    astrings: tuple = field(init=False, repr=False)
    bstrings: tuple = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "astrings", tuple(enumerate_strings(self.norb, self.na)))
        object.__setattr__(self, "bstrings", tuple(enumerate_strings(self.norb, self.nb)))

    @classmethod
    def from_integrals(cls, ints) -> "DetSpace":
        return cls(ints.norb, ints.nalpha, ints.nbeta)

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.astrings), len(self.bstrings)

    @property
    def dimension(self) -> int:
        return len(self.astrings) * len(self.bstrings)

    @property
    def nelec(self) -> int:
        return self.na + self.nb

    def strings(self, channel: str) -> tuple:
        return self.astrings if channel == "a" else self.bstrings

    def count(self, channel: str) -> int:
        return self.na if channel == "a" else self.nb

    @cached_property
    def occupations(self) -> tuple[np.ndarray, np.ndarray]:
        """0/1 occupation arrays of shape ``(nstrings, norb)`` per channel."""
        out = []
        for strings in (self.astrings, self.bstrings):
            occ = np.zeros((len(strings), self.norb))
            for k, s in enumerate(strings):
                occ[k, list(s)] = 1.0
            out.append(occ)
        return tuple(out)

    def excitation_table(self, channel: str) -> tuple[np.ndarray, ...]:
        """Flat arrays ``(p, q, source, target, sign)`` for one channel."""
        return self._excitations[0 if channel == "a" else 1]

    @cached_property
    def _excitations(self):
        tables = []
        for ne, strings in ((self.na, self.astrings), (self.nb, self.bstrings)):
            rows = []
            for src, s in enumerate(strings):
                for p, q, sign, tgt in single_excitations(s, self.norb):
                    rows.append((p, q, src, string_address(tgt, self.norb, ne), sign))
            arr = np.array(rows, dtype=np.int64).reshape(-1, 5)
            tables.append(tuple(arr[:, k] for k in range(5)))
        return tuple(tables)

    def excitation_operators(self, channel: str) -> list[sp.csr_matrix]:
        """Sparse matrices of ``E_pq = c+_p c_q`` within one channel, index ``p*norb + q``."""
        return self._excitation_ops[0 if channel == "a" else 1]

    @cached_property
    def _excitation_ops(self):
        n = self.norb
        ops = []
        for channel in "ab":
            p, q, src, tgt, sign = self.excitation_table(channel)
            dim = len(self.strings(channel))
            pq = p * n + q
            mats = []
            for k in range(n * n):
                sel = pq == k
                mats.append(sp.csr_matrix((sign[sel].astype(float), (tgt[sel], src[sel])),
                                          shape=(dim, dim)))
            ops.append(mats)
        return tuple(ops)

    def stacked_excitations(self, channel: str) -> tuple[sp.csr_matrix, sp.csr_matrix]:
        """All ``E_pq`` of a channel stacked vertically and horizontally (``pq`` major)."""
        return self._stacked[0 if channel == "a" else 1]

    @cached_property
    def _stacked(self):
        return tuple((sp.vstack(mats, format="csr"), sp.hstack(mats, format="csr"))
                     for mats in self._excitation_ops)

    def one_body_matrix(self, channel: str, a: np.ndarray) -> sp.csr_matrix:
        """Sparse representation of ``sum_pq a_pq c+_p c_q`` inside one channel."""
        p, q, src, tgt, sign = self.excitation_table(channel)
        dim = len(self.strings(channel))
        return sp.csr_matrix((a[p, q] * sign, (tgt, src)), shape=(dim, dim))


_ANNIHILATION_CACHE: dict[tuple[int, int], list] = {}


def annihilation_operators(norb: int, ne: int) -> list[sp.csr_matrix]:
    """Sparse ``c_p`` maps from ``ne``-electron to ``(ne-1)``-electron strings."""
    key = (norb, ne)
    if key not in _ANNIHILATION_CACHE:
        if ne < 1:
            raise ValueError("cannot annihilate from an empty channel")
        src_strings = enumerate_strings(norb, ne)
        ndst = comb(norb, ne - 1)
        mats = []
        for p in range(norb):
            rows, cols, vals = [], [], []
            for src, s in enumerate(src_strings):
                res = annihilate(s, p)
                if res is not None:
                    sign, tgt = res
                    rows.append(string_address(tgt, norb, ne - 1))
                    cols.append(src)
                    vals.append(float(sign))
            mats.append(sp.csr_matrix((vals, (rows, cols)), shape=(ndst, len(src_strings))))
        _ANNIHILATION_CACHE[key] = mats
    return _ANNIHILATION_CACHE[key]
