"""Integral sets, one-body operators and the FCIDUMP text format.

Two-electron integrals are kept in chemist notation, ``eri[p, q, r, s] = (pq|rs)``,
with all eight real-orbital permutations populated.
"""

from __future__ import annotations

import io
import re
from dataclasses import dataclass, field
from itertools import product
from typing import Iterable, TextIO

import numpy as np

__all__ = [
    "FCIDumpError",
    "IntegralSet",
    "OneBodyOperator",
    "parse_fcidump",
    "parse_operator_file",
    "write_fcidump",
    "write_operator_file",
    "make_hubbard_model",
    "make_ring_dipole",
]

CONFLICT_TOL = 1e-12


class FCIDumpError(ValueError):
    """Raised for malformed or inconsistent integral files."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class IntegralSet:
    norb: int
    nelec: int
    ms2: int
    e_core: float
    h: np.ndarray
    eri: np.ndarray
    orbsym: tuple[int, ...] = ()
    isym: int | None = None

    def __post_init__(self):
        if self.norb < 1:
            raise ValueError("norb must be >= 1")
        if not 0 <= self.nelec <= 2 * self.norb:
            raise ValueError(f"nelec={self.nelec} outside [0, {2 * self.norb}]")
        if (self.nelec - self.ms2) % 2:
            raise ValueError(f"nelec={self.nelec} and ms2={self.ms2} differ in parity")
        if abs(self.ms2) > self.nelec:
            raise ValueError(f"|ms2|={abs(self.ms2)} exceeds nelec={self.nelec}")
        n = self.norb
        h = _frozen(self.h)
        eri = _frozen(self.eri)
        if h.shape != (n, n) or eri.shape != (n,) * 4:
            raise ValueError("integral array shapes do not match norb")
        if not np.allclose(h, h.T, atol=CONFLICT_TOL, rtol=0):
            raise ValueError("one-electron integrals are not symmetric")
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "eri", eri)
        object.__setattr__(self, "e_core", float(self.e_core))

    @property
    def nalpha(self) -> int:
        return (self.nelec + self.ms2) // 2

    @property
    def nbeta(self) -> int:
        return (self.nelec - self.ms2) // 2

    def with_electrons(self, nelec: int, ms2: int | None = None) -> "IntegralSet":
        if ms2 is None:
            ms2 = nelec % 2
        return IntegralSet(self.norb, nelec, ms2, self.e_core, self.h, self.eri,
                           self.orbsym, self.isym)

    def permuted(self, perm) -> "IntegralSet":
        """Relabel orbitals: new orbital ``k`` is old orbital ``perm[k]``."""
        p = np.asarray(perm)
        h = self.h[np.ix_(p, p)]
        eri = self.eri[np.ix_(p, p, p, p)]
        return IntegralSet(self.norb, self.nelec, self.ms2, self.e_core, h, eri)


@dataclass(frozen=True)
class OneBodyOperator:
    label: str
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.array(self.matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("operator matrix must be square")
        if not np.allclose(m, m.conj().T, atol=CONFLICT_TOL, rtol=0):
            raise ValueError(f"operator {self.label!r} is not Hermitian")
        if not np.iscomplexobj(m) or not np.any(m.imag):
            m = m.real.astype(float)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def norb(self) -> int:
        return self.matrix.shape[0]


# ---------------------------------------------------------------------------
# parsing

_HEADER_END = re.compile(r"(&END|/END|^\s*/\s*$)", re.IGNORECASE | re.MULTILINE)
_KEY = re.compile(r"([A-Za-z_][A-Za-z0-9_]*)\s*=")


def _read_text(source) -> str:
    if isinstance(source, str):
        return source
    return source.read()


def _split_header(text: str, tag: str) -> tuple[dict[str, str], str]:
    start = re.match(r"\s*&" + tag + r"\b", text, re.IGNORECASE)
    if start is None:
        raise FCIDumpError(f"header must start with &{tag}")
    end = _HEADER_END.search(text, start.end())
    if end is None:
        raise FCIDumpError("header is not terminated by &END")
    body = text[start.end():end.start()]
    keys = list(_KEY.finditer(body))
    if body[: keys[0].start() if keys else len(body)].strip(" ,\n\t"):
        raise FCIDumpError(f"unparseable header text: {body!r}")
    header = {}
    for k, nxt in zip(keys, keys[1:] + [None]):
        value = body[k.end(): nxt.start() if nxt else len(body)]
        name = k.group(1).upper()
        if name in header:
            raise FCIDumpError(f"duplicate header key {name}")
        header[name] = value.strip().strip(",").strip()
    return header, text[end.end():]


def _header_int(header: dict[str, str], key: str) -> int:
    if key not in header:
        raise FCIDumpError(f"header is missing {key}")
    try:
        return int(header[key])
    except ValueError:
        raise FCIDumpError(f"header {key}={header[key]!r} is not an integer") from None


def _records(body: str):
    for lineno, line in enumerate(body.splitlines(), 1):
        fields = line.split()
        if not fields:
            continue
        if len(fields) != 5:
            raise FCIDumpError(f"record {lineno}: expected 5 fields, got {len(fields)}")
        try:
            value = float(fields[0].replace("D", "E").replace("d", "e"))
            idx = tuple(int(f) for f in fields[1:])
        except ValueError:
            raise FCIDumpError(f"record {lineno}: cannot parse {line.strip()!r}") from None
        yield lineno, value, idx


def _assign(arr: np.ndarray, seen: np.ndarray, slots: Iterable[tuple], value: float, lineno: int):
    for s in slots:
        if seen[s] and abs(arr[s] - value) > CONFLICT_TOL:
            raise FCIDumpError(
                f"record {lineno}: value {value!r} conflicts with {arr[s]!r} "
                f"already stored at symmetry-equivalent index {tuple(i + 1 for i in s)}")
        arr[s] = value
        seen[s] = True


def _eri_images(p, q, r, s):
    return {(p, q, r, s), (q, p, r, s), (p, q, s, r), (q, p, s, r),
            (r, s, p, q), (s, r, p, q), (r, s, q, p), (s, r, q, p)}


def parse_fcidump(source: str | TextIO) -> IntegralSet:
    """Parse FCIDUMP text (or an open text stream) into an :class:`IntegralSet`.

    Indices in the file are 1-based; ``(i j 0 0)`` records are one-electron
    integrals, ``(0 0 0 0)`` is the core energy and anything with all four
    indices positive is ``(ij|kl)``.
    """
    header, body = _split_header(_read_text(source), "FCI")
    norb = _header_int(header, "NORB")
    nelec = _header_int(header, "NELEC")
    ms2 = _header_int(header, "MS2")
    if norb < 1:
        raise FCIDumpError(f"NORB={norb} must be positive")
    if (nelec - ms2) % 2:
        raise FCIDumpError(f"NELEC={nelec} and MS2={ms2} differ in parity")
    if not 0 <= nelec <= 2 * norb:
        raise FCIDumpError(f"NELEC={nelec} outside [0, {2 * norb}]")
    orbsym: tuple[int, ...] = ()
    if "ORBSYM" in header:
        try:
            orbsym = tuple(int(x) for x in re.split(r"[,\s]+", header["ORBSYM"]) if x)
        except ValueError:
            raise FCIDumpError(f"bad ORBSYM {header['ORBSYM']!r}") from None
    isym = _header_int(header, "ISYM") if "ISYM" in header else None

    h = np.zeros((norb, norb))
    h_seen = np.zeros((norb, norb), dtype=bool)
    eri = np.zeros((norb,) * 4)
    eri_seen = np.zeros((norb,) * 4, dtype=bool)
    e_core = 0.0
    core_seen = False
    for lineno, value, (i, j, k, l) in _records(body):
        if any(x < 0 or x > norb for x in (i, j, k, l)):
            raise FCIDumpError(f"record {lineno}: index outside [0, {norb}]")
        if i and j and k and l:
            _assign(eri, eri_seen, _eri_images(i - 1, j - 1, k - 1, l - 1), value, lineno)
        elif i and j and not k and not l:
            _assign(h, h_seen, {(i - 1, j - 1), (j - 1, i - 1)}, value, lineno)
        elif not (i or j or k or l):
            if core_seen and abs(e_core - value) > CONFLICT_TOL:
                raise FCIDumpError(f"record {lineno}: second core energy {value!r}")
            e_core, core_seen = value, True
        else:
            # orbital energies (i 0 0 0) and other partial-index records are not used
            raise FCIDumpError(f"record {lineno}: unsupported index pattern {(i, j, k, l)}")
    try:
        return IntegralSet(norb, nelec, ms2, e_core, h, eri, orbsym, isym)
    except ValueError as exc:
        raise FCIDumpError(str(exc)) from None


def parse_operator_file(source: str | TextIO, integrals: IntegralSet | None = None) -> OneBodyOperator:
    header, body = _split_header(_read_text(source), "OPER")
    norb = _header_int(header, "NORB")
    if norb < 1:
        raise FCIDumpError(f"NORB={norb} must be positive")
    if integrals is not None and integrals.norb != norb:
        raise FCIDumpError(f"operator NORB={norb} does not match integrals NORB={integrals.norb}")
    label = header.get("LABEL", "").strip("'\"") or "op"
    m = np.zeros((norb, norb))
    seen = np.zeros((norb, norb), dtype=bool)
    for lineno, value, (i, j, k, l) in _records(body):
        if k or l:
            raise FCIDumpError(f"record {lineno}: two-electron record in operator file")
        if not (1 <= i <= norb and 1 <= j <= norb):
            raise FCIDumpError(f"record {lineno}: index outside [1, {norb}]")
        _assign(m, seen, {(i - 1, j - 1), (j - 1, i - 1)}, value, lineno)
    return OneBodyOperator(label, m)


# ---------------------------------------------------------------------------
# writing

def _fmt(x: float) -> str:
    return f"{x: .17e}"


def write_fcidump(ints: IntegralSet, stream: TextIO | None = None, tol: float = 0.0) -> str:
    """Emit ``ints`` in FCIDUMP format; returns the text (and writes it to ``stream``)."""
    n = ints.norb
    out = io.StringIO()
    out.write(f" &FCI NORB={n},NELEC={ints.nelec},MS2={ints.ms2},\n")
    orbsym = ints.orbsym or (1,) * n
    out.write("  ORBSYM=" + ",".join(str(s) for s in orbsym) + ",\n")
    out.write(f"  ISYM={ints.isym if ints.isym is not None else 1},\n &END\n")
    for i, j in product(range(n), repeat=2):
        if i < j:
            continue
        for k, l in product(range(n), repeat=2):
            if k < l or i * (i + 1) // 2 + j < k * (k + 1) // 2 + l:
                continue
            v = ints.eri[i, j, k, l]
            if abs(v) > tol:
                out.write(f"{_fmt(v)} {i + 1} {j + 1} {k + 1} {l + 1}\n")
    for i in range(n):
        for j in range(i + 1):
            if abs(ints.h[i, j]) > tol:
                out.write(f"{_fmt(ints.h[i, j])} {i + 1} {j + 1} 0 0\n")
    out.write(f"{_fmt(ints.e_core)} 0 0 0 0\n")
    text = out.getvalue()
    if stream is not None:
        stream.write(text)
    return text


def write_operator_file(op: OneBodyOperator, stream: TextIO | None = None) -> str:
    if np.iscomplexobj(op.matrix):
        raise ValueError("operator files carry real matrices only")
    lines = [f" &OPER NORB={op.norb} LABEL={op.label} &END"]
    for i in range(op.norb):
        for j in range(i + 1):
            if op.matrix[i, j]:
                lines.append(f"{_fmt(op.matrix[i, j])} {i + 1} {j + 1} 0 0")
    text = "\n".join(lines) + "\n"
    if stream is not None:
        stream.write(text)
    return text


# ---------------------------------------------------------------------------
# lattice models

def make_hubbard_model(nsites: int, t: float, U: float, periodic: bool = False,
                       nelec: int | None = None, ms2: int | None = None) -> IntegralSet:
    """Hubbard chain or ring in the site basis.

    Defaults to half filling with the lowest spin projection.
    """
    if nsites < 1:
        raise ValueError("nsites must be >= 1")
    h = np.zeros((nsites, nsites))
    for p in range(nsites - 1):
        h[p, p + 1] = h[p + 1, p] = -t
    if periodic and nsites > 2:
        h[0, -1] = h[-1, 0] = -t
    eri = np.zeros((nsites,) * 4)
    for p in range(nsites):
        eri[p, p, p, p] = U
    if nelec is None:
        nelec = nsites
    if ms2 is None:
        ms2 = nelec % 2
    return IntegralSet(nsites, nelec, ms2, 0.0, h, eri)


def make_ring_dipole(nsites: int, axis: str = "x", radius: float = 1.0) -> OneBodyOperator:
    """Site-diagonal position operator for sites placed evenly on a circle.

    ``axis="z"`` is perpendicular to the ring plane and gives the zero operator.
    """
    phi = 2.0 * np.pi * np.arange(nsites) / nsites
    coord = {"x": radius * np.cos(phi), "y": radius * np.sin(phi), "z": np.zeros(nsites)}
    if axis not in coord:
        raise ValueError(f"axis must be one of x, y, z; got {axis!r}")
    d = coord[axis]
    d[np.abs(d) < 1e-15] = 0.0
    return OneBodyOperator(axis, np.diag(d))
