"""Delta-kick by a one-body operator and the survival probability of the kicked state.

The kicked state is ``exp(i S_hat) psi`` with ``S_hat = sum_ij S_ij c+_i c_j``
summed over both spins and ``S = -sum_a q_a d_a``, where ``q_a`` is the
time-integrated field along direction ``a``.  The survival probability
``|<psi|exp(i S_hat)|psi>|^2`` is ``1 - kappa2 + O(S^4)``, with ``kappa2`` the
variance of ``S_hat``.  The variance is available three ways: from operator
moments, from the 2-RDM plus a one-body variance, and from the cumulant in
the natural-orbital basis plus a golden-rule-like one-body term.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .ci import CIVector, apply_one_body
from .integrals import OneBodyOperator
from .measures import CumulantBlock, cumulant_block
from .rdm import NaturalOrbitals, SpinDensities, natural_orbitals

__all__ = [
    "KickSpec",
    "KickReport",
    "SecondOrder",
    "ScalingProbe",
    "SeriesError",
    "build_kick",
    "moments",
    "moments_and_cumulants",
    "propagate",
    "survival_exact",
    "survival_second_order",
    "scaling_probe",
    "kick_report",
]

HERMITIAN_TOL = 1e-12
UNITARITY_TOL = 1e-10
MAX_TERMS = 200


class SeriesError(RuntimeError):
    pass


@dataclass(frozen=True)
class KickSpec:
    components: tuple
    matrix: np.ndarray

    @property
    def norb(self) -> int:
        return self.matrix.shape[0]

    def scaled(self, lam: float) -> "KickSpec":
        return KickSpec(tuple((op, lam * q) for op, q in self.components), lam * self.matrix)

    @classmethod
    def from_matrix(cls, S, label: str = "S") -> "KickSpec":
        """Kick with a given Hermitian ``S`` (one component with ``q = -1``)."""
        op = OneBodyOperator(label, np.asarray(S))
        return build_kick([(op, -1.0)])


def build_kick(components) -> KickSpec:
    """``S = -sum q_a d_a`` from ``(OneBodyOperator, q)`` pairs."""
    components = tuple(components)
    if not components:
        raise ValueError("a kick needs at least one component")
    n = components[0][0].norb
    S = np.zeros((n, n), dtype=complex)
    for op, q in components:
        if op.norb != n:
            raise ValueError(f"operator {op.label!r} has {op.norb} orbitals, expected {n}")
        if not np.allclose(op.matrix, op.matrix.conj().T, atol=HERMITIAN_TOL, rtol=0):
            raise ValueError(f"operator {op.label!r} is not Hermitian")
        S -= q * op.matrix
    if not np.any(S.imag):
        S = S.real
    S.setflags(write=False)
    return KickSpec(components, S)


def moments(c: CIVector, kick: KickSpec) -> tuple[complex, complex, complex]:
    """``<S>``, ``<S^2>``, ``<S^3>`` by repeated one-body application."""
    v1 = apply_one_body(kick.matrix, c)
    v2 = apply_one_body(kick.matrix, v1)
    return c.vdot(v1), v1.vdot(v1), v1.vdot(v2)


def moments_and_cumulants(c: CIVector, kick: KickSpec) -> tuple[float, float, float]:
    """First three cumulants of ``S_hat`` in state ``c``."""
    m1, m2, m3 = moments(c, kick)
    k1 = m1
    k2 = m2 - m1 * m1
    k3 = m3 - 3 * m2 * m1 + 2 * m1 ** 3
    scale = 1.0 + abs(m1) ** 3 + abs(m2) ** 1.5 + abs(m3)
    for name, k in (("k1", k1), ("k2", k2), ("k3", k3)):
        if abs(k.imag) > 1e-10 * scale:
            raise ValueError(f"cumulant {name} has imaginary part {k.imag:.3e}; S not Hermitian?")
    return k1.real, k2.real, k3.real


def propagate(c: CIVector, kick: KickSpec, tol: float = 1e-13) -> CIVector:
    """``exp(i S_hat) c`` by a scaled Taylor series.

    The exponent is split into ``m`` equal steps so that each step's bound
    ``nelec * ||S||_1 / m`` is at most 1.  Within a step, terms are added until the
    last one has norm below ``tol``.
    """
    S = kick.matrix
    bound = np.abs(S).sum(axis=0).max() * max(c.space.nelec, 1)
    steps = max(1, math.ceil(bound))
    A = (1j / steps) * S
    psi = c.copy()
    for _ in range(steps):
        term = psi
        total = psi.copy()
        for k in range(1, MAX_TERMS + 1):
            term = apply_one_body(A, term) * (1.0 / k)
            total = total + term
            if term.norm() < tol:
                break
        else:
            raise SeriesError(f"Taylor series did not converge within {MAX_TERMS} terms")
        psi = total
    drift = abs(psi.norm() - c.norm())
    if drift > UNITARITY_TOL:
        raise SeriesError(f"kicked state norm drifted by {drift:.3e}")
    return psi


def survival_exact(c: CIVector, kick: KickSpec, tol: float = 1e-13) -> tuple[complex, float]:
    """``(<c|exp(i S_hat)|c>, |overlap|^2)``."""
    psi = propagate(c, kick, tol)
    ov = c.vdot(psi)
    return ov, float(abs(ov) ** 2)


@dataclass(frozen=True)
class SecondOrder:
    s2_rdm: float
    s2_no: float
    sigma2_s: float
    zz_aa: float
    zz_ab: float
    zz_bb: float
    golden: float


def _contract(S, t) -> complex:
    return np.einsum("ij,kl,ikjl->", S, S, t)


def _contract_mixed(Sa, Sb, t) -> complex:
    return np.einsum("ij,kl,ikjl->", Sa, Sb, t)


def _rotate_block(t, ua, ub):
    # creation indices transform with conj(u), annihilation indices with u
    return np.einsum("ai,bk,cj,dl,abcd->ikjl", ua.conj(), ub.conj(), ua, ub, t, optimize=True)


def survival_second_order(dens: SpinDensities, kick: KickSpec,
                          cumulants: dict[str, CumulantBlock] | None = None,
                          naturals: tuple[NaturalOrbitals, NaturalOrbitals] | None = None) -> SecondOrder:
    """Variance of ``S_hat`` from density matrices, two ways.

    ``s2_rdm`` contracts ``S x S`` with the spin-summed 2-RDM and adds the
    one-body variance ``<[S^2]> - <[S]>^2``.  ``s2_no`` contracts ``S x S`` with
    the connected part ``2 * Delta2`` in the natural-orbital basis and adds
    ``sum_im |S_im|^2 f_i (1 - f_m)`` per spin.  Spin summation counts the
    alpha-beta block twice (``ab`` and ``ba`` orderings) and each same-spin block once.
    """
    S = kick.matrix
    if S.shape != (dens.norb,) * 2:
        raise ValueError(f"kick has {S.shape[0]} orbitals, densities have {dens.norb}")
    if cumulants is None:
        cumulants = {
            "AA": cumulant_block(dens.aa, dens.d1a),
            "BB": cumulant_block(dens.bb, dens.d1b),
            "AB": cumulant_block(dens.ab, dens.d1a, dens.d1b),
        }
    if naturals is None:
        naturals = (natural_orbitals(dens.d1a), natural_orbitals(dens.d1b))

    d_tot = dens.d1a.m + dens.d1b.m
    mean = np.sum(S * d_tot)
    sigma2 = np.sum((S @ S) * d_tot) - mean * mean
    pair = _contract(S, dens.aa.t) + _contract(S, dens.bb.t) + 2 * _contract(S, dens.ab.t)
    s2_rdm = pair + sigma2

    zz_aa = _contract(S, cumulants["AA"].t)
    zz_bb = _contract(S, cumulants["BB"].t)
    zz_ab = _contract(S, cumulants["AB"].t)

    noa, nob = naturals
    Sa = noa.u.T @ S @ noa.u.conj()
    Sb = nob.u.T @ S @ nob.u.conj()
    connected = (_contract(Sa, _rotate_block(cumulants["AA"].t, noa.u, noa.u))
                 + _contract(Sb, _rotate_block(cumulants["BB"].t, nob.u, nob.u))
                 + 2 * _contract_mixed(Sa, Sb, _rotate_block(cumulants["AB"].t, noa.u, nob.u)))
    golden = (np.einsum("im,i,m->", np.abs(Sa) ** 2, noa.f, 1 - noa.f)
              + np.einsum("im,i,m->", np.abs(Sb) ** 2, nob.f, 1 - nob.f))
    s2_no = 2 * connected + golden
    return SecondOrder(float(s2_rdm.real), float(s2_no.real), float(sigma2.real),
                       float(zz_aa.real), float(zz_ab.real), float(zz_bb.real), float(golden.real))


@dataclass(frozen=True)
class ScalingProbe:
    rows: tuple  # (lambda, p_exact, p_order2, residual)
    slope: float | None


def scaling_probe(c: CIVector, kick: KickSpec, lambdas, noise_floor: float = 1e-14) -> ScalingProbe:
    """Residual ``|p_exact(lam S) - (1 - lam^2 kappa2)|`` and its log-log slope."""
    lambdas = [float(x) for x in lambdas]
    if any(x < 0 for x in lambdas):
        raise ValueError("scaling factors must be non-negative")
    _, k2, _ = moments_and_cumulants(c, kick)
    rows = []
    for lam in lambdas:
        if lam == 0.0:
            rows.append((0.0, 1.0, 1.0, 0.0))
            continue
        _, p = survival_exact(c, kick.scaled(lam))
        p2 = 1.0 - lam * lam * k2
        rows.append((lam, p, p2, abs(p - p2)))
    fit = [(math.log(lam), math.log(r)) for lam, _, _, r in rows if lam > 0 and r > noise_floor]
    slope = None
    if len(fit) >= 2:
        x, y = np.array(fit).T
        slope = float(np.polyfit(x, y, 1)[0])
    return ScalingProbe(tuple(rows), slope)


@dataclass(frozen=True)
class KickReport:
    s1m: float
    s2m: float
    s3m: float
    mean_s: float
    sigma2_s: float
    s2_rdm: float
    s2_no: float
    zz_aa: float
    zz_ab: float
    zz_bb: float
    golden: float
    p_exact: float
    p_order2: float
    p_exp: float
    overlap_phase: float
    slope: float | None = None

    def as_dict(self) -> dict:
        return asdict(self)


def kick_report(c: CIVector, dens: SpinDensities, kick: KickSpec, lambdas=None) -> KickReport:
    k1, k2, k3 = moments_and_cumulants(c, kick)
    so = survival_second_order(dens, kick)
    ov, p = survival_exact(c, kick)
    slope = scaling_probe(c, kick, lambdas).slope if lambdas else None
    return KickReport(k1, k2, k3, k1, so.sigma2_s, so.s2_rdm, so.s2_no, so.zz_aa, so.zz_ab,
                      so.zz_bb, so.golden, p, 1.0 - k2, math.exp(-k2), float(np.angle(ov)), slope)
