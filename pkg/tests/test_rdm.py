import numpy as np
import pytest

from kickcorr.asymptotics import build_kappa7_state
from kickcorr.ci import CIVector, dense_hamiltonian, solve_ground
from kickcorr.detspace import DetSpace
from kickcorr.integrals import make_hubbard_model
from kickcorr.rdm import (energy_from_rdms, natural_orbitals, one_rdm, spin_densities,
                          spin_orbital_rdms, spin_squared, trace_down, two_rdm_block,
                          two_rdm_blocks)

from conftest import random_integrals
import oracles

SPACES = [(3, 2, 1), (4, 2, 2), (4, 3, 2), (4, 1, 3), (3, 0, 2), (5, 2, 2)]


@pytest.mark.parametrize("space", SPACES)
def test_blocks_match_fock_oracle(rng, space):
    sp = DetSpace(*space)
    n = sp.norb
    c = CIVector.random(sp, rng)
    psi = oracles.embed(c)
    ops = oracles.annihilators(2 * n)
    d1 = oracles.rdm1(psi, ops)
    d2 = oracles.rdm2(psi, ops)
    a, b = slice(0, n), slice(n, 2 * n)
    np.testing.assert_allclose(one_rdm(c, "a").m, d1[a, a], atol=1e-12)
    np.testing.assert_allclose(one_rdm(c, "b").m, d1[b, b], atol=1e-12)
    np.testing.assert_allclose(two_rdm_block(c, "AA").t, d2[a, a, a, a], atol=1e-12)
    np.testing.assert_allclose(two_rdm_block(c, "BB").t, d2[b, b, b, b], atol=1e-12)
    np.testing.assert_allclose(two_rdm_block(c, "AB").t, d2[a, b, a, b], atol=1e-12)
    D1, D2 = spin_orbital_rdms(spin_densities(c))
    np.testing.assert_allclose(D1, d1, atol=1e-12)
    np.testing.assert_allclose(D2, d2, atol=1e-12)


@pytest.mark.parametrize("space", SPACES)
def test_sum_rules_and_positivity(rng, space):
    sp = DetSpace(*space)
    c = CIVector.random(sp, rng)
    d = spin_densities(c)
    na, nb = sp.na, sp.nb
    assert abs(np.trace(d.d1a.m) - na) < 1e-10
    assert abs(np.trace(d.aa.matrix) - na * (na - 1)) < 1e-10
    assert abs(np.trace(d.ab.matrix) - na * nb) < 1e-10
    for blk in (d.aa, d.bb, d.ab):
        M = blk.matrix
        np.testing.assert_allclose(M, M.conj().T, atol=1e-12)
        assert np.linalg.eigvalsh(M).min() > -1e-10
    np.testing.assert_allclose(d.aa.t, -d.aa.t.transpose(1, 0, 2, 3), atol=1e-12)
    np.testing.assert_allclose(d.aa.t, -d.aa.t.transpose(0, 1, 3, 2), atol=1e-12)
    if na >= 2:
        np.testing.assert_allclose(trace_down(d.aa).m, d.d1a.m, atol=1e-10)
    if nb >= 1 and na >= 1:
        np.testing.assert_allclose(trace_down(d.ab, "a").m, d.d1a.m, atol=1e-10)
        np.testing.assert_allclose(trace_down(d.ab, "b").m, d.d1b.m, atol=1e-10)
    w = np.linalg.eigvalsh(d.d1a.m)
    assert w.min() > -1e-10 and w.max() < 1 + 1e-10


def test_trace_down_needs_two_electrons(rng):
    c = CIVector.random(DetSpace(3, 1, 1), rng)
    with pytest.raises(ValueError):
        trace_down(two_rdm_block(c, "AA"))


def test_closed_shell_determinant():
    sp = DetSpace(5, 3, 3)
    c = CIVector.determinant(sp, (0, 1, 2), (0, 1, 2))
    d1 = one_rdm(c, check_spin=True)
    np.testing.assert_array_equal(d1.m, np.diag([1, 1, 1, 0, 0]))
    aa, ab = two_rdm_blocks(c)
    f = np.diag(d1.m)
    ref = np.einsum("i,k,ij,kl->ikjl", f, f, np.eye(5), np.eye(5))
    np.testing.assert_allclose(ab.t, ref, atol=1e-14)
    assert abs(spin_squared(ab)) < 1e-14
    np.testing.assert_allclose(trace_down(ab).m, d1.m)
    no = natural_orbitals(d1)
    np.testing.assert_allclose(no.f, [1, 1, 1, 0, 0])


def test_non_normalized_rejected(rng):
    c = CIVector.random(DetSpace(3, 1, 1), rng) * 1.01
    with pytest.raises(ValueError, match="normalized"):
        one_rdm(c)
    with pytest.raises(ValueError, match="normalized"):
        two_rdm_block(c, "AB")


def test_spin_check_flags_asymmetric_state():
    c = CIVector.determinant(DetSpace(3, 1, 1), (0,), (1,))
    with pytest.raises(ValueError, match="spin"):
        one_rdm(c, check_spin=True)


def test_unknown_block():
    with pytest.raises(ValueError):
        two_rdm_block(build_kappa7_state(), "XY")


@pytest.mark.parametrize("space", [(3, 2, 1), (4, 2, 2), (3, 3, 0), (4, 1, 1)])
def test_spin_squared_general_against_oracle(rng, space):
    sp = DetSpace(*space)
    c = CIVector.random(sp, rng)
    ref = oracles.spin_squared(oracles.embed(c), oracles.annihilators(2 * sp.norb))
    assert abs(spin_squared(two_rdm_block(c, "AB")) - ref) < 1e-10


def test_dimer_ground_state(dimer):
    E, c = solve_ground(dimer)
    d = spin_densities(c)
    assert abs(spin_squared(d.ab)) < 1e-10
    M = dense_hamiltonian(dimer)
    w, v = np.linalg.eigh(M)
    ref = CIVector(DetSpace.from_integrals(dimer), v[:, 0])
    no = natural_orbitals(one_rdm(c))
    np.testing.assert_allclose(no.f, natural_orbitals(one_rdm(ref)).f, atol=1e-10)
    assert abs(no.f.sum() - 1) < 1e-12 and no.f[0] > no.f[1]


def test_natural_orbitals_diagonalize(rng):
    c = CIVector.random(DetSpace(5, 2, 2), rng)
    d = one_rdm(c)
    no = natural_orbitals(d)
    np.testing.assert_allclose(no.u.conj().T @ d.m @ no.u, np.diag(no.f), atol=1e-10)
    np.testing.assert_allclose(no.u.conj().T @ no.u, np.eye(5), atol=1e-12)
    assert np.all(np.diff(no.f) <= 1e-14)


def test_natural_orbitals_degenerate_is_deterministic():
    d = one_rdm(build_kappa7_state())
    no = natural_orbitals(d)
    np.testing.assert_allclose(no.f, 0.5)
    np.testing.assert_allclose(no.u, np.eye(6), atol=1e-12)


@pytest.mark.parametrize("seed", range(3))
def test_energy_reconstruction(seed):
    rng = np.random.default_rng(seed)
    H = random_integrals(5, 5, rng)
    gs = solve_ground(H)
    assert abs(energy_from_rdms(H, spin_densities(gs.vector)) - gs.energy) < 1e-8


def test_energy_reconstruction_ring(ring6):
    gs = solve_ground(ring6)
    assert abs(energy_from_rdms(ring6, spin_densities(gs.vector)) - gs.energy) < 1e-8


def test_spin_symmetry_of_singlet(ring6):
    # the alpha/beta difference is of the order of the solver residual
    from kickcorr.ci import SolveOptions
    one_rdm(solve_ground(ring6, opts=SolveOptions(tol=1e-11)).vector, check_spin=True)
