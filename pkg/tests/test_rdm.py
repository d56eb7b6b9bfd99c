import numpy as np
import pytest

from conftest import random_table, random_vector
from oracle_ref import dense_partial_trace, embed_fock
from orbent import (
    ActiveSpace,
    CIVector,
    Determinant,
    LocalState,
    build_hubbard_chain,
    enumerate_sector,
    ground_state,
    one_orbital_rdm,
    two_orbital_rdm,
)
from orbent.errors import NumericalError, ValidationError
from orbent.rdm import clip_spectrum, sector_blocks


def random_state(rng, k_range=(3, 6)):
    table = random_table(rng, k_range)
    basis = enumerate_sector(table.active_space)
    if rng.random() < 0.5:
        return random_vector(basis, rng)
    return ground_state(table, basis).vectors[0]


def test_matches_fock_space_partial_trace():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(120):
        x = random_state(rng)
        k = x.basis.n_orbitals
        v = embed_fock(x)
        for i in range(k):
            ref = dense_partial_trace(v, k, [i])
            worst = max(worst, np.abs(np.diag(ref) - one_orbital_rdm(x, i).diag).max())
            assert np.abs(ref - np.diag(np.diag(ref))).max() <= 1e-12
        i, j = rng.choice(k, size=2, replace=False)
        ref = dense_partial_trace(v, k, [int(i), int(j)])
        worst = max(worst, np.abs(ref - two_orbital_rdm(x, int(i), int(j)).matrix).max())
    assert worst <= 1e-10


def test_partial_trace_consistency_and_swap():
    rng = np.random.default_rng(8)
    for _ in range(30):
        x = random_state(rng, (2, 6))
        k = x.basis.n_orbitals
        for i in range(k):
            for j in range(k):
                if i == j:
                    continue
                rho = two_orbital_rdm(x, i, j)
                np.testing.assert_allclose(rho.reduce(0), one_orbital_rdm(x, i).matrix, atol=1e-12, rtol=0)
                np.testing.assert_allclose(rho.reduce(1), one_orbital_rdm(x, j).matrix, atol=1e-12, rtol=0)
                np.testing.assert_array_equal(rho.swapped().matrix, two_orbital_rdm(x, j, i).matrix)
                np.testing.assert_allclose(rho.eigenvalues(), np.sort(two_orbital_rdm(x, j, i).eigenvalues()), atol=1e-13)


def test_density_matrix_properties():
    rng = np.random.default_rng(9)
    blocks = sector_blocks()
    in_block = np.zeros((16, 16), dtype=bool)
    for idx in blocks.values():
        in_block[np.ix_(idx, idx)] = True
    for _ in range(30):
        x = random_state(rng, (2, 6))
        k = x.basis.n_orbitals
        for i in range(k):
            d = one_orbital_rdm(x, i).diag
            assert abs(d.sum() - 1) <= 1e-12 and d.min() >= 0
        for i in range(k):
            for j in range(i + 1, k):
                rho = two_orbital_rdm(x, i, j).matrix
                np.testing.assert_array_equal(rho, rho.T)
                assert abs(np.trace(rho) - 1) <= 1e-12
                assert np.all(rho[~in_block] == 0)  # N and Sz are conserved
                assert np.linalg.eigvalsh(rho).min() >= -1e-12


def test_sector_blocks_layout():
    blocks = sector_blocks()
    assert [len(b) for b in blocks.values()] == [1, 2, 2, 4, 1, 1, 2, 2, 1]
    assert sorted(np.concatenate(list(blocks.values())).tolist()) == list(range(16))
    assert blocks[(2, 0)].tolist() == [3, 6, 9, 12]  # |ud,0>, |u,d>, |d,u>, |0,ud>


def test_global_phase_and_orbital_invariance():
    rng = np.random.default_rng(10)
    x = random_state(rng, (4, 5))
    flipped = CIVector(x.basis, -x.amplitudes)
    for i in range(x.basis.n_orbitals):
        np.testing.assert_array_equal(one_orbital_rdm(x, i).diag, one_orbital_rdm(flipped, i).diag)
    np.testing.assert_allclose(two_orbital_rdm(x, 0, 2).matrix, two_orbital_rdm(flipped, 0, 2).matrix, atol=1e-15)


def test_single_determinant_is_pure():
    basis = enumerate_sector(ActiveSpace(4, 5, 1))
    det = Determinant(0b0111, 0b0101)
    x = CIVector.from_determinants(basis, {det: 1.0})
    expected = [LocalState.UPDOWN, LocalState.UP, LocalState.UPDOWN, LocalState.EMPTY]
    for i, state in enumerate(expected):
        d = one_orbital_rdm(x, i).diag
        assert d[state] == 1.0 and d.sum() == 1.0
    rho = two_orbital_rdm(x, 1, 3).matrix
    assert rho[4 * LocalState.UP + LocalState.EMPTY, 4 * LocalState.UP + LocalState.EMPTY] == 1.0


def test_hubbard_dimer_u0_reduced_matrices():
    table = build_hubbard_chain(2, 1.0, 0.0, 2)
    x = ground_state(table, enumerate_sector(table.active_space)).vectors[0]
    np.testing.assert_allclose(one_orbital_rdm(x, 0).diag, [0.25] * 4, atol=1e-14)
    # the pair of sites holds the whole (pure) state: one eigenvalue 1
    np.testing.assert_allclose(two_orbital_rdm(x, 0, 1).eigenvalues()[-1], 1.0, atol=1e-14)


def test_invalid_inputs():
    basis = enumerate_sector(ActiveSpace(3, 2, 0))
    x = CIVector(basis, np.ones(basis.dimension))
    with pytest.raises(ValidationError, match="normalized"):
        one_orbital_rdm(x, 0)
    x = x.normalized()
    for bad in (-1, 3, 1.0):
        with pytest.raises(ValidationError):
            one_orbital_rdm(x, bad)
    with pytest.raises(ValidationError):
        two_orbital_rdm(x, 1, 1)


def test_clip_spectrum():
    assert clip_spectrum([-5e-11, 0.5, 0.5]).tolist() == [0.0, 0.5, 0.5]
    with pytest.raises(NumericalError):
        clip_spectrum([-2e-10, 1.0])
