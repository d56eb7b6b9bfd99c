import math
import warnings

import numpy as np
import pytest

from conftest import random_table
from orbent import (
    ActiveSpace,
    IntegralTable,
    SolverOptions,
    build_dense,
    build_hubbard_chain,
    build_random_hamiltonian,
    davidson,
    enumerate_sector,
    ground_state,
)
from orbent.errors import ConvergenceError, DegeneracyWarning, ValidationError
from orbent.fcidump import permute_orbitals
from orbent.hamiltonian import HamiltonianOperator


def dimer_energy(t, U):
    return (U - math.sqrt(U * U + 16 * t * t)) / 2


def test_single_determinant_sector():
    space = ActiveSpace(1, 2)
    table = IntegralTable(space, 0.7, [[-1.3]], [0.45])
    gs = ground_state(table, enumerate_sector(space))
    assert gs.energies[0] == 2 * -1.3 + 0.45 + 0.7
    assert gs.vectors[0].amplitudes.tolist() == [1.0]


@pytest.mark.parametrize("t, U", [(1.0, 0.0), (1.0, 4.0), (0.5, 3.0), (1.0, 8.0)])
def test_hubbard_dimer_closed_form(t, U):
    table = build_hubbard_chain(2, t, U, 2)
    basis = enumerate_sector(table.active_space)
    for cutoff in (512, 0):
        gs = ground_state(table, basis, dense_cutoff=cutoff)
        assert abs(gs.energies[0] - dimer_energy(t, U)) <= 1e-10


def test_davidson_matches_dense():
    rng = np.random.default_rng(3)
    for _ in range(15):
        table = random_table(rng, (3, 7))
        basis = enumerate_sector(table.active_space)
        if basis.dimension < 3:
            continue
        exact = np.linalg.eigvalsh(build_dense(table, basis))
        gs = ground_state(table, basis, dense_cutoff=0, n_roots=2)
        np.testing.assert_allclose(gs.energies, exact[:2], atol=1e-9, rtol=0)
        assert gs.report.method == "davidson" and gs.report.converged


def test_eigenpair_contract():
    table = build_random_hamiltonian(6, 6, 0, seed=12)
    basis = enumerate_sector(table.active_space)
    opts = SolverOptions(n_roots=3, dense_cutoff=0, tol=1e-10)
    gs = ground_state(table, basis, opts)
    H = build_dense(table, basis)
    V = np.column_stack([v.amplitudes for v in gs.vectors])
    np.testing.assert_allclose(V.T @ V, np.eye(3), atol=1e-10)
    for e, v in zip(gs.energies, V.T):
        assert np.linalg.norm(H @ v - e * v) <= 1e-10
    assert np.all(np.diff(gs.energies) >= 0)


def test_restarts_never_raise_ritz_values():
    for seed in range(6):
        table = build_random_hamiltonian(6, 6, 0, seed=seed)
        basis = enumerate_sector(table.active_space)
        op = HamiltonianOperator(table, basis)
        for n_roots, cap in ((1, 4), (2, 6)):
            energies, _, report = davidson(
                op.matvec, op.diagonal().copy(), n_roots=n_roots, subspace_cap=cap, max_iter=500
            )
            assert report.restarts == len(report.restart_iterations) > 0
            hist = np.array(report.energy_history)
            assert np.all(np.diff(hist, axis=0) <= 1e-12)
            np.testing.assert_array_equal(hist[-1], energies)
            assert len(report.residual_history) == report.iterations


def test_energy_below_start_rayleigh_quotient():
    table = build_random_hamiltonian(5, 4, 0, seed=2)
    basis = enumerate_sector(table.active_space)
    op = HamiltonianOperator(table, basis)
    diag = op.diagonal()
    e, _, _ = davidson(op.matvec, diag.copy())
    assert e[0] <= diag.min()


def test_deterministic_start_breaks_ties_by_address():
    calls = []

    def matvec(x):
        calls.append(x.copy())
        return np.diag([1.0, 0.0, 0.0, 2.0]) @ x

    davidson(matvec, np.array([1.0, 0.0, 0.0, 2.0]), max_iter=5)
    assert calls[0].tolist() == [0.0, 1.0, 0.0, 0.0]


def test_relabelling_orbitals_leaves_energy_invariant():
    table = build_random_hamiltonian(6, 5, 1, seed=21)
    e0 = ground_state(table, enumerate_sector(table.active_space), dense_cutoff=0).energies[0]
    for perm in ([5, 4, 3, 2, 1, 0], [2, 0, 5, 1, 3, 4]):
        p = permute_orbitals(table, perm)
        e = ground_state(p, enumerate_sector(p.active_space), dense_cutoff=0).energies[0]
        assert abs(e - e0) <= 1e-9


def test_non_convergence_raises_with_best_residual():
    table = build_hubbard_chain(6, 1.0, 4.0, 6)
    basis = enumerate_sector(table.active_space)
    with pytest.raises(ConvergenceError) as info:
        ground_state(table, basis, dense_cutoff=0, max_iter=3)
    err = info.value
    assert err.best_residual > 1e-9
    assert err.report.iterations == 3
    assert err.best_residual == pytest.approx(min(max(r) for r in err.report.residual_history))


def test_degenerate_roots_warn():
    # one electron on a symmetric ring of three sites: the excited level is doubly degenerate
    table = build_hubbard_chain(3, 1.0, 0.0, 1, ms2=1, periodic=True)
    basis = enumerate_sector(table.active_space)
    with pytest.warns(DegeneracyWarning):
        gs = ground_state(table, basis, n_roots=3)
    assert gs.report.warnings
    # a non-degenerate ground state is quiet
    with warnings.catch_warnings():
        warnings.simplefilter("error", DegeneracyWarning)
        ground_state(table, basis, n_roots=1)


def test_degenerate_ground_state_warns():
    # two decoupled sites, one electron: degenerate ground state
    table = build_hubbard_chain(2, 0.0, 1.0, 1, ms2=1)
    with pytest.warns(DegeneracyWarning):
        ground_state(table, enumerate_sector(table.active_space))


def test_option_validation():
    table = build_hubbard_chain(2, 1.0, 1.0, 2)
    basis = enumerate_sector(table.active_space)
    with pytest.raises(ValidationError):
        ground_state(table, basis, n_roots=5)
    for bad in ({"tol": 0}, {"max_iter": 0}, {"n_roots": 0}, {"n_roots": 3, "subspace_cap": 4}):
        with pytest.raises(ValidationError):
            SolverOptions(**bad)


def test_sign_convention_is_reproducible():
    table = build_random_hamiltonian(5, 4, 0, seed=30)
    basis = enumerate_sector(table.active_space)
    a = ground_state(table, basis).vectors[0].amplitudes
    b = ground_state(table, basis, dense_cutoff=0, tol=1e-10).vectors[0].amplitudes
    assert a[np.argmax(np.abs(a))] > 0
    np.testing.assert_allclose(a, b, atol=1e-9)


@pytest.mark.parametrize("seed", [17, 26, 39])
def test_ground_state_of_odd_spin_flip_parity_is_found(seed):
    # ground state antisymmetric under alpha/beta exchange while the lowest
    # determinant is closed shell; a single flip-symmetric Davidson run misses it
    table = build_random_hamiltonian(6, 6, 0, seed=seed)
    basis = enumerate_sector(table.active_space)
    w, v = np.linalg.eigh(build_dense(table, basis))
    C = v[:, 0].reshape(basis.shape)
    assert np.allclose(C, -C.T)
    gs = ground_state(table, basis, dense_cutoff=0, n_roots=2)
    np.testing.assert_allclose(gs.energies, w[:2], atol=1e-9, rtol=0)
    overlap = abs(gs.vectors[0].amplitudes @ v[:, 0])
    assert overlap == pytest.approx(1.0, abs=1e-8)


def test_spin_flip_sectors_cover_every_root():
    table = build_random_hamiltonian(4, 4, 0, seed=3)
    basis = enumerate_sector(table.active_space)
    w = np.linalg.eigvalsh(build_dense(table, basis))
    gs = ground_state(table, basis, dense_cutoff=0, n_roots=6, subspace_cap=40)
    np.testing.assert_allclose(gs.energies, w[:6], atol=1e-9, rtol=0)
