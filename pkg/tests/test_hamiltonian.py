import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_table
from oracle_ref import embedding_matrix, fock_hamiltonian
from orbent import (
    ActiveSpace,
    CIVector,
    apply_hamiltonian,
    build_dense,
    build_hubbard_chain,
    build_random_hamiltonian,
    enumerate_sector,
    hamiltonian_diagonal,
)
from orbent.errors import CapacityError, ValidationError
from orbent.hamiltonian import HamiltonianOperator, resolve_threads


def test_hubbard_dimer_matrix():
    # basis: |a0 b0>, |a0 b1>, |a1 b0>, |a1 b1> with alpha creators first
    t, U = 1.0, 4.0
    table = build_hubbard_chain(2, t, U, 2)
    basis = enumerate_sector(table.active_space)
    expected = np.array(
        [
            [U, -t, -t, 0],
            [-t, 0, 0, -t],
            [-t, 0, 0, -t],
            [0, -t, -t, U],
        ]
    )
    np.testing.assert_array_equal(build_dense(table, basis), expected)


def test_dense_matches_fock_space_hamiltonian():
    rng = np.random.default_rng(1)
    for _ in range(12):
        table = random_table(rng, (1, 4))
        basis = enumerate_sector(table.active_space)
        P = embedding_matrix(basis)
        ref = P.T @ fock_hamiltonian(table) @ P
        np.testing.assert_allclose(build_dense(table, basis), ref, atol=1e-12, rtol=0)


def test_matrix_free_matches_dense():
    rng = np.random.default_rng(2)
    for _ in range(25):
        table = random_table(rng, (2, 7))
        basis = enumerate_sector(table.active_space)
        H = build_dense(table, basis)
        X = rng.standard_normal((basis.dimension, 3))
        op = HamiltonianOperator(table, basis)
        for x in X.T:
            np.testing.assert_allclose(op.matvec(x), H @ x, atol=1e-11, rtol=0)
        np.testing.assert_allclose(hamiltonian_diagonal(table, basis), np.diag(H), atol=1e-12, rtol=0)


def test_threaded_sigma_is_identical():
    table = build_random_hamiltonian(7, 6, 0, seed=4)
    basis = enumerate_sector(table.active_space)
    x = np.random.default_rng(0).standard_normal(basis.dimension)
    serial = HamiltonianOperator(table, basis, threads=1).matvec(x)
    parallel = HamiltonianOperator(table, basis, threads=4).matvec(x)
    np.testing.assert_allclose(parallel, serial, atol=1e-12, rtol=0)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(-3, 3), st.floats(-3, 3))
def test_sigma_is_linear_and_symmetric(seed, a, b):
    rng = np.random.default_rng(seed)
    table = random_table(rng, (2, 5))
    basis = enumerate_sector(table.active_space)
    x, y = rng.standard_normal((2, basis.dimension))
    Hx = apply_hamiltonian(table, basis, CIVector(basis, x)).amplitudes
    Hy = apply_hamiltonian(table, basis, CIVector(basis, y)).amplitudes
    Hxy = apply_hamiltonian(table, basis, CIVector(basis, a * x + b * y)).amplitudes
    scale = 1 + np.abs(Hx).max() + np.abs(Hy).max()
    np.testing.assert_allclose(Hxy, a * Hx + b * Hy, atol=1e-11 * scale * (1 + abs(a) + abs(b)), rtol=0)
    assert abs(y @ Hx - x @ Hy) <= 1e-10 * scale * np.linalg.norm(x) * np.linalg.norm(y)


def test_core_energy_shifts_spectrum():
    base = build_random_hamiltonian(3, 3, 1, seed=8)
    basis = enumerate_sector(base.active_space)
    shifted = type(base)(base.active_space, base.core_energy + 2.5, base.one_electron, base.two_electron)
    np.testing.assert_allclose(
        build_dense(shifted, basis) - build_dense(base, basis), 2.5 * np.eye(basis.dimension), atol=1e-13
    )


def test_sector_mismatch_is_rejected():
    table = build_random_hamiltonian(3, 2, 0, seed=1)
    other = enumerate_sector(ActiveSpace(3, 3, 1))
    with pytest.raises(ValidationError):
        build_dense(table, other)
    with pytest.raises(ValidationError):
        CIVector(other, np.zeros(other.dimension + 1))


def test_dense_cap():
    table = build_random_hamiltonian(8, 8, 0, seed=1)
    with pytest.raises(CapacityError):
        build_dense(table, enumerate_sector(table.active_space), cap=100)


def test_thread_resolution(monkeypatch):
    monkeypatch.delenv("ORBENT_THREADS", raising=False)
    assert resolve_threads(None) == 1
    monkeypatch.setenv("ORBENT_THREADS", "3")
    assert resolve_threads(None) == 3
    assert resolve_threads(2) == 2
