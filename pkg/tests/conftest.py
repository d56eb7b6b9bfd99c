import numpy as np
import pytest

from orbent import ActiveSpace, CIVector, build_random_hamiltonian, enumerate_sector


def random_space(rng, k_range=(3, 6)):
    """A random valid (k, N, ms2) sector."""
    k = int(rng.integers(k_range[0], k_range[1] + 1))
    n = int(rng.integers(1, 2 * k))
    ms2_choices = [m for m in range(-n, n + 1, 2) if abs(m) <= min(n, 2 * k - n)]
    return ActiveSpace(k, n, int(rng.choice(ms2_choices)))


def random_table(rng, k_range=(3, 6)):
    space = random_space(rng, k_range)
    return build_random_hamiltonian(
        space.n_orbitals, space.n_electrons, space.ms2, seed=int(rng.integers(2**31))
    )


def random_vector(basis, rng):
    return CIVector(basis, rng.standard_normal(basis.dimension)).normalized()


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


@pytest.fixture
def small_sector():
    table = build_random_hamiltonian(4, 4, 0, seed=11)
    return table, enumerate_sector(table.active_space)


def pytest_terminal_summary(terminalreporter):
    import acceptance_log

    if not acceptance_log.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(acceptance_log.RESULTS):
        title, passed, detail = acceptance_log.RESULTS[number]
        terminalreporter.write_line(f"{number:>2}. {'PASS' if passed else 'FAIL'}  {title}: {detail}")
