"""One- and two-orbital reduced density matrices.

The local Hilbert space of a spatial orbital has four states, coded
``0 = empty, 1 = up, 2 = down, 3 = up+down`` with ``|up+down> =
a+_up a+_down |0>``.  A two-orbital state ``|a>_i |b>_j`` is indexed
``4*a + b``.

Fermionic phases: a determinant's creators are reordered so that those of
the kept orbitals come first, in the interleaved order (lower orbital first,
alpha before beta), followed by the environment creators.  Only the parity of
that reordering enters the RDM; any environment-only sign cancels in
``rho = M^T M``.
"""

from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .determinants import popcount
from .errors import NumericalError, ValidationError

__all__ = [
    "LocalState",
    "OneOrbitalRDM",
    "TwoOrbitalRDM",
    "one_orbital_rdm",
    "two_orbital_rdm",
    "sector_blocks",
    "clip_spectrum",
]

NEGATIVE_CLIP = 1e-10
NORM_TOL = 1e-10


class LocalState(IntEnum):
    EMPTY = 0
    UP = 1
    DOWN = 2
    UPDOWN = 3

    @property
    def n(self):
        return (0, 1, 1, 2)[self]

    @property
    def sz2(self):
        return (0, 1, -1, 0)[self]


def sector_blocks():
    """Two-orbital basis indices grouped by conserved (n, 2*Sz), in ascending n.

    Block sizes are 1, 2, 2, 4, 1, 1, 2, 2, 1.
    """
    groups = {}
    for a in LocalState:
        for b in LocalState:
            key = (a.n + b.n, a.sz2 + b.sz2)
            groups.setdefault(key, []).append(4 * a + b)
    # within n = 2, Sz = 0 comes first
    order = sorted(groups, key=lambda key: (key[0], _sz_rank(key)))
    return {key: np.array(groups[key]) for key in order}


def _sz_rank(key):
    n, sz2 = key
    if n == 2:
        return {0: 0, 2: 1, -2: 2}[sz2]
    return -sz2


def clip_spectrum(eigenvalues, clip=NEGATIVE_CLIP):
    """Zero small negative eigenvalues; raise on significantly negative ones."""
    w = np.asarray(eigenvalues, dtype=float)
    if np.any(w < -clip):
        raise NumericalError(f"density matrix eigenvalue {w.min():.3e} below -{clip:g}")
    return np.where(w < 0, 0.0, w)


@dataclass(frozen=True)
class OneOrbitalRDM:
    """Diagonal 4x4 density matrix of one spatial orbital.

    Off-diagonal elements vanish identically: the four local states carry
    distinct particle number and spin projection.
    """

    orbital: int
    diag: np.ndarray

    @property
    def matrix(self):
        return np.diag(self.diag)

    def eigenvalues(self):
        return self.diag.copy()


@dataclass(frozen=True)
class TwoOrbitalRDM:
    """16x16 density matrix on ``LocalState(i) (x) LocalState(j)``."""

    orbitals: tuple
    matrix: np.ndarray

    def eigenvalues(self):
        """Spectrum, computed block by block and clipped at zero."""
        parts = []
        for idx in sector_blocks().values():
            parts.append(np.linalg.eigvalsh(self.matrix[np.ix_(idx, idx)]))
        return clip_spectrum(np.sort(np.concatenate(parts)))

    def reduce(self, which):
        """Trace out one factor; ``which`` is 0 to keep the first orbital, 1 the second."""
        t = self.matrix.reshape(4, 4, 4, 4)
        if which == 0:
            return np.einsum("abcb->ac", t)
        if which == 1:
            return np.einsum("abad->bd", t)
        raise ValidationError("which must be 0 or 1")

    def swapped(self):
        """Same density matrix with the factor order exchanged."""
        t = self.matrix.reshape(4, 4, 4, 4).transpose(1, 0, 3, 2)
        return TwoOrbitalRDM(self.orbitals[::-1], t.reshape(16, 16).copy())


def _amplitudes(x):
    c = np.asarray(x.amplitudes, dtype=float)
    norm = np.linalg.norm(c)
    if abs(norm - 1.0) > NORM_TOL:
        raise ValidationError(f"CI vector is not normalized (norm {norm:.12f})")
    return c


def _check_orbital(i, k):
    if not isinstance(i, (int, np.integer)) or not 0 <= i < k:
        raise ValidationError(f"orbital index {i!r} outside 0..{k - 1}")
    return int(i)


def _local_codes(alpha, beta, p):
    shift = np.uint64(p)
    one = np.uint64(1)
    a = ((alpha >> shift) & one).astype(np.int64)
    b = ((beta >> shift) & one).astype(np.int64)
    return a + 2 * b, a, b


def one_orbital_rdm(x, i):
    """Reduced density matrix of orbital ``i`` (0-based)."""
    basis = x.basis
    i = _check_orbital(i, basis.n_orbitals)
    c = _amplitudes(x)
    code, _, _ = _local_codes(basis.det_alpha, basis.det_beta, i)
    diag = np.bincount(code, weights=c * c, minlength=4)
    return OneOrbitalRDM(i, clip_spectrum(diag, clip=1e-12))


def _front_phase(alpha, beta, orbitals):
    """(-1)**parity of moving the kept creators to the front (see module doc)."""
    mask = 0
    for p in orbitals:
        mask |= 1 << p
    mask = np.uint64(mask)
    env_a = alpha & ~mask
    env_b = beta & ~mask
    n_env_a = popcount(env_a)
    one = np.uint64(1)
    exponent = np.zeros(len(alpha), dtype=np.int64)
    occ = {}
    for p in orbitals:
        below = np.uint64((1 << p) - 1)
        occ_a = ((alpha >> np.uint64(p)) & one).astype(np.int64)
        occ_b = ((beta >> np.uint64(p)) & one).astype(np.int64)
        occ[p] = (occ_a, occ_b)
        exponent += occ_a * popcount(env_a & below)
        exponent += occ_b * (n_env_a + popcount(env_b & below))
    if len(orbitals) == 2:
        lo, hi = orbitals
        # alpha_hi precedes beta_lo in block order but follows it in the target order
        exponent += occ[hi][0] * occ[lo][1]
    return 1.0 - 2.0 * (exponent & 1), env_a, env_b


def two_orbital_rdm(x, i, j):
    """Reduced density matrix of the orbital pair ``(i, j)``, factors in that order.

    The fermionic reordering always places the lower-numbered orbital
    first; for ``i > j`` the result is the factor swap of
    ``two_orbital_rdm(x, j, i)``.
    """
    basis = x.basis
    k = basis.n_orbitals
    i, j = _check_orbital(i, k), _check_orbital(j, k)
    if i == j:
        raise ValidationError("two-orbital RDM needs two distinct orbitals")
    c = _amplitudes(x)
    lo, hi = min(i, j), max(i, j)
    alpha, beta = basis.det_alpha, basis.det_beta
    code_lo, _, _ = _local_codes(alpha, beta, lo)
    code_hi, _, _ = _local_codes(alpha, beta, hi)
    phase, env_a, env_b = _front_phase(alpha, beta, (lo, hi))

    if 2 * k <= 63:
        key = (env_a << np.uint64(k)) | env_b
        _, env = np.unique(key, return_inverse=True)
    else:
        _, env = np.unique(np.stack([env_a, env_b], axis=1), axis=0, return_inverse=True)
    env = env.ravel()
    M = np.zeros((int(env.max()) + 1, 16))
    M[env, 4 * code_lo + code_hi] = phase * c
    rho = M.T @ M
    rho = 0.5 * (rho + rho.T)
    out = TwoOrbitalRDM((lo, hi), rho)
    return out if i < j else out.swapped()
