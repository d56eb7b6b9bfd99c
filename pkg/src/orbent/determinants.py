"""Slater-determinant basis of a fixed (N, Sz) sector.

A determinant is a pair of occupation bit-strings, one per spin; bit ``p``
set means spatial orbital ``p`` holds an electron of that spin.  Amplitudes
refer to the operator ordering

    |D> = a+_{p1,a} a+_{p2,a} ... a+_{q1,b} a+_{q2,b} ... |vac>

with alpha creators first, each block ascending.  Orbital subsystems use the
interleaved ordering ``0a, 0b, 1a, 1b, ...`` so the two spin-orbitals of a
spatial orbital are adjacent; :func:`interleave_phase` converts between the
two conventions.
"""

from dataclasses import dataclass
from functools import cached_property
from itertools import combinations
from math import comb

import numpy as np

from .errors import CapacityError, LogicError, ValidationError

__all__ = [
    "Determinant",
    "SectorBasis",
    "enumerate_sector",
    "excitation_sign",
    "reorder_phase_front",
    "interleave_phase",
    "popcount",
    "string_occupations",
]

DEFAULT_DIMENSION_CAP = 10**8


def popcount(x):
    """Number of set bits; works on Python ints and uint64 arrays."""
    if isinstance(x, np.ndarray):
        return np.bitwise_count(x).astype(np.int64)
    return int(x).bit_count()


def _bits(string):
    return [p for p in range(string.bit_length()) if string >> p & 1]


@dataclass(frozen=True)
class Determinant:
    alpha: int
    beta: int

    def occupied(self, spin):
        return _bits(self.alpha if _spin_is_alpha(spin) else self.beta)

    def __str__(self):
        return f"Determinant(alpha={self.alpha:#b}, beta={self.beta:#b})"


def _spin_is_alpha(spin):
    s = str(spin).lower()
    if s in ("a", "alpha", "up", "+"):
        return True
    if s in ("b", "beta", "down", "-"):
        return False
    raise ValidationError(f"unknown spin label {spin!r}")


def _strings(k, n):
    """All n-electron strings over k orbitals, lexicographic in the occupied tuple."""
    out = np.empty(comb(k, n), dtype=np.uint64)
    for idx, occ in enumerate(combinations(range(k), n)):
        value = 0
        for p in occ:
            value |= 1 << p
        out[idx] = value
    return out


class _StringIndex:
    """Binary-search lookup from bit-string value to lexicographic address."""

    def __init__(self, strings):
        self.strings = strings
        self._order = np.argsort(strings, kind="stable")
        self._sorted = strings[self._order]

    def __call__(self, values):
        values = np.asarray(values, dtype=np.uint64)
        pos = np.searchsorted(self._sorted, values)
        pos = np.minimum(pos, len(self._sorted) - 1)
        if not np.all(self._sorted[pos] == values):
            raise ValidationError("string does not belong to this sector")
        return self._order[pos]


class SectorBasis:
    """Determinant basis of one (N, ms2) sector.

    The address of a determinant is ``ia * n_beta_strings + ib`` where
    ``ia`` and ``ib`` are the lexicographic ranks of its alpha and beta
    strings.  Instances are immutable.
    """

    def __init__(self, active_space, alpha_strings, beta_strings):
        self.active_space = active_space
        self.alpha_strings = alpha_strings
        self.beta_strings = beta_strings
        alpha_strings.setflags(write=False)
        beta_strings.setflags(write=False)
        self._alpha_index = _StringIndex(alpha_strings)
        self._beta_index = _StringIndex(beta_strings)

    @property
    def n_orbitals(self):
        return self.active_space.n_orbitals

    @property
    def shape(self):
        return len(self.alpha_strings), len(self.beta_strings)

    @property
    def dimension(self):
        return len(self.alpha_strings) * len(self.beta_strings)

    def __len__(self):
        return self.dimension

    def __repr__(self):
        a = self.active_space
        return f"SectorBasis(k={a.n_orbitals}, N={a.n_electrons}, ms2={a.ms2}, dim={self.dimension})"

    def address(self, det):
        ia = int(self._alpha_index(det.alpha))
        ib = int(self._beta_index(det.beta))
        return ia * len(self.beta_strings) + ib

    def addresses(self, alpha, beta):
        """Vectorized :meth:`address` over arrays of strings."""
        return self._alpha_index(alpha) * len(self.beta_strings) + self._beta_index(beta)

    def alpha_address(self, strings):
        return self._alpha_index(strings)

    def beta_address(self, strings):
        return self._beta_index(strings)

    def determinant(self, index):
        if not 0 <= index < self.dimension:
            raise ValidationError(f"address {index} outside 0..{self.dimension - 1}")
        ia, ib = divmod(int(index), len(self.beta_strings))
        return Determinant(int(self.alpha_strings[ia]), int(self.beta_strings[ib]))

    def __iter__(self):
        for a in self.alpha_strings:
            for b in self.beta_strings:
                yield Determinant(int(a), int(b))

    @cached_property
    def det_alpha(self):
        """Alpha string of every determinant, in address order."""
        out = np.repeat(self.alpha_strings, len(self.beta_strings))
        out.setflags(write=False)
        return out

    @cached_property
    def det_beta(self):
        """Beta string of every determinant, in address order."""
        out = np.tile(self.beta_strings, len(self.alpha_strings))
        out.setflags(write=False)
        return out


def enumerate_sector(space, cap=DEFAULT_DIMENSION_CAP):
    """Build the determinant basis for ``space``.

    Raises
    ------
    CapacityError
        If the sector dimension exceeds ``cap``.
    """
    k = space.n_orbitals
    dim = comb(k, space.n_alpha) * comb(k, space.n_beta)
    if dim > cap:
        raise CapacityError(f"sector dimension {dim} exceeds cap {cap}")
    return SectorBasis(space, _strings(k, space.n_alpha), _strings(k, space.n_beta))


def excitation_sign(det, spin, from_orb, to_orb):
    """Apply ``a+_{to} a_{from}`` within one spin string.

    Returns
    -------
    (Determinant, int)
        The excited determinant and the phase ``(-1)**m``, where ``m`` counts
        electrons of that spin strictly between the two orbitals.
    """
    is_alpha = _spin_is_alpha(spin)
    string = det.alpha if is_alpha else det.beta
    if not string >> from_orb & 1:
        raise LogicError(f"orbital {from_orb} is not occupied")
    if from_orb == to_orb or string >> to_orb & 1:
        raise LogicError(f"orbital {to_orb} is not empty")
    lo, hi = sorted((from_orb, to_orb))
    between = string & ((1 << hi) - 1) & ~((1 << (lo + 1)) - 1)
    phase = -1 if popcount(between) & 1 else 1
    new = string ^ (1 << from_orb) ^ (1 << to_orb)
    excited = Determinant(new, det.beta) if is_alpha else Determinant(det.alpha, new)
    return excited, phase


def _interleaved_string(det):
    out = 0
    for p in _bits(det.alpha):
        out |= 1 << (2 * p)
    for p in _bits(det.beta):
        out |= 1 << (2 * p + 1)
    return out


def reorder_phase_front(det, orbitals):
    """Parity of moving the spin-orbitals of ``orbitals`` to the front.

    Starting from the interleaved ordering ``0a, 0b, 1a, 1b, ...``, the
    occupied spin-orbitals of the given spatial orbitals are moved ahead of
    all others, every other relative order being kept.
    """
    selected = set(orbitals)
    inter = _interleaved_string(det)
    crossings = 0
    others_seen = 0
    for pos in range(inter.bit_length()):
        if not inter >> pos & 1:
            continue
        if pos // 2 in selected:
            crossings += others_seen
        else:
            others_seen += 1
    return -1 if crossings & 1 else 1


def interleave_phase(det):
    """Parity between the alpha-then-beta and the interleaved operator orderings."""
    crossings = 0
    for q in _bits(det.beta):
        crossings += popcount(det.alpha >> (q + 1))
    return -1 if crossings & 1 else 1


def string_occupations(strings, k):
    """Boolean ``(len(strings), k)`` occupation table."""
    strings = np.asarray(strings, dtype=np.uint64)
    shifts = np.arange(k, dtype=np.uint64)
    return ((strings[:, None] >> shifts[None, :]) & np.uint64(1)).astype(bool)
