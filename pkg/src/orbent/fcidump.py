"""Active-space integrals: FCIDUMP reading/writing and built-in model Hamiltonians.

Integrals are real and use chemist notation, ``(pq|rs)``.  Two-electron
integrals are kept in a packed array holding one value per 8-fold symmetry
class, so every symmetric image of an index quadruple resolves to the same
slot.  Indices are 0-based in memory and 1-based in files.
"""

import io
import re
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DuplicateRecordWarning, ParseError, ValidationError

__all__ = [
    "ActiveSpace",
    "IntegralTable",
    "parse_fcidump",
    "read_fcidump",
    "write_fcidump",
    "save_fcidump",
    "build_hubbard_chain",
    "build_random_hamiltonian",
    "transform_orbitals",
    "permute_orbitals",
    "core_orbitals",
    "pair_index",
    "eri_index",
]

MAX_ORBITALS = 64


@dataclass(frozen=True)
class ActiveSpace:
    """CAS(N, k) particle sector.

    Parameters
    ----------
    n_orbitals : int
        Number of spatial orbitals ``k``.
    n_electrons : int
        Number of electrons ``N``.
    ms2 : int
        Twice the spin projection, ``N_alpha - N_beta``.
    orbital_irreps : tuple of int, optional
        Irrep labels, carried along but never used to restrict the CI space.
    """

    n_orbitals: int
    n_electrons: int
    ms2: int = 0
    orbital_irreps: tuple = None

    def __post_init__(self):
        k, n, m = self.n_orbitals, self.n_electrons, self.ms2
        if not 0 < k <= MAX_ORBITALS:
            raise ValidationError(f"n_orbitals must be in 1..{MAX_ORBITALS}, got {k}")
        if not 0 <= n <= 2 * k:
            raise ValidationError(f"n_electrons={n} does not fit in {k} orbitals")
        if abs(m) > n or (n + m) % 2:
            raise ValidationError(f"invalid spin projection ms2={m} for {n} electrons")
        na, nb = (n + m) // 2, (n - m) // 2
        if na > k or nb > k:
            raise ValidationError(f"ms2={m} needs more than {k} orbitals per spin")
        if self.orbital_irreps is not None:
            irreps = tuple(int(x) for x in self.orbital_irreps)
            if len(irreps) != k:
                raise ValidationError(f"expected {k} irrep labels, got {len(irreps)}")
            object.__setattr__(self, "orbital_irreps", irreps)

    @property
    def n_alpha(self):
        return (self.n_electrons + self.ms2) // 2

    @property
    def n_beta(self):
        return (self.n_electrons - self.ms2) // 2


def pair_index(p, q):
    """Packed index of the unordered pair ``{p, q}``."""
    if p < q:
        p, q = q, p
    return p * (p + 1) // 2 + q


def eri_index(p, q, r, s):
    """Packed index of ``(pq|rs)`` after folding all 8 symmetric images."""
    return pair_index(pair_index(p, q), pair_index(r, s))


def _pack_eri(full):
    k = full.shape[0]
    npair = k * (k + 1) // 2
    rows, cols = np.tril_indices(k)
    pairs = full[rows[:, None], cols[:, None], rows[None, :], cols[None, :]]
    i, j = np.tril_indices(npair)
    return np.ascontiguousarray(pairs[i, j])


def _unpack_eri(packed, k):
    npair = k * (k + 1) // 2
    pairs = np.zeros((npair, npair))
    i, j = np.tril_indices(npair)
    pairs[i, j] = packed
    pairs[j, i] = packed
    lookup = np.zeros((k, k), dtype=np.intp)
    rows, cols = np.tril_indices(k)
    lookup[rows, cols] = np.arange(npair)
    lookup[cols, rows] = np.arange(npair)
    return pairs[lookup[:, :, None, None], lookup[None, None, :, :]]


@dataclass(frozen=True, eq=False)
class IntegralTable:
    """Active-space Hamiltonian in a fixed orbital basis.

    Attributes
    ----------
    active_space : ActiveSpace
    core_energy : float
        Constant energy shift (hartree).
    one_electron : np.ndarray, shape (k, k)
        Symmetric one-electron integrals ``h_pq``.
    two_electron : np.ndarray, shape (npair*(npair+1)/2,)
        Packed two-electron integrals; see :func:`eri_index`.
    """

    active_space: ActiveSpace
    core_energy: float
    one_electron: np.ndarray
    two_electron: np.ndarray
    _full_cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        k = self.active_space.n_orbitals
        h = np.array(self.one_electron, dtype=float)
        if h.shape != (k, k):
            raise ValidationError(f"one_electron has shape {h.shape}, expected {(k, k)}")
        if not np.array_equal(h, h.T):
            raise ValidationError("one_electron integrals are not symmetric")
        npair = k * (k + 1) // 2
        g = np.array(self.two_electron, dtype=float).ravel()
        if g.shape != (npair * (npair + 1) // 2,):
            raise ValidationError("two_electron array does not match packed size")
        h.setflags(write=False)
        g.setflags(write=False)
        object.__setattr__(self, "one_electron", h)
        object.__setattr__(self, "two_electron", g)
        object.__setattr__(self, "core_energy", float(self.core_energy))

    @classmethod
    def from_arrays(cls, active_space, core_energy, one_electron, two_electron, atol=1e-12):
        """Build a table from a dense ``(k, k, k, k)`` integral array.

        The dense array must carry 8-fold permutational symmetry to ``atol``.
        """
        g = np.asarray(two_electron, dtype=float)
        k = active_space.n_orbitals
        if g.shape != (k, k, k, k):
            raise ValidationError(f"two_electron has shape {g.shape}, expected {(k,) * 4}")
        for axes in ((1, 0, 2, 3), (0, 1, 3, 2), (2, 3, 0, 1)):
            if not np.allclose(g, g.transpose(axes), rtol=0, atol=atol):
                raise ValidationError("two_electron integrals lack 8-fold symmetry")
        h = np.asarray(one_electron, dtype=float)
        h = 0.5 * (h + h.T)
        return cls(active_space, core_energy, h, _pack_eri(g))

    @property
    def n_orbitals(self):
        return self.active_space.n_orbitals

    def eri(self, p, q, r, s):
        """Return ``(pq|rs)`` for 0-based indices."""
        return self.two_electron[eri_index(p, q, r, s)]

    def eri_full(self):
        """Dense read-only ``(k, k, k, k)`` view of the two-electron integrals."""
        full = self._full_cache.get("eri")
        if full is None:
            full = _unpack_eri(self.two_electron, self.n_orbitals)
            full.setflags(write=False)
            self._full_cache["eri"] = full
        return full

    def equals(self, other, atol=0.0):
        """Compare two tables value by value, with absolute tolerance ``atol``."""
        if not isinstance(other, IntegralTable):
            return NotImplemented
        a, b = self.active_space, other.active_space
        if (a.n_orbitals, a.n_electrons, a.ms2) != (b.n_orbitals, b.n_electrons, b.ms2):
            return False
        return (
            abs(self.core_energy - other.core_energy) <= atol
            and np.allclose(self.one_electron, other.one_electron, rtol=0, atol=atol)
            and np.allclose(self.two_electron, other.two_electron, rtol=0, atol=atol)
        )

    def with_space(self, active_space):
        """Same integrals, different electron count or spin projection."""
        if active_space.n_orbitals != self.n_orbitals:
            raise ValidationError("orbital count mismatch")
        return IntegralTable(active_space, self.core_energy, self.one_electron, self.two_electron)


# ---------------------------------------------------------------------------
# FCIDUMP reading

_KEY_RE = re.compile(r"([A-Za-z_][A-Za-z_0-9]*)\s*=")


def _find_terminator(line):
    """Return (text before terminator, True) or (line, False)."""
    stripped = line.strip()
    upper = stripped.upper()
    for term in ("&END", "/END", "$END"):
        pos = upper.find(term)
        if pos >= 0:
            return stripped[:pos], True
    if stripped.endswith("/") or stripped == "$":
        return stripped.rstrip("/$"), True
    return stripped, False


def _parse_header(text, lineno):
    body = text.strip()
    if body[:4].upper() == "&FCI":
        body = body[4:]
    fields = {}
    matches = list(_KEY_RE.finditer(body))
    leading = body[: matches[0].start()] if matches else body
    if leading.strip(" ,"):
        raise ParseError(f"unexpected text in namelist header: {body!r}", lineno)
    for m, nxt in zip(matches, matches[1:] + [None]):
        raw = body[m.end(): nxt.start() if nxt else len(body)]
        values = [v for v in re.split(r"[,\s]+", raw) if v]
        fields[m.group(1).upper()] = values
    return fields


def _header_int(fields, key, lineno, default=None):
    if key not in fields:
        if default is None:
            raise ParseError(f"namelist header lacks {key}", lineno)
        return default
    values = fields[key]
    if len(values) != 1:
        raise ParseError(f"{key} expects one value, got {values}", lineno)
    try:
        return int(values[0])
    except ValueError:
        raise ParseError(f"{key}={values[0]!r} is not an integer", lineno) from None


def _to_float(token, lineno):
    if "(" in token or "j" in token.lower():
        raise ParseError(f"complex value {token!r} is not supported", lineno)
    try:
        return float(token.replace("D", "E").replace("d", "e"))
    except ValueError:
        raise ParseError(f"non-numeric value {token!r}", lineno) from None


def parse_fcidump(text_stream):
    """Parse an FCIDUMP file into an :class:`IntegralTable`.

    Parameters
    ----------
    text_stream : file-like or str
        Open text stream, or the file contents as a string.

    Returns
    -------
    IntegralTable

    Raises
    ------
    ParseError
        Malformed header or body line; the message names the line.
    ValidationError
        Header values describe an impossible particle sector.
    """
    if isinstance(text_stream, str):
        text_stream = io.StringIO(text_stream)

    header_parts = []
    header_line = 0
    lineno = 0
    terminated = False
    for line in text_stream:
        lineno += 1
        if not line.strip() and not header_parts:
            continue
        if not header_parts:
            header_line = lineno
            if not line.strip().upper().startswith("&FCI"):
                raise ParseError("file does not start with an &FCI namelist", lineno)
        text, terminated = _find_terminator(line)
        header_parts.append(text)
        if terminated:
            break
    if not header_parts:
        raise ParseError("empty input", max(lineno, 1))
    if not terminated:
        raise ParseError("namelist header is not terminated by &END or /", lineno)

    fields = _parse_header(" ".join(header_parts), header_line)
    norb = _header_int(fields, "NORB", header_line)
    nelec = _header_int(fields, "NELEC", header_line)
    ms2 = _header_int(fields, "MS2", header_line, default=0)
    if _header_int(fields, "IUHF", header_line, default=0):
        raise ValidationError("unrestricted (IUHF) integral files are not supported")
    irreps = None
    if "ORBSYM" in fields:
        try:
            irreps = tuple(int(v) for v in fields["ORBSYM"])
        except ValueError:
            raise ParseError("ORBSYM entries must be integers", header_line) from None
    if norb <= 0 or norb > MAX_ORBITALS:
        raise ParseError(f"NORB={norb} is outside 1..{MAX_ORBITALS}", header_line)
    space = ActiveSpace(norb, nelec, ms2, irreps)

    core = 0.0
    h = np.zeros((norb, norb))
    npair = norb * (norb + 1) // 2
    eri = np.zeros(npair * (npair + 1) // 2)
    seen = set()
    n_duplicates = 0
    for line in text_stream:
        lineno += 1
        tokens = line.split()
        if not tokens:
            continue
        if len(tokens) != 5:
            raise ParseError(f"expected 5 fields (value i j k l), got {len(tokens)}", lineno)
        value = _to_float(tokens[0], lineno)
        try:
            i, j, k, l = (int(t) for t in tokens[1:])
        except ValueError:
            raise ParseError(f"non-integer orbital index in {tokens[1:]}", lineno) from None
        if any(not 0 <= x <= norb for x in (i, j, k, l)):
            raise ParseError(f"orbital index out of range 0..{norb}", lineno)

        if i == j == k == l == 0:
            slot = ("core",)
        elif k == l == 0 and i and j:
            slot = ("h", pair_index(i - 1, j - 1))
        elif i and j and k and l:
            slot = ("g", eri_index(i - 1, j - 1, k - 1, l - 1))
        elif j == k == l == 0:
            # orbital energy record written by some programs; not part of H
            continue
        else:
            raise ParseError(f"unsupported index pattern {(i, j, k, l)}", lineno)

        if slot in seen:
            n_duplicates += 1
        seen.add(slot)
        if slot[0] == "core":
            core = value
        elif slot[0] == "h":
            h[i - 1, j - 1] = h[j - 1, i - 1] = value
        else:
            eri[slot[1]] = value

    if n_duplicates:
        warnings.warn(
            f"{n_duplicates} integral record(s) overwrote an earlier value for the same slot",
            DuplicateRecordWarning,
            stacklevel=2,
        )
    return IntegralTable(space, core, h, eri)


def read_fcidump(path):
    """Read an FCIDUMP file from ``path``."""
    with open(path, encoding="utf-8") as f:
        return parse_fcidump(f)


# ---------------------------------------------------------------------------
# FCIDUMP writing


def write_fcidump(table, sink):
    """Write ``table`` in FCIDUMP format to a text sink.

    Only nonzero values are written, one record per symmetry class, with 17
    significant digits so that reading the file back reproduces every value
    exactly.
    """
    space = table.active_space
    k = space.n_orbitals
    sink.write(f"&FCI NORB={k},NELEC={space.n_electrons},MS2={space.ms2},\n")
    if space.orbital_irreps is not None:
        sink.write(" ORBSYM=" + ",".join(str(x) for x in space.orbital_irreps) + ",\n")
    sink.write(" ISYM=1,\n&END\n")

    def record(value, i, j, k_, l):
        sink.write(f"{value: .16e} {i:4d} {j:4d} {k_:4d} {l:4d}\n")

    g = table.two_electron
    for p in range(k):
        for q in range(p + 1):
            pq = pair_index(p, q)
            for r in range(p + 1):
                for s in range(r + 1):
                    rs = pair_index(r, s)
                    if rs > pq:
                        continue
                    value = g[pair_index(pq, rs)]
                    if value != 0.0:
                        record(value, p + 1, q + 1, r + 1, s + 1)
    h = table.one_electron
    for p in range(k):
        for q in range(p + 1):
            if h[p, q] != 0.0:
                record(h[p, q], p + 1, q + 1, 0, 0)
    if table.core_energy != 0.0:
        record(table.core_energy, 0, 0, 0, 0)


def save_fcidump(table, path):
    with open(path, "w", encoding="utf-8") as f:
        write_fcidump(table, f)


# ---------------------------------------------------------------------------
# Model Hamiltonians


def build_hubbard_chain(L, t, U, N, ms2=0, periodic=False):
    """One-band Hubbard chain expressed as an integral table.

    Parameters
    ----------
    L : int
        Number of sites (one spatial orbital per site).
    t : float
        Nearest-neighbour hopping; enters as ``h[i, i+1] = -t``.
    U : float
        On-site repulsion; enters as ``(ii|ii) = U``.
    N, ms2 : int
        Particle sector.
    periodic : bool
        Add the bond between the last and first site (only when ``L > 2``).
    """
    if L < 1:
        raise ValidationError("a Hubbard chain needs at least one site")
    space = ActiveSpace(L, N, ms2)
    h = np.zeros((L, L))
    for i in range(L - 1):
        h[i, i + 1] = h[i + 1, i] = -t
    if periodic and L > 2:
        h[0, L - 1] = h[L - 1, 0] = -t
    npair = L * (L + 1) // 2
    g = np.zeros(npair * (npair + 1) // 2)
    for i in range(L):
        g[eri_index(i, i, i, i)] = U
    return IntegralTable(space, 0.0, h, g)


def build_random_hamiltonian(k, N, ms2=0, seed=0, n_aux=None, coupling=0.1):
    """Random molecule-like integrals, used for tests and scale checks.

    The two-electron part is a sum of outer products of symmetric factor
    matrices, which keeps the ERI supermatrix positive semidefinite and
    8-fold symmetric.  One-electron diagonals are spread orbital energies so
    the spectrum resembles a small active space around a Fermi level.
    """
    rng = np.random.default_rng(seed)
    space = ActiveSpace(k, N, ms2)
    eps = np.sort(rng.uniform(-2.0, 1.0, size=k))
    off = rng.normal(scale=coupling, size=(k, k))
    h = np.diag(eps) + 0.5 * (off + off.T) - np.diag(np.diag(off))
    n_aux = n_aux or 2 * k
    factors = rng.normal(scale=0.25, size=(n_aux, k, k))
    factors = 0.5 * (factors + factors.transpose(0, 2, 1))
    factors[:, np.arange(k), np.arange(k)] += 0.3
    eri = np.einsum("xpq,xrs->pqrs", factors, factors) / n_aux
    core = float(rng.uniform(-1.0, 1.0))
    return IntegralTable.from_arrays(space, core, h, eri)


def transform_orbitals(table, coeffs):
    """Rotate the orbital basis: new orbital ``a`` is ``sum_p coeffs[p, a] |p>``.

    ``coeffs`` must be orthogonal.  Irrep labels are dropped because a general
    rotation mixes symmetry blocks.
    """
    c = np.asarray(coeffs, dtype=float)
    k = table.n_orbitals
    if c.shape != (k, k) or not np.allclose(c.T @ c, np.eye(k), atol=1e-10):
        raise ValidationError("orbital rotation must be an orthogonal k x k matrix")
    h = c.T @ table.one_electron @ c
    g = np.einsum("pqrs,pa,qb,rc,sd->abcd", table.eri_full(), c, c, c, c, optimize=True)
    g = (g + g.transpose(1, 0, 2, 3)) / 2
    g = (g + g.transpose(0, 1, 3, 2)) / 2
    g = (g + g.transpose(2, 3, 0, 1)) / 2
    a = table.active_space
    space = ActiveSpace(a.n_orbitals, a.n_electrons, a.ms2)
    return IntegralTable.from_arrays(space, table.core_energy, h, g)


def permute_orbitals(table, perm):
    """Relabel orbitals so that new orbital ``a`` is old orbital ``perm[a]``.

    Exact (no floating-point arithmetic on the integrals).
    """
    perm = np.asarray(perm, dtype=np.intp)
    k = table.n_orbitals
    if sorted(perm.tolist()) != list(range(k)):
        raise ValidationError("perm must be a permutation of 0..k-1")
    h = table.one_electron[np.ix_(perm, perm)]
    g = table.eri_full()[np.ix_(perm, perm, perm, perm)]
    a = table.active_space
    irreps = None if a.orbital_irreps is None else tuple(a.orbital_irreps[i] for i in perm)
    space = ActiveSpace(a.n_orbitals, a.n_electrons, a.ms2, irreps)
    return IntegralTable(space, table.core_energy, h, _pack_eri(g))


def core_orbitals(table):
    """Eigenvectors of the one-electron matrix, ascending in energy.

    Each column's largest-magnitude component is made positive so the basis
    is reproducible.
    """
    w, v = np.linalg.eigh(table.one_electron)
    idx = np.argmax(np.abs(v), axis=0)
    signs = np.sign(v[idx, np.arange(v.shape[1])])
    signs[signs == 0] = 1.0
    return w, v * signs
