"""Action of the active-space Hamiltonian on CI vectors.

Two independent routes are provided:

* :func:`apply_hamiltonian` works matrix-free on the ``(n_alpha_strings,
  n_beta_strings)`` coefficient matrix.  It writes

      H = sum_pq k_pq E_pq + 1/2 sum_pqrs (pq|rs) E_pq E_rs,
      k_pq = h_pq - 1/2 sum_r (pr|rq),

  and evaluates the two-body part as ``E_pq G_pq`` with
  ``G_pq = sum_rs (pq|rs) E_rs c``, using precomputed string excitation
  tables.  Only the ``p >= q`` half of the pair index is stored.
* :func:`build_dense` assembles the matrix element by element from the
  Slater-Condon rules, driven by string-level single and double excitations.
"""

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .determinants import excitation_sign, popcount, string_occupations, Determinant
from .errors import CapacityError, ValidationError

__all__ = [
    "CIVector",
    "HamiltonianOperator",
    "apply_hamiltonian",
    "build_dense",
    "hamiltonian_diagonal",
    "resolve_threads",
]

DEFAULT_DENSE_CAP = 4000


def resolve_threads(threads=None):
    """Worker count from the argument, else ``ORBENT_THREADS``, else 1."""
    if threads is None:
        threads = os.environ.get("ORBENT_THREADS", "1")
    try:
        threads = int(threads)
    except ValueError:
        raise ValidationError(f"thread count must be an integer, got {threads!r}") from None
    if threads < 1:
        raise ValidationError("thread count must be at least 1")
    return threads


@dataclass
class CIVector:
    """CI amplitudes over a :class:`SectorBasis`, in address order."""

    basis: object
    amplitudes: np.ndarray
    label: str = ""

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=float)
        if self.amplitudes.shape != (self.basis.dimension,):
            raise ValidationError(
                f"{self.amplitudes.shape[0]} amplitudes for a basis of dimension "
                f"{self.basis.dimension}"
            )

    @property
    def norm(self):
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self):
        n = self.norm
        if n == 0.0:
            raise ValidationError("cannot normalize a zero vector")
        return CIVector(self.basis, self.amplitudes / n, self.label)

    def as_matrix(self):
        """View as ``(n_alpha_strings, n_beta_strings)``."""
        return self.amplitudes.reshape(self.basis.shape)

    @classmethod
    def from_determinants(cls, basis, coefficients, label=""):
        """Build from a ``{Determinant: amplitude}`` mapping."""
        amps = np.zeros(basis.dimension)
        for det, value in coefficients.items():
            amps[basis.address(det)] += value
        return cls(basis, amps, label)


def _check_compatible(table, basis):
    a, b = table.active_space, basis.active_space
    if (a.n_orbitals, a.n_electrons, a.ms2) != (b.n_orbitals, b.n_electrons, b.ms2):
        raise ValidationError(
            f"integral table CAS({a.n_electrons},{a.n_orbitals}) ms2={a.ms2} does not match "
            f"basis CAS({b.n_electrons},{b.n_orbitals}) ms2={b.ms2}"
        )


def _excitation_tables(strings, index, k):
    """Map every E_pq to arrays (src, dst, sign) over one spin's strings.

    ``E_pq |src> = sign |dst>``; strings where the excitation vanishes are
    omitted.  For a fixed (p, q) the map src -> dst is injective.
    """
    tables = {}
    one = np.uint64(1)
    all_idx = np.arange(len(strings))
    for q in range(k):
        occ_q = (strings >> np.uint64(q)) & one == one
        for p in range(k):
            if p == q:
                src = all_idx[occ_q]
                tables[p, q] = (src, src, np.ones(len(src)))
                continue
            mask = occ_q & ((strings >> np.uint64(p)) & one == 0)
            src = all_idx[mask]
            s = strings[mask]
            lo, hi = min(p, q), max(p, q)
            between = np.uint64(((1 << hi) - 1) & ~((1 << (lo + 1)) - 1))
            sign = 1.0 - 2.0 * (popcount(s & between) & 1)
            new = s ^ np.uint64(1 << p) ^ np.uint64(1 << q)
            tables[p, q] = (src, index(new), sign)
    return tables


def hamiltonian_diagonal(table, basis):
    """Diagonal matrix elements ``<D|H|D>`` in address order."""
    _check_compatible(table, basis)
    k = table.n_orbitals
    g = table.eri_full()
    hd = np.diag(table.one_electron)
    coul = np.einsum("iijj->ij", g)
    exch = np.einsum("ijji->ij", g)
    oa = string_occupations(basis.alpha_strings, k).astype(float)
    ob = string_occupations(basis.beta_strings, k).astype(float)
    same = coul - exch
    ea = oa @ hd + 0.5 * np.einsum("ai,ij,aj->a", oa, same, oa)
    eb = ob @ hd + 0.5 * np.einsum("bi,ij,bj->b", ob, same, ob)
    cross = oa @ coul @ ob.T
    return (ea[:, None] + eb[None, :] + cross).ravel() + table.core_energy


class HamiltonianOperator:
    """Reusable matrix-free Hamiltonian for one (table, basis) pair.

    Precomputes the string excitation tables and integral intermediates so
    repeated products (as in Davidson iterations) only pay for the
    contraction.  Working memory is about ``k(k+1)/2`` CI vectors.

    Parameters
    ----------
    table : IntegralTable
    basis : SectorBasis
    threads : int, optional
        Workers for the excitation scatter/gather.  Results are
        deterministic for a fixed worker count; different counts may
        reorder floating-point sums.
    """

    def __init__(self, table, basis, threads=None):
        _check_compatible(table, basis)
        self.table = table
        self.basis = basis
        self.threads = resolve_threads(threads)
        k = table.n_orbitals
        self.k = k
        self.alpha_tables = _excitation_tables(basis.alpha_strings, basis.alpha_address, k)
        self.beta_tables = _excitation_tables(basis.beta_strings, basis.beta_address, k)
        self.pairs = [(p, q) for p in range(k) for q in range(p + 1)]

        g = table.eri_full()
        kmat = table.one_electron - 0.5 * np.einsum("prrq->pq", g)
        # D'_pq = (E_pq + E_qp) c for p > q, E_pp c on the diagonal, so
        # sum_rs (pq|rs) E_rs c = sum_{r>=s} (pq|rs) D'_rs.
        pr = np.array([p for p, _ in self.pairs])
        qr = np.array([q for _, q in self.pairs])
        self.eri_pairs = np.ascontiguousarray(g[pr[:, None], qr[:, None], pr[None, :], qr[None, :]])
        self.k_pairs = np.array([kmat[p, q] for p, q in self.pairs])
        self._diagonal = None

    @property
    def dimension(self):
        return self.basis.dimension

    def diagonal(self):
        if self._diagonal is None:
            self._diagonal = hamiltonian_diagonal(self.table, self.basis)
            self._diagonal.setflags(write=False)
        return self._diagonal

    def _excite(self, out, c, p, q):
        """out += E_pq c on coefficient matrices."""
        src, dst, sign = self.alpha_tables[p, q]
        out[dst, :] += sign[:, None] * c[src, :]
        src, dst, sign = self.beta_tables[p, q]
        out[:, dst] += c[:, src] * sign[None, :]

    def _pair_excite(self, out, c, pair):
        p, q = pair
        self._excite(out, c, p, q)
        if p != q:
            self._excite(out, c, q, p)

    def _chunks(self):
        n = len(self.pairs)
        w = min(self.threads, n)
        bounds = np.linspace(0, n, w + 1).astype(int)
        return [range(bounds[i], bounds[i + 1]) for i in range(w)]

    def _map(self, fn, chunks):
        if len(chunks) == 1:
            return [fn(chunks[0])]
        with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
            return list(pool.map(fn, chunks))

    def matvec(self, x):
        x = np.asarray(x, dtype=float)
        na, nb = self.basis.shape
        c = x.reshape(na, nb)
        npairs = len(self.pairs)
        d = np.zeros((npairs, na, nb))

        def gather(chunk):
            for idx in chunk:
                self._pair_excite(d[idx], c, self.pairs[idx])

        chunks = self._chunks()
        self._map(gather, chunks)

        dflat = d.reshape(npairs, na * nb)
        one_body = (self.k_pairs @ dflat).reshape(na, nb)
        g = (self.eri_pairs @ dflat).reshape(npairs, na, nb)

        def scatter(chunk):
            part = np.zeros((na, nb))
            for idx in chunk:
                self._pair_excite(part, g[idx], self.pairs[idx])
            return part

        sigma = one_body
        for part in self._map(scatter, chunks):
            sigma = sigma + 0.5 * part
        sigma = sigma.ravel() + self.table.core_energy * x
        return sigma

    def __call__(self, x):
        return self.matvec(x)


@lru_cache(maxsize=8)
def _cached_operator(table, basis, threads):
    return HamiltonianOperator(table, basis, threads)


def apply_hamiltonian(table, basis, x, threads=None):
    """Return ``H x`` as a new :class:`CIVector`.

    ``x`` may be a :class:`CIVector` or a plain amplitude array; the map is
    linear, so ``x`` need not be normalized.
    """
    _check_compatible(table, basis)
    amps = x.amplitudes if isinstance(x, CIVector) else np.asarray(x, dtype=float)
    if isinstance(x, CIVector) and x.basis is not basis:
        if x.basis.dimension != basis.dimension:
            raise ValidationError("CI vector belongs to a different basis")
    if amps.shape != (basis.dimension,):
        raise ValidationError("vector length does not match basis dimension")
    op = _cached_operator(table, basis, resolve_threads(threads))
    label = x.label if isinstance(x, CIVector) else ""
    return CIVector(basis, op.matvec(amps), label)


# ---------------------------------------------------------------------------
# Dense Slater-Condon construction


def _string_singles(strings, index, k, spin):
    """All single excitations of one spin: (src, dst, i, a, sign) tuples."""
    out = []
    for src, s in enumerate(strings):
        s = int(s)
        for i in range(k):
            if not s >> i & 1:
                continue
            for a in range(k):
                if s >> a & 1:
                    continue
                det = Determinant(s, 0) if spin == "alpha" else Determinant(0, s)
                new, sign = excitation_sign(det, spin, i, a)
                new_s = new.alpha if spin == "alpha" else new.beta
                out.append((src, int(index(new_s)), i, a, sign))
    return out


def _string_doubles(strings, index, k, spin):
    """Same-spin double excitations i<j -> a<b: (src, dst, i, j, a, b, sign)."""
    out = []
    for src, s in enumerate(strings):
        s = int(s)
        occ = [p for p in range(k) if s >> p & 1]
        vir = [p for p in range(k) if not s >> p & 1]
        for x, i in enumerate(occ):
            for j in occ[x + 1:]:
                for y, a in enumerate(vir):
                    for b in vir[y + 1:]:
                        det = Determinant(s, 0) if spin == "alpha" else Determinant(0, s)
                        mid, s1 = excitation_sign(det, spin, i, a)
                        new, s2 = excitation_sign(mid, spin, j, b)
                        new_s = new.alpha if spin == "alpha" else new.beta
                        out.append((src, int(index(new_s)), i, j, a, b, s1 * s2))
    return out


def build_dense(table, basis, cap=DEFAULT_DENSE_CAP):
    """Dense Hamiltonian matrix from the Slater-Condon rules.

    Raises
    ------
    CapacityError
        If the sector dimension exceeds ``cap``.
    """
    _check_compatible(table, basis)
    dim = basis.dimension
    if dim > cap:
        raise CapacityError(f"dense build of dimension {dim} exceeds cap {cap}")
    k = table.n_orbitals
    h = table.one_electron
    g = table.eri_full()
    na, nb = basis.shape
    occ_a = string_occupations(basis.alpha_strings, k)
    occ_b = string_occupations(basis.beta_strings, k)
    H = np.zeros((na, nb, na, nb))
    ib_all = np.arange(nb)
    ia_all = np.arange(na)

    # diagonal
    for ia in range(na):
        oa = np.flatnonzero(occ_a[ia])
        e_a = sum(h[i, i] for i in oa)
        e_a += 0.5 * sum(g[i, i, j, j] - g[i, j, j, i] for i in oa for j in oa)
        for ib in range(nb):
            ob = np.flatnonzero(occ_b[ib])
            e_b = sum(h[i, i] for i in ob)
            e_b += 0.5 * sum(g[i, i, j, j] - g[i, j, j, i] for i in ob for j in ob)
            e_ab = sum(g[i, i, j, j] for i in oa for j in ob)
            H[ia, ib, ia, ib] = e_a + e_b + e_ab + table.core_energy

    singles_a = _string_singles(basis.alpha_strings, basis.alpha_address, k, "alpha")
    singles_b = _string_singles(basis.beta_strings, basis.beta_address, k, "beta")

    # single excitations: h_ai + sum_j [(ai|jj) - (aj|ji)] over same spin + (ai|jj) over other
    for src, dst, i, a, sign in singles_a:
        same = sum(g[a, i, j, j] - g[a, j, j, i] for j in np.flatnonzero(occ_a[src]))
        other = occ_b.astype(float) @ np.array([g[a, i, j, j] for j in range(k)])
        H[dst, ib_all, src, ib_all] = sign * (h[a, i] + same + other)
    for src, dst, i, a, sign in singles_b:
        same = sum(g[a, i, j, j] - g[a, j, j, i] for j in np.flatnonzero(occ_b[src]))
        other = occ_a.astype(float) @ np.array([g[a, i, j, j] for j in range(k)])
        H[ia_all, dst, ia_all, src] = sign * (h[a, i] + same + other)

    # same-spin doubles: (ai|bj) - (aj|bi)
    for src, dst, i, j, a, b, sign in _string_doubles(
        basis.alpha_strings, basis.alpha_address, k, "alpha"
    ):
        H[dst, ib_all, src, ib_all] = sign * (g[a, i, b, j] - g[a, j, b, i])
    for src, dst, i, j, a, b, sign in _string_doubles(
        basis.beta_strings, basis.beta_address, k, "beta"
    ):
        H[ia_all, dst, ia_all, src] = sign * (g[a, i, b, j] - g[a, j, b, i])

    # opposite-spin doubles: (ai|bj)
    if singles_b:
        sb = np.array(singles_b)
        b_src, b_dst = sb[:, 0].astype(int), sb[:, 1].astype(int)
        b_j, b_b, b_sign = sb[:, 2].astype(int), sb[:, 3].astype(int), sb[:, 4]
        for src, dst, i, a, sign in singles_a:
            H[dst, b_dst, src, b_src] = sign * b_sign * g[a, i, b_b, b_j]

    return H.reshape(dim, dim)
