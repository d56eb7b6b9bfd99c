"""Lowest eigenpairs of the sector Hamiltonian.

Small sectors are diagonalized densely.  Larger ones use Davidson iteration
with a Jacobi (diagonal) preconditioner, started from unit vectors on the
lowest-diagonal determinants so results are reproducible.

When ``n_alpha == n_beta`` the Hamiltonian and its diagonal both commute
with the alpha/beta spin flip, so Davidson started from a closed-shell
determinant can never leave the flip-symmetric subspace.  Such sectors are
solved once per flip parity and the roots merged.
"""

import logging
import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import ConvergenceError, DegeneracyWarning, ValidationError
from .hamiltonian import DEFAULT_DENSE_CAP, CIVector, HamiltonianOperator, build_dense

__all__ = ["SolverOptions", "ConvergenceReport", "GroundState", "ground_state", "davidson"]

logger = logging.getLogger(__name__)

DEGENERACY_GAP = 1e-8
PRECONDITIONER_GUARD = 1e-6


@dataclass(frozen=True)
class SolverOptions:
    tol: float = 1e-9
    max_iter: int = 200
    n_roots: int = 1
    subspace_cap: int = 40
    dense_cutoff: int = 512
    threads: int = None

    def __post_init__(self):
        if self.tol <= 0:
            raise ValidationError("tol must be positive")
        if self.max_iter < 1:
            raise ValidationError("max_iter must be at least 1")
        if self.n_roots < 1:
            raise ValidationError("n_roots must be at least 1")
        if self.subspace_cap < 2 * self.n_roots:
            raise ValidationError("subspace_cap must hold at least two vectors per root")


@dataclass
class ConvergenceReport:
    """What the solver did.

    ``residual_history[it][r]`` is the residual norm of root ``r`` at
    iteration ``it`` and ``energy_history[it][r]`` its Ritz value.  Restarts
    collapse the subspace onto the current Ritz vectors, so Ritz values never
    increase, across restarts included.  Residual norms usually fall but are
    not monotone in general.  ``restart_iterations`` lists the iterations
    after which a restart happened.
    """

    method: str
    converged: bool = False
    iterations: int = 0
    restarts: int = 0
    restart_iterations: list = field(default_factory=list)
    residual_history: list = field(default_factory=list)
    energy_history: list = field(default_factory=list)
    final_residuals: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    def as_dict(self):
        return {
            "method": self.method,
            "converged": self.converged,
            "iterations": self.iterations,
            "restarts": self.restarts,
            "restart_iterations": list(self.restart_iterations),
            "final_residuals": [float(r) for r in self.final_residuals],
            "warnings": list(self.warnings),
        }


class GroundState(NamedTuple):
    energies: np.ndarray
    vectors: list
    report: ConvergenceReport


def _fix_sign(v):
    """Make the largest-magnitude component positive (first one on ties)."""
    idx = int(np.argmax(np.abs(v)))
    return -v if v[idx] < 0 else v


def _orthonormalize(t, V, drop_tol=1e-10):
    for _ in range(2):
        if V.shape[1]:
            t = t - V @ (V.T @ t)
    n = np.linalg.norm(t)
    if n < drop_tol:
        return None
    return t / n


def davidson(matvec, diagonal, n_roots=1, tol=1e-9, max_iter=200, subspace_cap=40, start=None):
    """Davidson iteration for the lowest ``n_roots`` eigenpairs.

    Parameters
    ----------
    matvec : callable
        ``x -> H x`` on 1-D arrays.
    diagonal : np.ndarray
        Diagonal of ``H``, used by the preconditioner.
    start : np.ndarray, shape (dim, m), optional
        Initial subspace; defaults to unit vectors on the ``n_roots`` lowest
        diagonal entries.

    Returns
    -------
    (np.ndarray, np.ndarray, ConvergenceReport)
        Energies, column eigenvectors and the report.

    Raises
    ------
    ConvergenceError
        If the residual criterion is not met within ``max_iter`` iterations.
    """
    dim = len(diagonal)
    if dim < n_roots:
        raise ValidationError(f"sector dimension {dim} is smaller than n_roots={n_roots}")
    report = ConvergenceReport(method="davidson")
    if start is None:
        order = np.argsort(diagonal, kind="stable")[:n_roots]
        start = np.zeros((dim, n_roots))
        start[order, np.arange(n_roots)] = 1.0
    V = np.zeros((dim, 0))
    for col in start.T:
        col = _orthonormalize(col, V)
        if col is not None:
            V = np.column_stack([V, col])
    AV = np.column_stack([matvec(v) for v in V.T])

    best = np.inf
    for it in range(1, max_iter + 1):
        S = V.T @ AV
        S = 0.5 * (S + S.T)
        theta, y = np.linalg.eigh(S)
        nr = min(n_roots, len(theta))
        theta_r, y_r = theta[:nr], y[:, :nr]
        X = V @ y_r
        AX = AV @ y_r
        R = AX - X * theta_r
        norms = np.linalg.norm(R, axis=0)
        report.iterations = it
        report.residual_history.append(norms.tolist())
        report.energy_history.append(theta_r.tolist())
        best = min(best, float(norms.max()))
        logger.debug("davidson it=%d energies=%s residuals=%s", it, theta_r, norms)

        if nr == n_roots and np.all(norms <= tol):
            report.converged = True
            report.final_residuals = norms.tolist()
            if n_roots == 1 and len(theta) > 1 and theta[1] - theta[0] < DEGENERACY_GAP:
                report.warnings.append("degenerate lowest roots detected in the subspace")
            return theta_r, X, report

        new = []
        for r in range(nr):
            if norms[r] <= tol:
                continue
            denom = diagonal - theta_r[r]
            small = np.abs(denom) < PRECONDITIONER_GUARD
            denom[small] = np.where(denom[small] < 0, -PRECONDITIONER_GUARD, PRECONDITIONER_GUARD)
            new.append(R[:, r] / denom)

        if V.shape[1] + len(new) > subspace_cap:
            V, AV = X.copy(), AX.copy()
            report.restarts += 1
            report.restart_iterations.append(it)

        added = 0
        for t in new:
            t = _orthonormalize(t, V)
            if t is None:
                continue
            V = np.column_stack([V, t])
            AV = np.column_stack([AV, matvec(t)])
            added += 1
        if added == 0:
            # preconditioned directions collapsed onto the subspace; fall back to raw residuals
            for r in range(nr):
                t = _orthonormalize(R[:, r], V)
                if t is not None:
                    V = np.column_stack([V, t])
                    AV = np.column_stack([AV, matvec(t)])
                    added += 1
        if added == 0:
            break

    report.final_residuals = report.residual_history[-1] if report.residual_history else []
    raise ConvergenceError(
        f"Davidson did not reach residual {tol:g} in {report.iterations} iterations "
        f"(best {best:.3e})",
        best_residual=best,
        report=report,
    )


def _flip(x, n_strings, sign):
    """Spin-flip image of an amplitude vector (alpha and beta strings swapped)."""
    return sign * x.reshape(n_strings, n_strings).T.ravel()


def _parity_start(order, n_strings, sign, parity):
    """Projected unit vector on the lowest-diagonal determinant with a nonzero projection."""
    for addr in order:
        ia, ib = divmod(int(addr), n_strings)
        if ia == ib and sign != parity:
            continue  # closed-shell determinants lie entirely in the other sector
        e = np.zeros(n_strings * n_strings)
        e[addr] = 1.0
        v = 0.5 * (e + parity * _flip(e, n_strings, sign))
        return v / np.linalg.norm(v)
    return None


def _davidson_by_spin_flip(op, basis, opts):
    """Davidson in each spin-flip parity sector; returns the merged lowest roots."""
    a = basis.active_space
    n_strings = len(basis.alpha_strings)
    # swapping the alpha block of creators past the beta block
    sign = -1.0 if (a.n_alpha * a.n_beta) % 2 else 1.0
    diag = op.diagonal().copy()
    order = np.argsort(diag, kind="stable")
    n_closed = n_strings
    found, reports = [], []
    for parity in (sign, -sign):  # the sector holding closed shells comes first
        sector_dim = (n_strings * n_strings + parity * sign * n_closed) // 2
        n_roots = min(opts.n_roots, int(sector_dim))
        if n_roots == 0:
            continue

        def matvec(x, parity=parity):
            y = op.matvec(x)
            return 0.5 * (y + parity * _flip(y, n_strings, sign))

        start = _parity_start(order, n_strings, sign, parity)
        e, X, rep = davidson(
            matvec,
            diag,
            n_roots=n_roots,
            tol=opts.tol,
            max_iter=opts.max_iter,
            subspace_cap=max(opts.subspace_cap, 2 * n_roots),
            start=start[:, None],
        )
        reports.append(rep)
        found.extend((float(e[r]), X[:, r], float(rep.final_residuals[r]), len(reports) - 1) for r in range(n_roots))
    found.sort(key=lambda item: item[0])
    chosen = found[: opts.n_roots]
    main = reports[chosen[0][3]]
    report = ConvergenceReport(
        method="davidson",
        converged=True,
        iterations=sum(r.iterations for r in reports),
        restarts=sum(r.restarts for r in reports),
        restart_iterations=main.restart_iterations,
        residual_history=main.residual_history,
        energy_history=main.energy_history,
        final_residuals=[item[2] for item in chosen],
        warnings=[w for r in reports for w in r.warnings],
    )
    if len(found) > opts.n_roots and found[opts.n_roots][0] - found[opts.n_roots - 1][0] < DEGENERACY_GAP:
        report.warnings.append("lowest root is degenerate with a root of opposite spin-flip parity")
    energies = np.array([item[0] for item in chosen])
    X = np.column_stack([item[1] for item in chosen])
    return energies, X, report


def ground_state(table, basis, opts=None, **kwargs):
    """Lowest eigenpair(s) of the Hamiltonian in ``basis``.

    Parameters
    ----------
    table : IntegralTable
    basis : SectorBasis
    opts : SolverOptions, optional
        Keyword arguments override individual fields.

    Returns
    -------
    GroundState
        ``(energies, vectors, report)``; vectors are normalized
        :class:`CIVector` objects with a fixed sign convention.
    """
    opts = opts or SolverOptions()
    if kwargs:
        opts = SolverOptions(**{**opts.__dict__, **kwargs})
    dim = basis.dimension
    if dim < opts.n_roots:
        raise ValidationError(f"sector dimension {dim} is smaller than n_roots={opts.n_roots}")

    if dim <= min(opts.dense_cutoff, DEFAULT_DENSE_CAP):
        H = build_dense(table, basis)
        w, v = np.linalg.eigh(H)
        energies, X = w[: opts.n_roots], v[:, : opts.n_roots]
        report = ConvergenceReport(method="dense", converged=True, iterations=1)
        report.final_residuals = np.linalg.norm(H @ X - X * energies, axis=0).tolist()
        if len(w) > opts.n_roots and w[opts.n_roots] - w[opts.n_roots - 1] < DEGENERACY_GAP:
            report.warnings.append("lowest root is degenerate with the next one")
    else:
        op = HamiltonianOperator(table, basis, threads=opts.threads)
        if basis.active_space.n_alpha == basis.active_space.n_beta:
            energies, X, report = _davidson_by_spin_flip(op, basis, opts)
        else:
            energies, X, report = davidson(
                op.matvec,
                op.diagonal().copy(),
                n_roots=opts.n_roots,
                tol=opts.tol,
                max_iter=opts.max_iter,
                subspace_cap=opts.subspace_cap,
            )

    if opts.n_roots > 1 and np.any(np.diff(energies) < DEGENERACY_GAP):
        report.warnings.append("requested roots contain a degenerate pair")
    for msg in report.warnings:
        warnings.warn(msg, DegeneracyWarning, stacklevel=2)

    vectors = []
    for r in range(opts.n_roots):
        v = _fix_sign(X[:, r])
        vectors.append(CIVector(basis, v, label=f"{report.method} root {r}"))
    return GroundState(np.asarray(energies, dtype=float), vectors, report)
