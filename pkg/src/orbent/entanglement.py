"""Orbital entropies, mutual information and correlation classification.

All entropies are in nats.  The mutual information of a pair is reported
with the positive sign convention

    I_ij = s1_i + s1_j - s2_ij  >= 0,

so that larger values mean stronger entanglement.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import NumericalError, ValidationError
from .hamiltonian import resolve_threads
from .rdm import NEGATIVE_CLIP, clip_spectrum, one_orbital_rdm, two_orbital_rdm

__all__ = [
    "Edge",
    "EntanglementProfile",
    "CorrelationDiagnosis",
    "von_neumann_entropy",
    "profile",
    "profile_from_entropies",
    "classify_orbital",
    "classify_edge",
    "diagnose",
    "DEFAULT_S1_THRESHOLDS",
    "DEFAULT_MI_TIERS",
]

DEFAULT_S1_THRESHOLDS = (0.1, 0.5)
DEFAULT_MI_TIERS = (1e-1, 1e-2, 1e-3)
TRACE_TOL = 1e-10
LN4 = math.log(4.0)
LN16 = math.log(16.0)

ORBITAL_CLASSES = ("strong", "medium", "weak")
EDGE_TIERS = ("strong", "medium", "weak", "negligible")
CORRELATION_TAGS = ("nondynamic", "static", "dynamic")


def von_neumann_entropy(eigenvalues):
    """``-sum w ln w`` over the positive eigenvalues of a density matrix.

    Raises
    ------
    NumericalError
        An eigenvalue is below ``-1e-10``.
    ValidationError
        The eigenvalues do not sum to one within ``1e-10``.
    """
    w = clip_spectrum(eigenvalues)
    total = float(np.sum(w))
    if abs(total - 1.0) > TRACE_TOL:
        raise ValidationError(f"eigenvalues sum to {total:.12f}, expected 1")
    w = w[w > 0]
    return float(-np.sum(w * np.log(w))) + 0.0  # no -0.0


def _check_thresholds(s1_thresholds, mi_tiers):
    lo, hi = s1_thresholds
    if not 0 <= lo <= hi:
        raise ValidationError(f"s1 thresholds must satisfy 0 <= low <= high, got {s1_thresholds}")
    tiers = tuple(float(t) for t in mi_tiers)
    if len(tiers) != 3 or not tiers[0] >= tiers[1] >= tiers[2] >= 0:
        raise ValidationError(f"mutual-information tiers must be 3 descending values, got {mi_tiers}")
    return (float(lo), float(hi)), tiers


def classify_orbital(s1_value, thresholds=DEFAULT_S1_THRESHOLDS):
    """Bin a single-orbital entropy into strong / medium / weak.

    Boundary values fall into the lower class: ``s1 > 0.5`` is strong,
    ``0.1 < s1 <= 0.5`` medium, ``s1 <= 0.1`` weak.
    """
    lo, hi = thresholds
    if not -1e-12 <= s1_value <= LN4 + 1e-12:
        raise ValidationError(f"single-orbital entropy {s1_value} outside [0, ln 4]")
    if s1_value > hi:
        return "strong"
    if s1_value > lo:
        return "medium"
    return "weak"


def classify_edge(value, tiers=DEFAULT_MI_TIERS):
    strong, medium, weak = tiers
    if value > strong:
        return "strong"
    if value > medium:
        return "medium"
    if value > weak:
        return "weak"
    return "negligible"


class Edge(NamedTuple):
    i: int
    j: int
    value: float
    tier: str


@dataclass
class EntanglementProfile:
    """Entanglement measures of one wave function.

    Orbital indices are 0-based.  ``s2`` has NaN on its diagonal (a pair
    needs two distinct orbitals); ``mutual_info`` has zeros there.
    """

    s1: np.ndarray
    s2: np.ndarray
    mutual_info: np.ndarray
    i_tot: float
    classes: list
    tier_edges: list
    s1_thresholds: tuple = DEFAULT_S1_THRESHOLDS
    mi_tiers: tuple = DEFAULT_MI_TIERS

    @property
    def n_orbitals(self):
        return len(self.s1)

    def edges(self, include_negligible=False):
        return [e for e in self.tier_edges if include_negligible or e.tier != "negligible"]

    def as_dict(self):
        """JSON-ready mapping; orbitals are numbered from 1."""
        k = self.n_orbitals
        s2 = [[None if i == j else float(self.s2[i, j]) for j in range(k)] for i in range(k)]
        return {
            "n_orbitals": k,
            "s1": [float(v) for v in self.s1],
            "s2": s2,
            "mutual_information": [[float(v) for v in row] for row in self.mutual_info],
            "i_tot": float(self.i_tot),
            "classes": list(self.classes),
            "edges": [
                {"i": e.i + 1, "j": e.j + 1, "value": float(e.value), "tier": e.tier}
                for e in self.tier_edges
            ],
            "s1_thresholds": list(self.s1_thresholds),
            "mi_tiers": list(self.mi_tiers),
        }

    @classmethod
    def from_dict(cls, data):
        k = int(data["n_orbitals"])
        s2 = np.full((k, k), np.nan)
        for i, row in enumerate(data["s2"]):
            for j, v in enumerate(row):
                if v is not None:
                    s2[i, j] = v
        mi = np.array(data["mutual_information"], dtype=float).reshape(k, k)
        edges = [Edge(e["i"] - 1, e["j"] - 1, float(e["value"]), e["tier"]) for e in data["edges"]]
        return cls(
            s1=np.array(data["s1"], dtype=float),
            s2=s2,
            mutual_info=mi,
            i_tot=float(data["i_tot"]),
            classes=list(data["classes"]),
            tier_edges=edges,
            s1_thresholds=tuple(data.get("s1_thresholds", DEFAULT_S1_THRESHOLDS)),
            mi_tiers=tuple(data.get("mi_tiers", DEFAULT_MI_TIERS)),
        )


def profile_from_entropies(s1, s2, s1_thresholds=DEFAULT_S1_THRESHOLDS, mi_tiers=DEFAULT_MI_TIERS):
    """Assemble a profile from precomputed single- and two-orbital entropies."""
    s1_thresholds, mi_tiers = _check_thresholds(s1_thresholds, mi_tiers)
    s1 = np.asarray(s1, dtype=float)
    k = len(s1)
    s2 = np.array(s2, dtype=float).reshape(k, k)
    np.fill_diagonal(s2, np.nan)
    mi = np.zeros((k, k))
    edges = []
    for i in range(k):
        for j in range(i + 1, k):
            value = s1[i] + s1[j] - s2[i, j]
            if value < -NEGATIVE_CLIP:
                raise NumericalError(
                    f"mutual information I({i},{j}) = {value:.3e} violates subadditivity"
                )
            mi[i, j] = mi[j, i] = value
            edges.append(Edge(i, j, float(value), classify_edge(value, mi_tiers)))
    classes = [classify_orbital(v, s1_thresholds) for v in s1]
    return EntanglementProfile(
        s1=s1,
        s2=s2,
        mutual_info=mi,
        i_tot=float(np.sum(s1)),
        classes=classes,
        tier_edges=edges,
        s1_thresholds=s1_thresholds,
        mi_tiers=mi_tiers,
    )


def profile(x, s1_thresholds=DEFAULT_S1_THRESHOLDS, mi_tiers=DEFAULT_MI_TIERS, threads=None):
    """Full entanglement profile of a normalized CI vector.

    Parameters
    ----------
    x : CIVector
    s1_thresholds : (float, float)
        Lower and upper single-orbital entropy cutoffs for classification.
    mi_tiers : (float, float, float)
        Mutual-information cutoffs separating strong/medium/weak/negligible.
    threads : int, optional
        Workers for the pairwise RDMs.
    """
    k = x.basis.n_orbitals
    s1 = np.array([von_neumann_entropy(one_orbital_rdm(x, i).diag) for i in range(k)])
    pairs = [(i, j) for i in range(k) for j in range(i + 1, k)]

    def pair_entropy(pair):
        return von_neumann_entropy(two_orbital_rdm(x, *pair).eigenvalues())

    workers = min(resolve_threads(threads), max(len(pairs), 1))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(pair_entropy, pairs))
    else:
        values = [pair_entropy(p) for p in pairs]
    s2 = np.zeros((k, k))
    for (i, j), v in zip(pairs, values):
        s2[i, j] = s2[j, i] = v
    return profile_from_entropies(s1, s2, s1_thresholds, mi_tiers)


@dataclass
class CorrelationDiagnosis:
    """Per-orbital correlation character.

    The rule (strong class plus a strong edge means nondynamic; medium
    class, or strong class without a strong edge, means static; everything
    else dynamic) is a heuristic reading of qualitative criteria.
    """

    tags: list
    counts: dict
    i_tot: float
    heuristic: bool = True
    rule: str = field(
        default=(
            "nondynamic: strong s1 and >=1 strong edge; "
            "static: medium s1, or strong s1 without a strong edge; dynamic: otherwise"
        )
    )

    def as_dict(self):
        return {
            "tags": list(self.tags),
            "counts": dict(self.counts),
            "i_tot": float(self.i_tot),
            "heuristic": self.heuristic,
            "rule": self.rule,
        }


def diagnose(prof):
    """Tag each orbital as nondynamic, static or dynamic."""
    k = prof.n_orbitals
    has_strong_edge = [False] * k
    for e in prof.tier_edges:
        if e.tier == "strong":
            has_strong_edge[e.i] = has_strong_edge[e.j] = True
    tags = []
    for cls, strong_edge in zip(prof.classes, has_strong_edge):
        if cls == "strong" and strong_edge:
            tags.append("nondynamic")
        elif cls in ("strong", "medium"):
            tags.append("static")
        else:
            tags.append("dynamic")
    counts = {tag: tags.count(tag) for tag in CORRELATION_TAGS}
    return CorrelationDiagnosis(tags=tags, counts=counts, i_tot=prof.i_tot)
