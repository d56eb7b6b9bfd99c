"""End-to-end analysis reports and cross-report comparison."""

import json
import math
from datetime import datetime, timezone
from importlib import resources

import numpy as np

from . import __version__
from .determinants import enumerate_sector
from .diagrams import SCHEMA
from .eigensolver import SolverOptions, ground_state
from .entanglement import (
    DEFAULT_MI_TIERS,
    DEFAULT_S1_THRESHOLDS,
    EntanglementProfile,
    diagnose,
    profile,
)
from .errors import ValidationError
from .fcidump import core_orbitals, transform_orbitals

__all__ = ["analyze", "load_schema", "validate_report", "compare_reports"]


def load_schema():
    text = resources.files("orbent").joinpath("analysis.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


def validate_report(report):
    """Check a report against the analysis schema.

    Raises
    ------
    ValidationError
        With the first schema violation in the message.
    """
    import jsonschema

    try:
        jsonschema.validate(report, load_schema())
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path)
        raise ValidationError(f"report does not match {SCHEMA} schema at '{path}': {exc.message}") from None
    k = report["profile"]["n_orbitals"]
    if report["active_space"]["n_orbitals"] != k or len(report["profile"]["s1"]) != k:
        raise ValidationError("report orbital counts are inconsistent")


def analyze(
    table,
    solver=None,
    s1_thresholds=DEFAULT_S1_THRESHOLDS,
    mi_tiers=DEFAULT_MI_TIERS,
    orbital_basis="input",
    source=None,
    meta=True,
    threads=None,
):
    """Solve for the ground state of ``table`` and build the analysis report.

    Parameters
    ----------
    table : IntegralTable
    solver : SolverOptions, optional
    orbital_basis : {"input", "core"}
        ``core`` first rotates to the eigenvectors of the one-electron
        matrix (a mean-field-like molecular orbital basis).
    source : dict, optional
        ``{"type": ..., "value": ...}`` provenance stored in the report.
    meta : bool
        Include version and timestamp; disable for byte-stable output.

    Returns
    -------
    (dict, GroundState, EntanglementProfile)
    """
    solver = solver or SolverOptions(threads=threads)
    if orbital_basis == "core":
        _, coeffs = core_orbitals(table)
        table = transform_orbitals(table, coeffs)
    elif orbital_basis != "input":
        raise ValidationError(f"unknown orbital basis {orbital_basis!r}")
    basis = enumerate_sector(table.active_space)
    gs = ground_state(table, basis, solver)
    prof = profile(gs.vectors[0], s1_thresholds, mi_tiers, threads=solver.threads)
    diag = diagnose(prof)
    space = table.active_space
    report = {
        "schema": SCHEMA,
        "kind": "analysis",
        "units": "nats",
        "orbital_basis": orbital_basis,
        "active_space": {
            "n_orbitals": space.n_orbitals,
            "n_electrons": space.n_electrons,
            "ms2": space.ms2,
            "dimension": basis.dimension,
            "orbital_irreps": list(space.orbital_irreps) if space.orbital_irreps else None,
        },
        "labels": [str(i + 1) for i in range(space.n_orbitals)],
        "energies": [float(e) for e in gs.energies],
        "solver": gs.report.as_dict(),
        "profile": prof.as_dict(),
        "diagnosis": diag.as_dict(),
    }
    if source is not None:
        report["source"] = dict(source)
    if meta:
        report["meta"] = {
            "version": __version__,
            "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        }
    return report, gs, prof


def report_profile(report):
    return EntanglementProfile.from_dict(report["profile"])


def _rows_from_map(mapping, reports):
    rows = mapping.get("rows") if isinstance(mapping, dict) else mapping
    if not isinstance(rows, list):
        raise ValidationError("orbital map must be a list of rows or {'rows': [...]}")
    out = []
    for r, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != len(reports):
            raise ValidationError(f"map row {r} must list one orbital (or null) per input")
        for orb, rep in zip(row, reports):
            k = rep["profile"]["n_orbitals"]
            if orb is not None and not (isinstance(orb, int) and 1 <= orb <= k):
                raise ValidationError(f"map row {r}: orbital {orb!r} outside 1..{k}")
        out.append(row)
    return out


def compare_reports(reports, names=None, mapping=None):
    """Side-by-side comparison of analysis reports.

    Orbitals are aligned by number when all reports have the same orbital
    count; otherwise ``mapping`` must give the correspondence as rows of
    1-based orbital numbers (``None`` where an orbital is absent).

    Returns
    -------
    dict
        I_tot per input and its trend, plus per-orbital s1 values, deltas
        against the first input and class migrations.
    """
    if len(reports) < 2:
        raise ValidationError("comparison needs at least two reports")
    for rep in reports:
        validate_report(rep)
    names = names or [f"input{i + 1}" for i in range(len(reports))]
    sizes = [rep["profile"]["n_orbitals"] for rep in reports]
    if mapping is not None:
        rows = _rows_from_map(mapping, reports)
    elif len(set(sizes)) == 1:
        rows = [[i + 1] * len(reports) for i in range(sizes[0])]
    else:
        raise ValidationError(
            f"orbital counts differ ({sizes}); supply an explicit orbital map"
        )

    i_tots = [float(rep["profile"]["i_tot"]) for rep in reports]
    trend = []
    for a in range(len(reports) - 1):
        delta = i_tots[a + 1] - i_tots[a]
        direction = "increase" if delta > 0 else "decrease" if delta < 0 else "unchanged"
        trend.append({"from": names[a], "to": names[a + 1], "delta": delta, "direction": direction})

    table = []
    for row in rows:
        s1, classes = [], []
        for orb, rep in zip(row, reports):
            if orb is None:
                s1.append(None)
                classes.append(None)
            else:
                s1.append(float(rep["profile"]["s1"][orb - 1]))
                classes.append(rep["profile"]["classes"][orb - 1])
        ref = s1[0]
        deltas = [None if (v is None or ref is None) else v - ref for v in s1]
        migrations = []
        for a in range(len(classes) - 1):
            c0, c1 = classes[a], classes[a + 1]
            if c0 is not None and c1 is not None and c0 != c1:
                migrations.append(f"{names[a]}->{names[a + 1]}: {c0}->{c1}")
        table.append(
            {"orbitals": row, "s1": s1, "delta_s1": deltas, "classes": classes, "migrations": migrations}
        )

    return {
        "schema": SCHEMA,
        "kind": "comparison",
        "inputs": [
            {"name": n, "n_orbitals": k, "i_tot": t, "energy": float(rep["energies"][0])}
            for n, k, t, rep in zip(names, sizes, i_tots, reports)
        ],
        "i_tot_trend": trend,
        "max_i_tot": names[int(np.argmax(i_tots))],
        "rows": table,
    }


def to_display_units(value, log_base):
    """Convert nats to the display base (``e`` or ``2``)."""
    if value is None:
        return None
    return value / math.log(2.0) if str(log_base) == "2" else value
