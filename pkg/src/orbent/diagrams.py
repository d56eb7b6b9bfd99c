"""Entanglement diagrams as JSON, DOT, SVG and CSV documents.

Two figure types are produced: a circle diagram with one chord per orbital
pair whose mutual information exceeds the weakest tier cutoff, and a bar
profile of single-orbital entropies.  JSON is the canonical form; the other
formats are projections of the same data.  Output is a pure function of
its inputs, so reruns are byte-identical.
"""

import csv
import io
import json
import math
import re
from dataclasses import dataclass, field

from .errors import ValidationError

__all__ = [
    "SCHEMA",
    "FORMATS",
    "DEFAULT_TIER_STYLES",
    "DiagramSpec",
    "emit_mutual_information_diagram",
    "emit_s1_profile",
    "ordering_from_occupations",
    "read_occupations",
]

SCHEMA = "orbent/v1"
FORMATS = ("json", "dot", "svg", "csv")
TIERS = ("strong", "medium", "weak")

DEFAULT_TIER_STYLES = {
    "strong": {"width": 3.0, "dash": "", "color": "blue"},
    "medium": {"width": 2.0, "dash": "6,3", "color": "red"},
    "weak": {"width": 1.0, "dash": "2,3", "color": "green"},
}

_CLASS_FILL = {"strong": "#3b6fb6", "medium": "#d0573d", "weak": "#5a9e4b"}

CIRCLE_SIZE = 480
CIRCLE_RADIUS = 180
BAR_WIDTH = 28
PLOT_HEIGHT = 240
MARGIN = 50


def _num(x):
    """Fixed-precision coordinate formatting; avoids '-0.00'."""
    s = f"{x:.2f}"
    return "0.00" if s == "-0.00" else s


@dataclass
class DiagramSpec:
    """Layout and style choices for a diagram.

    Attributes
    ----------
    ordering : list of int
        1-based orbital numbers in perimeter (or bar) order.
    tier_styles : dict
        ``tier -> {"width", "dash", "color"}``.
    labels : list of str
        Display label per orbital, indexed by orbital number - 1.
    format : str
        One of ``json``, ``dot``, ``svg``, ``csv``.
    """

    ordering: list
    tier_styles: dict = field(default_factory=lambda: {t: dict(s) for t, s in DEFAULT_TIER_STYLES.items()})
    labels: list = None
    format: str = "json"

    def __post_init__(self):
        k = len(self.ordering)
        if sorted(self.ordering) != list(range(1, k + 1)):
            raise ValidationError("ordering must be a permutation of 1..k")
        if self.labels is None:
            self.labels = [str(i) for i in range(1, k + 1)]
        if len(self.labels) != k:
            raise ValidationError(f"expected {k} labels, got {len(self.labels)}")
        if self.format not in FORMATS:
            raise ValidationError(f"unknown format {self.format!r}; choose from {FORMATS}")
        missing = set(TIERS) - set(self.tier_styles)
        if missing:
            raise ValidationError(f"tier styles missing for {sorted(missing)}")

    @classmethod
    def default(cls, prof, fmt="json", ordering=None, labels=None):
        k = prof.n_orbitals
        return cls(
            ordering=list(ordering) if ordering is not None else list(range(1, k + 1)),
            labels=labels,
            format=fmt,
        )

    def with_format(self, fmt):
        return DiagramSpec(list(self.ordering), self.tier_styles, list(self.labels), fmt)


def ordering_from_occupations(occupations):
    """Orbital order by descending natural occupation (stable on ties)."""
    occ = [float(v) for v in occupations]
    order = sorted(range(len(occ)), key=lambda i: (-occ[i], i))
    return [i + 1 for i in order]


def read_occupations(path):
    """Read occupation numbers separated by whitespace or commas."""
    with open(path, encoding="utf-8") as f:
        tokens = [t for t in re.split(r"[,\s]+", f.read()) if t]
    try:
        return [float(t) for t in tokens]
    except ValueError as exc:
        raise ValidationError(f"bad occupation number in {path}: {exc}") from None


def _check(prof, spec):
    if len(spec.ordering) != prof.n_orbitals:
        raise ValidationError(
            f"diagram spec covers {len(spec.ordering)} orbitals, profile has {prof.n_orbitals}"
        )


def _node_positions(spec):
    """Angle (degrees, clockwise from 12 o'clock) and SVG coordinates per orbital."""
    k = len(spec.ordering)
    centre = CIRCLE_SIZE / 2
    out = {}
    for slot, orb in enumerate(spec.ordering):
        angle = 360.0 * slot / k if k else 0.0
        rad = math.radians(angle)
        x = centre + CIRCLE_RADIUS * math.sin(rad)
        y = centre - CIRCLE_RADIUS * math.cos(rad)
        out[orb] = (slot, angle, x, y)
    return out


def _diagram_edges(prof):
    edges = [e for e in prof.tier_edges if e.tier != "negligible"]
    rank = {t: r for r, t in enumerate(("weak", "medium", "strong"))}
    # weak first so strong chords are drawn on top
    return sorted(edges, key=lambda e: (rank[e.tier], e.i, e.j))


def _mi_document(prof, spec):
    pos = _node_positions(spec)
    nodes = []
    for orb in spec.ordering:
        slot, angle, x, y = pos[orb]
        nodes.append(
            {
                "orbital": orb,
                "label": spec.labels[orb - 1],
                "slot": slot,
                "angle_deg": round(angle, 6),
                "x": round(x, 6),
                "y": round(y, 6),
                "s1": float(prof.s1[orb - 1]),
                "class": prof.classes[orb - 1],
            }
        )
    edges = [
        {"i": e.i + 1, "j": e.j + 1, "value": float(e.value), "tier": e.tier}
        for e in _diagram_edges(prof)
    ]
    return {
        "schema": SCHEMA,
        "kind": "mutual_information_diagram",
        "n_orbitals": prof.n_orbitals,
        "i_tot": float(prof.i_tot),
        "cutoff": float(prof.mi_tiers[2]),
        "mi_tiers": [float(t) for t in prof.mi_tiers],
        "tier_styles": spec.tier_styles,
        "nodes": nodes,
        "edges": edges,
    }


def _s1_document(prof, spec):
    bars = [
        {
            "orbital": orb,
            "label": spec.labels[orb - 1],
            "s1": float(prof.s1[orb - 1]),
            "class": prof.classes[orb - 1],
        }
        for orb in spec.ordering
    ]
    return {
        "schema": SCHEMA,
        "kind": "s1_profile",
        "n_orbitals": prof.n_orbitals,
        "i_tot": float(prof.i_tot),
        "thresholds": [float(t) for t in prof.s1_thresholds],
        "bars": bars,
    }


def _dump_json(doc):
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _dot_id(s):
    return '"' + str(s).replace("\\", "\\\\").replace('"', '\\"') + '"'


def _mi_dot(doc):
    lines = [
        'digraph "mutual_information" {',
        "  graph [layout=neato, splines=false, overlap=true];",
        "  node [shape=circle, fontname=Helvetica];",
        "  edge [dir=none];",
    ]
    scale = 72.0
    for n in doc["nodes"]:
        x = (n["x"] - CIRCLE_SIZE / 2) / scale
        y = (CIRCLE_SIZE / 2 - n["y"]) / scale
        lines.append(
            f'  {_dot_id(n["orbital"])} [label={_dot_id(n["label"])}, '
            f'pos="{x:.4f},{y:.4f}!", s1="{n["s1"]:.6f}", class={_dot_id(n["class"])}];'
        )
    styles = doc["tier_styles"]
    for e in doc["edges"]:
        st = styles[e["tier"]]
        attrs = [
            f'color={_dot_id(st["color"])}',
            f'penwidth={st["width"]:g}',
            f'style={"solid" if not st["dash"] else "dashed"}',
            f'tier={_dot_id(e["tier"])}',
            f'weight="{e["value"]:.6f}"',
        ]
        lines.append(f'  {_dot_id(e["i"])} -> {_dot_id(e["j"])} [{", ".join(attrs)}];')
    lines.append("}")
    return "\n".join(lines) + "\n"


def _svg_open(width, height, title):
    return [
        '<?xml version="1.0" encoding="UTF-8" standalone="no"?>',
        '<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f"  <title>{_xml(title)}</title>",
    ]


def _xml(s):
    return str(s).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;").replace('"', "&quot;")


def _mi_svg(doc):
    lines = _svg_open(CIRCLE_SIZE, CIRCLE_SIZE, "Mutual information")
    centre = CIRCLE_SIZE / 2
    lines.append(
        f'  <circle cx="{_num(centre)}" cy="{_num(centre)}" r="{CIRCLE_RADIUS}" '
        'fill="none" stroke="#cccccc" stroke-width="0.5"/>'
    )
    xy = {n["orbital"]: (n["x"], n["y"]) for n in doc["nodes"]}
    styles = doc["tier_styles"]
    lines.append('  <g id="edges">')
    for e in doc["edges"]:
        st = styles[e["tier"]]
        (x1, y1), (x2, y2) = xy[e["i"]], xy[e["j"]]
        dash = f' stroke-dasharray="{st["dash"]}"' if st["dash"] else ""
        lines.append(
            f'    <line class="edge {e["tier"]}" x1="{_num(x1)}" y1="{_num(y1)}" '
            f'x2="{_num(x2)}" y2="{_num(y2)}" stroke="{st["color"]}" '
            f'stroke-width="{st["width"]:g}"{dash} data-i="{e["i"]}" data-j="{e["j"]}" '
            f'data-value="{e["value"]:.6g}"/>'
        )
    lines.append("  </g>")
    lines.append('  <g id="nodes">')
    for n in doc["nodes"]:
        x, y = n["x"], n["y"]
        lines.append(
            f'    <circle class="node" cx="{_num(x)}" cy="{_num(y)}" r="12" '
            'fill="white" stroke="black" stroke-width="1"/>'
        )
        lines.append(
            f'    <text x="{_num(x)}" y="{_num(y + 4)}" text-anchor="middle" '
            f'font-family="Helvetica" font-size="11">{_xml(n["label"])}</text>'
        )
    lines.append("  </g>")
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def _mi_csv(doc):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["i", "j", "value", "tier"])
    for e in doc["edges"]:
        w.writerow([e["i"], e["j"], repr(e["value"]), e["tier"]])
    return buf.getvalue()


def _s1_dot(doc):
    lines = [
        'digraph "s1_profile" {',
        "  graph [rankdir=LR, nodesep=0.05];",
        "  node [shape=box, style=filled, fontname=Helvetica, width=0.4, fixedsize=true];",
        "  edge [style=invis];",
    ]
    for b in doc["bars"]:
        height = 0.05 + 2.0 * b["s1"] / math.log(4.0)
        lines.append(
            f'  {_dot_id(b["orbital"])} [label={_dot_id(b["label"])}, height={height:.4f}, '
            f'fillcolor={_dot_id(_CLASS_FILL[b["class"]])}, s1="{b["s1"]:.6f}", '
            f'class={_dot_id(b["class"])}];'
        )
    if len(doc["bars"]) > 1:
        chain = " -> ".join(_dot_id(b["orbital"]) for b in doc["bars"])
        lines.append(f"  {chain};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def _s1_svg(doc):
    n = len(doc["bars"])
    width = 2 * MARGIN + max(n, 1) * BAR_WIDTH
    height = PLOT_HEIGHT + 2 * MARGIN
    top = MARGIN
    base = MARGIN + PLOT_HEIGHT
    ymax = math.log(4.0)

    def y_of(v):
        return base - PLOT_HEIGHT * v / ymax

    lines = _svg_open(width, height, "Single-orbital entropy")
    lines.append(
        f'  <line x1="{MARGIN}" y1="{base}" x2="{width - MARGIN}" y2="{base}" '
        'stroke="black" stroke-width="1"/>'
    )
    lines.append(
        f'  <line x1="{MARGIN}" y1="{top}" x2="{MARGIN}" y2="{base}" stroke="black" stroke-width="1"/>'
    )
    for t in doc["thresholds"]:
        y = y_of(t)
        lines.append(
            f'  <line class="threshold" x1="{MARGIN}" y1="{_num(y)}" x2="{width - MARGIN}" '
            f'y2="{_num(y)}" stroke="#888888" stroke-width="1" stroke-dasharray="4,3" '
            f'data-value="{t:g}"/>'
        )
        lines.append(
            f'  <text x="{MARGIN - 4}" y="{_num(y + 4)}" text-anchor="end" '
            f'font-family="Helvetica" font-size="10">{t:g}</text>'
        )
    lines.append('  <g id="bars">')
    for slot, b in enumerate(doc["bars"]):
        x = MARGIN + slot * BAR_WIDTH + 4
        y = y_of(b["s1"])
        lines.append(
            f'    <rect class="bar {b["class"]}" x="{x}" y="{_num(y)}" width="{BAR_WIDTH - 8}" '
            f'height="{_num(base - y)}" fill="{_CLASS_FILL[b["class"]]}" '
            f'data-orbital="{b["orbital"]}" data-s1="{b["s1"]:.6g}"/>'
        )
        lines.append(
            f'    <text x="{x + (BAR_WIDTH - 8) // 2}" y="{base + 14}" text-anchor="middle" '
            f'font-family="Helvetica" font-size="10">{_xml(b["label"])}</text>'
        )
    lines.append("  </g>")
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def _s1_csv(doc):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["orbital", "label", "s1", "class"])
    for b in doc["bars"]:
        w.writerow([b["orbital"], b["label"], repr(b["s1"]), b["class"]])
    return buf.getvalue()


_MI_WRITERS = {"json": _dump_json, "dot": _mi_dot, "svg": _mi_svg, "csv": _mi_csv}
_S1_WRITERS = {"json": _dump_json, "dot": _s1_dot, "svg": _s1_svg, "csv": _s1_csv}


def render_mutual_information_diagram(prof, spec):
    """Return the circle diagram as a string in ``spec.format``."""
    _check(prof, spec)
    return _MI_WRITERS[spec.format](_mi_document(prof, spec))


def render_s1_profile(prof, spec):
    """Return the single-orbital entropy profile as a string in ``spec.format``."""
    _check(prof, spec)
    return _S1_WRITERS[spec.format](_s1_document(prof, spec))


def emit_mutual_information_diagram(prof, spec, sink):
    """Write the circle diagram of ``prof`` to the text sink."""
    sink.write(render_mutual_information_diagram(prof, spec))


def emit_s1_profile(prof, spec, sink):
    """Write the single-orbital entropy bars of ``prof`` to the text sink."""
    sink.write(render_s1_profile(prof, spec))
