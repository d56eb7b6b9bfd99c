import csv
import io
import json
import math
import os
import xml.etree.ElementTree as ET
from pathlib import Path

import numpy as np
import pytest

from orbent import (
    DiagramSpec,
    build_hubbard_chain,
    emit_mutual_information_diagram,
    emit_s1_profile,
    enumerate_sector,
    ground_state,
    profile,
    render_mutual_information_diagram,
    render_s1_profile,
)
from orbent.diagrams import FORMATS, ordering_from_occupations, read_occupations
from orbent.entanglement import classify_orbital, profile_from_entropies
from orbent.errors import ValidationError

GOLDEN = Path(__file__).parent / "golden"
SVG = "{http://www.w3.org/2000/svg}"


@pytest.fixture(scope="module")
def hubbard6():
    """Frozen entropies of a six-site chain, so golden bytes do not depend on LAPACK round-off."""
    data = json.loads((GOLDEN / "hubbard6_profile.json").read_text())
    s2 = np.array([[np.nan if v is None else v for v in row] for row in data["s2"]])
    return profile_from_entropies(data["s1"], s2)


def test_frozen_fixture_matches_a_fresh_solve(hubbard6):
    table = build_hubbard_chain(6, 1.0, 4.0, 6)
    fresh = profile(ground_state(table, enumerate_sector(table.active_space)).vectors[0])
    np.testing.assert_allclose(fresh.s1, hubbard6.s1, atol=1e-11)
    np.testing.assert_allclose(fresh.mutual_info, hubbard6.mutual_info, atol=1e-11)


LN4 = math.log(4)


def dimer_profile(mi=2 * LN4):
    s1 = [LN4, LN4]
    s2 = 2 * LN4 - mi
    return profile_from_entropies(s1, [[0, s2], [s2, 0]])


@pytest.mark.parametrize("fmt", FORMATS)
def test_empty_profile_gives_valid_documents(fmt):
    prof = profile_from_entropies([], np.zeros((0, 0)))
    spec = DiagramSpec.default(prof, fmt)
    for render in (render_mutual_information_diagram, render_s1_profile):
        text = render(prof, spec)
        if fmt == "json":
            doc = json.loads(text)
            assert doc["n_orbitals"] == 0 and doc["schema"] == "orbent/v1"
        elif fmt == "svg":
            ET.fromstring(text)
        elif fmt == "csv":
            assert len(text.strip().splitlines()) == 1
        else:
            assert text.startswith("digraph") and text.rstrip().endswith("}")


def test_single_strong_edge():
    prof = dimer_profile()
    mi = json.loads(render_mutual_information_diagram(prof, DiagramSpec.default(prof)))
    assert [(e["i"], e["j"], e["tier"]) for e in mi["edges"]] == [(1, 2, "strong")]
    svg = ET.fromstring(render_mutual_information_diagram(prof, DiagramSpec.default(prof, "svg")))
    lines = svg.findall(f".//{SVG}g[@id='edges']/{SVG}line")
    assert len(lines) == 1
    assert lines[0].get("class") == "edge strong" and lines[0].get("stroke") == "blue"
    dot = render_mutual_information_diagram(prof, DiagramSpec.default(prof, "dot"))
    assert dot.count("->") == 1 and 'color="blue"' in dot


def test_negligible_edge_is_dropped():
    prof = dimer_profile(mi=5e-4)
    doc = json.loads(render_mutual_information_diagram(prof, DiagramSpec.default(prof)))
    assert doc["edges"] == []


def test_edges_correspond_to_profile_pairs(hubbard6):
    doc = json.loads(render_mutual_information_diagram(hubbard6, DiagramSpec.default(hubbard6)))
    drawn = {(e["i"], e["j"]): e["value"] for e in doc["edges"]}
    cutoff = hubbard6.mi_tiers[-1]
    k = hubbard6.n_orbitals
    expected = {
        (i + 1, j + 1): hubbard6.mutual_info[i, j]
        for i in range(k)
        for j in range(i + 1, k)
        if hubbard6.mutual_info[i, j] > cutoff
    }
    assert drawn == expected
    tiers = {e["tier"] for e in doc["edges"]}
    assert tiers <= {"strong", "medium", "weak"}
    svg = ET.fromstring(render_mutual_information_diagram(hubbard6, DiagramSpec.default(hubbard6, "svg")))
    pairs = {(int(l.get("data-i")), int(l.get("data-j"))) for l in svg.iter(f"{SVG}line") if l.get("data-i")}
    assert pairs == set(expected)


def test_nodes_lie_on_circle_in_spec_order(hubbard6):
    ordering = [4, 1, 6, 2, 5, 3]
    spec = DiagramSpec.default(hubbard6, ordering=ordering)
    doc = json.loads(render_mutual_information_diagram(hubbard6, spec))
    assert [n["orbital"] for n in sorted(doc["nodes"], key=lambda n: n["slot"])] == ordering
    for n in doc["nodes"]:
        assert math.hypot(n["x"] - 240, n["y"] - 240) == pytest.approx(180, abs=1e-5)
        assert n["angle_deg"] == pytest.approx(60 * n["slot"])


def test_s1_csv_round_trip(hubbard6):
    text = render_s1_profile(hubbard6, DiagramSpec.default(hubbard6, "csv"))
    rows = list(csv.DictReader(io.StringIO(text)))
    recovered = np.array([float(r["s1"]) for r in rows])
    assert np.max(np.abs(recovered - hubbard6.s1)) <= 1e-12
    assert [r["class"] for r in rows] == [classify_orbital(v) for v in hubbard6.s1]
    mi_rows = list(csv.DictReader(io.StringIO(render_mutual_information_diagram(hubbard6, DiagramSpec.default(hubbard6, "csv")))))
    for r in mi_rows:
        assert float(r["value"]) == hubbard6.mutual_info[int(r["i"]) - 1, int(r["j"]) - 1]


def test_s1_svg_has_threshold_lines_and_zero_bars():
    prof = profile_from_entropies([0.0, 0.0, 0.0], np.zeros((3, 3)))
    svg = ET.fromstring(render_s1_profile(prof, DiagramSpec.default(prof, "svg")))
    guides = [l for l in svg.iter(f"{SVG}line") if l.get("class") == "threshold"]
    assert sorted(float(l.get("data-value")) for l in guides) == [0.1, 0.5]
    bars = list(svg.iter(f"{SVG}rect"))
    assert len(bars) == 3 and all(float(b.get("height")) == 0 for b in bars)


def test_sink_emitters_match_renderers(hubbard6):
    spec = DiagramSpec.default(hubbard6, "svg")
    sink = io.StringIO()
    emit_mutual_information_diagram(hubbard6, spec, sink)
    emit_s1_profile(hubbard6, spec, sink)
    assert sink.getvalue() == render_mutual_information_diagram(hubbard6, spec) + render_s1_profile(hubbard6, spec)


@pytest.mark.parametrize("fmt", FORMATS)
def test_golden_files(hubbard6, fmt):
    spec = DiagramSpec.default(hubbard6, fmt)
    for stem, render in (("mutual_information", render_mutual_information_diagram), ("s1_profile", render_s1_profile)):
        path = GOLDEN / f"hubbard6_{stem}.{fmt}"
        text = render(hubbard6, spec)
        if os.environ.get("ORBENT_REGEN_GOLDEN"):
            path.write_text(text, encoding="utf-8")
        assert text == path.read_text(encoding="utf-8")
        assert render(hubbard6, spec) == text


def test_spec_validation(hubbard6):
    with pytest.raises(ValidationError):
        DiagramSpec(ordering=[1, 2, 2])
    with pytest.raises(ValidationError):
        DiagramSpec(ordering=[1, 2], format="png")
    with pytest.raises(ValidationError):
        DiagramSpec(ordering=[1, 2], labels=["a"])
    with pytest.raises(ValidationError):
        render_s1_profile(hubbard6, DiagramSpec(ordering=[1, 2]))


def test_labels_are_escaped():
    prof = dimer_profile()
    spec = DiagramSpec(ordering=[1, 2], labels=['3d<x>&"y"', "pi*"], format="svg")
    ET.fromstring(render_mutual_information_diagram(prof, spec))
    ET.fromstring(render_s1_profile(prof, spec))
    dot = render_mutual_information_diagram(prof, spec.with_format("dot"))
    assert '\\"y\\"' in dot


def test_ordering_from_occupations(tmp_path):
    assert ordering_from_occupations([1.2, 1.98, 0.02, 1.98]) == [2, 4, 1, 3]
    path = tmp_path / "occ.txt"
    path.write_text("1.2, 1.98\n0.02 1.98\n")
    assert read_occupations(path) == [1.2, 1.98, 0.02, 1.98]
    path.write_text("1.0 abc")
    with pytest.raises(ValidationError):
        read_occupations(path)
