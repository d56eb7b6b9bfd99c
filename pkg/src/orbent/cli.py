"""Command-line interface: ``orbent analyze | compare | emit | selftest``.

Exit codes: 0 success, 1 selftest check failed, 2 invalid input (bad
arguments, parse, validation, capacity or numerical errors, malformed or
schema-violating JSON), 3 eigensolver did not converge, 4 I/O error.
"""

import argparse
import json
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import analyze, compare_reports, report_profile, to_display_units, validate_report
from .diagrams import FORMATS, DiagramSpec, ordering_from_occupations, read_occupations
from .diagrams import render_mutual_information_diagram, render_s1_profile
from .eigensolver import SolverOptions
from .entanglement import DEFAULT_MI_TIERS, DEFAULT_S1_THRESHOLDS
from .errors import ConvergenceError, OrbentError, ValidationError
from .fcidump import build_hubbard_chain, build_random_hamiltonian, read_fcidump

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_INVALID = 2
EXIT_CONVERGENCE = 3
EXIT_IO = 4


class _Parser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors honour ``--error-format json``."""

    error_format = "text"

    def error(self, message):
        _report_error("UsageError", f"{self.prog}: {message}", EXIT_INVALID, self.error_format)
        sys.exit(EXIT_INVALID)


def _report_error(kind, message, code, fmt):
    if fmt == "json":
        payload = {"error": {"type": kind, "message": message, "exit_code": code}}
        print(json.dumps(payload, sort_keys=True), file=sys.stderr)
    else:
        print(f"orbent: error: {message}", file=sys.stderr)


def _dump(obj):
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n"


def _float_list(text, n, name):
    try:
        values = [float(t) for t in text.split(",")]
    except ValueError:
        raise ValidationError(f"{name} must be {n} comma-separated numbers, got {text!r}") from None
    if len(values) != n:
        raise ValidationError(f"{name} must be {n} comma-separated numbers, got {text!r}")
    return tuple(values)


def _formats(text):
    fmts = [f.strip().lower() for f in text.split(",") if f.strip()]
    bad = [f for f in fmts if f not in FORMATS]
    if bad:
        raise ValidationError(f"unknown diagram format(s) {bad}; choose from {list(FORMATS)}")
    return list(dict.fromkeys(fmts))


def _bool(text):
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "periodic", "pbc"):
        return True
    if lowered in ("0", "false", "no", "open", "obc"):
        return False
    raise ValidationError(f"cannot read {text!r} as a boolean")


def build_model(spec):
    """Integral table from a model string.

    ``hubbard:L,t,U,N,ms2[,periodic]`` or ``random:k,N,ms2[,seed]``.
    """
    kind, _, params = spec.partition(":")
    fields = [p.strip() for p in params.split(",")] if params else []
    try:
        if kind == "hubbard":
            if len(fields) not in (5, 6):
                raise ValidationError("hubbard model takes L,t,U,N,ms2[,periodic]")
            L, t, U, N, ms2 = int(fields[0]), float(fields[1]), float(fields[2]), int(fields[3]), int(fields[4])
            periodic = _bool(fields[5]) if len(fields) == 6 else False
            return build_hubbard_chain(L, t, U, N, ms2, periodic=periodic)
        if kind == "random":
            if len(fields) not in (3, 4):
                raise ValidationError("random model takes k,N,ms2[,seed]")
            seed = int(fields[3]) if len(fields) == 4 else 0
            return build_random_hamiltonian(int(fields[0]), int(fields[1]), int(fields[2]), seed=seed)
    except ValueError as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"bad model parameters in {spec!r}: {exc}") from None
    raise ValidationError(f"unknown model {kind!r}; expected 'hubbard:...' or 'random:...'")


def _diagram_spec(prof, labels, occupation_file):
    ordering = None
    if occupation_file:
        occ = read_occupations(occupation_file)
        if len(occ) != prof.n_orbitals:
            raise ValidationError(
                f"{occupation_file} lists {len(occ)} occupations for {prof.n_orbitals} orbitals"
            )
        ordering = ordering_from_occupations(occ)
    return DiagramSpec.default(prof, "json", ordering=ordering, labels=labels)


def _write_diagrams(prof, labels, fmts, out_dir, occupation_file):
    spec = _diagram_spec(prof, labels, occupation_file)
    written = []
    for fmt in fmts:
        s = spec.with_format(fmt)
        for stem, render in (("mutual_information", render_mutual_information_diagram), ("s1_profile", render_s1_profile)):
            path = out_dir / f"{stem}.{fmt}"
            path.write_text(render(prof, s), encoding="utf-8")
            written.append(str(path))
    return written


def _format_summary(report, log_base):
    unit = "bits" if str(log_base) == "2" else "nats"
    prof = report["profile"]
    diag = report["diagnosis"]
    space = report["active_space"]
    lines = [
        f"active space: {space['n_electrons']} electrons in {space['n_orbitals']} orbitals, "
        f"ms2={space['ms2']}, dimension {space['dimension']}",
        f"orbital basis: {report.get('orbital_basis', 'input')}",
        f"solver: {report['solver']['method']}, {report['solver']['iterations']} iterations",
    ]
    for r, e in enumerate(report["energies"]):
        lines.append(f"E{r} = {e:.10f}")
    lines.append(f"I_tot = {to_display_units(prof['i_tot'], log_base):.10f} {unit}")
    lines.append("")
    lines.append(f"{'orbital':>7}  {'s1 (' + unit + ')':>14}  {'class':<7} {'character'}")
    for i, (label, s1, cls, tag) in enumerate(
        zip(report["labels"], prof["s1"], prof["classes"], diag["tags"])
    ):
        lines.append(f"{label:>7}  {to_display_units(s1, log_base):14.10f}  {cls:<7} {tag}")
    edges = sorted(
        (e for e in prof["edges"] if e["tier"] != "negligible"), key=lambda e: (-e["value"], e["i"], e["j"])
    )
    lines.append("")
    lines.append(f"mutual information edges ({len(edges)} above the weak cutoff):")
    for e in edges:
        lines.append(
            f"  {report['labels'][e['i'] - 1]:>4} - {report['labels'][e['j'] - 1]:<4} "
            f"{to_display_units(e['value'], log_base):.10f}  {e['tier']}"
        )
    counts = diag["counts"]
    lines.append("")
    lines.append(
        "diagnosis (heuristic): "
        + ", ".join(f"{tag} {counts.get(tag, 0)}" for tag in ("nondynamic", "static", "dynamic"))
    )
    return "\n".join(lines) + "\n"


def cmd_analyze(args):
    if args.fcidump:
        table = read_fcidump(args.fcidump)
        source = {"type": "fcidump", "value": args.fcidump}
    else:
        table = build_model(args.model)
        source = {"type": "model", "value": args.model}
    solver = SolverOptions(
        tol=args.tol,
        max_iter=args.max_iter,
        n_roots=args.roots,
        dense_cutoff=args.dense_cutoff,
        threads=args.threads,
    )
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        report, _, prof = analyze(
            table,
            solver=solver,
            s1_thresholds=_float_list(args.s1_thresholds, 2, "--s1-thresholds"),
            mi_tiers=_float_list(args.mi_tiers, 3, "--mi-tiers"),
            orbital_basis=args.orbitals,
            source=source,
            meta=not args.no_meta,
        )
    for w in caught:
        print(f"orbent: warning: {w.message}", file=sys.stderr)

    fmts = _formats(args.emit) if args.emit else []
    if args.out or fmts:
        out_dir = Path(args.out or ".")
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "analysis.json").write_text(_dump(report), encoding="utf-8")
        if fmts:
            _write_diagrams(prof, report["labels"], fmts, out_dir, args.order_by_occupation)
    if args.json:
        sys.stdout.write(_dump(report))
    else:
        sys.stdout.write(_format_summary(report, args.log_base))
    return EXIT_OK


def _load_report(path):
    with open(path, encoding="utf-8") as f:
        text = f.read()
    try:
        report = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: malformed JSON ({exc})") from None
    try:
        validate_report(report)
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}") from None
    return report


def _format_comparison(result):
    names = [inp["name"] for inp in result["inputs"]]
    width = max(12, *(len(n) for n in names))
    lines = ["".join(f"{h:>{width}}" for h in ["", *names])]
    lines.append("".join(f"{v:>{width}}" for v in ["k", *(str(inp["n_orbitals"]) for inp in result["inputs"])]))
    lines.append("".join(f"{v:>{width}}" for v in ["E0", *(f"{inp['energy']:.8f}" for inp in result["inputs"])]))
    lines.append("".join(f"{v:>{width}}" for v in ["I_tot", *(f"{inp['i_tot']:.6f}" for inp in result["inputs"])]))
    lines.append("")
    for step in result["i_tot_trend"]:
        lines.append(f"I_tot {step['from']} -> {step['to']}: {step['delta']:+.6f} ({step['direction']})")
    lines.append(f"largest I_tot: {result['max_i_tot']}")
    lines.append("")
    lines.append("per-orbital s1 (delta vs first input):")
    for row in result["rows"]:
        cells = []
        for orb, s1, d, cls in zip(row["orbitals"], row["s1"], row["delta_s1"], row["classes"]):
            if orb is None:
                cells.append("-")
            else:
                delta = "" if d is None else f" {d:+.4f}"
                cells.append(f"#{orb} {s1:.4f}{delta} {cls}")
        lines.append("  " + " | ".join(cells))
        for m in row["migrations"]:
            lines.append(f"      migration {m}")
    return "\n".join(lines) + "\n"


def cmd_compare(args):
    reports = [_load_report(p) for p in args.files]
    mapping = None
    if args.map:
        with open(args.map, encoding="utf-8") as f:
            try:
                mapping = json.load(f)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{args.map}: malformed JSON ({exc})") from None
    names = args.names.split(",") if args.names else [Path(p).stem for p in args.files]
    if len(names) != len(reports) or len(set(names)) != len(names):
        names = [f"{Path(p).stem}[{i + 1}]" for i, p in enumerate(args.files)]
    result = compare_reports(reports, names=names, mapping=mapping)
    if args.json:
        sys.stdout.write(_dump(result))
    else:
        sys.stdout.write(_format_comparison(result))
    return EXIT_OK


def cmd_emit(args):
    report = _load_report(args.analysis)
    prof = report_profile(report)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = _write_diagrams(prof, report["labels"], _formats(args.emit), out_dir, args.order_by_occupation)
    for path in written:
        print(path)
    return EXIT_OK


def _load_oracle():
    """The Fock-space oracle ships with the test suite of a source checkout."""
    tests_dir = Path(__file__).resolve().parents[2] / "tests"
    if not (tests_dir / "oracle_ref.py").is_file():
        return None
    sys.path.insert(0, str(tests_dir))
    try:
        import oracle_ref
    except ImportError:
        return None
    finally:
        sys.path.pop(0)
    return oracle_ref


def selftest_checks(n_cases=20, seed=0, oracle=None):
    """Run internal consistency checks on random small instances.

    Returns a list of ``(name, passed, detail)`` tuples.
    """
    from .determinants import enumerate_sector
    from .eigensolver import ground_state
    from .entanglement import LN4, LN16, profile
    from .hamiltonian import HamiltonianOperator, build_dense
    from .rdm import one_orbital_rdm, two_orbital_rdm

    rng = np.random.default_rng(seed)
    worst = {"matvec": 0.0, "trace": 0.0, "swap": 0.0, "bounds": 0.0, "oracle": 0.0, "energy": 0.0}
    for _ in range(n_cases):
        k = int(rng.integers(2, 6))
        n = int(rng.integers(1, 2 * k))
        ms2 = int(rng.choice([m for m in range(-n, n + 1, 2) if abs(m) <= 2 * k - n]))
        table = build_random_hamiltonian(k, n, ms2, seed=int(rng.integers(2**31)))
        basis = enumerate_sector(table.active_space)
        H = build_dense(table, basis)
        x = rng.standard_normal(basis.dimension)
        op = HamiltonianOperator(table, basis)
        worst["matvec"] = max(worst["matvec"], float(np.max(np.abs(op.matvec(x) - H @ x))))
        gs = ground_state(table, basis, dense_cutoff=0 if basis.dimension > 4 else 512)
        worst["energy"] = max(worst["energy"], abs(gs.energies[0] - np.linalg.eigvalsh(H)[0]))
        vec = gs.vectors[0]
        prof = profile(vec)
        for i in range(k):
            for j in range(k):
                if i == j:
                    continue
                rho = two_orbital_rdm(vec, i, j)
                d1 = np.max(np.abs(rho.reduce(0) - one_orbital_rdm(vec, i).matrix))
                worst["trace"] = max(worst["trace"], float(d1))
                worst["swap"] = max(
                    worst["swap"], float(np.max(np.abs(rho.swapped().matrix - two_orbital_rdm(vec, j, i).matrix)))
                )
                s2 = prof.s2[i, j]
                s1i, s1j = prof.s1[i], prof.s1[j]
                violation = max(
                    -s2, s2 - LN16, abs(s1i - s1j) - s2, s2 - (s1i + s1j), s1i - LN4, -s1i, 0.0
                )
                worst["bounds"] = max(worst["bounds"], violation)
                if oracle is not None:
                    v = oracle.embed_fock(vec)
                    ref = oracle.dense_partial_trace(v, k, [i, j])
                    worst["oracle"] = max(worst["oracle"], float(np.max(np.abs(ref - rho.matrix))))
    checks = [
        ("matrix-free sigma equals dense H", worst["matvec"] <= 1e-10, worst["matvec"]),
        ("solver energy equals dense eigenvalue", worst["energy"] <= 1e-9, worst["energy"]),
        ("two-orbital RDM reduces to one-orbital RDM", worst["trace"] <= 1e-12, worst["trace"]),
        ("orbital swap symmetry", worst["swap"] <= 1e-12, worst["swap"]),
        ("entropy bounds and Araki-Lieb", worst["bounds"] <= 1e-9, worst["bounds"]),
    ]
    if oracle is not None:
        checks.append(("RDMs equal Fock-space partial trace", worst["oracle"] <= 1e-10, worst["oracle"]))
    return checks


def cmd_selftest(args):
    oracle = None if args.no_oracle else _load_oracle()
    start = time.perf_counter()
    checks = selftest_checks(args.cases, args.seed, oracle)
    elapsed = time.perf_counter() - start
    ok = bool(all(passed for _, passed, _ in checks))
    if args.json:
        sys.stdout.write(
            _dump(
                {
                    "passed": ok,
                    "oracle": oracle is not None,
                    "cases": args.cases,
                    "checks": [{"name": n, "passed": bool(p), "worst": float(w)} for n, p, w in checks],
                }
            )
        )
    else:
        for name, passed, worst in checks:
            print(f"{'PASS' if passed else 'FAIL'}  {name}  (worst {worst:.2e})")
        if args.no_oracle:
            print("note: oracle equivalence skipped (--no-oracle)")
        elif oracle is None:
            print("note: Fock-space oracle not found; oracle equivalence skipped")
        print(f"{len(checks)} checks on {args.cases} random instances in {elapsed:.1f} s")
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def _threads(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("thread count must be at least 1")
    return value


def build_parser():
    parser = _Parser(prog="orbent", description="Orbital entanglement analysis of active-space wave functions.")
    parser.add_argument("--version", action="version", version=f"orbent {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--error-format", choices=("text", "json"), default="text", help="format of error messages on stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    a = sub.add_parser("analyze", parents=[common], help="solve a Hamiltonian and analyze orbital entanglement")
    src = a.add_mutually_exclusive_group(required=True)
    src.add_argument("--fcidump", metavar="PATH", help="FCIDUMP integral file")
    src.add_argument("--model", metavar="SPEC", help="hubbard:L,t,U,N,ms2[,periodic] or random:k,N,ms2[,seed]")
    a.add_argument("--tol", type=float, default=1e-9, help="residual norm tolerance (default 1e-9)")
    a.add_argument("--max-iter", type=int, default=200, help="Davidson iteration limit (default 200)")
    a.add_argument("--roots", type=int, default=1, help="number of roots to solve for (default 1)")
    a.add_argument(
        "--dense-cutoff", type=int, default=512, help="diagonalize densely up to this dimension (default 512)"
    )
    a.add_argument("--threads", type=_threads, default=None, help="worker threads (default $ORBENT_THREADS or 1)")
    a.add_argument(
        "--s1-thresholds",
        default=",".join(repr(v) for v in DEFAULT_S1_THRESHOLDS),
        metavar="LOW,HIGH",
        help="single-orbital entropy class cutoffs (default 0.1,0.5)",
    )
    a.add_argument(
        "--mi-tiers",
        default=",".join(repr(v) for v in DEFAULT_MI_TIERS),
        metavar="S,M,W",
        help="mutual information tier cutoffs (default 0.1,0.01,0.001)",
    )
    a.add_argument("--log-base", choices=("e", "2"), default="e", help="units of the text summary; JSON is always in nats")
    a.add_argument("--orbitals", choices=("input", "core"), default="input", help="orbital basis for the analysis")
    a.add_argument("--emit", metavar="FORMATS", help="diagram formats, comma separated: json,dot,svg,csv")
    a.add_argument("--out", metavar="DIR", help="directory for analysis.json and diagrams (default . when --emit is given)")
    a.add_argument("--order-by-occupation", metavar="FILE", help="order diagram orbitals by these occupation numbers")
    a.add_argument("--json", action="store_true", help="print the report as JSON on stdout")
    a.add_argument("--no-meta", action="store_true", help="omit version and timestamp for byte-stable output")
    a.set_defaults(func=cmd_analyze)

    c = sub.add_parser("compare", parents=[common], help="compare two or more analysis reports")
    c.add_argument("files", nargs="+", metavar="ANALYSIS_JSON")
    c.add_argument("--map", metavar="FILE", help="JSON orbital correspondence: rows of 1-based orbital numbers")
    c.add_argument("--names", metavar="A,B,...", help="display names for the inputs")
    c.add_argument("--json", action="store_true", help="print the comparison as JSON")
    c.set_defaults(func=cmd_compare)

    e = sub.add_parser("emit", parents=[common], help="render diagrams from an analysis report")
    e.add_argument("analysis", metavar="ANALYSIS_JSON")
    e.add_argument("--emit", default="json,dot,svg,csv", metavar="FORMATS")
    e.add_argument("--out", default=".", metavar="DIR")
    e.add_argument("--order-by-occupation", metavar="FILE")
    e.set_defaults(func=cmd_emit)

    t = sub.add_parser("selftest", parents=[common], help="consistency checks on random small instances")
    t.add_argument("--cases", type=int, default=20)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--no-oracle", action="store_true", help="skip the Fock-space oracle even if available")
    t.add_argument("--json", action="store_true")
    t.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None):
    argv = list(sys.argv[1:] if argv is None else argv)
    # usage errors are raised before args exist, so peek at the flag
    fmt = "json" if "--error-format=json" in argv or any(
        a == "--error-format" and b == "json" for a, b in zip(argv, argv[1:])
    ) else "text"
    _Parser.error_format = fmt
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConvergenceError as exc:
        _report_error("ConvergenceError", str(exc), EXIT_CONVERGENCE, fmt)
        return EXIT_CONVERGENCE
    except OrbentError as exc:
        _report_error(type(exc).__name__, str(exc), EXIT_INVALID, fmt)
        return EXIT_INVALID
    except OSError as exc:
        _report_error("IOError", str(exc), EXIT_IO, fmt)
        return EXIT_IO
    except ValueError as exc:
        _report_error("ValueError", str(exc), EXIT_INVALID, fmt)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
