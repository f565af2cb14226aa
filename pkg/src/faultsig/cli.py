"""Command line: ``faultsig analyze | run | bench``.

Exit codes: 0 success, 1 usage or parse error, 2 symbolic failure (including
an empty signature), 3 numeric failure or ambiguous discrimination.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__
from .bundle import AnalysisBundle, BundleError, EmptySignature, analyze
from .model import ModelError, fixture_path, load_model
from .polycore import GroebnerBlowup, PolySyntaxError
from .siggen import TooManyFaults
from .sigtable import CellError
from .simlab.detection import DetectionConfig
from .simlab.pipeline import DetectionReport, PipelineError, run_scenario
from .simlab.scenario import Scenario, ScenarioError, read_scenario_file
from .simlab.simulate import SimulationError, simulate

EXIT_OK, EXIT_USAGE, EXIT_SYMBOLIC, EXIT_NUMERIC = 0, 1, 2, 3

# acceptance tolerances for the bench (delays after injection, s)
DETECTION_TOL = 2.0
DISCRIMINATION_TOL = 15.0


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _err(msg: str) -> None:
    print(f"error: {msg}", file=sys.stderr)


# -- analyze -----------------------------------------------------------------------

def _render_table(bundle: AnalysisBundle, fmt: str) -> str:
    if fmt == "csv":
        return bundle.table.to_csv()
    if fmt == "json":
        return json.dumps({"table": bundle.table.to_json(), "verdict": bundle.verdict.to_json(),
                           "hash": bundle.hash}, indent=1, sort_keys=True) + "\n"
    return bundle.table.to_markdown() + "\n" + bundle.verdict.summary() + "\n"


def cmd_analyze(args) -> int:
    try:
        model = load_model(args.model)
        if args.known:
            model = model.with_known_parameters()
    except (ModelError, PolySyntaxError, OSError) as exc:
        _err(str(exc))
        return EXIT_USAGE
    out = Path(args.out) if args.out else Path(f"{model.name}.bundle.json")
    try:
        bundle = analyze(model, seed=args.seed, workers=args.workers, source=str(args.model))
    except EmptySignature as exc:
        exc.bundle.save(out)
        print(f"warning: {exc}", file=sys.stderr)
        print(f"bundle (without table) written to {out}", file=sys.stderr)
        return EXIT_SYMBOLIC
    except (CellError, TooManyFaults, GroebnerBlowup, ValueError) as exc:
        _err(f"symbolic analysis failed: {exc}")
        return EXIT_SYMBOLIC
    bundle.save(out)
    sys.stdout.write(_render_table(bundle, args.format))
    print(f"bundle written to {out}", file=sys.stderr)
    return EXIT_OK


# -- run ---------------------------------------------------------------------------

def _load_bundle(path) -> AnalysisBundle:
    bundle = AnalysisBundle.load(path)
    if bundle.table is None:
        raise BundleError(f"{path}: bundle has no signature table (empty signature)")
    return bundle


def _apply_overrides(scenario: Scenario, args) -> Scenario:
    changes = {}
    if getattr(args, "seed", None) is not None:
        changes["seed"] = args.seed
    if args.noise_amp is not None:
        changes["noise_amp"] = args.noise_amp
    if args.sampling is not None:
        changes["sampling"] = args.sampling
        changes["step"] = min(scenario.step, args.sampling / 50)
    if args.noiseless:
        changes["noise_amp"] = 0.0
    return scenario.replace(**changes) if changes else scenario


def _config(args) -> DetectionConfig:
    cfg = DetectionConfig()
    if args.zero_threshold is not None:
        cfg = dataclasses.replace(cfg, zero_threshold=args.zero_threshold)
    return cfg


def _report_csv(report: DetectionReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "x0", "distance", "xf", "values", "readings", "matches"])
    disc = {s["t"]: s for s in report.discrimination_steps}
    for s in report.detection_steps:
        d = disc.get(s["t"], {})
        w.writerow([s["t"], " ".join(f"{v:.6g}" for v in s["x0"]), f"{s['distance']:.6g}",
                    " ".join(f"{v:.6g}" for v in d.get("xf", [])),
                    " ".join(f"{v:.6g}" for v in d.get("values", [])),
                    " ".join(d.get("readings", [])), " ".join(d.get("matches", []))])
    return buf.getvalue()


def cmd_run(args) -> int:
    try:
        bundle = _load_bundle(args.bundle)
        scenario, _ = read_scenario_file(args.scenario, faults=bundle.model.summary.faults)
        scenario = _apply_overrides(scenario, args)
    except (BundleError, ScenarioError, OSError) as exc:
        _err(str(exc))
        return EXIT_USAGE
    try:
        series = simulate(scenario)
        report = run_scenario(scenario, bundle.model, bundle.components, bundle.table, _config(args),
                              series=series)
    except PipelineError as exc:
        _err(str(exc))
        return EXIT_NUMERIC
    except SimulationError as exc:
        _err(f"[simulate] {exc}")
        return EXIT_NUMERIC
    if args.series_csv:
        Path(args.series_csv).write_text(series.to_csv())
    if args.report:
        Path(args.report).write_text(report.dumps() + "\n")
    if args.format == "json":
        print(report.dumps())
    elif args.format == "csv":
        sys.stdout.write(_report_csv(report))
    else:
        print(report.summary())
    if report.detected and report.status != "unique":
        return EXIT_NUMERIC
    return EXIT_OK


# -- bench -------------------------------------------------------------------------

def bench_scenarios(directory: Path | None = None) -> list[Path]:
    directory = directory or fixture_path("scenarios")
    return sorted(directory.glob("t2_*.yaml"))


def _bench_one(job):
    bundle_path, path, overrides, cfg = job
    bundle = _load_bundle(bundle_path)
    scenario, expected = read_scenario_file(path, faults=bundle.model.summary.faults)
    scenario = scenario.replace(**overrides) if overrides else scenario
    row = {"scenario": scenario.name, "faults": list(scenario.faults), "seed": scenario.seed,
           "expected": expected.get("pattern"), "reference_detection": expected.get("detection"),
           "reference_discrimination": expected.get("discrimination"), "detection": None,
           "discrimination": None, "pattern": None, "status": "", "error": ""}
    try:
        rep = run_scenario(scenario, bundle.model, bundle.components, bundle.table, cfg)
    except PipelineError as exc:
        row.update(status="error", error=str(exc), passed=False)
        return row
    t0 = scenario.t_inject
    det = None if rep.detection_time is None else rep.detection_time - t0
    dis = None if rep.discrimination_time is None else rep.discrimination_time - t0
    row.update(detection=det, discrimination=dis, pattern=rep.pattern, status=rep.status)
    if scenario.noise_amp == 0:
        # noiseless: detection by the first epoch whose decision rows hold a
        # post-injection sample
        limit = cfg.edge * scenario.sampling
        passed = det is not None and 0 <= det <= limit + 1e-9
    else:
        passed = det is not None and 0 <= det <= DETECTION_TOL
    passed = passed and rep.pattern == expected.get("pattern") and dis is not None and dis <= DISCRIMINATION_TOL
    row["passed"] = bool(passed)
    return row


def _fmt(v):
    return "-" if v is None else f"{v:g}"


def render_bench(rows: list[dict], fmt: str) -> str:
    if fmt == "json":
        return json.dumps(rows, indent=1, sort_keys=True) + "\n"
    cols = ["scenario", "seed", "faults", "expected", "pattern", "reference_detection", "detection",
            "reference_discrimination", "discrimination", "result"]
    table = []
    for r in rows:
        table.append([r["scenario"], str(r["seed"]), "(" + ", ".join(f"{f:g}" for f in r["faults"]) + ")",
                      r["expected"] or "-", r["pattern"] or r["status"], _fmt(r["reference_detection"]),
                      _fmt(r["detection"]), _fmt(r["reference_discrimination"]), _fmt(r["discrimination"]),
                      "pass" if r["passed"] else "FAIL"])
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        w.writerows(table)
        return buf.getvalue()
    lines = ["| " + " | ".join(cols) + " |", "|" + "---|" * len(cols)]
    lines += ["| " + " | ".join(row) + " |" for row in table]
    passed = sum(r["passed"] for r in rows)
    lines.append("")
    lines.append(f"{passed}/{len(rows)} passed (delays in s after injection)")
    return "\n".join(lines) + "\n"


def cmd_bench(args) -> int:
    try:
        _load_bundle(args.bundle)
        paths = bench_scenarios(Path(args.scenarios) if args.scenarios else None)
    except (BundleError, OSError) as exc:
        _err(str(exc))
        return EXIT_USAGE
    if not paths:
        _err("no bench scenarios found")
        return EXIT_USAGE
    overrides = {}
    if args.noise_amp is not None:
        overrides["noise_amp"] = args.noise_amp
    if args.sampling is not None:
        overrides["sampling"] = args.sampling
        overrides["step"] = min(0.01, args.sampling / 50)
    if args.noiseless:
        overrides["noise_amp"] = 0.0
    seeds = [args.seed + k for k in range(args.seeds)]
    jobs = [(args.bundle, p, {**overrides, "seed": s}, _config(args)) for p in paths for s in seeds]
    try:
        if args.jobs > 1:
            with ProcessPoolExecutor(args.jobs) as pool:
                rows = list(pool.map(_bench_one, jobs))  # map keeps scenario order
        else:
            rows = [_bench_one(j) for j in jobs]
    except ScenarioError as exc:
        _err(str(exc))
        return EXIT_USAGE
    sys.stdout.write(render_bench(rows, args.format))
    return EXIT_OK if all(r["passed"] for r in rows) else EXIT_NUMERIC


# -- entry point ---------------------------------------------------------------------

def _numeric_flags(p, seed_default=None):
    p.add_argument("--seed", type=int, default=seed_default, help="noise seed")
    p.add_argument("--noise-amp", type=float, default=None, help="noise amplitude (overrides the scenario)")
    p.add_argument("--sampling", type=float, default=None, help="sampling period in s")
    p.add_argument("--noiseless", action="store_true", help="run without measurement noise")
    p.add_argument("--zero-threshold", type=float, default=None,
                   help="resolution needed to read a signature component as zero")
    p.add_argument("--format", choices=["md", "csv", "json"], default="md")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="faultsig", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"faultsig {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    a = sub.add_parser("analyze", help="signature, expected-value table and verdict of a model")
    a.add_argument("model", help="model file (YAML)")
    a.add_argument("-o", "--out", help="bundle path (default <model name>.bundle.json)")
    a.add_argument("--format", choices=["md", "csv", "json"], default="md")
    a.add_argument("--seed", type=int, default=0, help="seed of the numeric witness search")
    a.add_argument("--known", action="store_true", help="substitute the model's known parameter values")
    a.add_argument("--workers", type=int, default=1, help="processes for the per-pattern bases")
    a.set_defaults(func=cmd_analyze)

    r = sub.add_parser("run", help="simulate a scenario and diagnose it")
    r.add_argument("bundle")
    r.add_argument("scenario")
    _numeric_flags(r)
    r.add_argument("--report", help="write the JSON report to this path")
    r.add_argument("--series-csv", help="write the sampled time series to this path")
    r.set_defaults(func=cmd_run)

    b = sub.add_parser("bench", help="run the reference scenarios and compare with the reference times")
    b.add_argument("bundle")
    _numeric_flags(b, seed_default=0)
    b.add_argument("--seeds", type=int, default=1, help="number of consecutive seeds per scenario")
    b.add_argument("--jobs", type=int, default=1, help="parallel processes")
    b.add_argument("--scenarios", help="directory of t2_*.yaml scenario files")
    b.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
