"""Command-line front end.

    tscheck check FILE...             search for minimal inconsistent TSC subsets
    tscheck satisfy FILE CHART        necessary and sufficient check of one chart
    tscheck validate WITNESS          re-check an exported witness trajectory
    tscheck export WITNESS            convert a witness to json, csv or svg

Exit codes: 0 ok / nothing found, 1 inconsistency or invalid / unsat,
2 usage, parse, file or solver error, 3 a verdict stayed unknown.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path
from typing import Optional

from . import __version__
from .checksat import checksat_n, checksat_s
from .consistency import AnalysisReport, analyze
from .dsl import SpecError, load_spec
from .model import CheckConfig, DomainError, Specification
from .smt import SOLVER_ENV, Solver, SolverUnavailable
from .trajectory import (
    Trajectory, TrajectoryFormatError, export_trajectory, extract_witness, load_trajectory, render_svg,
    validate_trajectory,
)

log = logging.getLogger("tscheck")

EXIT_OK, EXIT_FOUND, EXIT_ERROR, EXIT_UNKNOWN = 0, 1, 2, 3
REPORT_FORMAT = "tsc-consistency-report"
REPORT_VERSION = 1
_UNSET = object()


@dataclasses.dataclass
class RunConfig:
    command: str
    inputs: list[str]
    check: CheckConfig
    solver: Optional[str] = None
    out: Optional[str] = None
    dump_smt: Optional[str] = None
    jobs: int = 1
    verbosity: int = 0
    witnesses: bool = True


def _max_subset(text: str) -> Optional[int]:
    if text.lower() in ("none", "all", "0"):
        return None
    k = int(text)
    if k < 1:
        raise argparse.ArgumentTypeError("max subset size must be positive")
    return k


def _positive(kind):
    def conv(text: str):
        v = kind(text)
        if not v > 0:
            raise argparse.ArgumentTypeError(f"expected a positive value, got {text}")
        return v
    return conv


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="tscheck", description="Consistency analysis for Traffic Sequence Charts.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def solver_flags(p):
        p.add_argument("--solver", metavar="PATH", help=f"SMT solver binary (default: ${SOLVER_ENV} or z3)")
        p.add_argument("--step-size", type=_positive(float), metavar="SECONDS", help="sufficient-mode step")
        p.add_argument("--depth", type=_positive(int), metavar="N", help="sufficient-mode unrolling depth")
        p.add_argument("--timeout", type=_positive(float), metavar="SECONDS", help="per solver query")
        p.add_argument("--out", metavar="DIR", help="output directory")
        p.add_argument("--dump-smt", metavar="DIR", help="write every solver query to DIR")
        p.add_argument("-v", "--verbose", action="count", default=0)

    p = sub.add_parser("check", help="report minimal inconsistent sets of requirement TSCs")
    p.add_argument("files", nargs="+")
    solver_flags(p)
    p.add_argument("--max-subset", type=_max_subset, default=_UNSET, metavar="K",
                   help="largest subset size, or 'none'")
    p.add_argument("--jobs", type=_positive(int), default=1, metavar="N")
    p.add_argument("--no-witness", action="store_true", help="skip witness export")

    p = sub.add_parser("satisfy", help="necessary and sufficient satisfiability of one chart")
    p.add_argument("file")
    p.add_argument("chart", help="chart name, or tsc:NAME for true ; H ; (F & C)")
    solver_flags(p)

    p = sub.add_parser("validate", help="validate a witness trajectory")
    p.add_argument("witness")
    p.add_argument("--spec", nargs="+", metavar="FILE", help="also check the annotated views")
    p.add_argument("--samples", type=_positive(int), default=1000, help="samples per segment")
    p.add_argument("--eps", type=_positive(float), default=1e-6)

    p = sub.add_parser("export", help="convert a witness trajectory")
    p.add_argument("witness")
    p.add_argument("--format", choices=("json", "csv", "svg"), default="csv")
    p.add_argument("--rate", type=_positive(float), default=10.0, help="sample rate in Hz")
    p.add_argument("--spec", nargs="+", metavar="FILE", help="lane geometry for svg")
    p.add_argument("-o", "--output", metavar="FILE", help="default: stdout")
    return ap


def _check_config(spec: Specification, args) -> CheckConfig:
    over = {}
    for flag, key in (("step_size", "step"), ("depth", "depth"), ("timeout", "timeout")):
        val = getattr(args, flag, None)
        if val is not None:
            over[key] = val
    if getattr(args, "max_subset", _UNSET) is not _UNSET:
        over["max_subset"] = args.max_subset
    return dataclasses.replace(spec.config, **over)


def _err(msg: str) -> None:
    print(f"tscheck: error: {msg}", file=sys.stderr)


def _load(files) -> Specification:
    return load_spec(*files)


# -- reports -----------------------------------------------------------------------


def _subset_id(subset) -> str:
    return "+".join(subset)


def report_document(rep: AnalysisReport, cfg: CheckConfig, witness_files: dict) -> dict:
    """Machine report.  Contains no timings, so reruns are byte-identical."""
    st = rep.stats
    return {
        "format": REPORT_FORMAT,
        "version": REPORT_VERSION,
        "config": {"step": str(cfg.step), "depth": cfg.depth, "intervals": cfg.intervals,
                   "timeout": cfg.timeout, "max_subset": cfg.max_subset},
        "tscs": rep.tscs,
        "inconsistent": [
            {"tscs": list(s), "innermost": rep.fired[s][0], "context": list(rep.fired[s][1]),
             "witness": witness_files.get(s)}
            for s in rep.subsets
        ],
        "cases": [{"innermost": c.innermost, "context": list(c.context), "bc2": c.bc2, "bc1": c.bc1,
                   "outcome": c.outcome} for c in rep.cases],
        "statistics": {
            "total_cases": st.total, "enumerated": st.enumerated, "solver_cases": st.solved,
            "solver_fraction": round(st.solved_fraction, 6), "skipped_minimality": st.skipped_minimality,
            "skipped_bc1": st.skipped_bc1, "skipped_size": st.skipped_size, "unknown": st.unknown,
            "solver_calls": st.solver_calls,
        },
    }


def format_report(rep: AnalysisReport, cfg: CheckConfig) -> str:
    st = rep.stats
    lines = [f"TSCs: {', '.join(rep.tscs)}", ""]
    if rep.subsets:
        lines.append(f"{len(rep.subsets)} minimal inconsistent subset(s):")
        for s in rep.subsets:
            inner, ctx = rep.fired[s]
            how = f"found with innermost {inner}" + (f", context {', '.join(ctx)}" if ctx else "")
            lines.append(f"  {{{', '.join(s)}}}  ({how})")
    else:
        lines.append("no inconsistency found")
    unknown = [c for c in rep.cases if c.outcome == "unknown"]
    if unknown:
        lines.append("")
        lines.append(f"{len(unknown)} case(s) without a verdict:")
        for c in unknown:
            lines.append(f"  innermost {c.innermost}, context {{{', '.join(c.context)}}}")
    lines += [
        "",
        "statistics:",
        f"  total cases        {st.total}",
        f"  sent to solver     {st.solved} ({100 * st.solved_fraction:.1f}%)",
        f"  skipped            {st.skipped} (minimality {st.skipped_minimality}, "
        f"BC1 unsat {st.skipped_bc1}, size limit {st.skipped_size})",
        f"  solver calls       {st.solver_calls}",
        f"  wall time          {st.wall_time:.2f} s",
        f"  step {cfg.step} s, depth {cfg.depth}, max subset {cfg.max_subset}",
    ]
    return "\n".join(lines) + "\n"


# -- commands ----------------------------------------------------------------------


def run_check(rc: RunConfig, spec: Optional[Specification] = None) -> tuple[int, AnalysisReport]:
    """Analyse, write report.txt, report.json, timing.json and witness bundles."""
    spec = spec or _load(rc.inputs)
    cfg = rc.check
    solver = Solver(rc.solver, timeout=cfg.timeout, dump_dir=rc.dump_smt)

    def progress(res):
        log.info("%s | %s: bc2 %s, bc1 %s -> %s", res.innermost, ",".join(res.context) or "-", res.bc2,
                 res.bc1 or "-", res.outcome)

    rep = analyze(spec, cfg, solver, jobs=rc.jobs, witnesses=rc.witnesses, progress=progress)
    out = Path(rc.out or "tscheck-out")
    out.mkdir(parents=True, exist_ok=True)
    witness_files = {}
    for s in rep.subsets:
        w = rep.witnesses.get(s)
        if w is None:
            continue
        stem = f"witness-{_subset_id(s)}"
        (out / f"{stem}.json").write_text(export_trajectory(w, "json"))
        (out / f"{stem}.svg").write_text(render_svg(w, spec))
        witness_files[s] = f"{stem}.json"
    doc = report_document(rep, cfg, witness_files)
    (out / "report.json").write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")
    text = format_report(rep, cfg)
    (out / "report.txt").write_text(text)
    timing = {"wall_time": rep.stats.wall_time,
              "cases": [{"innermost": c.innermost, "context": list(c.context), "time": c.time}
                        for c in rep.cases]}
    (out / "timing.json").write_text(json.dumps(timing, indent=1) + "\n")
    if rc.verbosity >= 0:
        print(text, end="")
        print(f"reports written to {out}")
    return (EXIT_FOUND if rep.subsets else EXIT_OK), rep


def cmd_check(args) -> int:
    spec = _load(args.files)
    rc = RunConfig("check", list(args.files), _check_config(spec, args), args.solver, args.out,
                   args.dump_smt, args.jobs, args.verbose, not args.no_witness)
    return run_check(rc, spec)[0]


def _resolve_chart(spec: Specification, name: str):
    from .consistency import build_hfc
    if name.startswith("tsc:"):
        return build_hfc(spec.tsc(name[4:]))
    return spec.chart(name)


def cmd_satisfy(args) -> int:
    spec = _load([args.file])
    cfg = _check_config(spec, args)
    try:
        chart = _resolve_chart(spec, args.chart)
    except DomainError as exc:
        _err(str(exc))
        return EXIT_ERROR
    solver = Solver(args.solver, timeout=cfg.timeout, dump_dir=args.dump_smt)
    vn = checksat_n(chart, spec, solver, cfg)
    print(f"necessary: {vn.status}" + (f" ({vn.diagnostic})" if vn.diagnostic else ""))
    if vn.unsat:
        print("sufficient: unsat (implied)")
        return EXIT_FOUND
    vs = checksat_s(chart, spec, cfg, solver)
    print(f"sufficient: {vs.status}" + (f" ({vs.diagnostic})" if vs.diagnostic else ""))
    if vs.sat:
        w = extract_witness(vs.model, vs.stats["problem"], cfg)
        out = Path(args.out or "tscheck-out")
        out.mkdir(parents=True, exist_ok=True)
        stem = f"witness-{args.chart.replace(':', '-')}"
        (out / f"{stem}.json").write_text(export_trajectory(w, "json"))
        (out / f"{stem}.svg").write_text(render_svg(w, spec))
        print(f"witness: {out / (stem + '.json')}")
    if "unknown" in (vn.status, vs.status):
        return EXIT_UNKNOWN
    return EXIT_OK


def _read_witness(path: str) -> Trajectory:
    return load_trajectory(Path(path).read_text(encoding="utf-8"))


def cmd_validate(args) -> int:
    traj = _read_witness(args.witness)
    spec = _load(args.spec) if args.spec else None
    rep = validate_trajectory(traj, samples=args.samples, eps=args.eps, spec=spec)
    print(rep.summary())
    for view, n in sorted(rep.view_violations.items()):
        if n:
            print(f"  view {view}: {n} violating samples")
    return EXIT_OK if rep.valid else EXIT_FOUND


def cmd_export(args) -> int:
    traj = _read_witness(args.witness)
    if args.format == "svg":
        text = render_svg(traj, _load(args.spec) if args.spec else None)
    else:
        text = export_trajectory(traj, args.format, args.rate)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


COMMANDS = {"check": cmd_check, "satisfy": cmd_satisfy, "validate": cmd_validate, "export": cmd_export}


def main(argv: Optional[list[str]] = None) -> int:
    ap = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_ERROR if exc.code else EXIT_OK
    level = logging.WARNING - 10 * getattr(args, "verbose", 0)
    logging.basicConfig(level=max(logging.DEBUG, level), format="%(levelname)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except SpecError as exc:
        for d in exc.diagnostics:
            print(str(d), file=sys.stderr)
        return EXIT_ERROR
    except SolverUnavailable as exc:
        _err(str(exc))
        return EXIT_ERROR
    except TrajectoryFormatError as exc:
        _err(str(exc))
        return EXIT_ERROR
    except (OSError, DomainError) as exc:
        _err(str(exc))
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
