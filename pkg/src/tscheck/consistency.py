"""Analysis charts and the search for minimal inconsistent TSC subsets.

For an innermost TSC ``<H, F, C>`` and a context set ``T`` the two analysis
charts are concurrent rows, one per TSC.  The innermost row marks its future
with the shared pins ``p`` and ``q``; every context row pins its own future
around that window:

    BC1 innermost row:  true ; H ;[p] F ;[q] true
    BC1 context row:    true ; H_k ; (F_k pins [p, q]) ; true
    BC2:                the same with F replaced by F & C everywhere

BC1 says all pre-charts can happen together, BC2 says all obligations can be
met while they do.  A set is reported when BC2 is unsat in the necessary
check and BC1 is sat in the sufficient check (or ``T`` is empty).
"""

from __future__ import annotations

import itertools
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

from .checksat import build_s_problem, checksat_n, checksat_s
from .model import (
    Chart, CheckConfig, Concurrency, Empty, PinChain, RequirementTSC, Seq, Specification, rename_pins,
)
from .smt import Solver

log = logging.getLogger(__name__)

PIN_START, PIN_END = "p", "q"


def build_hfc(tsc: RequirementTSC) -> Chart:
    """``true ; H ; (F & C)``."""
    return Seq(Seq(Empty(), tsc.history), Concurrency((tsc.future, tsc.consequence)))


def _row_pins(chart: Chart, row: int) -> Chart:
    return rename_pins(chart, lambda p: f"r{row}.{p}")


def _innermost_row(tsc: RequirementTSC, with_consequence: bool) -> Chart:
    h = _row_pins(tsc.history, 0)
    f = _row_pins(tsc.future, 0)
    if with_consequence:
        f = Concurrency((f, _row_pins(tsc.consequence, 0)))
    return Seq(Seq(Seq(Empty(), h), f, PIN_START), Empty(), PIN_END)


def _context_row(tsc: RequirementTSC, row: int, with_consequence: bool) -> Chart:
    h = _row_pins(tsc.history, row)
    f = _row_pins(tsc.future, row)
    if with_consequence:
        f = Concurrency((f, _row_pins(tsc.consequence, row)))
    return Seq(Seq(Seq(Empty(), h), PinChain(f, (PIN_START, PIN_END))), Empty())


def _build(tsc: RequirementTSC, context, with_consequence: bool) -> Chart:
    if tsc in context or any(t.name == tsc.name for t in context):
        raise ValueError("the innermost TSC must not be part of the context")
    rows = [_innermost_row(tsc, with_consequence)]
    rows += [_context_row(t, k + 1, with_consequence) for k, t in enumerate(context)]
    return rows[0] if len(rows) == 1 else Concurrency(tuple(rows))


def build_bc1(tsc: RequirementTSC, context) -> Chart:
    return _build(tsc, list(context), False)


def build_bc2(tsc: RequirementTSC, context) -> Chart:
    return _build(tsc, list(context), True)


# -- subset search ---------------------------------------------------------------

REPORT, CONSISTENT, BC1_UNSAT, UNKNOWN = "report", "consistent", "bc1-unsat", "unknown"


@dataclass
class CaseResult:
    innermost: str
    context: tuple[str, ...]
    bc2: str
    bc1: Optional[str]
    outcome: str
    time: float = 0.0

    @property
    def subset(self) -> tuple[str, ...]:
        return tuple(sorted((self.innermost,) + self.context))


@dataclass
class AnalysisStats:
    total: int = 0
    enumerated: int = 0
    solved: int = 0
    skipped_minimality: int = 0
    skipped_bc1: int = 0
    skipped_size: int = 0
    unknown: int = 0
    solver_calls: int = 0
    wall_time: float = 0.0

    @property
    def skipped(self) -> int:
        return self.skipped_minimality + self.skipped_bc1 + self.skipped_size

    @property
    def solved_fraction(self) -> float:
        return self.solved / self.total if self.total else 0.0


@dataclass
class AnalysisReport:
    tscs: list[str]
    subsets: list[tuple[str, ...]] = field(default_factory=list)
    fired: dict = field(default_factory=dict)  # subset -> (innermost, context)
    witnesses: dict = field(default_factory=dict)  # subset -> Trajectory or None
    cases: list[CaseResult] = field(default_factory=list)
    stats: AnalysisStats = field(default_factory=AnalysisStats)
    max_subset: Optional[int] = None


def _check_case(spec: Specification, cfg: CheckConfig, solver: Solver, inner: RequirementTSC,
                context: list[RequirementTSC]):
    start = time.perf_counter()
    bc2 = checksat_n(build_bc2(inner, context), spec, solver, cfg)
    bc1 = None
    model = None
    problem = None
    if bc2.unsat and not context:
        outcome = REPORT
    elif bc2.unsat:
        chart = build_bc1(inner, context)
        # necessary-mode unsat already rules out every sufficient-mode model
        v1 = checksat_n(chart, spec, solver, cfg)
        if not v1.unsat:
            v1 = checksat_s(chart, spec, cfg, solver)
        bc1 = v1.status
        if v1.sat:
            outcome = REPORT
            model, problem = v1.model, v1.stats.get("problem")
        elif v1.unsat:
            outcome = BC1_UNSAT
        else:
            outcome = UNKNOWN
    elif bc2.sat:
        outcome = CONSISTENT
    else:
        outcome = UNKNOWN
    res = CaseResult(inner.name, tuple(t.name for t in context), bc2.status, bc1, outcome,
                     time.perf_counter() - start)
    return res, model, problem


def analyze(spec: Specification, cfg: Optional[CheckConfig] = None, solver: Optional[Solver] = None,
            jobs: int = 1, witnesses: bool = True,
            progress: Optional[Callable[[CaseResult], None]] = None) -> AnalysisReport:
    """Enumerate (innermost, context) cases by subset size and report minimal conflicts."""
    from .trajectory import extract_witness

    cfg = cfg or spec.config
    if not spec.tscs:
        raise ValueError("the specification has no TSC")
    solver = solver or Solver(timeout=cfg.timeout)
    start = time.perf_counter()
    by_name = {t.name: t for t in spec.tscs}
    names = sorted(by_name)
    n = len(names)
    rep = AnalysisReport(names, max_subset=cfg.max_subset)
    st = rep.stats
    st.total = n * 2 ** (n - 1)
    calls_before = solver.calls
    reported: list[frozenset] = []
    bc1_unsat: dict[str, list[frozenset]] = {}

    def skip_reason(subset: frozenset, inner: str, ctx: frozenset) -> Optional[str]:
        if cfg.max_subset is not None and len(subset) > cfg.max_subset:
            return "size"
        if any(r <= subset for r in reported):
            return "minimality"
        if any(t <= ctx for t in bc1_unsat.get(inner, ())):
            return "bc1"
        return None

    def run_subset(subset: tuple[str, ...]):
        # cases of one subset run in order; they may prune each other
        out = []
        local_report = False
        for inner in subset:
            ctx = tuple(x for x in subset if x != inner)
            fs, fctx = frozenset(subset), frozenset(ctx)
            why = "minimality" if local_report else skip_reason(fs, inner, fctx)
            if why:
                out.append((why, inner, ctx, None))
                continue
            res, model, problem = _check_case(spec, cfg, solver, by_name[inner], [by_name[c] for c in ctx])
            out.append((None, res, model, problem))
            if res.outcome == REPORT:
                local_report = True
        return out

    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        for size in range(1, n + 1):
            subsets = list(itertools.combinations(names, size))
            if cfg.max_subset is not None and size > cfg.max_subset:
                st.enumerated += size * len(subsets)
                st.skipped_size += size * len(subsets)
                continue
            results = list(pool.map(run_subset, subsets)) if jobs > 1 else [run_subset(s) for s in subsets]
            for subset, items in zip(subsets, results):
                for item in items:
                    st.enumerated += 1
                    if item[0] is not None:
                        why = item[0]
                        if why == "minimality":
                            st.skipped_minimality += 1
                        elif why == "bc1":
                            st.skipped_bc1 += 1
                        else:
                            st.skipped_size += 1
                        continue
                    _, res, model, problem = item
                    st.solved += 1
                    rep.cases.append(res)
                    if progress:
                        progress(res)
                    if res.outcome == UNKNOWN:
                        st.unknown += 1
                    elif res.outcome == BC1_UNSAT:
                        bc1_unsat.setdefault(res.innermost, []).append(frozenset(res.context))
                    elif res.outcome == REPORT:
                        key = tuple(subset)
                        reported.append(frozenset(subset))
                        rep.subsets.append(key)
                        rep.fired[key] = (res.innermost, res.context)
                        w = None
                        if witnesses and model is not None and problem is not None:
                            try:
                                w = extract_witness(model, problem, cfg)
                            except Exception as exc:  # witness is best effort
                                log.warning("witness extraction failed for %s: %s", key, exc)
                        rep.witnesses[key] = w
    st.solver_calls = solver.calls - calls_before
    st.wall_time = time.perf_counter() - start
    return rep


def case_count(n: int) -> int:
    """Worst-case number of (innermost, context) cases for ``n`` TSCs."""
    return n * 2 ** (n - 1)


def bc1_problem(spec: Specification, inner: str, context, cfg: Optional[CheckConfig] = None):
    tscs = {t.name: t for t in spec.tscs}
    return build_s_problem(build_bc1(tscs[inner], [tscs[c] for c in context]), spec, cfg or spec.config)
