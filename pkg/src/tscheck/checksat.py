"""Necessary (N) and sufficient (S) satisfiability checks for basic charts.

N-mode: variable step durations, one valuation per car and step, views are
checked strictly at the start of a step and in closed form at its end.  The
only dynamics is continuity (shared variables), and bounding-box offsets
range over their hull across all headings.  Unsat here means the chart has
no trajectory at all.

S-mode: fixed step ``dt``, each car moves along a quadratic Bezier segment
per step with control points ``p0 = (x, y)``, ``p1 = (cx, cy)`` and
``p2 = p0'``.  With legs ``L1 = p1 - p0`` and ``L2 = p2 - p1``:

* heading: at least one interval ``j`` is selected per segment, and both legs
  lie in its closed cone, so the tangent direction (a convex combination of
  the legs) stays in the interval;
* bounding box: per-segment bound variables are safe for every selected
  interval (``bbox_bounds``), and atoms use the bound that makes them harder;
* C1: ``L2`` of one segment equals ``L1`` of the next;
* lateral acceleration: ``|v^2 kappa| <= 2 |L2 - L1| / dt^2``, so an octagon
  bound on ``L2 - L1`` suffices;
* curvature: ``|kappa| = |L1 x L2| / (2 |w|^3) <= |L2 - L1| / (2 |w|^2)``
  with ``w`` the tangent leg mix; ``|w|`` is bounded below by the
  projection ``sp`` on the selected interval centre and a ladder of levels
  keeps everything linear;
* a selection may only change where the car is visibly moving, so the held
  heading of a stopped car stays inside the selected intervals.

Every S-mode model therefore is a valid single-track trajectory; unsat in
S-mode proves nothing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional

from . import formula as fm
from .bmc import (
    FIXED, VARIABLE, BmcProblem, at, encode_chart, encode_timing, unroll, view_literal,
)
from .formula import BOOL, Formula, Lin, Var
from .model import (
    BOX, OFFSETS, CarParams, Chart, CheckConfig, DomainError, Specification, bbox_offset,
    count_sequence_operators,
)
from .smt import Solver, Verdict
from .views import relax, translate_view

MU = Fraction(1, 1000)  # minimum forward projection (m) where a heading selection changes
LEVELS = tuple(Fraction(2) ** k for k in range(-3, 8))  # 0.125 m ... 128 m
COS8 = Fraction(92387, 100000)  # just below cos(pi/8) = 0.923879...
SQRT2 = Fraction(14142, 10000)  # just below sqrt(2); the octagon stays inside the disc
LAT_MARGIN = Fraction(995, 1000)
BOUND_EPS = 1e-9
GRID = 10 ** 4  # bound constants are rounded outwards to 1/GRID
DIR_SCALE = 1000  # cone directions are integer vectors of about this length


class UnsupportedConstraint(ValueError):
    pass


# -- heading intervals and bounding-box bounds ---------------------------------


def heading_intervals(n: int) -> list[tuple[float, float]]:
    """``n`` equal closed intervals centred on multiples of ``2 pi / n``."""
    if n < 3:
        raise DomainError("need at least three heading intervals")
    w = 2 * math.pi / n
    return [(j * w - w / 2, j * w + w / 2) for j in range(n)]


def interval_center(n: int, j: int) -> float:
    return j * 2 * math.pi / n


def _offset_terms(name: str, params: CarParams) -> list[tuple[float, float]]:
    # each corner offset is a*cos(t) - b*sin(t)
    if name in ("bbxmin", "bbxmax"):
        return [(cx, cy) for cx, cy in params.corners()]
    return [(cy, -cx) for cx, cy in params.corners()]


def bbox_bounds(interval: tuple[float, float], params: CarParams,
                eps: float = BOUND_EPS) -> dict[str, tuple[float, float]]:
    """Infimum and supremum of each bounding-box offset over a heading interval.

    Each offset is a max (or min) of four sinusoids, so both extrema are
    attained at an interval end, at a stationary point of one sinusoid or
    at a crossing of two; all such candidates are evaluated.  The result is
    rounded outwards by ``eps``.
    """
    lo, hi = interval
    if hi < lo:
        raise DomainError("empty heading interval")
    out = {}
    for name in OFFSETS:
        terms = _offset_terms(name, params)
        cands = [lo, hi]
        phases = []
        for a, b in terms:
            phases.append(math.atan2(b, a))  # a cos t - b sin t = r cos(t + phase)
        for i, (a, b) in enumerate(terms):
            cands.extend(_hits(-phases[i], math.pi, lo, hi))
            for a2, b2 in terms[i + 1:]:
                da, db = a - a2, b - b2
                if da == 0 and db == 0:
                    continue
                ph = math.atan2(db, da)
                cands.extend(_hits(-ph + math.pi / 2, math.pi, lo, hi))
        vals = [bbox_offset(name, t, params) for t in cands]
        out[name] = (min(vals) - eps, max(vals) + eps)
    return out


@dataclass(frozen=True)
class Cone:
    """A heading interval as used by the encoding: integer edge directions,
    the exact angles they span, a centre vector of length at most one and
    bounding-box bounds valid on the whole cone."""

    lo: tuple[int, int]
    hi: tuple[int, int]
    angles: tuple[float, float]
    center: tuple[Fraction, Fraction]
    bounds: dict


def _direction(theta: float) -> tuple[int, int]:
    return round(DIR_SCALE * math.cos(theta)), round(DIR_SCALE * math.sin(theta))


def cones(n: int, params: CarParams) -> list[Cone]:
    out = []
    for j, (lo, hi) in enumerate(heading_intervals(n)):
        dl, dh = _direction(lo), _direction(hi)
        a = math.atan2(dl[1], dl[0])
        b = math.atan2(dh[1], dh[0])
        while b < a:
            b += 2 * math.pi
        c = interval_center(n, j)
        cx, cy = _direction(c)
        while cx * cx + cy * cy > DIR_SCALE ** 2:
            cx, cy = cx - (cx > 0) + (cx < 0), cy - (cy > 0) + (cy < 0)
        raw = bbox_bounds((a - BOUND_EPS, b + BOUND_EPS), params)
        bounds = {k: (_down(lo_), _up(hi_)) for k, (lo_, hi_) in raw.items()}
        out.append(Cone(dl, dh, (a, b), (Fraction(cx, DIR_SCALE), Fraction(cy, DIR_SCALE)), bounds))
    return out


def _down(x: float) -> Fraction:
    return Fraction(math.floor(x * GRID), GRID)


def _up(x: float) -> Fraction:
    return Fraction(math.ceil(x * GRID), GRID)


def _hits(base: float, period: float, lo: float, hi: float) -> list[float]:
    k0 = math.ceil((lo - base) / period)
    out = []
    t = base + k0 * period
    while t <= hi:
        out.append(t)
        t += period
    return out


# -- attribute substitution ---------------------------------------------------------


def _split(v: Var) -> tuple[str, str]:
    obj, _, attr = v.name.rpartition(".")
    return obj, attr


def _lane_term(spec: Specification, obj: str, attr: str) -> Lin:
    g = lambda a: Lin.of(Var(f"{obj}.{a}", glob=True))
    if attr == "xmin":
        return g("start")
    if attr == "xmax":
        return g("start") + g("length")
    if attr == "ymin":
        return g("offset")
    if attr == "ymax":
        return g("offset") + g("width")
    return g(attr)


def _kind(spec: Specification, obj: str) -> str:
    t = spec.obj(obj).type
    if spec.world.is_subtype(t, "Lane"):
        return "lane"
    if spec.world.is_subtype(t, "MovingObject"):
        return "car"
    return "static"


def _objects(phis, spec) -> tuple[list[str], list[str]]:
    cars, statics = set(), set()
    for phi in phis:
        for v in fm.variables(phi):
            obj, _ = _split(v)
            (cars if _kind(spec, obj) == "car" else statics).add(obj)
    return sorted(cars), sorted(statics)


def _static_constraints(spec: Specification, statics: list[str]) -> list[Formula]:
    out = []
    for o in statics:
        decl = spec.obj(o)
        kind = _kind(spec, o)
        g = lambda a: Lin.of(Var(f"{o}.{a}", glob=True))
        if kind == "lane":
            out += [fm.gt(g("length"), 0), fm.gt(g("width"), 0)]
        else:
            out += [fm.lt(g("xmin"), g("xmax")), fm.lt(g("ymin"), g("ymax"))]
        for a, val in decl.fixed:
            out.append(fm.eq(g(a), val))
    return out


def _car_var(car: str, attr: str, prime: bool = False, sort: str = fm.REAL) -> Var:
    return Var(f"{car}.{attr}", sort, prime)


# -- assembly shared by both modes ---------------------------------------------------


@dataclass
class _Parts:
    state: list
    init: list
    trans: list


def _assemble(chart: Chart, spec: Specification, mode: str, step, encode_view: Callable,
              dynamics: Callable) -> BmcProblem:
    enc = encode_chart(chart)
    ti, tt = encode_timing(chart, mode, step, enc)
    phis = {name: translate_view(spec.view(name), spec) for name in enc.views}
    cars, statics = _objects(phis.values(), spec)
    parts = dynamics(cars)
    # view literals occur only positively in the chart encoding, so one direction suffices
    sv = [fm.implies(fm.BoolVar(view_literal(n)), encode_view(phi)) for n, phi in phis.items()]
    views = [view_literal(n) for n in enc.views]
    state = list(enc.state) + views + parts.state
    init = fm.conj(enc.init, enc.anchor, ti, _static_constraints(spec, statics), parts.init)
    trans = fm.conj(enc.trans, tt, sv, parts.trans)
    glob_vars = sorted({v for phi in (init, trans) for v in fm.variables(phi) if v.glob})
    return BmcProblem(tuple(state), tuple(glob_vars), init, trans, enc.final, mode,
                      fm.to_fraction(step) if step is not None else None,
                      meta={"leaves": enc.leaves, "views": enc.views, "cars": cars,
                            "statics": statics, "chart": chart,
                            "params": {c: spec.params(c) for c in cars}})


# -- necessary mode ---------------------------------------------------------------


def _n_term(spec: Specification, v: Var, prime: bool) -> Lin:
    obj, attr = _split(v)
    kind = _kind(spec, obj)
    if kind == "lane":
        return _lane_term(spec, obj, attr)
    if kind == "static":
        return Lin.of(Var(v.name, glob=True))
    if attr in BOX:
        axis = attr[0]
        return Lin.of(_car_var(obj, axis, prime)) + Lin.of(_car_var(obj, "bb" + attr, prime))
    return Lin.of(_car_var(obj, attr, prime))


def n_view_formula(phi: Formula, spec: Specification) -> Formula:
    """Strict at the step start, closed at the step end."""
    cur = fm.substitute(phi, lambda v: _n_term(spec, v, False))
    nxt = fm.substitute(relax(phi), lambda v: _n_term(spec, v, True))
    return fm.conj(cur, nxt)


def build_n_problem(chart: Chart, spec: Specification, cfg: Optional[CheckConfig] = None
                    ) -> tuple[BmcProblem, int]:
    def dynamics(cars):
        state, init, trans = [], [], []
        for c in cars:
            b = bbox_bounds((-math.pi, math.pi), spec.params(c))
            for a in ("x", "y", "v", "theta", "a", "delta") + OFFSETS:
                state.append(_car_var(c, a))
            for name, (lo, hi) in b.items():
                for prime in (False, True):
                    var = Lin.of(_car_var(c, name, prime))
                    rng = fm.conj(fm.ge(var, _down(lo)), fm.le(var, _up(hi)))
                    (init if not prime else trans).append(rng)
        return _Parts(state, init, trans)

    problem = _assemble(chart, spec, VARIABLE, None, lambda phi: n_view_formula(phi, spec), dynamics)
    depth = count_sequence_operators(chart) + 1
    problem.meta["depth"] = depth
    return problem, depth


def checksat_n(chart: Chart, spec: Specification, solver: Optional[Solver] = None,
               cfg: Optional[CheckConfig] = None, depth: Optional[int] = None) -> Verdict:
    cfg = cfg or spec.config
    solver = solver or Solver(timeout=cfg.timeout)
    problem, n = build_n_problem(chart, spec, cfg)
    v = solver.check(unroll(problem, depth if depth is not None else n), tag="necessary")
    v.stats["depth"] = depth if depth is not None else n
    return v


# -- sufficient mode ----------------------------------------------------------------


def _octagon(vec: tuple[Lin, Lin], bound: Fraction, strict: bool = False) -> Formula:
    """``|vec| <= bound`` (or ``<``), sufficient via eight half-planes."""
    rhs = bound * COS8
    parts = []
    for (ux, uy), r in (((1, 0), rhs), ((0, 1), rhs), ((1, 1), rhs * SQRT2), ((-1, 1), rhs * SQRT2)):
        proj = vec[0] * ux + vec[1] * uy
        if strict:
            parts += [fm.lt(proj, r), fm.gt(proj, -r)]
        else:
            parts += [fm.le(proj, r), fm.ge(proj, -r)]
    return fm.conj(parts)


class _SModel:
    def __init__(self, spec: Specification, cfg: CheckConfig):
        self.spec = spec
        self.cfg = cfg
        self.dt = fm.to_fraction(cfg.step)
        self.n_int = cfg.intervals

    def p(self, car: str, cp: int) -> tuple[Lin, Lin]:
        if cp == 0:
            return Lin.of(_car_var(car, "x")), Lin.of(_car_var(car, "y"))
        if cp == 1:
            return Lin.of(_car_var(car, "cx")), Lin.of(_car_var(car, "cy"))
        return Lin.of(_car_var(car, "x", True)), Lin.of(_car_var(car, "y", True))

    def legs(self, car: str, nxt: bool = False):
        if nxt:
            x, y = Lin.of(_car_var(car, "x", True)), Lin.of(_car_var(car, "y", True))
            cx, cy = Lin.of(_car_var(car, "cx", True)), Lin.of(_car_var(car, "cy", True))
            return (cx - x, cy - y), None
        p0, p1, p2 = self.p(car, 0), self.p(car, 1), self.p(car, 2)
        return (p1[0] - p0[0], p1[1] - p0[1]), (p2[0] - p1[0], p2[1] - p1[1])

    # atoms -------------------------------------------------------------------
    def atom(self, a: fm.Cmp) -> Formula:
        groups = {"pos": [], "speed": [], "glob": []}
        for v, c in a.expr.terms:
            obj, attr = _split(v)
            kind = _kind(self.spec, obj)
            if kind != "car":
                groups["glob"].append((v, c))
            elif attr in ("x", "y") + BOX + OFFSETS:
                groups["pos"].append((obj, attr, c))
            elif attr == "v":
                groups["speed"].append((obj, c))
            else:
                raise UnsupportedConstraint(
                    f"attribute {attr} of {obj} is not supported by the sufficient check")
        if groups["speed"]:
            if len(groups["speed"]) > 1 or groups["pos"] or groups["glob"]:
                raise UnsupportedConstraint("speed atoms must compare a single speed with a constant")
            (car, k), = groups["speed"]
            return self.speed_atom(car, a.op, -a.expr.const / k if k else 0, k < 0)
        if a.op == "=":
            return fm.conj(self.pos_atom(a.expr, "<=", groups), self.pos_atom(-a.expr, "<=", _neg(groups)))
        if a.op in (">", ">="):
            return self.pos_atom(-a.expr, fm.flip(a.op), _neg(groups))
        return self.pos_atom(a.expr, a.op, groups)

    def pos_atom(self, expr: Lin, op: str, groups) -> Formula:
        glob_part = Lin((), expr.const)
        for v, c in groups["glob"]:
            obj, attr = _split(v)
            t = _lane_term(self.spec, obj, attr) if _kind(self.spec, obj) == "lane" else Lin.of(
                Var(v.name, glob=True))
            glob_part = glob_part + t * c
        bound_part = Lin()
        for obj, attr, c in groups["pos"]:
            off = attr if attr in OFFSETS else ("bb" + attr if attr in BOX else None)
            if off is not None:
                # upper bound of c * offset over the segment
                side = "u" if c > 0 else "l"
                bound_part = bound_part + Lin.of(_car_var(obj, f"{off}_{side}")) * c
        out = []
        for cp in (0, 1, 2):
            e = glob_part + bound_part
            for obj, attr, c in groups["pos"]:
                if attr in OFFSETS:
                    continue
                px, py = self.p(obj, cp)
                e = e + (px if attr[0] == "x" else py) * c
            out.append(fm.compare(e, op if cp < 2 else fm.weaken(op), 0))
        return fm.conj(out)

    def speed_atom(self, car: str, op: str, value: Fraction, flipped: bool) -> Formula:
        # k*v + const op 0  <=>  v op' value, op' flipped when k < 0
        if flipped:
            op = fm.flip(op)
        l1, l2 = self.legs(car)
        half = self.dt / 2
        if op == "=":
            return fm.conj(self.speed_atom(car, "<=", value, False), self.speed_atom(car, ">=", value, False))
        if op in ("<", "<="):
            if value < 0 or (value == 0 and op == "<"):
                return fm.FALSE
            return fm.conj(_octagon(l1, value * half, op == "<"), _octagon(l2, value * half, op == "<"))
        sp = Lin.of(_car_var(car, "sp"))
        return fm.compare(sp * (2 / self.dt), op, value)

    # dynamics ------------------------------------------------------------------
    def dynamics(self, cars: list[str]) -> _Parts:
        state, init, trans = [], [], []
        for car in cars:
            params = self.spec.params(car)
            for a in ("x", "y", "cx", "cy", "sp"):
                state.append(_car_var(car, a))
            for off in OFFSETS:
                state += [_car_var(car, f"{off}_l"), _car_var(car, f"{off}_u")]
            hs = [_car_var(car, f"h{j}", sort=BOOL) for j in range(self.n_int)]
            state += hs
            l1, l2 = self.legs(car)
            n1, _ = self.legs(car, nxt=True)
            sp = Lin.of(_car_var(car, "sp"))
            trans.append(fm.disj(fm.BoolVar(h) for h in hs))
            for j, cn in enumerate(cones(self.n_int, params)):
                h = fm.BoolVar(hs[j])
                (ca, sa), (cb, sb), (uc, us) = cn.lo, cn.hi, cn.center
                cone = []
                for lx, ly in (l1, l2):
                    cone.append(fm.ge(ly * ca - lx * sa, 0))
                    cone.append(fm.ge(lx * sb - ly * cb, 0))
                    cone.append(fm.le(sp, lx * uc + ly * us))
                for off, (inf, sup) in cn.bounds.items():
                    cone.append(fm.le(Lin.of(_car_var(car, f"{off}_l")), inf))
                    cone.append(fm.ge(Lin.of(_car_var(car, f"{off}_u")), sup))
                trans.append(fm.implies(h, fm.conj(cone)))
                # selection changes only while moving along the new and the old interval
                hn = fm.BoolVar(hs[j].next)
                trans.append(fm.implies(fm.neg(fm.iff(h, hn)), fm.ge(n1[0] * uc + n1[1] * us, MU)))
            # C1 continuity with the next segment
            trans.append(fm.eq(l2[0], n1[0]))
            trans.append(fm.eq(l2[1], n1[1]))
            d = (l2[0] - l1[0], l2[1] - l1[1])
            a_lat = _down(params.a_lat_max) * LAT_MARGIN
            trans.append(_octagon(d, a_lat * self.dt * self.dt / 2))
            kmax = _down(params.max_curvature)
            # from sp >= top on the lateral octagon already implies the curvature bound
            top = _up(math.sqrt(float(a_lat) / float(kmax)) * float(self.dt) / 2)
            ladder = [fm.conj(fm.ge(sp, m), _octagon(d, 2 * kmax * m * m)) for m in LEVELS if m < top]
            ladder.append(fm.ge(sp, top))
            trans.append(fm.disj(fm.conj(fm.eq(d[0], 0), fm.eq(d[1], 0)), fm.disj(ladder)))
        return _Parts(state, init, trans)


def _neg(groups):
    return {"pos": [(o, a, -c) for o, a, c in groups["pos"]],
            "speed": [(o, -c) for o, c in groups["speed"]],
            "glob": [(v, -c) for v, c in groups["glob"]]}


def s_view_formula(phi: Formula, spec: Specification, cfg: CheckConfig) -> Formula:
    sm = _SModel(spec, cfg)
    return fm.map_atoms(phi, sm.atom)


def build_s_problem(chart: Chart, spec: Specification, cfg: Optional[CheckConfig] = None) -> BmcProblem:
    cfg = cfg or spec.config
    sm = _SModel(spec, cfg)
    problem = _assemble(chart, spec, FIXED, cfg.step, lambda phi: fm.map_atoms(phi, sm.atom), sm.dynamics)
    problem.meta.update(depth=cfg.depth, intervals=cfg.intervals, step=sm.dt)
    return problem


# Heading restrictions tried before the full problem, as offsets from interval 0
# (east, the lane direction).  A model of a restricted problem is a model of
# the full one; only the unrestricted stage may report unsat.
HEADING_STAGES: tuple[Optional[tuple[int, ...]], ...] = ((0,), (-1, 0, 1), None)


def heading_restriction(problem: BmcProblem, allowed: tuple[int, ...], n: int) -> Formula:
    n_int = problem.meta["intervals"]
    keep = {j % n_int for j in allowed}
    out = []
    for car in problem.meta["cars"]:
        for j in range(n_int):
            if j not in keep:
                out += [fm.neg(fm.BoolVar(at(_car_var(car, f"h{j}", sort=BOOL), k))) for k in range(n + 1)]
    return fm.conj(out)


def checksat_s(chart: Chart, spec: Specification, cfg: Optional[CheckConfig] = None,
               solver: Optional[Solver] = None, stages=HEADING_STAGES) -> Verdict:
    cfg = cfg or spec.config
    solver = solver or Solver(timeout=cfg.timeout)
    try:
        problem = build_s_problem(chart, spec, cfg)
    except UnsupportedConstraint as exc:
        return Verdict("unknown", stats={"depth": cfg.depth}, diagnostic=str(exc))
    phi = unroll(problem, cfg.depth)
    v = Verdict("unknown")
    for i, allowed in enumerate(stages):
        if allowed is None:
            v = solver.check(phi, tag="sufficient")
        else:
            v = solver.check(fm.conj(phi, heading_restriction(problem, allowed, cfg.depth)), tag="sufficient")
            if not v.sat:
                continue
        v.stats["stage"] = i
        break
    else:
        v = Verdict("unknown", diagnostic="no model with restricted headings")
    v.stats["depth"] = cfg.depth
    if v.sat:
        v.stats["problem"] = problem
    return v
