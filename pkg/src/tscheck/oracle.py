"""Brute-force chart semantics over finite, sampled trajectories.

This module is deliberately independent of the formula IR: spatial views are
evaluated directly on the frame tree and every existential of the chart
semantics (split points, pins) is searched over the breakpoint grid.  It is
slow and only meant as a test oracle.

A trajectory is a list of breakpoint times with one state per breakpoint.
Piece ``j`` is the half-open interval ``[t_j, t_{j+1})``.  How a view is
judged on a piece is pluggable:

* ``constant``: the state at ``t_j`` is held on the whole piece;
* ``endpoint``: strict at ``t_j`` and in closed (relaxed) form at
  ``t_{j+1}``, which is what the discrete-point check inspects.
"""

from __future__ import annotations

import itertools
import operator
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Mapping, Optional

from .model import (
    NOWHERE, AttrRef, Chart, Choice, Concurrency, DomainError, Empty, Frame, Hourglass, Invariant,
    PinChain, RequirementTSC, Seq, Specification, SpatialView, derived_attribute, pins_used,
)

CONSTANT = "constant"
ENDPOINT = "endpoint"

_OPS = {"<": operator.lt, "<=": operator.le, "=": operator.eq, ">=": operator.ge, ">": operator.gt}
_NEG = {"<": ">=", "<=": ">", ">=": "<", ">": "<="}
_WEAK = {"<": "<=", ">": ">=", "<=": "<=", ">=": ">=", "=": "="}


@dataclass(frozen=True)
class SampledTrajectory:
    times: tuple
    states: tuple  # one flat {"obj.attr": value} mapping per breakpoint
    static: Mapping[str, object] = field(default_factory=dict)

    def __post_init__(self):
        if len(self.times) != len(self.states) or not self.times:
            raise DomainError("one state per breakpoint required")
        if self.times[0] != 0:
            raise DomainError("trajectories start at time 0")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise DomainError("breakpoints must be strictly increasing")

    @property
    def pieces(self) -> int:
        return len(self.times) - 1

    def env(self, j: int) -> dict:
        out = dict(self.static)
        out.update(self.states[j])
        return out


# -- spatial views ------------------------------------------------------------


class _Env:
    """Attribute lookup with on-demand derived attributes."""

    def __init__(self, spec: Specification, values: Mapping[str, object]):
        self.spec = spec
        self.values = values

    def get(self, obj: str, attr: str):
        key = f"{obj}.{attr}"
        if key in self.values:
            return self.values[key]
        decl = self.spec.obj(obj)
        if attr not in self.spec.world.attributes(decl.type):
            raise DomainError(f"{decl.type} {obj} has no attribute {attr}")
        state = {k.split(".", 1)[1]: v for k, v in self.values.items() if k.split(".", 1)[0] == obj}
        try:
            return derived_attribute(state, attr, self.spec.params(obj))
        except (KeyError, DomainError):
            raise DomainError(f"no value for {key}") from None


def holds_view(view: SpatialView, spec: Specification, values: Mapping[str, object],
               relaxed: bool = False, pool: Optional[list[str]] = None) -> bool:
    """Direct frame semantics; ``relaxed`` evaluates the closure of the view."""
    env = _Env(spec, values)
    pool = list(pool) if pool is not None else [o.name for o in spec.objects]
    bound = view.symbols()
    binding = {s: s for s in bound}
    return _frame(view.root, spec, env, binding, set(bound), pool, True, relaxed)


def _atom(lhs, op: str, rhs, positive: bool, relaxed: bool) -> bool:
    if not positive:
        if op == "=":
            return True if relaxed else lhs != rhs
        op = _NEG[op]
    if relaxed:
        op = _WEAK[op]
    return _OPS[op](lhs, rhs)


def _val(env: _Env, binding, r: AttrRef):
    if r.obj not in binding:
        raise DomainError(f"undeclared symbol {r.obj}")
    return env.get(binding[r.obj], r.attr)


def _frame(frame: Frame, spec, env, binding, bound, pool, positive: bool, relaxed: bool) -> bool:
    if frame.kind == NOWHERE:
        positive = not positive
    if not frame.locals:
        return _body(frame, spec, env, binding, bound, pool, positive, relaxed)
    cands = []
    for _, tname in frame.locals:
        objs = [o for o in pool if spec.world.is_subtype(spec.obj(o).type, tname)]
        if frame.kind == NOWHERE:
            objs = [o for o in objs if o not in bound]
        cands.append(objs)
    results = []
    for combo in itertools.product(*cands):
        if len(set(combo)) != len(combo):
            continue
        b2 = dict(binding)
        b2.update(zip((n for n, _ in frame.locals), combo))
        results.append(_body(frame, spec, env, b2, bound | set(combo), pool, positive, relaxed))
    # existential under positive polarity; its negation is a universal
    return any(results) if positive else all(results)


def _body(frame, spec, env, binding, bound, pool, positive, relaxed) -> bool:
    vals: list[bool] = []
    for ch in frame.orders:
        if ch.axis not in frame.axes:
            continue
        xs = [_val(env, binding, a) for a in ch.anchors]
        for a, op, b in zip(xs, ch.links, xs[1:]):
            vals.append(_atom(a, op, b, positive, relaxed))
    for d in frame.dists:
        diff = _val(env, binding, d.dst) - _val(env, binding, d.src)
        vals.append(_atom(diff, d.op, d.bound, positive, relaxed))
    for c in frame.constraints:
        lhs = c.lhs.const + sum(k * _val(env, binding, r) for r, k in c.lhs.terms)
        rhs = c.rhs.const + sum(k * _val(env, binding, r) for r, k in c.rhs.terms)
        vals.append(_atom(lhs, c.op, rhs, positive, relaxed))
    for child in frame.children:
        vals.append(_frame(child, spec, env, binding, bound, pool, positive, relaxed))
    return all(vals) if positive else any(vals)


def piece_predicate(spec: Specification, traj: SampledTrajectory, mode: str = CONSTANT
                    ) -> Callable[[str, int], bool]:
    """``pred(view_name, j)``: does the view hold on piece ``j``?"""
    if mode not in (CONSTANT, ENDPOINT):
        raise ValueError(f"unknown piece mode {mode!r}")
    envs = [traj.env(j) for j in range(len(traj.times))]

    @lru_cache(maxsize=None)
    def pred(view: str, j: int) -> bool:
        v = spec.view(view)
        if not holds_view(v, spec, envs[j]):
            return False
        if mode == ENDPOINT:
            return holds_view(v, spec, envs[j + 1], relaxed=True)
        return True

    return pred


# -- charts ---------------------------------------------------------------------


def _psi(bounds, duration) -> bool:
    return all(_OPS[op](duration, value) for op, value in bounds)


class ChartChecker:
    """Grid-restricted satisfaction of one chart on one trajectory."""

    def __init__(self, spec: Specification, traj: SampledTrajectory, mode: str = CONSTANT,
                 pred: Optional[Callable[[str, int], bool]] = None):
        self.spec = spec
        self.traj = traj
        self.pred = pred or piece_predicate(spec, traj, mode)

    def check(self, chart: Chart, b: int, e: int, pins: Mapping[str, int]) -> bool:
        if not 0 <= b <= e < len(self.traj.times):
            raise DomainError("interval outside the grid")
        for p in pins_used(chart):
            if p not in pins:
                raise DomainError(f"pin {p} is not assigned")
        memo: dict = {}
        return self._go(chart, b, e, pins, memo)

    def _go(self, c: Chart, b: int, e: int, pins, memo) -> bool:
        key = (id(c), b, e)
        if key in memo:
            return memo[key]
        r = self._eval(c, b, e, pins, memo)
        memo[key] = r
        return r

    def _eval(self, c, b, e, pins, memo) -> bool:
        if isinstance(c, Empty):
            return b < e
        if isinstance(c, Invariant):
            return b < e and all(self.pred(c.view, j) for j in range(b, e))
        if isinstance(c, Seq):
            splits = [pins[c.pin]] if c.pin else range(b, e + 1)
            return any(b <= m <= e and self._go(c.left, b, m, pins, memo)
                       and self._go(c.right, m, e, pins, memo) for m in splits)
        if isinstance(c, Choice):
            return self._go(c.a, b, e, pins, memo) or self._go(c.b, b, e, pins, memo)
        if isinstance(c, Concurrency):
            return all(self._go(ch, b, e, pins, memo) for ch in c.children)
        if isinstance(c, Hourglass):
            t = self.traj.times
            return _psi(c.bounds, t[e] - t[b]) and self._go(c.body, b, e, pins, memo)
        if isinstance(c, PinChain):
            idx = [pins[p] for p in c.pins]
            ok = all(x <= y for x, y in zip([b] + idx, idx + [e]))
            return ok and self._go(c.body, b, e, pins, memo)
        raise TypeError(f"not a chart: {c!r}")

    def exists(self, chart: Chart, b: int, e: int, extra: Chart = None, eb: int = 0, ee: int = 0) -> bool:
        """Some pin assignment satisfies ``chart`` on [b,e] (and ``extra`` on [eb,ee])."""
        names = pins_used(chart)
        if extra is not None:
            names += [p for p in pins_used(extra) if p not in names]
        grid = range(len(self.traj.times))
        for combo in itertools.product(grid, repeat=len(names)):
            pins = dict(zip(names, combo))
            memo: dict = {}
            if not self._go(chart, b, e, pins, memo):
                continue
            if extra is None or self._go(extra, eb, ee, pins, memo):
                return True
        return False


def check_chart(chart: Chart, traj: SampledTrajectory, spec: Specification, interval=None,
                pins: Optional[Mapping[str, int]] = None, mode: str = CONSTANT) -> bool:
    """Def.-2 satisfaction on grid indices ``interval = (b, e)``.

    Without ``pins`` the pins are searched over the grid; with ``pins`` every
    pin of the chart must be assigned.
    """
    b, e = interval if interval is not None else (0, traj.pieces)
    ck = ChartChecker(spec, traj, mode)
    if pins is None:
        return ck.exists(chart, b, e)
    return ck.check(chart, b, e, pins)


def check_tsc(tsc: RequirementTSC, traj: SampledTrajectory, spec: Specification,
              mode: str = CONSTANT) -> bool:
    """Every grid occurrence of H;F is matched by C on the future window."""
    ck = ChartChecker(spec, traj, mode)
    k = traj.pieces
    for b in range(k + 1):
        for m in range(b, k + 1):
            for e in range(m, k + 1):
                if ck.exists(tsc.history, b, m, tsc.future, m, e) and not ck.exists(tsc.consequence, m, e):
                    return False
    return True


def constant_trajectory(durations, states, static=None) -> SampledTrajectory:
    """Piecewise-constant trace: ``states[j]`` held for ``durations[j]``.

    The final breakpoint repeats the last state.
    """
    times = [Fraction(0)]
    for d in durations:
        times.append(times[-1] + Fraction(d))
    sts = list(states) + [states[-1]]
    return SampledTrajectory(tuple(times), tuple(sts), dict(static or {}))
