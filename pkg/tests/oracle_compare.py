"""Brute-force comparison of the discrete-point BMC check against the oracle.

For a chart with ``m`` sequence operators the BMC problem is unrolled ``m + 1``
steps.  The oracle side searches grid traces with ``m + 1`` pieces whose
breakpoint states are drawn from a value palette.  A piece is judged strictly
at its left and in closed form at its right breakpoint, so only the vector of
(strict, closed) view truth values of a state matters; the palette is reduced
to one representative per such signature before the search.

A sat BMC verdict is additionally confirmed by replaying its model as a grid
trace (with one stutter piece in front, which the leading ``true`` may need).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from tscheck.checksat import checksat_n
from tscheck.model import Chart, Hourglass, Specification, count_sequence_operators, views_used, walk
from tscheck.oracle import ENDPOINT, ChartChecker, SampledTrajectory, holds_view

PALETTE = {
    "x": tuple(Fraction(v) for v in (-6, -3, 0, 3, 6, 10, 13, 16)),
    "v": tuple(Fraction(v) for v in (0, 3, 5, 10, 20, 25)),
}
DURATIONS = tuple(Fraction(v) for v in ("1/2", 1, 2, 4))


@dataclass
class Comparison:
    name: str
    bmc: str
    oracle: bool
    replayed: Optional[bool]
    traces: int

    @property
    def agrees(self) -> bool:
        return (self.bmc == "sat") == self.oracle


def _used(spec: Specification, chart: Chart) -> list[tuple[str, str]]:
    out = set()
    for name in views_used(chart):
        for r in spec.view(name).root.refs():
            out.add((r.obj, r.attr))
    return sorted(out)


def representatives(spec: Specification, chart: Chart) -> list[dict]:
    views = [spec.view(n) for n in views_used(chart)]
    attrs = _used(spec, chart)
    seen: dict[tuple, dict] = {}
    for combo in itertools.product(*(PALETTE[a] for _, a in attrs)):
        state = {f"{o}.{a}": val for (o, a), val in zip(attrs, combo)}
        sig = tuple((holds_view(v, spec, state), holds_view(v, spec, state, relaxed=True)) for v in views)
        seen.setdefault(sig, state)
    return list(seen.values()) or [{}]


def _satisfied(spec: Specification, chart: Chart, traj: SampledTrajectory) -> bool:
    ck = ChartChecker(spec, traj, ENDPOINT)
    return any(ck.exists(chart, 0, e) for e in range(1, traj.pieces + 1))


def oracle_search(spec: Specification, chart: Chart, pieces: int) -> tuple[bool, int]:
    reps = representatives(spec, chart)
    timed = any(isinstance(c, Hourglass) for c in walk(chart))
    durations = list(itertools.product(DURATIONS, repeat=pieces)) if timed else [(Fraction(1),) * pieces]
    count = 0
    for durs in durations:
        times = [Fraction(0)]
        for d in durs:
            times.append(times[-1] + d)
        for states in itertools.product(reps, repeat=pieces + 1):
            count += 1
            if _satisfied(spec, chart, SampledTrajectory(tuple(times), tuple(states))):
                return True, count
    return False, count


def replay(spec: Specification, chart: Chart, model: dict, n: int) -> bool:
    attrs = _used(spec, chart)
    times = [Fraction(model.get(f"tau@{k}", 0)) for k in range(n + 1)]
    states = [{f"{o}.{a}": Fraction(model.get(f"{o}.{a}@{k}", 0)) for o, a in attrs} for k in range(n + 1)]
    traj = SampledTrajectory(tuple(times), tuple(states))
    if _satisfied(spec, chart, traj):
        return True
    stutter = SampledTrajectory(tuple([Fraction(0)] + [t + 1 for t in times]), tuple([states[0]] + states))
    return _satisfied(spec, chart, stutter)


def compare(spec: Specification, name: str, chart: Chart, solver) -> Comparison:
    n = count_sequence_operators(chart) + 1
    v = checksat_n(chart, spec, solver, spec.config)
    replayed = replay(spec, chart, v.model, n) if v.sat else None
    if replayed:
        return Comparison(name, v.status, True, True, 0)
    found, count = oracle_search(spec, chart, n)
    return Comparison(name, v.status, found, replayed, count)
