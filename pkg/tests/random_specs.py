"""Random small specifications that are consistent by construction.

A random grid trace with five pieces is drawn first: piece 0 is free, pieces
1 and 2 carry every history, piece 3 every future and consequence, piece 4
is free.  Each TSC is then assembled from views that the oracle finds true
on the matching pieces, so the one trace satisfies all analysis charts at
once.  ``consistent_by_oracle`` confirms that before the trace is used.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from fractions import Fraction

from tscheck.consistency import build_bc2
from tscheck.dsl import parse_spec
from tscheck.model import Specification
from tscheck.oracle import ENDPOINT, ChartChecker, SampledTrajectory, piece_predicate

HEAD = """
objects {
  carI: Car;
  carJ: Car;
}
view IAhead { constraint carI.x > carJ.x; }
view IBehind { constraint carI.x < carJ.x; }
view Close { constraint carJ.x - carI.x < 10 m; constraint carI.x - carJ.x < 10 m; }
view IPos { constraint carI.x >= 0 m; }
view INeg { constraint carI.x < 0 m; }
view IFar { constraint carI.x > 20 m; }
view ILeft { constraint carI.y > 2 m; }
view IRight { constraint carI.y <= 2 m; }
view IFast { constraint carI.v > 15 m/s; }
view ISlow { constraint carI.v < 5 m/s; }
view JFast { constraint carJ.v >= 15 m/s; }
view JSlow { constraint carJ.v <= 10 m/s; }
view Faster { constraint carI.v > carJ.v; }
"""
VIEWS = ("IAhead", "IBehind", "Close", "IPos", "INeg", "IFar", "ILeft", "IRight", "IFast", "ISlow", "JFast",
         "JSlow", "Faster")
PALETTE = {
    "carI.x": (-10, -2, 0, 5, 15, 25, 40),
    "carJ.x": (-5, 0, 8, 20, 30),
    "carI.y": (0, 1, 3, 5),
    "carI.v": (0, 3, 10, 20, 30),
    "carJ.v": (0, 8, 12, 25),
}
PIECES = 5
BASE = parse_spec(HEAD)


@dataclass
class Instance:
    spec: Specification
    trace: SampledTrajectory
    text: str


def _trace(rng: random.Random) -> SampledTrajectory:
    states = tuple({k: Fraction(rng.choice(v)) for k, v in PALETTE.items()} for _ in range(PIECES + 1))
    return SampledTrajectory(tuple(Fraction(k) for k in range(PIECES + 1)), states)


def _holding(pred, pieces) -> list[str]:
    return [v for v in VIEWS if all(pred(v, j) for j in pieces)]


def _part(rng: random.Random, pred, pieces, allow_seq: bool) -> str:
    """A chart text that holds on exactly ``pieces`` of the trace."""
    good = _holding(pred, pieces)
    kinds = ["true"] + (["inv", "or"] if good else []) + (["and"] if len(good) > 1 else [])
    if allow_seq and len(pieces) == 2:
        a, b = _holding(pred, pieces[:1]), _holding(pred, pieces[1:])
        if a and b:
            kinds.append("seq")
    kind = rng.choice(kinds)
    if kind == "true":
        return "true"
    if kind == "inv":
        return f"inv({rng.choice(good)})"
    if kind == "and":
        x, y = rng.sample(good, 2)
        return f"(inv({x}) & inv({y}))"
    if kind == "or":
        return f"(inv({rng.choice(good)}) | inv({rng.choice(VIEWS)}))"
    return f"(inv({rng.choice(a)}) ; inv({rng.choice(b)}))"


def random_instance(rng: random.Random, n_tscs: int) -> Instance:
    while True:
        trace = _trace(rng)
        pred = piece_predicate(BASE, trace, ENDPOINT)
        if _holding(pred, [3]):
            break
    text = HEAD
    for k in range(n_tscs):
        h = _part(rng, pred, [1, 2], True)
        f = _part(rng, pred, [3], False)
        c = _part(rng, pred, [3], False)
        text += (f"tsc r{k} {{ bulletin: carI, carJ; history: {h}; future: {f}; "
                 f"consequence: {c}; }}\n")
    return Instance(parse_spec(text), trace, text)


def consistent_by_oracle(inst: Instance) -> bool:
    """The trace satisfies BC2 for every innermost TSC and every context."""
    ck = ChartChecker(inst.spec, inst.trace, ENDPOINT)
    tscs = list(inst.spec.tscs)
    for inner in tscs:
        others = [t for t in tscs if t is not inner]
        for r in range(len(others) + 1):
            for ctx in itertools.combinations(others, r):
                if not ck.exists(build_bc2(inner, list(ctx)), 0, PIECES):
                    return False
    return True
