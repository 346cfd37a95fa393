"""Chart structure as a transition system, and BMC unrolling.

Leaves are numbered 1..N in left-to-right DFS order.  Each leaf ``i`` owns
Boolean state variables ``started_i`` (the leaf is active on the next step),
``complete_i`` (the leaf has just been satisfied on a positive-duration
interval) and, for invariant leaves, ``ok_i`` (the view held on every step
since activation).  For the chart ``true ; A ; true`` this reproduces the
reference constraint set literally:

    I: ~complete1, ~complete2, ok2, ~complete3
    T: started2' -> complete1 | started2
       complete2' <-> started2 & ok2'
       ok2' <-> (started2 -> ok2 & bA)
       started3' -> complete2' | started3
       complete3' <-> started3
    F: complete3

Two further constraints sit outside that set and are kept in
``ChartEncoding.anchor``: every leaf that cannot be active at time 0 starts
with ``~started``.  Without them the set admits runs in which the trailing
``true`` starts at step 0 and ``A`` is never checked.

Note the unprimed ``complete1`` in the first rule: the leading ``true`` may
hand over one step late.  We keep that and, for that position only, leave
``started@0`` free so the successor may also begin at time 0 (the leading
``true`` then covers a stutter step, see the ledger).

Synchronisation that needs time (concurrency, hourglasses, pins) goes through
the clock ``tau`` and global entry variables.  With a strictly positive step
duration two gates that agree on the time agree on the step.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from . import formula as fm
from .formula import BOOL, REAL, Formula, Lin, Var
from .model import (
    Chart, Choice, Concurrency, Empty, Hourglass, Invariant, PinChain, Seq, children,
)

FIXED = "fixed"
VARIABLE = "variable"

TAU = Var("tau")
DUR = Var("d")


def started(i: int) -> Var:
    return Var(f"started_{i}", BOOL)


def complete(i: int) -> Var:
    return Var(f"complete_{i}", BOOL)


def ok(i: int) -> Var:
    return Var(f"ok_{i}", BOOL)


def view_literal(view: str) -> Var:
    return Var(f"b_{view}", BOOL)


def pin_var(pin: str) -> Var:
    return Var(f"t_{pin}", REAL, glob=True)


def _b(v: Var) -> Formula:
    return fm.BoolVar(v)


def _p(v: Var) -> Formula:
    return fm.BoolVar(v.next)


@dataclass
class LeafInfo:
    index: int
    kind: str  # "invariant" | "empty"
    view: Optional[str]
    has_started: bool
    free_start: bool


@dataclass
class BmcProblem:
    """``(I, T, F)`` over per-step state variables and global variables."""

    state: tuple[Var, ...]
    globals: tuple[Var, ...]
    init: Formula
    trans: Formula
    final: Formula
    mode: str = VARIABLE
    step: Optional[Fraction] = None
    meta: dict = field(default_factory=dict)

    def check_shape(self) -> None:
        """T may only mention current and next state plus globals."""
        names = {v.name for v in self.state}
        for phi in (self.init, self.final):
            for v in fm.variables(phi):
                if v.prime:
                    raise ValueError(f"primed {v.name} outside the transition relation")
        for v in fm.variables(self.trans):
            if not v.glob and v.name not in names:
                raise ValueError(f"undeclared state variable {v.name}")


@dataclass
class ChartEncoding:
    init: Formula
    trans: Formula
    final: Formula
    anchor: Formula
    timing_init: Formula
    leaves: list[LeafInfo]
    state: list[Var]
    globals: list[Var]
    views: list[str]


ROOT = object()


def _unshare(c: Chart) -> Chart:
    # nodes are keyed by identity below; a subtree used twice must become two nodes
    if isinstance(c, Empty):
        return Empty()
    if isinstance(c, Invariant):
        return Invariant(c.view)
    if isinstance(c, Seq):
        return Seq(_unshare(c.left), _unshare(c.right), c.pin)
    if isinstance(c, Choice):
        return Choice(_unshare(c.a), _unshare(c.b))
    if isinstance(c, Concurrency):
        return Concurrency(tuple(_unshare(ch) for ch in c.children))
    if isinstance(c, Hourglass):
        return Hourglass(_unshare(c.body), c.var, c.bounds)
    if isinstance(c, PinChain):
        return PinChain(_unshare(c.body), c.pins)
    raise TypeError(c)


class _Encoder:
    def __init__(self, chart: Chart):
        chart = _unshare(chart)
        self.chart = chart
        self.leaf_ids: dict[int, int] = {}
        self.leaf_nodes: list[Chart] = []
        self._number(chart)
        self.init: list[Formula] = []
        self.trans: list[Formula] = []
        self.anchor: list[Formula] = []
        self.timing_init: list[Formula] = []
        self.leaves: list[LeafInfo] = []
        self.state: list[Var] = []
        self.globals: list[Var] = []
        self.views: list[str] = []
        self.counter = {"sel": 0, "conc": 0, "hg": 0, "pc": 0}
        self.free_start: set[int] = set()
        self.unprimed_gate: dict[int, Formula] = {}
        self._leading_empty(chart)

    def _number(self, c: Chart) -> None:
        if isinstance(c, (Empty, Invariant)):
            self.leaf_nodes.append(c)
            self.leaf_ids[id(c)] = len(self.leaf_nodes)
        for ch in children(c):
            self._number(ch)

    def idx(self, leaf: Chart) -> int:
        return self.leaf_ids[id(leaf)]

    # the leading-empty quirk of the reference set: find Seq(first, X) on the left spine
    def _leading_empty(self, root: Chart) -> None:
        first = self.leaf_nodes[0]
        if not isinstance(first, Empty):
            return
        # a stutter step in front must not stretch a root-level duration constraint
        if any(isinstance(n, (Hourglass, PinChain)) for n in _root_region(root)):
            return
        path = []
        node = root
        while not isinstance(node, (Empty, Invariant)):
            path.append(node)
            node = children(node)[0]
        if not path or not isinstance(path[-1], Seq) or path[-1].pin is not None:
            return
        succ = path[-1].right
        while isinstance(succ, Seq):
            succ = succ.left
        if not isinstance(succ, (Empty, Invariant)):
            return
        i = self.idx(succ)
        self.free_start.add(i)
        self.unprimed_gate[i] = _b(complete(1))

    def new_global(self, prefix: str, sort: str = REAL) -> Var:
        k = self.counter[prefix]
        self.counter[prefix] += 1
        v = Var(f"{prefix}_{k}", sort, glob=True)
        self.globals.append(v)
        return v

    # Done(c) at the current (primed=False) or next (primed=True) instance
    def done(self, c: Chart, primed: bool) -> Formula:
        sel = (lambda v: _p(v)) if primed else _b
        tau = Lin.of(TAU.next if primed else TAU)
        if isinstance(c, (Empty, Invariant)):
            return sel(complete(self.idx(c)))
        if isinstance(c, Seq):
            return self.done(c.right, primed)
        if isinstance(c, Choice):
            s = fm.BoolVar(self.choice_var[id(c)])
            return fm.disj(fm.conj(s, self.done(c.a, primed)), fm.conj(fm.neg(s), self.done(c.b, primed)))
        if isinstance(c, Concurrency):
            return fm.conj(self.done(ch, primed) for ch in c.children)
        if isinstance(c, Hourglass):
            dur = tau - self.entry[id(c)]
            psi = fm.conj(fm.compare(dur, op, v) for op, v in c.bounds)
            return fm.conj(self.done(c.body, primed), psi)
        if isinstance(c, PinChain):
            return fm.conj(self.done(c.body, primed), fm.le(pin_var(c.pins[-1]), tau))
        raise TypeError(c)

    def encode(self) -> ChartEncoding:
        self.choice_var: dict[int, Var] = {}
        self.entry: dict[int, Lin] = {}
        self._assign_globals(self.chart, ROOT)
        self._node(self.chart, ROOT)
        final = self.done(self.chart, False)
        self.state.append(TAU)
        self.state.append(DUR)
        for p in _pins(self.chart):
            v = pin_var(p)
            if v not in self.globals:
                self.globals.append(v)
        return ChartEncoding(fm.conj(self.init), fm.conj(self.trans), final, fm.conj(self.anchor),
                             fm.conj(self.timing_init), self.leaves, self.state, self.globals, self.views)

    def _assign_globals(self, c: Chart, gate) -> None:
        # entry clocks of composite nodes; at the root they are the constant 0
        if isinstance(c, Choice):
            self.choice_var[id(c)] = self.new_global("sel", BOOL)
        if isinstance(c, (Concurrency, Hourglass, PinChain)):
            prefix = {Concurrency: "conc", Hourglass: "hg", PinChain: "pc"}[type(c)]
            self.entry[id(c)] = Lin.of(0) if gate is ROOT else Lin.of(self.new_global(prefix))
            if isinstance(c, PinChain):
                chain = [self.entry[id(c)]] + [Lin.of(pin_var(p)) for p in c.pins]
                self.timing_init.extend(fm.le(a, b) for a, b in zip(chain, chain[1:]))
        if isinstance(c, Seq):
            self._assign_globals(c.left, gate)
            self._assign_globals(c.right, None)
            return
        for ch in children(c):
            self._assign_globals(ch, gate)

    def _node(self, c: Chart, gate) -> None:
        if isinstance(c, (Empty, Invariant)):
            self._leaf(c, gate)
        elif isinstance(c, Seq):
            self._node(c.left, gate)
            g = self.done(c.left, True)
            if c.pin is not None:
                g = fm.conj(g, fm.eq(TAU.next, pin_var(c.pin)))
            self._node(c.right, g)
        elif isinstance(c, Choice):
            s = fm.BoolVar(self.choice_var[id(c)])
            if gate is ROOT:
                self._node(c.a, ROOT)
                self._node(c.b, ROOT)
            else:
                self._node(c.a, fm.conj(gate, s))
                self._node(c.b, fm.conj(gate, fm.neg(s)))
        elif isinstance(c, (Concurrency, Hourglass, PinChain)):
            sub = ROOT if gate is ROOT else fm.conj(gate, fm.eq(TAU.next, self.entry[id(c)]))
            for ch in children(c):
                self._node(ch, sub)
        else:
            raise TypeError(c)

    def _leaf(self, c: Chart, gate) -> None:
        i = self.idx(c)
        inv = isinstance(c, Invariant)
        first = i == 1
        has_started = not first
        free = gate is ROOT or i in self.free_start
        self.leaves.append(LeafInfo(i, "invariant" if inv else "empty", c.view if inv else None,
                                    has_started, free and has_started))
        self.state.append(complete(i))
        self.init.append(fm.neg(_b(complete(i))))
        if inv:
            self.state.append(ok(i))
            self.init.append(_b(ok(i)))
            if c.view not in self.views:
                self.views.append(c.view)
            bv = _b(view_literal(c.view))
        if first:
            if inv:
                self.trans.append(fm.iff(_p(complete(i)), _p(ok(i))))
                self.trans.append(fm.iff(_p(ok(i)), fm.conj(_b(ok(i)), bv)))
            return
        self.state.append(started(i))
        if gate is ROOT:
            g = fm.FALSE
        elif i in self.unprimed_gate:
            g = self.unprimed_gate[i]
        else:
            g = gate
        self.trans.append(fm.implies(_p(started(i)), fm.disj(g, _b(started(i)))))
        if not free:
            self.anchor.append(fm.neg(_b(started(i))))
        if inv:
            self.trans.append(fm.iff(_p(complete(i)), fm.conj(_b(started(i)), _p(ok(i)))))
            self.trans.append(fm.iff(_p(ok(i)), fm.implies(_b(started(i)), fm.conj(_b(ok(i)), bv))))
        else:
            self.trans.append(fm.iff(_p(complete(i)), _b(started(i))))


def _root_region(c: Chart):
    """Nodes that are entered at time 0."""
    yield c
    kids = (c.left,) if isinstance(c, Seq) else children(c)
    for ch in kids:
        yield from _root_region(ch)


def _pins(chart: Chart) -> list[str]:
    from .model import pins_used
    return pins_used(chart)


def encode_chart(chart: Chart) -> ChartEncoding:
    return _Encoder(chart).encode()


def encode_chart_structure(chart: Chart) -> BmcProblem:
    """Structure-only fragment: flags, gating and completion (no clock, no anchor)."""
    enc = encode_chart(chart)
    state = [v for v in enc.state if v not in (TAU, DUR)]
    views = [view_literal(v) for v in enc.views]
    return BmcProblem(tuple(state + views), tuple(enc.globals), enc.init, enc.trans, enc.final,
                      meta={"leaves": enc.leaves, "views": enc.views, "anchor": enc.anchor})


def encode_timing(chart: Chart, mode: str = VARIABLE, step: Optional[Fraction] = None,
                  enc: Optional[ChartEncoding] = None) -> tuple[Formula, Formula]:
    """Clock progression plus pin-chain ordering as ``(I_timing, T_timing)``.

    Synchronisation atoms that gate activation (``tau' = entry``, ``tau' = t_p``)
    and hourglass duration checks are part of the structure itself.
    """
    enc = enc or encode_chart(chart)
    init = fm.conj(fm.eq(TAU, 0), enc.timing_init)
    if mode == FIXED:
        if step is None or step <= 0:
            raise ValueError("fixed-step mode needs a positive step")
        dur = fm.eq(DUR.next, fm.to_fraction(step))
    elif mode == VARIABLE:
        dur = fm.gt(DUR.next, 0)
    else:
        raise ValueError(f"unknown step mode {mode!r}")
    trans = fm.conj(fm.eq(TAU.next, Lin.of(TAU) + Lin.of(DUR.next)), dur)
    return init, trans


def chart_problem(chart: Chart, mode: str = VARIABLE, step=None) -> BmcProblem:
    """Structure, anchor and timing for one chart; views stay as free literals."""
    enc = encode_chart(chart)
    ti, tt = encode_timing(chart, mode, step, enc)
    views = [view_literal(v) for v in enc.views]
    return BmcProblem(tuple(enc.state + views), tuple(enc.globals),
                      fm.conj(enc.init, enc.anchor, ti), fm.conj(enc.trans, tt), enc.final,
                      mode, fm.to_fraction(step) if step is not None else None,
                      meta={"leaves": enc.leaves, "views": enc.views, "chart": chart})


# -- unrolling ---------------------------------------------------------------


def at(v: Var, k: int) -> Var:
    if v.glob:
        return Var(v.name, v.sort, False, True)
    return Var(f"{v.name}@{k}", v.sort)


def instantiate(phi: Formula, k: int) -> Formula:
    """Current instance at step ``k``, primed instance at ``k + 1``."""
    def ren(v: Var) -> Var:
        return at(v, k + 1 if v.prime else k)
    return fm.rename(phi, ren)


def unroll(problem: BmcProblem, n: int) -> Formula:
    """``I(X0) & T(X0,X1) & ... & T(X_{n-1},X_n) & F(X_n)``."""
    if n < 0:
        raise ValueError("depth must be non-negative")
    parts = [instantiate(problem.init, 0)]
    parts.extend(instantiate(problem.trans, i - 1) for i in range(1, n + 1))
    parts.append(instantiate(problem.final, n))
    return fm.conj(parts)


def close_primes(phi: Formula) -> Formula:
    """Turn ``x'`` into a plain variable named ``x'`` (for validity checks on T)."""
    return fm.rename(phi, lambda v: Var(v.name + "'", v.sort, False, v.glob) if v.prime else v)


def active_intervals(model: dict, leaves: list[LeafInfo], n: int) -> dict[int, list[tuple[int, int]]]:
    """Maximal step intervals ``(start, end)`` on which each leaf was certified."""
    out: dict[int, list[tuple[int, int]]] = {}
    for leaf in leaves:
        spans = []
        i = leaf.index
        for k in range(1, n + 1):
            if not model.get(f"complete_{i}@{k}", False):
                continue
            if not leaf.has_started:
                spans.append((0, k))
                continue
            s = k - 1
            while s > 0 and model.get(f"started_{i}@{s - 1}", False):
                s -= 1
            spans.append((s, k))
        longest: dict[int, int] = {}
        for s, k in spans:
            longest[s] = max(k, longest.get(s, k))
        out[i] = sorted(longest.items())
    return out
