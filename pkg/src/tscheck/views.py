"""Spatial views to quantifier-free formulas over attribute terms.

Each attribute occurrence ``obj.attr`` becomes a real variable with that name.
Derived attributes (``xmin`` ... ``ymax``) stay symbolic here; the check
procedures decide how they relate to positions and headings.  Local object
symbols are expanded over the declared objects (closed world), so the result
is always quantifier-free.
"""

from __future__ import annotations

import itertools
from typing import Iterable, Optional

from . import formula as fm
from .formula import Formula, Lin, Var
from .model import (
    NOWHERE, SOMEWHERE, AttrRef, DomainError, Frame, LinExpr, Specification, SpatialView,
)

STRICT = "strict"
RELAXED_END = "relaxed-end"


def attr_var(spec: Specification, obj: str, attr: str) -> Var:
    decl = spec.obj(obj)
    attrs = spec.world.attributes(decl.type)
    if attr not in attrs:
        raise DomainError(f"type mismatch: {decl.type} {obj} has no attribute {attr}")
    static = not spec.world.is_subtype(decl.type, "MovingObject")
    return Var(f"{obj}.{attr}", fm.REAL, False, static)


def translate_view(view: SpatialView, spec: Specification, strictness: str = STRICT,
                   pool: Optional[Iterable[str]] = None) -> Formula:
    """Quantifier-free NNF formula for ``view``.

    ``relaxed-end`` weakens every strict comparator; because the result is in
    negation normal form this is a sound weakening (the closure of the view).
    """
    pool_names = list(pool) if pool is not None else [o.name for o in spec.objects]
    bound = set(view.symbols())
    env = {s: s for s in bound}
    phi = fm.nnf(_frame(view.root, spec, env, bound, pool_names))
    if strictness == RELAXED_END:
        phi = relax(phi)
    elif strictness != STRICT:
        raise ValueError(f"unknown strictness {strictness!r}")
    return phi


def relax(phi: Formula) -> Formula:
    """Weaken strict comparators of an NNF formula."""
    return fm.map_atoms(phi, lambda a: fm.Cmp(fm.weaken(a.op), a.expr))


def _ref(r: AttrRef, spec: Specification, env: dict[str, str]) -> Lin:
    if r.obj not in env:
        raise DomainError(f"undeclared symbol {r.obj}")
    return Lin.of(attr_var(spec, env[r.obj], r.attr))


def _linexpr(e: LinExpr, spec, env) -> Lin:
    out = Lin.of(e.const)
    for r, c in e.terms:
        out = out + _ref(r, spec, env) * c
    return out


def _frame(frame: Frame, spec: Specification, env: dict[str, str], bound: set[str],
           pool: list[str]) -> Formula:
    if frame.locals:
        return _quantified(frame, spec, env, bound, pool)
    body = _body(frame, spec, env, bound, pool)
    return fm.neg(body) if frame.kind == NOWHERE else body


def _body(frame: Frame, spec, env, bound, pool) -> Formula:
    parts: list[Formula] = []
    for chain in frame.orders:
        if chain.axis not in frame.axes:
            continue
        terms = [_ref(a, spec, env) for a in chain.anchors]
        for lhs, op, rhs in zip(terms, chain.links, terms[1:]):
            parts.append(fm.compare(lhs, op, rhs))
    for d in frame.dists:
        parts.append(fm.compare(_ref(d.dst, spec, env) - _ref(d.src, spec, env), d.op, d.bound))
    for c in frame.constraints:
        parts.append(fm.compare(_linexpr(c.lhs, spec, env), c.op, _linexpr(c.rhs, spec, env)))
    for child in frame.children:
        parts.append(_frame(child, spec, env, bound, pool))
    return fm.conj(parts)


def _quantified(frame: Frame, spec: Specification, env, bound, pool) -> Formula:
    names = [n for n, _ in frame.locals]
    candidates = []
    for n, tname in frame.locals:
        spec.world.type(tname)
        objs = [o for o in pool if spec.world.is_subtype(spec.obj(o).type, tname)]
        if frame.kind == NOWHERE:
            objs = [o for o in objs if o not in bound]
        candidates.append(objs)
    inner = Frame(SOMEWHERE, (), frame.axes, frame.orders, frame.dists, frame.constraints, frame.children)
    branches = []
    for combo in itertools.product(*candidates):
        if len(set(combo)) != len(combo):
            continue
        sub_env = dict(env)
        sub_env.update(zip(names, combo))
        body = _body(inner, spec, sub_env, bound | set(combo), pool)
        branches.append(body)
    if frame.kind == NOWHERE:
        return fm.conj(fm.neg(b) for b in branches)
    return fm.disj(branches)


def view_attributes(phi: Formula) -> set[tuple[str, str]]:
    """``(object, attribute)`` pairs occurring in a translated view."""
    out = set()
    for v in fm.variables(phi):
        obj, _, attr = v.name.rpartition(".")
        out.add((obj, attr))
    return out
