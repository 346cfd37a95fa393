"""Constraint IR over Booleans and linear real arithmetic.

Formulas are immutable, hashable trees.  Real-valued terms are kept in a
normalised linear form (`Lin`), so every arithmetic atom is linear by
construction.  Rationals are `fractions.Fraction` throughout.

Variables carry two flags used by the BMC layer: ``prime`` marks the
next-state instance inside a transition relation and ``glob`` marks
variables that are not instantiated per step (lane attributes, pins, ...).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Mapping, Union

BOOL = "Bool"
REAL = "Real"

Number = Union[int, float, Fraction]


def to_fraction(value: Number) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        # exact decimal reading of the printed float, not its binary expansion
        return Fraction(repr(value))
    return Fraction(value)


@dataclass(frozen=True, order=True)
class Var:
    name: str
    sort: str = REAL
    prime: bool = False
    glob: bool = False

    @property
    def next(self) -> "Var":
        return Var(self.name, self.sort, True, self.glob)


class Formula:
    """Base class of Boolean-valued nodes."""

    __slots__ = ()

    def __and__(self, other: "Formula") -> "Formula":
        return conj(self, other)

    def __or__(self, other: "Formula") -> "Formula":
        return disj(self, other)

    def __invert__(self) -> "Formula":
        return neg(self)


@dataclass(frozen=True)
class BoolConst(Formula):
    value: bool


TRUE = BoolConst(True)
FALSE = BoolConst(False)


@dataclass(frozen=True)
class BoolVar(Formula):
    var: Var


@dataclass(frozen=True)
class Not(Formula):
    arg: Formula


@dataclass(frozen=True)
class And(Formula):
    args: tuple[Formula, ...]


@dataclass(frozen=True)
class Or(Formula):
    args: tuple[Formula, ...]


@dataclass(frozen=True)
class Implies(Formula):
    lhs: Formula
    rhs: Formula


@dataclass(frozen=True)
class Iff(Formula):
    lhs: Formula
    rhs: Formula


@dataclass(frozen=True)
class Lin:
    """Linear term ``sum(c * v) + const`` with variables sorted by name."""

    terms: tuple[tuple[Var, Fraction], ...] = ()
    const: Fraction = Fraction(0)

    @staticmethod
    def of(x: Union["Lin", Var, Number]) -> "Lin":
        if isinstance(x, Lin):
            return x
        if isinstance(x, Var):
            return Lin(((x, Fraction(1)),))
        return Lin((), to_fraction(x))

    def _combine(self, other: "Lin", sign: int) -> "Lin":
        acc: dict[Var, Fraction] = dict(self.terms)
        for v, c in other.terms:
            acc[v] = acc.get(v, Fraction(0)) + sign * c
        terms = tuple(sorted((v, c) for v, c in acc.items() if c != 0))
        return Lin(terms, self.const + sign * other.const)

    def __add__(self, other) -> "Lin":
        return self._combine(Lin.of(other), 1)

    __radd__ = __add__

    def __sub__(self, other) -> "Lin":
        return self._combine(Lin.of(other), -1)

    def __rsub__(self, other) -> "Lin":
        return Lin.of(other)._combine(self, -1)

    def __neg__(self) -> "Lin":
        return Lin(tuple((v, -c) for v, c in self.terms), -self.const)

    def __mul__(self, k: Number) -> "Lin":
        k = to_fraction(k)
        if k == 0:
            return Lin()
        return Lin(tuple((v, c * k) for v, c in self.terms), self.const * k)

    __rmul__ = __mul__

    @property
    def is_const(self) -> bool:
        return not self.terms

    def variables(self) -> Iterator[Var]:
        for v, _ in self.terms:
            yield v


COMPARATORS = ("<", "<=", "=", ">=", ">")
_FLIP = {"<": ">", "<=": ">=", "=": "=", ">=": "<=", ">": "<"}
_NEGATE = {"<": ">=", "<=": ">", ">=": "<", ">": "<="}
_WEAKEN = {"<": "<=", ">": ">=", "<=": "<=", ">=": ">=", "=": "="}


@dataclass(frozen=True)
class Cmp(Formula):
    """``expr op 0``."""

    op: str
    expr: Lin


def real(name: str, *, glob: bool = False) -> Lin:
    return Lin.of(Var(name, REAL, False, glob))


def boolvar(name: str, *, glob: bool = False) -> BoolVar:
    return BoolVar(Var(name, BOOL, False, glob))


def compare(lhs, op: str, rhs) -> Formula:
    if op not in COMPARATORS:
        raise ValueError(f"unknown comparator {op!r}")
    expr = Lin.of(lhs) - Lin.of(rhs)
    if expr.is_const:
        return TRUE if _holds(expr.const, op, Fraction(0)) else FALSE
    return Cmp(op, expr)


def lt(a, b) -> Formula:
    return compare(a, "<", b)


def le(a, b) -> Formula:
    return compare(a, "<=", b)


def eq(a, b) -> Formula:
    return compare(a, "=", b)


def ge(a, b) -> Formula:
    return compare(a, ">=", b)


def gt(a, b) -> Formula:
    return compare(a, ">", b)


def flip(op: str) -> str:
    return _FLIP[op]


def weaken(op: str) -> str:
    return _WEAKEN[op]


def conj(*args: Formula | Iterable[Formula]) -> Formula:
    out: list[Formula] = []
    for a in _flatten_args(args):
        if a == FALSE:
            return FALSE
        if a == TRUE:
            continue
        if isinstance(a, And):
            out.extend(a.args)
        else:
            out.append(a)
    if not out:
        return TRUE
    if len(out) == 1:
        return out[0]
    return And(tuple(out))


def disj(*args: Formula | Iterable[Formula]) -> Formula:
    out: list[Formula] = []
    for a in _flatten_args(args):
        if a == TRUE:
            return TRUE
        if a == FALSE:
            continue
        if isinstance(a, Or):
            out.extend(a.args)
        else:
            out.append(a)
    if not out:
        return FALSE
    if len(out) == 1:
        return out[0]
    return Or(tuple(out))


def neg(a: Formula) -> Formula:
    if isinstance(a, BoolConst):
        return FALSE if a.value else TRUE
    if isinstance(a, Not):
        return a.arg
    return Not(a)


def implies(a: Formula, b: Formula) -> Formula:
    if a == FALSE or b == TRUE:
        return TRUE
    if a == TRUE:
        return b
    if b == FALSE:
        return neg(a)
    return Implies(a, b)


def iff(a: Formula, b: Formula) -> Formula:
    if a == TRUE:
        return b
    if b == TRUE:
        return a
    if a == FALSE:
        return neg(b)
    if b == FALSE:
        return neg(a)
    return Iff(a, b)


def _flatten_args(args) -> Iterator[Formula]:
    for a in args:
        if isinstance(a, Formula):
            yield a
        else:
            yield from a


def nnf(phi: Formula, negate: bool = False) -> Formula:
    """Negation normal form; negated comparisons are absorbed into atoms."""
    if isinstance(phi, BoolConst):
        return neg(phi) if negate else phi
    if isinstance(phi, BoolVar):
        return Not(phi) if negate else phi
    if isinstance(phi, Cmp):
        if not negate:
            return phi
        if phi.op == "=":
            return disj(Cmp("<", phi.expr), Cmp(">", phi.expr))
        return Cmp(_NEGATE[phi.op], phi.expr)
    if isinstance(phi, Not):
        return nnf(phi.arg, not negate)
    if isinstance(phi, And):
        parts = [nnf(a, negate) for a in phi.args]
        return disj(parts) if negate else conj(parts)
    if isinstance(phi, Or):
        parts = [nnf(a, negate) for a in phi.args]
        return conj(parts) if negate else disj(parts)
    if isinstance(phi, Implies):
        return nnf(disj(Not(phi.lhs), phi.rhs), negate)
    if isinstance(phi, Iff):
        both = conj(phi.lhs, phi.rhs)
        neither = conj(Not(phi.lhs), Not(phi.rhs))
        return nnf(disj(both, neither), negate)
    raise TypeError(f"not a formula: {phi!r}")


def map_atoms(phi: Formula, fn: Callable[[Cmp], Formula]) -> Formula:
    """Rebuild ``phi`` with every arithmetic atom replaced by ``fn(atom)``."""
    if isinstance(phi, Cmp):
        return fn(phi)
    if isinstance(phi, (BoolConst, BoolVar)):
        return phi
    if isinstance(phi, Not):
        return neg(map_atoms(phi.arg, fn))
    if isinstance(phi, And):
        return conj(map_atoms(a, fn) for a in phi.args)
    if isinstance(phi, Or):
        return disj(map_atoms(a, fn) for a in phi.args)
    if isinstance(phi, Implies):
        return implies(map_atoms(phi.lhs, fn), map_atoms(phi.rhs, fn))
    if isinstance(phi, Iff):
        return iff(map_atoms(phi.lhs, fn), map_atoms(phi.rhs, fn))
    raise TypeError(f"not a formula: {phi!r}")


def substitute(phi: Formula, real_map: Mapping[Var, Lin] | Callable[[Var], Lin | None] = None,
               bool_map: Mapping[Var, Formula] | Callable[[Var], Formula | None] = None) -> Formula:
    """Replace variables by linear terms (reals) or formulas (Booleans)."""
    rget = _getter(real_map)
    bget = _getter(bool_map)
    memo: dict[Formula, Formula] = {}

    def lin(e: Lin) -> Lin:
        out = Lin((), e.const)
        for v, c in e.terms:
            repl = rget(v)
            out = out + (repl if repl is not None else Lin.of(v)) * c
        return out

    def go(p: Formula) -> Formula:
        hit = memo.get(p)
        if hit is not None:
            return hit
        if isinstance(p, Cmp):
            e = lin(p.expr)
            r = compare(e, p.op, 0)
        elif isinstance(p, BoolConst):
            r = p
        elif isinstance(p, BoolVar):
            repl = bget(p.var)
            r = repl if repl is not None else p
        elif isinstance(p, Not):
            r = neg(go(p.arg))
        elif isinstance(p, And):
            r = conj(go(a) for a in p.args)
        elif isinstance(p, Or):
            r = disj(go(a) for a in p.args)
        elif isinstance(p, Implies):
            r = implies(go(p.lhs), go(p.rhs))
        elif isinstance(p, Iff):
            r = iff(go(p.lhs), go(p.rhs))
        else:
            raise TypeError(f"not a formula: {p!r}")
        memo[p] = r
        return r

    return go(phi)


def rename(phi: Formula, fn: Callable[[Var], Var]) -> Formula:
    return substitute(phi, lambda v: Lin.of(fn(v)), lambda v: BoolVar(fn(v)))


def _getter(m):
    if m is None:
        return lambda v: None
    if callable(m) and not isinstance(m, Mapping):
        return m
    return m.get


def variables(phi: Formula) -> set[Var]:
    out: set[Var] = set()
    stack = [phi]
    seen: set[int] = set()
    while stack:
        p = stack.pop()
        if id(p) in seen:
            continue
        seen.add(id(p))
        if isinstance(p, Cmp):
            out.update(p.expr.variables())
        elif isinstance(p, BoolVar):
            out.add(p.var)
        elif isinstance(p, Not):
            stack.append(p.arg)
        elif isinstance(p, (And, Or)):
            stack.extend(p.args)
        elif isinstance(p, (Implies, Iff)):
            stack.extend((p.lhs, p.rhs))
    return out


def _holds(a, op: str, b) -> bool:
    if op == "<":
        return a < b
    if op == "<=":
        return a <= b
    if op == "=":
        return a == b
    if op == ">=":
        return a >= b
    return a > b


def evaluate(phi: Formula, env: Mapping[str, object], env_next: Mapping[str, object] | None = None,
             tol: float = 0.0) -> bool:
    """Evaluate under an assignment keyed by variable name.

    Primed variables are looked up in ``env_next``.  With ``tol > 0`` the
    comparison is done in floating point with that slack in favour of the
    atom (used when checking sampled trajectories).
    """

    def value(v: Var):
        src = env_next if v.prime else env
        if src is None or v.name not in src:
            raise KeyError(f"no value for {'next ' if v.prime else ''}{v.name}")
        return src[v.name]

    def go(p: Formula) -> bool:
        if isinstance(p, BoolConst):
            return p.value
        if isinstance(p, BoolVar):
            return bool(value(p.var))
        if isinstance(p, Cmp):
            if tol:
                s = float(p.expr.const) + sum(float(c) * float(value(v)) for v, c in p.expr.terms)
                if p.op == "=":
                    return abs(s) <= tol
                if p.op in ("<", "<="):
                    return s < tol if p.op == "<" else s <= tol
                return s > -tol if p.op == ">" else s >= -tol
            s = p.expr.const + sum(c * value(v) for v, c in p.expr.terms)
            return _holds(s, p.op, 0)
        if isinstance(p, Not):
            return not go(p.arg)
        if isinstance(p, And):
            return all(go(a) for a in p.args)
        if isinstance(p, Or):
            return any(go(a) for a in p.args)
        if isinstance(p, Implies):
            return (not go(p.lhs)) or go(p.rhs)
        if isinstance(p, Iff):
            return go(p.lhs) == go(p.rhs)
        raise TypeError(f"not a formula: {p!r}")

    return go(phi)


def size(phi: Formula) -> int:
    if isinstance(phi, (And, Or)):
        return 1 + sum(size(a) for a in phi.args)
    if isinstance(phi, Not):
        return 1 + size(phi.arg)
    if isinstance(phi, (Implies, Iff)):
        return 1 + size(phi.lhs) + size(phi.rhs)
    return 1
