"""Textual ``.tsc`` dialect: tokenizer, recursive-descent parser, serializer.

Grammar (informal)::

    spec    := item*
    item    := world | objects | view | chart | tsc | config
    world   := 'world' '{' ( 'car_params' '{' (NAME '=' qty ';')* '}' | 'gravity' '=' qty ';' )* '}'
    objects := 'objects' '{' ( NAME ':' TYPE [ '(' NAME '=' qty (',' NAME '=' qty)* ')' ] ';' )* '}'
    view    := 'view' NAME '{' stmt* '}'
    stmt    := ('order_x'|'order_y') ref (('<'|'<='|'=') ref)+ ';'
             | ('dist_x'|'dist_y') ref '->' ref CMP qty ';'
             | 'constraint' lin CMP lin ';'
             | ('somewhere'|'exists'|'nowhere'|'forbid') [NAME ':' TYPE (',' ...)*] ['[' axes ']'] '{' stmt* '}'
    chart   := 'chart' NAME '=' expr ';'
    tsc     := 'tsc' NAME '{' 'bulletin' ':' names ';' 'history' ':' expr ';'
               'future' ':' expr ';' 'consequence' ':' expr ';' '}'
    config  := 'config' '{' (NAME '=' qty ';')* '}'
    expr    := alt ((';' | ';[' PIN ']') alt)*
    alt     := conc ('|' conc)*
    conc    := post ('&' post)*
    post    := atom ('within' NAME ':' NAME CMP qty (',' NAME CMP qty)* | 'pins' '[' PIN (',' PIN)* ']')*
    atom    := 'true' | 'inv' '(' NAME ')' | '(' expr ')'

Quantities accept the units m, s, m/s, kmh (or km/h), m/s2, deg and rad and
are normalised to SI on parsing.  ``#`` starts a line comment.
"""

from __future__ import annotations

import math
import re
from pathlib import Path
from dataclasses import dataclass, fields, replace
from fractions import Fraction
from typing import Optional

from .model import (
    ACCEL, ANGLE, LENGTH, NONE, NOWHERE, SOMEWHERE, SPEED, TIME, TOP,
    AttrConstraint, AttrRef, CarParams, Chart, CheckConfig, Choice, Concurrency, DistArrow,
    DomainError, Empty, Frame, Hourglass, Invariant, LinExpr, ObjectDecl, OrderChain, PinChain,
    RequirementTSC, Seq, Specification, SpatialView, WorldModel, views_used,
)

HEADER = "# TSC specification"


@dataclass(frozen=True)
class SourceSpan:
    file: str
    line: int
    column: int
    length: int = 1


@dataclass(frozen=True)
class ParseDiagnostic:
    severity: str
    message: str
    span: SourceSpan

    def __str__(self) -> str:
        return f"{self.span.file}:{self.span.line}:{self.span.column}: {self.severity}: {self.message}"


class SpecError(Exception):
    def __init__(self, diagnostics: list[ParseDiagnostic]):
        self.diagnostics = diagnostics
        super().__init__("\n".join(str(d) for d in diagnostics))


# -- units ----------------------------------------------------------------------

UNITS = {
    "m": (LENGTH, Fraction(1)),
    "s": (TIME, Fraction(1)),
    "m/s": (SPEED, Fraction(1)),
    "kmh": (SPEED, Fraction(10, 36)),
    "km/h": (SPEED, Fraction(10, 36)),
    "m/s2": (ACCEL, Fraction(1)),
    "rad": (ANGLE, Fraction(1)),
    "deg": (ANGLE, None),  # pi/180, irrational
}
SI_UNIT = {LENGTH: "m", TIME: "s", SPEED: "m/s", ACCEL: "m/s2", ANGLE: "rad"}

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r]+) | (?P<nl>\n) | (?P<comment>\#[^\n]*)
  | (?P<num>\d+(?:\.\d+)?(?:/\d+)?(?:[eE][-+]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op><=|>=|->|;\[|[<>=;:,{}()\[\]|&.+\-*])
""", re.VERBOSE)
_UNIT = re.compile(r"[ \t]*(m/s2|km/h|m/s|kmh|deg|rad|m|s)(?![A-Za-z0-9_/])")


@dataclass
class Token:
    kind: str
    text: str
    line: int
    col: int
    unit: Optional[str] = None
    file: str = "<input>"


def tokenize(text: str, file: str = "<input>") -> list[Token]:
    toks: list[Token] = []
    pos, line, col = 0, 1, 1
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise SpecError([ParseDiagnostic("error", f"unexpected character {text[pos]!r}",
                                             SourceSpan(file, line, col))])
        kind = m.lastgroup
        s = m.group()
        end = m.end()
        if kind == "nl":
            line, col = line + 1, 1
            pos = end
            continue
        if kind not in ("ws", "comment"):
            tok = Token(kind, s, line, col, file=file)
            if kind == "num":
                um = _UNIT.match(text, end)
                if um:
                    tok.unit = um.group(1)
                    end = um.end()
            toks.append(tok)
        col += end - pos
        pos = end
    toks.append(Token("eof", "", line, col, file=file))
    return toks


# -- parser -----------------------------------------------------------------------


class Parser:
    def __init__(self, text: str, file: str = "<input>"):
        self.file = file
        self.text = text
        self.toks = tokenize(text, file)
        self.i = 0
        self.diags: list[ParseDiagnostic] = []
        self.refs: list[tuple[AttrRef, SourceSpan, frozenset, str, Optional[str]]] = []
        self.unit_checks: list = []
        self.const_dims: list = []

    # token helpers
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def span(self, tok: Optional[Token] = None) -> SourceSpan:
        t = tok or self.tok
        return SourceSpan(t.file, t.line, t.col, max(1, len(t.text)))

    def error(self, msg: str, tok: Optional[Token] = None):
        raise SpecError([ParseDiagnostic("error", msg, self.span(tok))])

    def at(self, text: str) -> bool:
        return self.tok.kind in ("op", "name") and self.tok.text == text

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.error(f"expected {text!r}, found {self.tok.text or 'end of input'!r}")
        t = self.tok
        self.i += 1
        return t

    def name(self) -> Token:
        if self.tok.kind != "name":
            self.error(f"expected a name, found {self.tok.text or 'end of input'!r}")
        t = self.tok
        self.i += 1
        return t

    def quantity(self, expect_dim: Optional[str] = None) -> tuple[Fraction, str]:
        neg = False
        if self.at("-"):
            neg = True
            self.i += 1
        t = self.tok
        if t.kind != "num":
            self.error(f"expected a number, found {t.text or 'end of input'!r}")
        self.i += 1
        value = _read_number(t.text)
        dim = NONE
        if t.unit:
            dim, factor = UNITS[t.unit]
            value = value * factor if factor is not None else Fraction(repr(float(value) * math.pi / 180))
        if neg:
            value = -value
        if expect_dim is not None and dim not in (NONE, expect_dim):
            self.error(f"unit mismatch: expected {expect_dim}, got {t.unit}", t)
        return value, dim

    # top level
    def parse(self) -> Specification:
        world = WorldModel()
        objects: list[ObjectDecl] = []
        views: list[SpatialView] = []
        charts: list[tuple[str, Chart]] = []
        tscs: list[RequirementTSC] = []
        config = CheckConfig()
        self.names: dict[str, tuple[str, Token]] = {}
        while self.tok.kind != "eof":
            kw = self.tok
            if self.at("world"):
                world = self.world()
            elif self.at("objects"):
                objects.extend(self.objects(world))
            elif self.at("view"):
                views.append(self.view())
            elif self.at("chart"):
                self.i += 1
                n = self.name()
                self.declare("chart", n)
                self.expect("=")
                self.chart_pins: dict = {}
                charts.append((n.text, self.expr()))
                self.expect(";")
            elif self.at("tsc"):
                tscs.append(self.tsc())
            elif self.at("config"):
                config = self.config()
            else:
                self.error(f"expected a declaration, found {kw.text!r}")
        spec = Specification(world, tuple(objects), tuple(views), tuple(charts), tuple(tscs), config)
        self.resolve(spec)
        return spec

    def declare(self, kind: str, tok: Token):
        key = tok.text
        if (kind, key) in self.names:
            self.error(f"duplicate declaration of {kind} {key}", tok)
        self.names[(kind, key)] = tok

    def world(self) -> WorldModel:
        self.expect("world")
        self.expect("{")
        params: dict = {}
        g = None
        while not self.at("}"):
            if self.at("car_params"):
                self.i += 1
                params.update(self.car_params_block())
            elif self.at("gravity"):
                self.i += 1
                self.expect("=")
                g = float(self.quantity(ACCEL)[0])
                self.expect(";")
            else:
                self.error(f"unexpected {self.tok.text!r} in world block")
        self.expect("}")
        try:
            wm = WorldModel(car_params=CarParams(**params))
            return replace(wm, g=g) if g is not None else wm
        except DomainError as exc:
            self.error(str(exc))

    _PARAM_DIMS = {"G": LENGTH, "L": LENGTH, "F": LENGTH, "W": LENGTH, "delta_max": ANGLE, "a_lat_max": ACCEL}

    def car_params_block(self) -> dict:
        self.expect("{")
        out = {}
        while not self.at("}"):
            n = self.name()
            if n.text not in self._PARAM_DIMS:
                self.error(f"unknown car parameter {n.text}", n)
            self.expect("=")
            out[n.text] = float(self.quantity(self._PARAM_DIMS[n.text])[0])
            self.expect(";")
        self.expect("}")
        return out

    def objects(self, world: WorldModel) -> list[ObjectDecl]:
        self.expect("objects")
        self.expect("{")
        out = []
        while not self.at("}"):
            n = self.name()
            self.declare("object", n)
            self.expect(":")
            t = self.name()
            try:
                attrs = world.attributes(t.text)
            except DomainError:
                self.error(f"unknown object type {t.text}", t)
            fixed: list[tuple[str, Fraction]] = []
            params: dict = {}
            if self.at("("):
                self.i += 1
                while not self.at(")"):
                    a = self.name()
                    self.expect("=")
                    if world.is_subtype(t.text, "Car") and a.text in self._PARAM_DIMS:
                        params[a.text] = float(self.quantity(self._PARAM_DIMS[a.text])[0])
                    elif a.text in attrs and not world.is_subtype(t.text, "MovingObject"):
                        fixed.append((a.text, self.quantity(attrs[a.text])[0]))
                    else:
                        self.error(f"{t.text} has no settable attribute {a.text}", a)
                    if not self.at(")"):
                        self.expect(",")
                self.expect(")")
            self.expect(";")
            try:
                cp = CarParams(**{**_params_dict(world.car_params), **params}) if params else None
            except DomainError as exc:
                self.error(str(exc), n)
            out.append(ObjectDecl(n.text, t.text, tuple(sorted(fixed)), cp))
        self.expect("}")
        return out

    def view(self) -> SpatialView:
        self.expect("view")
        n = self.name()
        self.declare("view", n)
        self.expect("{")
        self.cur_view = n.text
        root = self.frame_body(TOP, (), ("x", "y"), frozenset())
        self.expect("}")
        return SpatialView(n.text, root)

    def frame_body(self, kind, locals_, axes, scope: frozenset) -> Frame:
        orders, dists, cons, kids = [], [], [], []
        while not self.at("}"):
            t = self.tok
            if self.at("order_x") or self.at("order_y"):
                self.i += 1
                axis = t.text[-1]
                anchors = [self.ref(scope)]
                links = []
                while self.at("<") or self.at("<=") or self.at("="):
                    links.append(self.tok.text)
                    self.i += 1
                    anchors.append(self.ref(scope))
                if not links:
                    self.error("order chain needs at least two anchors", t)
                orders.append(OrderChain(axis, tuple(anchors), tuple(links)))
                self.expect(";")
            elif self.at("dist_x") or self.at("dist_y"):
                self.i += 1
                src = self.ref(scope)
                self.expect("->")
                dst = self.ref(scope)
                op = self.comparator()
                value, _ = self.quantity(LENGTH)
                dists.append(DistArrow(t.text[-1], src, dst, op, value))
                self.expect(";")
            elif self.at("constraint"):
                self.i += 1
                first = len(self.refs)
                self.const_dims = []
                lhs = self.linexpr(scope)
                op = self.comparator()
                rhs = self.linexpr(scope)
                cons.append(AttrConstraint(lhs, op, rhs))
                self.unit_checks.append((self.refs[first:], self.const_dims, t))
                self.expect(";")
            elif t.text in ("somewhere", "exists", "nowhere", "forbid") and t.kind == "name":
                self.i += 1
                fkind = SOMEWHERE if t.text in ("somewhere", "exists") else NOWHERE
                locs = []
                while self.tok.kind == "name" and self.peek().text == ":":
                    ln = self.name()
                    self.expect(":")
                    lt = self.name()
                    locs.append((ln.text, lt.text, lt))
                    if self.at(","):
                        self.i += 1
                fax = ("x", "y")
                if self.at("["):
                    self.i += 1
                    ax = []
                    while not self.at("]"):
                        a = self.name()
                        if a.text not in ("x", "y"):
                            self.error(f"unknown axis {a.text}", a)
                        ax.append(a.text)
                        if not self.at("]"):
                            self.expect(",")
                    self.expect("]")
                    fax = tuple(sorted(set(ax)))
                self.expect("{")
                for _, tname, ttok in locs:
                    self.local_types = getattr(self, "local_types", {})
                    self.pending_types = getattr(self, "pending_types", [])
                    self.pending_types.append((tname, ttok))
                inner_scope = scope | {(ln, tn) for ln, tn, _ in locs}
                kids.append(self.frame_body(fkind, tuple((a, b) for a, b, _ in locs), fax, inner_scope))
                self.expect("}")
            else:
                self.error(f"unexpected {t.text!r} in view")
        return Frame(kind, locals_, axes, tuple(orders), tuple(dists), tuple(cons), tuple(kids))

    def comparator(self) -> str:
        t = self.tok
        if t.text in ("<", "<=", "=", ">=", ">") and t.kind == "op":
            self.i += 1
            return t.text
        self.error(f"expected a comparator, found {t.text!r}")

    def ref(self, scope: frozenset) -> AttrRef:
        o = self.name()
        self.expect(".")
        a = self.name()
        r = AttrRef(o.text, a.text)
        sp = SourceSpan(o.file, o.line, o.col, a.col + len(a.text) - o.col)
        self.refs.append((r, sp, scope, "view", self.cur_view))
        return r

    def linexpr(self, scope) -> LinExpr:
        terms: dict[AttrRef, Fraction] = {}
        order: list[AttrRef] = []
        const = Fraction(0)
        sign = 1
        if self.at("-"):
            sign = -1
            self.i += 1
        while True:
            if self.tok.kind == "num":
                if self.peek().text == "*":
                    coef, _ = self.quantity()
                    self.expect("*")
                    r = self.ref(scope)
                    if r not in terms:
                        order.append(r)
                    terms[r] = terms.get(r, Fraction(0)) + sign * coef
                else:
                    value, dim = self.quantity()
                    self.const_dims.append((dim, self.toks[self.i - 1]))
                    const += sign * value
            else:
                r = self.ref(scope)
                if r not in terms:
                    order.append(r)
                terms[r] = terms.get(r, Fraction(0)) + sign
            if self.at("+"):
                sign = 1
            elif self.at("-"):
                sign = -1
            else:
                break
            self.i += 1
        return LinExpr(tuple((r, terms[r]) for r in order if terms[r] != 0), const)

    def tsc(self) -> RequirementTSC:
        self.expect("tsc")
        n = self.name()
        self.declare("tsc", n)
        self.expect("{")
        self.expect("bulletin")
        self.expect(":")
        bulletin = []
        while not self.at(";"):
            b = self.name()
            bulletin.append(b.text)
            self.refs.append((AttrRef(b.text, ""), self.span(b), frozenset(), "bulletin", n.text))
            if not self.at(";"):
                self.expect(",")
        self.expect(";")
        parts = {}
        self.chart_pins = {}
        for key in ("history", "future", "consequence"):
            self.expect(key)
            self.expect(":")
            self.tsc_tok = n
            parts[key] = self.expr()
            self.expect(";")
        self.expect("}")
        return RequirementTSC(n.text, tuple(bulletin), parts["history"], parts["future"], parts["consequence"])

    def config(self) -> CheckConfig:
        self.expect("config")
        self.expect("{")
        kw = {}
        dims = {"step": TIME, "depth": NONE, "intervals": NONE, "timeout": TIME, "eps": NONE,
                "max_subset": NONE}
        while not self.at("}"):
            k = self.name()
            if k.text not in dims:
                self.error(f"unknown config key {k.text}", k)
            self.expect("=")
            if k.text == "max_subset" and self.at("none"):
                self.i += 1
                kw[k.text] = None
            else:
                v, _ = self.quantity(dims[k.text] if dims[k.text] != NONE else None)
                kw[k.text] = int(v) if k.text in ("depth", "intervals", "max_subset") else float(v)
            self.expect(";")
        self.expect("}")
        try:
            return CheckConfig(**kw)
        except DomainError as exc:
            self.error(str(exc))

    # chart expressions
    def expr(self) -> Chart:
        left = self.alt()
        while self.at(";") or self.at(";["):
            if self.at(";["):
                self.i += 1
                p = self.name()
                self.expect("]")
                left = Seq(left, self.alt(), p.text)
                continue
            nxt = self.peek()
            if nxt.text in ("true", "inv", "(") or (nxt.text == "[" and nxt.kind == "op"):
                self.i += 1
                pin = None
                if self.at("["):
                    self.i += 1
                    pin = self.name().text
                    self.expect("]")
                left = Seq(left, self.alt(), pin)
            else:
                break
        return left

    def alt(self) -> Chart:
        left = self.conc()
        while self.at("|"):
            self.i += 1
            left = Choice(left, self.conc())
        return left

    def conc(self) -> Chart:
        parts = [self.post()]
        while self.at("&"):
            self.i += 1
            parts.append(self.post())
        return parts[0] if len(parts) == 1 else Concurrency(tuple(parts))

    def post(self) -> Chart:
        c = self.atom()
        while True:
            if self.at("within"):
                self.i += 1
                var = self.name()
                self.expect(":")
                bounds = []
                while True:
                    v = self.name()
                    if v.text != var.text:
                        self.error(f"hourglass constraint must be over {var.text}", v)
                    op = self.comparator()
                    value, _ = self.quantity(TIME)
                    bounds.append((op, value))
                    if self.at(",") and self.peek().text == var.text:
                        self.i += 1
                        continue
                    break
                c = Hourglass(c, var.text, tuple(bounds))
            elif self.at("pins"):
                self.i += 1
                self.expect("[")
                pins = []
                while not self.at("]"):
                    p = self.name()
                    if p.text in pins:
                        self.error(f"pin label {p.text} declared twice", p)
                    pins.append(p.text)
                    if not self.at("]"):
                        self.expect(",")
                self.expect("]")
                if not pins:
                    self.error("empty pin list")
                c = PinChain(c, tuple(pins))
            else:
                return c

    def atom(self) -> Chart:
        if self.at("true"):
            self.i += 1
            return Empty()
        if self.at("inv"):
            self.i += 1
            self.expect("(")
            n = self.name()
            self.refs.append((AttrRef(n.text, ""), self.span(n), frozenset(), "viewref", None))
            self.expect(")")
            return Invariant(n.text)
        if self.at("("):
            self.i += 1
            c = self.expr()
            self.expect(")")
            return c
        self.error(f"expected a chart, found {self.tok.text or 'end of input'!r}")

    # name resolution
    def resolve(self, spec: Specification):
        objs = {o.name: o for o in spec.objects}
        views = {v.name for v in spec.views}
        for tname, ttok in getattr(self, "pending_types", []):
            try:
                spec.world.type(tname)
            except DomainError:
                self.diags.append(ParseDiagnostic("error", f"unknown object type {tname}", self.span(ttok)))
        for r, sp, scope, kind, owner in self.refs:
            if kind == "viewref":
                if r.obj not in views:
                    self.diags.append(ParseDiagnostic("error", f"unknown spatial view {r.obj}", sp))
                continue
            if kind == "bulletin":
                if r.obj not in objs:
                    self.diags.append(ParseDiagnostic("error", f"undeclared symbol {r.obj}", sp))
                continue
            local_types = {n: t for n, t in scope}
            if r.obj in local_types:
                tname = local_types[r.obj]
            elif r.obj in objs:
                tname = objs[r.obj].type
            else:
                self.diags.append(ParseDiagnostic("error", f"undeclared symbol {r.obj}", sp))
                continue
            try:
                attrs = spec.world.attributes(tname)
            except DomainError:
                continue
            if r.attr not in attrs:
                self.diags.append(ParseDiagnostic("error", f"{tname} has no attribute {r.attr}", sp))
        self.check_units(spec)
        for t in spec.tscs:
            allowed = set(t.bulletin)
            for part in (t.history, t.future, t.consequence):
                for vn in views_used(part):
                    if vn not in views:
                        continue
                    extra = {s for s in spec.view(vn).symbols() - allowed if s in objs}
                    if extra:
                        tok = self.names[("tsc", t.name)]
                        self.diags.append(ParseDiagnostic(
                            "error", f"view {vn} uses {', '.join(sorted(extra))} outside the bulletin board of {t.name}",
                            self.span(tok)))
        if self.diags:
            raise SpecError(self.diags)

    def check_units(self, spec: Specification):
        """All attributes of a constraint share one dimension; unit-carrying constants match it."""
        objs = {o.name: o.type for o in spec.objects}
        for refs, consts, tok in self.unit_checks:
            dims = set()
            for r, _, scope, _, _ in refs:
                tname = dict(scope).get(r.obj) or objs.get(r.obj)
                try:
                    dim = spec.world.attributes(tname).get(r.attr) if tname else None
                except DomainError:
                    dim = None
                if dim is not None:
                    dims.add(dim)
            if len(dims) > 1:
                self.diags.append(ParseDiagnostic(
                    "error", f"unit mismatch: constraint mixes {', '.join(sorted(dims))}", self.span(tok)))
                continue
            for dim, ctok in consts:
                if dims and dim != NONE and dim not in dims:
                    self.diags.append(ParseDiagnostic(
                        "error", f"unit mismatch: expected {next(iter(dims))}, got {ctok.unit}", self.span(ctok)))


def _params_dict(p: CarParams) -> dict:
    return {f.name: getattr(p, f.name) for f in fields(p)}


def _read_number(text: str) -> Fraction:
    if "/" in text:
        a, b = text.split("/")
        return Fraction(a) / Fraction(b)
    return Fraction(text)


def parse_spec(text: str, file: str = "<input>") -> Specification:
    """Parse a specification, raising :class:`SpecError` with spans on failure."""
    return Parser(text, file).parse()


def parse_sources(sources: list[tuple[str, str]]) -> Specification:
    """Parse several ``(text, file)`` pairs as one specification."""
    if not sources:
        raise ValueError("no input")
    p = Parser(sources[0][0], sources[0][1])
    toks = []
    for text, file in sources:
        toks = toks[:-1] + tokenize(text, file)
    p.toks = toks
    return p.parse()


def load_spec(*paths) -> Specification:
    """Read one or more ``.tsc`` files as a single specification."""
    srcs = [(Path(p).read_text(encoding="utf-8"), str(p)) for p in paths]
    return parse_sources(srcs)


# -- serializer -------------------------------------------------------------------


def fmt_number(q) -> str:
    if isinstance(q, float):
        if q == int(q) and abs(q) < 1e15:
            return str(int(q))
        return repr(q)
    q = Fraction(q)
    if q.denominator == 1:
        return str(q.numerator)
    d = q.denominator
    while d % 2 == 0:
        d //= 2
    while d % 5 == 0:
        d //= 5
    if d == 1:
        s = f"{float(q):.15f}".rstrip("0")
        if Fraction(s) == q:
            return s
    return f"{q.numerator}/{q.denominator}"


def _qty(q, dim: str) -> str:
    neg = q < 0
    s = fmt_number(-q if neg else q)
    unit = SI_UNIT.get(dim)
    s = f"{s} {unit}" if unit else s
    return f"-{s}" if neg else s


def serialize_spec(spec: Specification) -> str:
    out = [HEADER]
    wm, default = spec.world, WorldModel()
    if wm.car_params != default.car_params or wm.g != default.g:
        out.append("world {")
        if wm.car_params != default.car_params:
            out.append("  car_params {")
            for f in fields(CarParams):
                out.append(f"    {f.name} = {_qty(getattr(wm.car_params, f.name), _param_dim(f.name))};")
            out.append("  }")
        if wm.g != default.g:
            out.append(f"  gravity = {_qty(wm.g, ACCEL)};")
        out.append("}")
    if spec.objects:
        out.append("objects {")
        for o in spec.objects:
            args = []
            attrs = wm.attributes(o.type)
            for a, v in o.fixed:
                args.append(f"{a} = {_qty(v, attrs[a])}")
            if o.car_params is not None:
                for f in fields(CarParams):
                    v = getattr(o.car_params, f.name)
                    if v != getattr(wm.car_params, f.name):
                        args.append(f"{f.name} = {_qty(v, _param_dim(f.name))}")
            tail = f"({', '.join(args)})" if args else ""
            out.append(f"  {o.name}: {o.type}{tail};")
        out.append("}")
    for v in spec.views:
        out.append(f"view {v.name} {{")
        _frame_lines(v.root, spec, v, out, "  ")
        out.append("}")
    for name, c in spec.charts:
        out.append(f"chart {name} = {chart_to_text(c)};")
    for t in spec.tscs:
        out.append(f"tsc {t.name} {{")
        out.append(f"  bulletin: {', '.join(t.bulletin)};")
        out.append(f"  history: {chart_to_text(t.history)};")
        out.append(f"  future: {chart_to_text(t.future)};")
        out.append(f"  consequence: {chart_to_text(t.consequence)};")
        out.append("}")
    if spec.config != CheckConfig():
        c = spec.config
        out.append("config {")
        out.append(f"  step = {_qty(c.step, TIME)};")
        out.append(f"  depth = {c.depth};")
        out.append(f"  intervals = {c.intervals};")
        out.append(f"  timeout = {_qty(c.timeout, TIME)};")
        out.append(f"  eps = {fmt_number(c.eps)};")
        out.append(f"  max_subset = {'none' if c.max_subset is None else c.max_subset};")
        out.append("}")
    return "\n".join(out) + "\n"


def _param_dim(name: str) -> str:
    return Parser._PARAM_DIMS[name]


def _ref_dim(spec: Specification, frame_types: dict, r: AttrRef) -> str:
    tname = frame_types.get(r.obj) or spec.obj(r.obj).type
    return spec.world.attributes(tname).get(r.attr, NONE)


def _frame_lines(frame: Frame, spec, view, out, ind, types=None):
    types = dict(types or {})
    types.update(dict(frame.locals))
    for o in frame.orders:
        chain = str(o.anchors[0])
        for link, a in zip(o.links, o.anchors[1:]):
            chain += f" {link} {a}"
        out.append(f"{ind}order_{o.axis} {chain};")
    for d in frame.dists:
        out.append(f"{ind}dist_{d.axis} {d.src} -> {d.dst} {d.op} {_qty(d.bound, LENGTH)};")
    for c in frame.constraints:
        dim = NONE
        for r, _ in c.lhs.terms + c.rhs.terms:
            dim = _ref_dim(spec, types, r)
            break
        out.append(f"{ind}constraint {_lin(c.lhs, dim)} {c.op} {_lin(c.rhs, dim)};")
    for ch in frame.children:
        kw = "somewhere" if ch.kind == SOMEWHERE else "nowhere"
        locs = ", ".join(f"{n}: {t}" for n, t in ch.locals)
        head = kw + (f" {locs}" if locs else "") + f" [{', '.join(ch.axes)}]"
        out.append(f"{ind}{head} {{")
        _frame_lines(ch, spec, view, out, ind + "  ", types)
        out.append(f"{ind}}}")


def _lin(e: LinExpr, dim: str) -> str:
    parts = []
    for r, c in e.terms:
        mag = abs(c)
        body = str(r) if mag == 1 else f"{fmt_number(mag)} * {r}"
        parts.append(("-" if c < 0 else "+", body))
    if e.const != 0 or not parts:
        parts.append(("-" if e.const < 0 else "+", _qty(abs(e.const), dim)))
    s = ""
    for i, (sign, body) in enumerate(parts):
        if i == 0:
            s = body if sign == "+" else f"-{body}"
        else:
            s += f" {sign} {body}"
    return s


def chart_to_text(c: Chart) -> str:
    if isinstance(c, Empty):
        return "true"
    if isinstance(c, Invariant):
        return f"inv({c.view})"
    if isinstance(c, Seq):
        left = chart_to_text(c.left) if isinstance(c.left, (Seq, Empty, Invariant)) else _paren(c.left)
        right = _operand(c.right)
        sep = f";[{c.pin}]" if c.pin else ";"
        return f"{left} {sep} {right}"
    if isinstance(c, Choice):
        left = chart_to_text(c.a) if isinstance(c.a, Choice) else _operand(c.a)
        return f"{left} | {_operand(c.b)}"
    if isinstance(c, Concurrency):
        if len(c.children) == 1:
            return chart_to_text(c.children[0])
        return " & ".join(_operand(ch) for ch in c.children)
    if isinstance(c, Hourglass):
        bounds = ", ".join(f"{c.var} {op} {_qty(v, TIME)}" for op, v in c.bounds)
        return f"{_postfix_body(c.body)} within {c.var}: {bounds}"
    if isinstance(c, PinChain):
        return f"{_postfix_body(c.body)} pins [{', '.join(c.pins)}]"
    raise TypeError(c)


def _operand(c: Chart) -> str:
    if isinstance(c, (Empty, Invariant)):
        return chart_to_text(c)
    return _paren(c)


def _postfix_body(c: Chart) -> str:
    if isinstance(c, (Empty, Invariant, Hourglass, PinChain)):
        return chart_to_text(c)
    return _paren(c)


def _paren(c: Chart) -> str:
    return f"({chart_to_text(c)})"
