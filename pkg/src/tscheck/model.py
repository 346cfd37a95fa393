"""World model, spatial views, charts and requirement TSCs.

Everything here is an immutable value.  Car geometry follows the usual
single-track convention: ``(x, y)`` is the rear-axle reference point, the body
is a ``G + L + F`` by ``W`` rectangle with the rear overhang ``G`` behind the
reference point, and the bounding-box offsets are those of that rectangle
rotated by the heading ``theta``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Optional, Union

GRAVITY = 9.81

LENGTH, SPEED, ACCEL, ANGLE, TIME, NONE = "length", "speed", "acceleration", "angle", "time", "none"


class DomainError(ValueError):
    pass


@dataclass(frozen=True)
class CarParams:
    G: float = 1.0
    L: float = 2.7
    F: float = 0.9
    W: float = 1.8
    delta_max: float = 0.55
    a_lat_max: float = 0.4 * GRAVITY

    def __post_init__(self):
        for n in ("G", "L", "F", "W", "a_lat_max"):
            if not getattr(self, n) > 0:
                raise DomainError(f"car parameter {n} must be positive")
        if not 0 < self.delta_max < math.pi / 2:
            raise DomainError("delta_max must lie in (0, pi/2)")

    @property
    def max_curvature(self) -> float:
        return math.tan(self.delta_max) / self.L

    def corners(self) -> tuple[tuple[float, float], ...]:
        """Body-frame rectangle corners relative to the reference point."""
        w = self.W / 2
        back, front = -self.G, self.L + self.F
        return ((back, -w), (back, w), (front, -w), (front, w))


@dataclass(frozen=True)
class ObjectTypeDef:
    name: str
    parent: Optional[str]
    attributes: tuple[tuple[str, str], ...]  # (name, dimension)
    derived: tuple[str, ...] = ()


BOX = ("xmin", "xmax", "ymin", "ymax")
OFFSETS = ("bbxmin", "bbxmax", "bbymin", "bbymax")

BUILTIN_TYPES = (
    ObjectTypeDef("MovingObject", None,
                  (("x", LENGTH), ("y", LENGTH), ("v", SPEED), ("theta", ANGLE), ("a", ACCEL)), BOX),
    ObjectTypeDef("Car", "MovingObject", (("delta", ANGLE),), BOX + OFFSETS),
    ObjectTypeDef("StationaryObject", None,
                  (("xmin", LENGTH), ("xmax", LENGTH), ("ymin", LENGTH), ("ymax", LENGTH)), ()),
    ObjectTypeDef("Lane", None,
                  (("start", LENGTH), ("length", LENGTH), ("width", LENGTH), ("offset", LENGTH)), BOX),
)


@dataclass(frozen=True)
class WorldModel:
    object_types: tuple[ObjectTypeDef, ...] = BUILTIN_TYPES
    car_params: CarParams = field(default_factory=CarParams)
    g: float = GRAVITY

    def __post_init__(self):
        names = [t.name for t in self.object_types]
        if len(set(names)) != len(names):
            raise DomainError("duplicate object type")
        for req in ("MovingObject", "Car", "StationaryObject", "Lane"):
            if req not in names:
                raise DomainError(f"built-in type {req} missing")
        for t in self.object_types:
            attrs = [a for a, _ in t.attributes] + list(t.derived)
            if len(set(attrs)) != len(attrs):
                raise DomainError(f"duplicate attribute in {t.name}")

    def type(self, name: str) -> ObjectTypeDef:
        for t in self.object_types:
            if t.name == name:
                return t
        raise DomainError(f"unknown object type {name}")

    def is_subtype(self, name: str, ancestor: str) -> bool:
        cur: Optional[str] = name
        while cur is not None:
            if cur == ancestor:
                return True
            cur = self.type(cur).parent
        return False

    def attributes(self, type_name: str) -> dict[str, str]:
        """All attributes (own, inherited, derived) with their dimension."""
        out: dict[str, str] = {}
        cur: Optional[str] = type_name
        chain = []
        while cur is not None:
            chain.append(self.type(cur))
            cur = chain[-1].parent
        for t in reversed(chain):
            for a, dim in t.attributes:
                out[a] = dim
            for a in t.derived:
                out[a] = LENGTH
        return out


@dataclass(frozen=True)
class ObjectDecl:
    name: str
    type: str
    # fixed attribute values for static objects (SI units); missing ones are free
    fixed: tuple[tuple[str, Fraction], ...] = ()
    car_params: Optional[CarParams] = None

    def fixed_value(self, attr: str) -> Optional[Fraction]:
        for a, v in self.fixed:
            if a == attr:
                return v
        return None


# -- geometry -----------------------------------------------------------------


def bbox_offset(name: str, theta: float, params: CarParams) -> float:
    """Offset of the rotated rectangle's axis-aligned bounding box."""
    c, s = math.cos(theta), math.sin(theta)
    if name in ("bbxmin", "bbxmax"):
        vals = [cx * c - cy * s for cx, cy in params.corners()]
    elif name in ("bbymin", "bbymax"):
        vals = [cx * s + cy * c for cx, cy in params.corners()]
    else:
        raise DomainError(f"not a bounding-box offset: {name}")
    return max(vals) if name.endswith("max") else min(vals)


def derived_attribute(state: dict, name: str, params: Optional[CarParams] = None) -> float:
    """Derived attribute of a car (x, y, theta) or a lane (start, length, width, offset)."""
    if "start" in state:
        return _lane_box(state, name)
    if "theta" not in state:
        if name in BOX and name in state:
            return state[name]
        raise DomainError(f"unknown derived attribute {name}")
    if params is None:
        params = CarParams()
    if name in OFFSETS:
        return bbox_offset(name, state["theta"], params)
    if name in BOX:
        axis = "x" if name[0] == "x" else "y"
        return state[axis] + bbox_offset("bb" + name, state["theta"], params)
    raise DomainError(f"unknown derived attribute {name}")


def _lane_box(state: dict, name: str) -> float:
    if name == "xmin":
        return state["start"]
    if name == "xmax":
        return state["start"] + state["length"]
    if name == "ymin":
        return state["offset"]
    if name == "ymax":
        return state["offset"] + state["width"]
    raise DomainError(f"unknown derived lane attribute {name}")


# -- spatial views ---------------------------------------------------------------


@dataclass(frozen=True)
class AttrRef:
    obj: str
    attr: str

    def __str__(self) -> str:
        return f"{self.obj}.{self.attr}"


@dataclass(frozen=True)
class LinExpr:
    terms: tuple[tuple[AttrRef, Fraction], ...] = ()
    const: Fraction = Fraction(0)


@dataclass(frozen=True)
class OrderChain:
    axis: str
    anchors: tuple[AttrRef, ...]
    links: tuple[str, ...]  # "<", "<=", "=" between consecutive anchors

    def __post_init__(self):
        if len(self.links) != len(self.anchors) - 1 or not self.links:
            raise DomainError("order chain needs at least two anchors")
        if any(l not in ("<", "<=", "=") for l in self.links):
            raise DomainError("order chain links must be <, <= or =")


@dataclass(frozen=True)
class DistArrow:
    axis: str
    src: AttrRef
    dst: AttrRef
    op: str
    bound: Fraction  # dst - src op bound


@dataclass(frozen=True)
class AttrConstraint:
    lhs: LinExpr
    op: str
    rhs: LinExpr


TOP, SOMEWHERE, NOWHERE = "top", "somewhere", "nowhere"


@dataclass(frozen=True)
class Frame:
    kind: str = TOP
    locals: tuple[tuple[str, str], ...] = ()
    axes: tuple[str, ...] = ("x", "y")
    orders: tuple[OrderChain, ...] = ()
    dists: tuple[DistArrow, ...] = ()
    constraints: tuple[AttrConstraint, ...] = ()
    children: tuple["Frame", ...] = ()

    def refs(self) -> Iterator[AttrRef]:
        for o in self.orders:
            yield from o.anchors
        for d in self.dists:
            yield d.src
            yield d.dst
        for c in self.constraints:
            for r, _ in c.lhs.terms + c.rhs.terms:
                yield r
        for ch in self.children:
            yield from ch.refs()


@dataclass(frozen=True)
class SpatialView:
    name: str
    root: Frame = field(default_factory=Frame)

    def symbols(self) -> set[str]:
        """Free object symbols (locals excluded)."""
        return _free_symbols(self.root)


def _free_symbols(frame: Frame) -> set[str]:
    own = {r.obj for r in _own_refs(frame)}
    for ch in frame.children:
        own |= _free_symbols(ch)
    return own - {n for n, _ in frame.locals}


def _own_refs(frame: Frame) -> Iterator[AttrRef]:
    for o in frame.orders:
        yield from o.anchors
    for d in frame.dists:
        yield d.src
        yield d.dst
    for c in frame.constraints:
        for r, _ in c.lhs.terms + c.rhs.terms:
            yield r


# -- charts -----------------------------------------------------------------------


class Chart:
    __slots__ = ()


@dataclass(frozen=True)
class Empty(Chart):
    pass


@dataclass(frozen=True)
class Invariant(Chart):
    view: str


@dataclass(frozen=True)
class Seq(Chart):
    left: Chart
    right: Chart
    pin: Optional[str] = None


@dataclass(frozen=True)
class Choice(Chart):
    a: Chart
    b: Chart


@dataclass(frozen=True)
class Concurrency(Chart):
    children: tuple[Chart, ...]

    def __post_init__(self):
        if len(self.children) < 1:
            raise DomainError("concurrency needs at least one child")


@dataclass(frozen=True)
class Hourglass(Chart):
    body: Chart
    var: str
    bounds: tuple[tuple[str, Fraction], ...]  # conjunction of (op, value): duration op value


@dataclass(frozen=True)
class PinChain(Chart):
    body: Chart
    pins: tuple[str, ...]


def children(chart: Chart) -> tuple[Chart, ...]:
    if isinstance(chart, Seq):
        return (chart.left, chart.right)
    if isinstance(chart, Choice):
        return (chart.a, chart.b)
    if isinstance(chart, Concurrency):
        return chart.children
    if isinstance(chart, (Hourglass, PinChain)):
        return (chart.body,)
    return ()


def walk(chart: Chart) -> Iterator[Chart]:
    yield chart
    for c in children(chart):
        yield from walk(c)


def count_sequence_operators(chart: Chart) -> int:
    return sum(1 for c in walk(chart) if isinstance(c, Seq))


def leaves(chart: Chart) -> list[Chart]:
    return [c for c in walk(chart) if isinstance(c, (Empty, Invariant))]


def views_used(chart: Chart) -> list[str]:
    out: list[str] = []
    for c in walk(chart):
        if isinstance(c, Invariant) and c.view not in out:
            out.append(c.view)
    return out


def pins_used(chart: Chart) -> list[str]:
    out: list[str] = []
    for c in walk(chart):
        names = (c.pin,) if isinstance(c, Seq) and c.pin else c.pins if isinstance(c, PinChain) else ()
        for p in names:
            if p not in out:
                out.append(p)
    return out


def rename_pins(chart: Chart, fn) -> Chart:
    if isinstance(chart, Seq):
        return Seq(rename_pins(chart.left, fn), rename_pins(chart.right, fn), fn(chart.pin) if chart.pin else None)
    if isinstance(chart, Choice):
        return Choice(rename_pins(chart.a, fn), rename_pins(chart.b, fn))
    if isinstance(chart, Concurrency):
        return Concurrency(tuple(rename_pins(c, fn) for c in chart.children))
    if isinstance(chart, Hourglass):
        return Hourglass(rename_pins(chart.body, fn), chart.var, chart.bounds)
    if isinstance(chart, PinChain):
        return PinChain(rename_pins(chart.body, fn), tuple(fn(p) for p in chart.pins))
    return chart


def seq(*parts: Chart) -> Chart:
    """Left-associated sequence ``a ; b ; c``."""
    out = parts[0]
    for p in parts[1:]:
        out = Seq(out, p)
    return out


@dataclass(frozen=True)
class RequirementTSC:
    name: str
    bulletin: tuple[str, ...]
    history: Chart
    future: Chart
    consequence: Chart


@dataclass(frozen=True)
class CheckConfig:
    step: float = 3.0
    depth: int = 10
    intervals: int = 16
    timeout: float = 60.0
    eps: float = 1e-6
    max_subset: Optional[int] = 3

    def __post_init__(self):
        if not self.step > 0:
            raise DomainError("step size must be positive")
        if self.depth < 1:
            raise DomainError("sufficient-mode depth must be at least 1")
        if self.intervals < 3:
            raise DomainError("need at least three heading intervals")


@dataclass(frozen=True)
class Specification:
    world: WorldModel = field(default_factory=WorldModel)
    objects: tuple[ObjectDecl, ...] = ()
    views: tuple[SpatialView, ...] = ()
    charts: tuple[tuple[str, Chart], ...] = ()
    tscs: tuple[RequirementTSC, ...] = ()
    config: CheckConfig = field(default_factory=CheckConfig)

    def obj(self, name: str) -> ObjectDecl:
        for o in self.objects:
            if o.name == name:
                return o
        raise DomainError(f"undeclared symbol {name}")

    def view(self, name: str) -> SpatialView:
        for v in self.views:
            if v.name == name:
                return v
        raise DomainError(f"unknown spatial view {name}")

    def chart(self, name: str) -> Chart:
        for n, c in self.charts:
            if n == name:
                return c
        raise DomainError(f"unknown chart {name}")

    def tsc(self, name: str) -> RequirementTSC:
        for t in self.tscs:
            if t.name == name:
                return t
        raise DomainError(f"unknown TSC {name}")

    def params(self, obj: str) -> CarParams:
        o = self.obj(obj)
        return o.car_params or self.world.car_params

    def cars(self) -> list[str]:
        return [o.name for o in self.objects if self.world.is_subtype(o.type, "Car")]

    def statics(self) -> list[str]:
        return [o.name for o in self.objects if not self.world.is_subtype(o.type, "MovingObject")]

    def objects_of(self, type_name: str) -> list[str]:
        return [o.name for o in self.objects if self.world.is_subtype(o.type, type_name)]


Number = Union[int, float, Fraction]
