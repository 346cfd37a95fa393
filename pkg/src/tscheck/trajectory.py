"""Witness trajectories: extraction from sufficient-mode models, numerical
validation against the single-track limits, and export (JSON, CSV, SVG).

A segment is a quadratic Bezier curve over one step ``dt`` with control
points ``p0, p1, p2``.  With ``s = t / dt``, legs ``L1 = p1 - p0``,
``L2 = p2 - p1`` and ``w(s) = (1 - s) L1 + s L2``:

    p(t)   = (1-s)^2 p0 + 2 (1-s) s p1 + s^2 p2
    p'(t)  = 2 w(s) / dt
    p''(t) = 2 (L2 - L1) / dt^2
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, fields
from fractions import Fraction
from typing import Optional

import numpy as np

from . import formula as fm
from .bmc import active_intervals
from .checksat import interval_center
from .model import CarParams, DomainError, Specification, WorldModel
from .views import translate_view

FORMAT = "tsc-trajectory"
VERSION = 1


class ExtractionError(KeyError):
    pass


class TrajectoryFormatError(ValueError):
    pass


Point = tuple[Fraction, Fraction]


@dataclass(frozen=True)
class Segment:
    p0: Point
    p1: Point
    p2: Point


@dataclass
class CarTrack:
    segments: list[Segment]
    theta0: float = 0.0
    params: CarParams = field(default_factory=CarParams)


@dataclass
class Trajectory:
    step: Fraction
    cars: dict[str, CarTrack]
    static: dict[str, Fraction] = field(default_factory=dict)
    annotations: list[dict] = field(default_factory=list)

    def __post_init__(self):
        counts = {len(c.segments) for c in self.cars.values()}
        if len(counts) > 1:
            raise DomainError("all cars need the same number of segments")

    @property
    def n_segments(self) -> int:
        return len(next(iter(self.cars.values())).segments) if self.cars else 0

    @property
    def duration(self) -> Fraction:
        return self.step * self.n_segments


# -- extraction ---------------------------------------------------------------------


def _get(model: dict, name: str):
    if name not in model:
        raise ExtractionError(f"model has no value for {name}")
    return model[name]


def extract_witness(model: dict, problem, cfg=None) -> Trajectory:
    """Read control points, statics and active leaf intervals from an S-mode model."""
    meta = problem.meta
    n = meta["depth"]
    dt = Fraction(meta["step"])
    n_int = meta["intervals"]
    cars = {}
    for car in meta["cars"]:
        segs = []
        for k in range(n):
            p0 = (_get(model, f"{car}.x@{k}"), _get(model, f"{car}.y@{k}"))
            p1 = (_get(model, f"{car}.cx@{k}"), _get(model, f"{car}.cy@{k}"))
            p2 = (_get(model, f"{car}.x@{k + 1}"), _get(model, f"{car}.y@{k + 1}"))
            segs.append(Segment(p0, p1, p2))
        sel = [j for j in range(n_int) if model.get(f"{car}.h{j}@0", False)]
        theta0 = interval_center(n_int, sel[0]) if sel else 0.0
        theta0 = math.atan2(math.sin(theta0), math.cos(theta0))
        cars[car] = CarTrack(segs, theta0, meta["params"][car])
    static = {}
    statics = set(meta["statics"])
    for v in problem.globals:
        if v.name.split(".", 1)[0] in statics and v.name in model and v.sort == fm.REAL:
            static[v.name] = Fraction(model[v.name])
    notes = []
    spans = active_intervals(model, meta["leaves"], n)
    for leaf in meta["leaves"]:
        for a, b in spans.get(leaf.index, []):
            notes.append({"leaf": leaf.index, "kind": leaf.kind, "view": leaf.view,
                          "from": str(dt * a), "to": str(dt * b), "steps": [a, b]})
    return Trajectory(dt, cars, static, notes)


# -- evaluation ------------------------------------------------------------------


def _arr(p: Point) -> np.ndarray:
    return np.array([float(p[0]), float(p[1])])


def segment_arrays(seg: Segment, dt: Fraction, s: np.ndarray):
    """Position, velocity and acceleration on the local parameter grid ``s``."""
    p0, p1, p2 = _arr(seg.p0), _arr(seg.p1), _arr(seg.p2)
    l1, l2 = p1 - p0, p2 - p1
    s = s[:, None]
    pos = (1 - s) ** 2 * p0 + 2 * (1 - s) * s * p1 + s ** 2 * p2
    w = (1 - s) * l1 + s * l2
    vel = 2 * w / float(dt)
    acc = np.broadcast_to(2 * (l2 - l1) / float(dt) ** 2, vel.shape)
    return pos, vel, acc


def _headings(track: CarTrack, dt: Fraction, s: np.ndarray, eps: float):
    """Heading per segment sample; held through standstill."""
    held = track.theta0
    out = []
    for seg in track.segments:
        _, vel, _ = segment_arrays(seg, dt, s)
        speed = np.hypot(vel[:, 0], vel[:, 1])
        raw = np.arctan2(vel[:, 1], vel[:, 0])
        th = np.empty(len(s))
        for i in range(len(s)):
            if speed[i] > eps:
                held = raw[i]
            th[i] = held
        out.append(th)
    return out


def sample(traj: Trajectory, rate_hz: float = 10.0, eps: float = 1e-9) -> list[dict]:
    """Rows ``t, car, x, y, v, theta`` at a fixed rate, endpoints included."""
    dur = float(traj.duration)
    count = int(math.floor(dur * rate_hz + 1e-9)) + 1
    times = [i / rate_hz for i in range(count)]
    rows = []
    dt = float(traj.step)
    for name in sorted(traj.cars):
        track = traj.cars[name]
        held = track.theta0
        for t in times:
            k = min(int(t // dt), traj.n_segments - 1) if traj.n_segments else 0
            if not track.segments:
                continue
            s = np.array([(t - k * dt) / dt])
            pos, vel, _ = segment_arrays(track.segments[k], traj.step, s)
            v = float(np.hypot(*vel[0]))
            if v > eps:
                held = float(math.atan2(vel[0][1], vel[0][0]))
            rows.append({"t": round(t, 9), "car": name, "x": float(pos[0][0]), "y": float(pos[0][1]),
                         "v": v, "theta": held})
    return rows


# -- validation ------------------------------------------------------------------


@dataclass
class ValidationReport:
    c0_gap: float = 0.0
    c1_gap: float = 0.0
    max_curvature: float = 0.0
    curvature_bound: float = 0.0
    max_lateral: float = 0.0
    lateral_bound: float = 0.0
    view_violations: dict = field(default_factory=dict)
    samples: int = 0
    valid: bool = True
    eps: float = 1e-6

    def summary(self) -> str:
        viol = sum(self.view_violations.values())
        return (f"{'valid' if self.valid else 'invalid'}: C0 gap {self.c0_gap:.3g} m, C1 gap {self.c1_gap:.3g} m/s, "
                f"|kappa| {self.max_curvature:.4g} <= {self.curvature_bound:.4g}, "
                f"|v^2 kappa| {self.max_lateral:.4g} <= {self.lateral_bound:.4g}, "
                f"view violations {viol}, {self.samples} samples/segment")


def validate_trajectory(traj: Trajectory, wm: Optional[WorldModel] = None, samples: int = 1000,
                        eps: float = 1e-6, spec: Optional[Specification] = None) -> ValidationReport:
    """Closed-form check of continuity, curvature and lateral acceleration.

    With ``spec`` the active views recorded in the annotations are also
    evaluated at every sample of their closed-open interval.
    """
    if samples < 2:
        raise DomainError("need at least two samples per segment")
    rep = ValidationReport(samples=samples, eps=eps)
    if not traj.cars:
        return rep
    s = np.linspace(0.0, 1.0, samples)
    dt = float(traj.step)
    kb, lb = 0.0, 0.0
    for name, track in traj.cars.items():
        params = track.params
        if wm is not None and params is None:
            params = wm.car_params
        kmax = params.max_curvature
        kb, lb = max(kb, kmax), max(lb, params.a_lat_max)
        for k, seg in enumerate(track.segments):
            _, vel, acc = segment_arrays(seg, traj.step, s)
            speed = np.hypot(vel[:, 0], vel[:, 1])
            cross = vel[:, 0] * acc[:, 1] - vel[:, 1] * acc[:, 0]
            moving = speed > eps
            if moving.any():
                kappa = np.abs(cross[moving]) / speed[moving] ** 3
                lat = speed[moving] ** 2 * kappa
                mk, ml = float(kappa.max()), float(lat.max())
                rep.max_curvature = max(rep.max_curvature, mk)
                rep.max_lateral = max(rep.max_lateral, ml)
                if mk > kmax + eps or ml > params.a_lat_max + eps:
                    rep.valid = False
            if k + 1 < len(track.segments):
                nxt = track.segments[k + 1]
                c0 = math.dist(_arr(seg.p2), _arr(nxt.p0))
                l2 = _arr(seg.p2) - _arr(seg.p1)
                l1n = _arr(nxt.p1) - _arr(nxt.p0)
                c1 = float(np.hypot(*(2 * (l2 - l1n) / dt)))
                rep.c0_gap = max(rep.c0_gap, c0)
                rep.c1_gap = max(rep.c1_gap, c1)
    rep.curvature_bound, rep.lateral_bound = kb, lb
    if rep.c0_gap > eps or rep.c1_gap > eps:
        rep.valid = False
    if spec is not None:
        rep.view_violations = _check_views(traj, spec, samples, eps)
        if any(rep.view_violations.values()):
            rep.valid = False
    return rep


def _state_arrays(traj: Trajectory, spec: Specification, s: np.ndarray, eps: float):
    """Per segment: {var name: array over s} for all car attributes."""
    per_seg = [dict() for _ in range(traj.n_segments)]
    for name, track in traj.cars.items():
        heads = _headings(track, traj.step, s, eps)
        corners = np.array(track.params.corners())
        for k, seg in enumerate(track.segments):
            pos, vel, _ = segment_arrays(seg, traj.step, s)
            th = heads[k]
            c, sn = np.cos(th)[:, None], np.sin(th)[:, None]
            xo = corners[:, 0][None, :] * c - corners[:, 1][None, :] * sn
            yo = corners[:, 0][None, :] * sn + corners[:, 1][None, :] * c
            d = per_seg[k]
            d[f"{name}.x"], d[f"{name}.y"] = pos[:, 0], pos[:, 1]
            d[f"{name}.v"] = np.hypot(vel[:, 0], vel[:, 1])
            d[f"{name}.theta"] = th
            d[f"{name}.bbxmin"], d[f"{name}.bbxmax"] = xo.min(1), xo.max(1)
            d[f"{name}.bbymin"], d[f"{name}.bbymax"] = yo.min(1), yo.max(1)
            d[f"{name}.xmin"] = pos[:, 0] + d[f"{name}.bbxmin"]
            d[f"{name}.xmax"] = pos[:, 0] + d[f"{name}.bbxmax"]
            d[f"{name}.ymin"] = pos[:, 1] + d[f"{name}.bbymin"]
            d[f"{name}.ymax"] = pos[:, 1] + d[f"{name}.bbymax"]
    return per_seg


def _static_values(traj: Trajectory, spec: Specification) -> dict:
    out = {k: float(v) for k, v in traj.static.items()}
    for o in spec.objects:
        if spec.world.is_subtype(o.type, "Lane"):
            g = {a: out.get(f"{o.name}.{a}") for a in ("start", "length", "width", "offset")}
            if None in g.values():
                continue
            out[f"{o.name}.xmin"], out[f"{o.name}.xmax"] = g["start"], g["start"] + g["length"]
            out[f"{o.name}.ymin"], out[f"{o.name}.ymax"] = g["offset"], g["offset"] + g["width"]
    return out


def eval_vec(phi: fm.Formula, env: dict, tol: float = 0.0):
    """Evaluate a formula on arrays of samples; comparisons get ``tol`` slack."""
    if isinstance(phi, fm.BoolConst):
        return phi.value
    if isinstance(phi, fm.Cmp):
        val = float(phi.expr.const)
        for v, c in phi.expr.terms:
            val = val + float(c) * env[v.name]
        op = phi.op
        if op == "<":
            return val < tol
        if op == "<=":
            return val <= tol
        if op == ">":
            return val > -tol
        if op == ">=":
            return val >= -tol
        return np.abs(val) <= tol
    if isinstance(phi, fm.Not):
        return np.logical_not(eval_vec(phi.arg, env, -tol))
    if isinstance(phi, fm.And):
        out = True
        for a in phi.args:
            out = np.logical_and(out, eval_vec(a, env, tol))
        return out
    if isinstance(phi, fm.Or):
        out = False
        for a in phi.args:
            out = np.logical_or(out, eval_vec(a, env, tol))
        return out
    raise TypeError(f"unsupported node {type(phi).__name__}")


def _check_views(traj: Trajectory, spec: Specification, samples: int, eps: float) -> dict[str, int]:
    s = np.arange(samples) / samples  # closed-open within each segment
    per_seg = _state_arrays(traj, spec, s, 1e-9)
    static = _static_values(traj, spec)
    dt = traj.step
    out: dict[str, int] = {}
    for note in traj.annotations:
        if note.get("kind") != "invariant":
            continue
        view = note["view"]
        phi = translate_view(spec.view(view), spec)
        a = int(Fraction(note["from"]) / dt)
        b = int(Fraction(note["to"]) / dt)
        bad = 0
        for k in range(a, b):
            env = dict(static)
            env.update(per_seg[k])
            res = np.broadcast_to(eval_vec(phi, env, eps), s.shape)
            bad += int((~res).sum())
        out[view] = out.get(view, 0) + bad
    return out


# -- export / import ----------------------------------------------------------------


def _q(x) -> str:
    return str(Fraction(x))


def to_document(traj: Trajectory, rate_hz: float = 10.0) -> dict:
    cars = {}
    for name in sorted(traj.cars):
        t = traj.cars[name]
        cars[name] = {
            "theta0": t.theta0,
            "params": {f.name: getattr(t.params, f.name) for f in fields(CarParams)},
            "segments": [[[_q(p[0]), _q(p[1])] for p in (g.p0, g.p1, g.p2)] for g in t.segments],
        }
    return {
        "format": FORMAT,
        "version": VERSION,
        "step": _q(traj.step),
        "duration": _q(traj.duration),
        "cars": cars,
        "static": {k: _q(v) for k, v in sorted(traj.static.items())},
        "annotations": traj.annotations,
        "sample_rate_hz": rate_hz,
        "samples": sample(traj, rate_hz),
    }


def export_trajectory(traj: Trajectory, fmt: str = "json", rate_hz: float = 10.0) -> str:
    if fmt == "json":
        return json.dumps(to_document(traj, rate_hz), indent=1, sort_keys=True) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=["t", "car", "x", "y", "v", "theta"], lineterminator="\n")
        w.writeheader()
        for row in sample(traj, rate_hz):
            w.writerow(row)
        return buf.getvalue()
    if fmt == "svg":
        return render_svg(traj)
    raise ValueError(f"unknown export format {fmt!r}")


def from_document(doc: dict) -> Trajectory:
    try:
        if doc.get("format") != FORMAT:
            raise TrajectoryFormatError("not a trajectory document")
        if doc.get("version") != VERSION:
            raise TrajectoryFormatError(f"unsupported version {doc.get('version')}")
        step = Fraction(doc["step"])
        cars = {}
        for name, c in doc["cars"].items():
            segs = [Segment(*[(Fraction(p[0]), Fraction(p[1])) for p in g]) for g in c["segments"]]
            cars[name] = CarTrack(segs, float(c.get("theta0", 0.0)), CarParams(**c.get("params", {})))
        static = {k: Fraction(v) for k, v in doc.get("static", {}).items()}
        return Trajectory(step, cars, static, list(doc.get("annotations", [])))
    except TrajectoryFormatError:
        raise
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
        raise TrajectoryFormatError(f"malformed trajectory document: {exc}") from exc


def load_trajectory(text: str) -> Trajectory:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise TrajectoryFormatError(f"not JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise TrajectoryFormatError("not a trajectory document")
    return from_document(doc)


# -- SVG ---------------------------------------------------------------------------

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _lanes(traj: Trajectory, spec: Optional[Specification]) -> list[tuple[str, float, float, float, float]]:
    names = set()
    if spec is not None:
        names = {o.name for o in spec.objects if spec.world.is_subtype(o.type, "Lane")}
    else:
        names = {k.rsplit(".", 1)[0] for k in traj.static if k.endswith(".offset")}
    out = []
    for n in sorted(names):
        vals = [traj.static.get(f"{n}.{a}") for a in ("start", "length", "offset", "width")]
        if spec is not None and None in vals:
            decl = spec.obj(n)
            vals = [v if v is not None else decl.fixed_value(a)
                    for v, a in zip(vals, ("start", "length", "offset", "width"))]
        if None in vals:
            continue
        out.append((n, *(float(v) for v in vals)))
    return out


def render_svg(traj: Trajectory, spec: Optional[Specification] = None, scale: float = 8.0) -> str:
    """Lanes as bands, sampled spline paths, bounding boxes at segment boundaries."""
    s = np.linspace(0, 1, 25)
    paths = {}
    for name, track in traj.cars.items():
        pts = [segment_arrays(g, traj.step, s)[0] for g in track.segments]
        paths[name] = np.vstack(pts) if pts else np.zeros((0, 2))
    allp = np.vstack(list(paths.values())) if paths else np.zeros((1, 2))
    reach = max(p.corners()[2][0] for p in (t.params for t in traj.cars.values())) if traj.cars else 5.0
    x0, x1 = allp[:, 0].min() - reach - 5, allp[:, 0].max() + reach + 5
    lanes = _lanes(traj, spec)
    ys = [allp[:, 1].min() - reach, allp[:, 1].max() + reach]
    for _, _, _, off, wid in lanes:
        ys += [off, off + wid]
    y0, y1 = min(ys) - 2, max(ys) + 2

    def X(x):
        return (x - x0) * scale

    def Y(y):
        return (y1 - y) * scale

    width, height = (x1 - x0) * scale, (y1 - y0) * scale
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width:.1f}" height="{height:.1f}" '
           f'viewBox="0 0 {width:.1f} {height:.1f}">',
           f'<rect class="background" x="0" y="0" width="{width:.1f}" height="{height:.1f}" fill="#ffffff"/>']
    for i, (n, start, length, off, wid) in enumerate(lanes):
        a, b = max(start, x0), min(start + length, x1)
        if b <= a:
            continue
        fill = "#e8e8e8" if i % 2 == 0 else "#d8d8d8"
        out.append(f'<rect class="lane" data-name="{n}" x="{X(a):.2f}" y="{Y(off + wid):.2f}" '
                   f'width="{(b - a) * scale:.2f}" height="{wid * scale:.2f}" fill="{fill}" stroke="#999999"/>')
    heads_s = np.array([0.0])
    for i, name in enumerate(sorted(traj.cars)):
        track = traj.cars[name]
        col = _COLORS[i % len(_COLORS)]
        pts = " ".join(f"{X(x):.2f},{Y(y):.2f}" for x, y in paths[name])
        out.append(f'<polyline class="path" data-car="{name}" points="{pts}" fill="none" stroke="{col}" '
                   f'stroke-width="1.5"/>')
        heads = _headings(track, traj.step, heads_s, 1e-9)
        corners = track.params.corners()
        for k, seg in enumerate(track.segments + [None]):
            if seg is None:
                px, py = (float(c) for c in track.segments[-1].p2)
                th = heads[-1][0]
            else:
                px, py = (float(c) for c in seg.p0)
                th = heads[k][0]
            c, sn = math.cos(th), math.sin(th)
            ring = [corners[0], corners[2], corners[3], corners[1]]
            poly = " ".join(f"{X(px + cx * c - cy * sn):.2f},{Y(py + cx * sn + cy * c):.2f}" for cx, cy in ring)
            out.append(f'<polygon class="bbox" data-car="{name}" data-step="{k}" points="{poly}" '
                       f'fill="none" stroke="{col}" stroke-opacity="0.5"/>')
        out.append(f'<text x="{X(paths[name][0][0]):.2f}" y="{Y(paths[name][0][1]) - 6:.2f}" '
                   f'font-size="10" fill="{col}">{name}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
