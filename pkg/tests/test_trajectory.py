import csv
import io
import json
from fractions import Fraction as Q

import pytest
from hypothesis import given, settings, strategies as st

from tscheck.model import CarParams, DomainError
from tscheck.trajectory import (
    CarTrack, Segment, Trajectory, TrajectoryFormatError, export_trajectory, from_document, load_trajectory,
    render_svg, sample, to_document, validate_trajectory,
)


def pt(x, y):
    return (Q(x), Q(y))


def straight(v=20, n=3, dt=1, y=0):
    segs = [Segment(pt(v * k * dt, y), pt(v * k * dt + Q(v * dt, 2), y), pt(v * (k + 1) * dt, y)) for k in range(n)]
    return CarTrack(segs)


def one(track, dt=1):
    return Trajectory(Q(dt), {"carI": track})


def test_straight_is_valid():
    rep = validate_trajectory(one(straight()))
    assert rep.valid
    assert rep.max_curvature == 0 and rep.c0_gap == 0 and rep.c1_gap == 0


def test_kink_breaks_c1():
    segs = [Segment(pt(0, 0), pt(10, 0), pt(20, 0)), Segment(pt(20, 0), pt(30, 5), pt(40, 10))]
    rep = validate_trajectory(one(CarTrack(segs)))
    assert not rep.valid
    assert rep.c0_gap == 0 and rep.c1_gap == pytest.approx(10.0)


def test_gap_breaks_c0():
    segs = [Segment(pt(0, 0), pt(10, 0), pt(20, 0)), Segment(pt(21, 0), pt(31, 0), pt(41, 0))]
    rep = validate_trajectory(one(CarTrack(segs)))
    assert not rep.valid and rep.c0_gap == pytest.approx(1.0)


@pytest.mark.parametrize("lift, valid", [(Q(2), False), (Q(19, 10), True)])
def test_lateral_acceleration_bound(lift, valid):
    # acceleration (0, 2 * lift) against 20 m/s at the start of the segment
    rep = validate_trajectory(one(CarTrack([Segment(pt(0, 0), pt(10, 0), (Q(20), lift))])))
    assert rep.max_lateral == pytest.approx(float(2 * lift), rel=1e-9)
    assert rep.lateral_bound == pytest.approx(0.4 * 9.81, rel=1e-3)
    assert rep.valid is valid


def test_curvature_bound():
    # slow and tight: small lateral acceleration, curvature above tan(delta_max) / L
    rep = validate_trajectory(one(CarTrack([Segment(pt(0, 0), pt(Q(1, 2), 0), pt(1, Q(1, 4)))])))
    assert rep.max_curvature > CarParams().max_curvature
    assert not rep.valid


def test_idle_sampling():
    idle = CarTrack([Segment(pt(5, 1), pt(5, 1), pt(5, 1))] * 3, theta0=0.3)
    traj = Trajectory(Q(1), {"carI": idle, "carJ": straight()})
    rows = sample(traj, rate_hz=1)
    assert [r["t"] for r in rows if r["car"] == "carI"] == [0, 1, 2, 3]
    assert all(r["v"] == 0 and r["theta"] == 0.3 and (r["x"], r["y"]) == (5, 1) for r in rows if r["car"] == "carI")
    j = [r for r in rows if r["car"] == "carJ"]
    assert [r["x"] for r in j] == [0, 20, 40, 60] and all(r["v"] == pytest.approx(20) for r in j)
    assert validate_trajectory(traj).valid


def test_unequal_segment_counts():
    with pytest.raises(DomainError):
        Trajectory(Q(1), {"a": straight(n=2), "b": straight(n=3)})


def test_json_round_trip():
    traj = Trajectory(Q(1, 2), {"carI": straight(dt=Q(1, 2))}, {"rLane.offset": Q(0)},
                      [{"leaf": 1, "kind": "empty", "view": None, "from": "0", "to": "1/2", "steps": [0, 1]}])
    text = export_trajectory(traj, "json")
    back = load_trajectory(text)
    assert back.cars["carI"].segments == traj.cars["carI"].segments
    assert back.step == traj.step and back.static == traj.static and back.annotations == traj.annotations
    assert export_trajectory(back, "json") == text
    doc = json.loads(text)
    assert doc["duration"] == "3/2" and len(doc["samples"]) == 16


def test_csv_export():
    rows = list(csv.DictReader(io.StringIO(export_trajectory(one(straight()), "csv", rate_hz=2))))
    assert len(rows) == 7 and list(rows[0]) == ["t", "car", "x", "y", "v", "theta"]
    assert float(rows[-1]["x"]) == 60


@pytest.mark.parametrize("text", [
    "[1, 2]",
    "{not json",
    json.dumps({"format": "something-else"}),
])
def test_malformed_documents(text):
    with pytest.raises(TrajectoryFormatError):
        load_trajectory(text)


def test_truncated_document():
    doc = to_document(one(straight()))
    del doc["cars"]["carI"]["segments"][0][2]
    with pytest.raises(TrajectoryFormatError):
        from_document(doc)
    doc = to_document(one(straight()))
    doc["version"] = 99
    with pytest.raises(TrajectoryFormatError):
        from_document(doc)


def test_svg_structure(follow):
    traj = Trajectory(Q(1), {"carI": straight(y=1), "carJ": straight(y=1)})
    svg = render_svg(traj, follow)
    assert svg.startswith("<svg") and svg.rstrip().endswith("</svg>")
    assert svg.count('class="lane"') == 2
    assert svg.count('class="path"') == 2
    assert svg.count('class="bbox"') == 2 * 4


def test_views_are_checked_on_their_interval(follow):
    i = straight(y=1)
    j = CarTrack([Segment((s.p0[0] + 10, s.p0[1]), (s.p1[0] + 10, s.p1[1]), (s.p2[0] + 10, s.p2[1]))
                  for s in i.segments])
    note = [{"leaf": 2, "kind": "invariant", "view": "Gap", "from": "0", "to": "3", "steps": [0, 3]}]
    ok = Trajectory(Q(1), {"carI": i, "carJ": j}, {}, note)
    assert validate_trajectory(ok, spec=follow).valid
    close = Trajectory(Q(1), {"carI": i, "carJ": straight(y=1)}, {}, note)
    rep = validate_trajectory(close, spec=follow)
    assert not rep.valid and rep.view_violations["Gap"] > 0


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.integers(-20, 20), st.integers(-20, 20)), min_size=2, max_size=5),
       st.integers(1, 3))
def test_reflected_control_points_are_c1(points, dt):
    # p1 of the next segment mirrors p1 of the current one through the joint
    segs, p0, p1 = [], pt(0, 0), pt(*points[0])
    for x, y in points[1:]:
        p2 = pt(x, y)
        segs.append(Segment(p0, p1, p2))
        p0, p1 = p2, (2 * p2[0] - p1[0], 2 * p2[1] - p1[1])
    rep = validate_trajectory(one(CarTrack(segs), dt))
    assert rep.c0_gap == 0 and rep.c1_gap < 1e-9
    rows = sample(one(CarTrack(segs), dt), rate_hz=1 / dt)
    assert [(r["x"], r["y"]) for r in rows] == [tuple(map(float, s.p0)) for s in segs] + \
        [tuple(map(float, segs[-1].p2))]
