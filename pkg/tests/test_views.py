from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from conftest import FIXTURES
from tscheck import formula as fm
from tscheck.dsl import parse_spec
from tscheck.model import DomainError
from tscheck.oracle import holds_view
from tscheck.views import RELAXED_END, attr_var, translate_view, view_attributes


def atoms(phi):
    return set(phi.args) if isinstance(phi, fm.And) else {phi}


def v(spec, ref):
    obj, attr = ref.split(".")
    return fm.Lin.of(attr_var(spec, obj, attr))


def test_crossing_is_the_border_chain_conjunction(examples):
    s = examples
    chain_x = ["rLane.xmin", "lLane.xmin", "carI.xmin", "carI.xmax", "rLane.xmax", "lLane.xmax"]
    ops_x = ["=", "<", "<", "<", "="]
    chain_y = ["rLane.ymin", "carI.ymin", "rLane.ymax", "lLane.ymin", "carI.ymax", "lLane.ymax"]
    ops_y = ["<", "<", "=", "<", "<"]
    want = set()
    for chain, ops in ((chain_x, ops_x), (chain_y, ops_y)):
        for a, op, b in zip(chain, ops, chain[1:]):
            want.add(fm.compare(v(s, a), op, v(s, b)))
    assert atoms(translate_view(s.view("Crossing"), s)) == want


def test_behind_is_a_single_distance_atom(examples):
    s = examples
    phi = translate_view(s.view("BehindJ"), s)
    assert phi == fm.gt(v(s, "carJ.xmin") - v(s, "carI.xmax"), 5)


def test_limit_speed_constraint(examples):
    s = examples
    assert translate_view(s.view("Limit"), s) == fm.lt(v(s, "carI.v"), Fraction(100, 3))


def test_free_lane_expands_over_lanes(examples):
    s = examples
    phi = translate_view(s.view("FreeLane"), s)
    assert isinstance(phi, fm.Or) and len(phi.args) == 2
    lanes = [{x.name.split(".")[0] for x in fm.variables(b) if x.glob} for b in phi.args]
    assert lanes == [{"lLane"}, {"rLane"}]
    # no third car: the forbid part is an empty conjunction
    for branch in phi.args:
        assert len(atoms(branch)) == 11


WITH_K = parse_spec((FIXTURES / "example_views.tsc").read_text().replace("carJ: Car;", "carJ: Car;\n  carK: Car;"))


def test_free_lane_forbid_with_a_third_car():
    s = WITH_K
    phi = translate_view(s.view("FreeLane"), s)
    names = {x.name.split(".")[0] for x in fm.variables(phi)}
    assert "carK" in names and "c" not in names


def test_empty_pool_makes_exists_false(examples):
    s = examples
    assert translate_view(s.view("FreeLane"), s, pool=["carI", "carJ"]) == fm.FALSE


def test_type_mismatch(examples):
    with pytest.raises(DomainError):
        attr_var(examples, "rLane", "v")


def test_view_attributes(examples):
    s = examples
    assert view_attributes(translate_view(s.view("Limit"), s)) == {("carI", "v")}


ATTRS = [f"{o}.{a}" for o in ("carI", "carJ", "carK") for a in ("xmin", "xmax", "ymin", "ymax", "v")]
ATTRS += [f"{o}.{a}" for o in ("lLane", "rLane") for a in ("xmin", "xmax", "ymin", "ymax")]
valuations = st.fixed_dictionaries({k: st.integers(-3, 3).map(Fraction) for k in ATTRS})


def _check(spec, values, relaxed):
    for view in spec.views:
        phi = translate_view(view, spec, RELAXED_END if relaxed else "strict")
        assert fm.evaluate(phi, values) == holds_view(view, spec, values, relaxed=relaxed), view.name


@settings(max_examples=1000, deadline=None)
@given(valuations)
def test_translation_agrees_with_frame_semantics(examples, values):
    for spec in (examples, WITH_K):
        _check(spec, values, relaxed=False)
        _check(spec, values, relaxed=True)


@settings(max_examples=300, deadline=None)
@given(valuations)
def test_relaxation_is_monotone(examples, values):
    for view in examples.views:
        if fm.evaluate(translate_view(view, examples), values):
            assert fm.evaluate(translate_view(view, examples, RELAXED_END), values)
