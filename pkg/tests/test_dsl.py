from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from conftest import all_fixture_files
from tscheck.dsl import HEADER, SpecError, chart_to_text, load_spec, parse_spec, parse_sources, serialize_spec
from tscheck.model import (
    Choice, Concurrency, Empty, Hourglass, Invariant, PinChain, Seq, Specification,
)

MINIMAL = """
objects { carI: Car; }
view Slow { constraint carI.v < 33.3 m/s; }
tsc slow { bulletin: carI; history: true; future: inv(Slow); consequence: true; }
"""


def diag(text):
    with pytest.raises(SpecError) as exc:
        parse_spec(text, "t.tsc")
    return exc.value.diagnostics


def test_minimal_source():
    spec = parse_spec(MINIMAL)
    assert len(spec.tscs) == 1
    t = spec.tsc("slow")
    assert t.history == Empty() and t.future == Invariant("Slow") and t.consequence == Empty()


def test_undeclared_symbol_span():
    text = MINIMAL.replace("carI.v < 33.3", "carK.v < 33.3")
    ds = diag(text)
    assert [d.message for d in ds] == ["undeclared symbol carK"]
    line = text.splitlines()[ds[0].span.line - 1]
    assert line[ds[0].span.column - 1:].startswith("carK")
    assert str(ds[0]).startswith(f"t.tsc:{ds[0].span.line}:{ds[0].span.column}: error:")


def test_speed_unit_conversion():
    spec = parse_spec(MINIMAL.replace("33.3 m/s", "120 kmh"))
    rhs = spec.view("Slow").root.constraints[0].rhs.const
    assert float(rhs) == pytest.approx(33.33, abs=1e-2)
    assert rhs == Fraction(100, 3)


@pytest.mark.parametrize("attr,text,value", [
    ("theta", "90 deg", 1.5707963267948966),
    ("theta", "1 rad", 1.0),
    ("v", "36 km/h", 10.0),
    ("a", "2 m/s2", 2.0),
])
def test_other_units(attr, text, value):
    spec = parse_spec(f"objects {{ carI: Car; }}\nview V {{ constraint carI.{attr} < {text}; }}")
    assert float(spec.view("V").root.constraints[0].rhs.const) == pytest.approx(value, abs=1e-9)


@pytest.mark.parametrize("text,message", [
    ("objects { carI: Car; carI: Car; }", "duplicate declaration of object carI"),
    ("objects { carI: Car; }\nview V { constraint carI.x < 3 s; }", "unit mismatch"),
    ("objects { carI: Car; }\nview V { constraint carI.x < carI.v; }", "unit mismatch"),
    ("objects { carI: Car; }\nview V { constraint carI.x < 1 m; }\nchart c = inv(V) pins [p, p];",
     "pin label p declared twice"),
    ("objects { carI: Bus; }", "unknown object type Bus"),
    ("objects { carI: Car; }\nview V { constraint carI.zz < 1 m; }", "Car has no attribute zz"),
    ("objects { carI: Car; }\nchart c = inv(Nope);", "unknown spatial view Nope"),
    ("objects { carI: Car; ", "expected"),
    ("objects { carI: Car; }\nview V { constraint carI.x < 1 m; }\nview V { constraint carI.x < 2 m; }",
     "duplicate declaration of view V"),
])
def test_diagnostics(text, message):
    ds = diag(text)
    assert any(message in d.message for d in ds), [d.message for d in ds]
    lines = text.splitlines()
    for d in ds:
        assert 1 <= d.span.line <= len(lines) + 1 and d.span.column >= 1


def test_bulletin_board_scope():
    text = """objects { carI: Car; carJ: Car; }
view V { order_x carI.xmax < carJ.xmin; }
tsc t { bulletin: carI; history: true; future: inv(V); consequence: true; }"""
    assert any("outside the bulletin board" in d.message for d in diag(text))


def test_empty_specification_serializes_to_header():
    assert serialize_spec(Specification()).strip() == HEADER
    assert parse_spec(serialize_spec(Specification())) == Specification()


def test_traffic_corpus_is_byte_stable(traffic):
    once = serialize_spec(traffic)
    assert serialize_spec(parse_spec(once)) == once


@pytest.mark.parametrize("path", all_fixture_files(), ids=lambda p: p.name)
def test_fixture_round_trip(path):
    spec = load_spec(path)
    assert parse_spec(serialize_spec(spec)) == spec


def test_multiple_files_form_one_specification(tmp_path):
    a = tmp_path / "a.tsc"
    b = tmp_path / "b.tsc"
    a.write_text("objects { carI: Car; }\n")
    b.write_text("view V { constraint carI.x < 1 m; }\nchart c = inv(W);\n")
    with pytest.raises(SpecError) as exc:
        load_spec(a, b)
    assert str(exc.value.diagnostics[0]).startswith(f"{b}:2:")
    spec = parse_sources([("objects { carI: Car; }\n", "a"), ("view V { constraint carI.x < 1 m; }\n", "b")])
    assert spec.view("V")


def test_config_block():
    spec = parse_spec(MINIMAL + "config { step = 2 s; depth = 6; max_subset = none; }")
    assert spec.config.step == 2 and spec.config.depth == 6 and spec.config.max_subset is None


leaf = st.sampled_from([Empty(), Invariant("A"), Invariant("B")])


def _charts(pins):
    return st.recursive(
        leaf,
        lambda kids: st.one_of(
            st.builds(Seq, kids, kids, st.sampled_from([None] + pins)),
            st.builds(Choice, kids, kids),
            st.lists(kids, min_size=2, max_size=3).map(lambda xs: Concurrency(tuple(xs))),
            st.builds(lambda c, b: Hourglass(c, "d", b), kids,
                      st.sampled_from([(("<", Fraction(10)),), ((">=", Fraction(1, 2)), ("<", Fraction(7)))])),
            st.builds(lambda c, p: PinChain(c, p), kids, st.sampled_from([("p",), ("p", "q")])),
        ),
        max_leaves=7,
    )


BASE = """objects { carI: Car; }
view A { constraint carI.x < 0 m; }
view B { constraint carI.v >= 5 m/s; }
"""


@settings(max_examples=150, deadline=None)
@given(_charts(["p", "q"]))
def test_chart_text_round_trip(c):
    spec = parse_spec(BASE + f"chart c = {chart_to_text(c)};\n")
    assert spec.chart("c") == c
    assert parse_spec(serialize_spec(spec)) == spec
