import json
from fractions import Fraction as Q

import pytest

from conftest import CORPUS, FIXTURES, requires_solver
from tscheck.cli import EXIT_ERROR, EXIT_FOUND, EXIT_OK, EXIT_UNKNOWN, main
from tscheck.smt import SOLVER_ENV
from tscheck.trajectory import CarTrack, Segment, Trajectory, export_trajectory

TRAFFIC = str(CORPUS / "traffic_rules.tsc")
TRIVIAL = str(FIXTURES / "trivial.tsc")


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture
def witness(tmp_path):
    seg = lambda k: Segment((Q(20 * k), Q(1)), (Q(20 * k + 10), Q(1)), (Q(20 * k + 20), Q(1)))
    path = tmp_path / "w.json"
    path.write_text(export_trajectory(Trajectory(Q(1), {"carI": CarTrack([seg(k) for k in range(3)])})))
    return path


@requires_solver
def test_check_finds_traffic_conflicts(tmp_path, capsys):
    assert run("check", TRAFFIC, "--out", tmp_path) == EXIT_FOUND
    out = capsys.readouterr().out
    assert "3 minimal inconsistent subset(s)" in out
    doc = json.loads((tmp_path / "report.json").read_text())
    assert [d["tscs"] for d in doc["inconsistent"]] == [
        ["keep_right", "no_passing_right"], ["keep_right", "safe_lane_change"],
        ["no_passing_right", "safe_lane_change"]]
    for d in doc["inconsistent"]:
        assert (tmp_path / d["witness"]).exists()
        assert run("validate", tmp_path / d["witness"], "--spec", TRAFFIC) == EXIT_OK
    assert {p.name for p in tmp_path.glob("*.svg")} == {
        f"witness-{'+'.join(d['tscs'])}.svg" for d in doc["inconsistent"]}
    assert "wall_time" in json.loads((tmp_path / "timing.json").read_text())


@requires_solver
def test_report_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    run("check", TRAFFIC, "--out", a, "--jobs", 2)
    run("check", TRAFFIC, "--out", b)
    assert (a / "report.json").read_bytes() == (b / "report.json").read_bytes()


@requires_solver
def test_check_consistent(tmp_path, capsys):
    assert run("check", TRIVIAL, "--out", tmp_path) == EXIT_OK
    assert "no inconsistency found" in capsys.readouterr().out


def test_missing_solver(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv(SOLVER_ENV, str(tmp_path / "no-such-solver"))
    assert run("check", TRIVIAL, "--out", tmp_path) == EXIT_ERROR
    assert "solver not found" in capsys.readouterr().err


def test_parse_error(tmp_path, capsys):
    bad = tmp_path / "bad.tsc"
    bad.write_text("objects { carI: Car; }\nview V { constraint carK.v < 3; }\n")
    assert run("check", bad, "--out", tmp_path) == EXIT_ERROR
    err = capsys.readouterr().err
    assert "bad.tsc:2:" in err and "carK" in err


@pytest.mark.parametrize("argv", [[], ["check"], ["frobnicate"], ["check", TRIVIAL, "--depth", "0"],
                                  ["check", TRIVIAL, "--max-subset", "x"]])
def test_usage_errors(argv):
    assert main(argv) == EXIT_ERROR


def test_missing_file(tmp_path):
    assert run("check", tmp_path / "nothing.tsc") == EXIT_ERROR


@requires_solver
def test_satisfy(tmp_path, capsys):
    assert run("satisfy", CORPUS / "teleport.tsc", "jump", "--out", tmp_path) == EXIT_FOUND
    assert "sufficient: unsat (implied)" in capsys.readouterr().out
    assert run("satisfy", CORPUS / "follow.tsc", "follow", "--out", tmp_path) == EXIT_OK
    out = capsys.readouterr().out
    assert "necessary: sat" in out and "sufficient: sat" in out
    assert run("validate", tmp_path / "witness-follow.json", "--spec", CORPUS / "follow.tsc") == EXIT_OK
    assert run("satisfy", CORPUS / "follow.tsc", "tsc:keep_distance", "--out", tmp_path) == EXIT_OK
    assert (tmp_path / "witness-tsc-keep_distance.json").exists()
    assert run("satisfy", CORPUS / "follow.tsc", "nope", "--out", tmp_path) == EXIT_ERROR


@requires_solver
def test_satisfy_timeout_is_unknown(tmp_path, capsys):
    assert run("satisfy", FIXTURES / "stress.tsc", "loop", "--timeout", 1, "--out", tmp_path) == EXIT_UNKNOWN
    assert "sufficient: unknown" in capsys.readouterr().out


def test_validate(tmp_path, witness, capsys):
    assert run("validate", witness) == EXIT_OK
    assert capsys.readouterr().out.startswith("valid")
    doc = json.loads(witness.read_text())
    doc["cars"]["carI"]["segments"][1][1] = ["30", "6"]
    kinked = tmp_path / "kinked.json"
    kinked.write_text(json.dumps(doc))
    assert run("validate", kinked) == EXIT_FOUND
    truncated = tmp_path / "cut.json"
    truncated.write_text(witness.read_text()[:200])
    assert run("validate", truncated) == EXIT_ERROR


def test_export(tmp_path, witness, capsys):
    assert run("export", witness, "--rate", 1) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "t,car,x,y,v,theta" and len(lines) == 5
    svg = tmp_path / "w.svg"
    assert run("export", witness, "--format", "svg", "--spec", CORPUS / "follow.tsc", "-o", svg) == EXIT_OK
    assert svg.read_text().count('class="lane"') == 2
