"""SMT-LIB2 emission and a one-shot driver for an external solver process."""

from __future__ import annotations

import hashlib
import logging
import os
import shutil
import subprocess
import threading
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Optional

from .formula import (
    BOOL, And, BoolConst, BoolVar, Cmp, Formula, Iff, Implies, Lin, Not, Or, evaluate, variables,
)

log = logging.getLogger(__name__)

SOLVER_ENV = "TSCHECK_SOLVER"
DEFAULT_SOLVER = "z3"


class EmissionError(ValueError):
    pass


@dataclass
class Verdict:
    status: str  # "sat" | "unsat" | "unknown"
    model: Optional[dict[str, object]] = None
    stats: dict = field(default_factory=dict)
    diagnostic: str = ""

    def __post_init__(self):
        if self.status not in ("sat", "unsat", "unknown"):
            raise ValueError(self.status)

    @property
    def sat(self) -> bool:
        return self.status == "sat"

    @property
    def unsat(self) -> bool:
        return self.status == "unsat"


def _symbol(name: str) -> str:
    if "|" in name or "\\" in name:
        raise EmissionError(f"illegal symbol name {name!r}")
    return f"|{name}|"


def _number(q: Fraction) -> str:
    neg = q < 0
    q = abs(q)
    if q.denominator == 1:
        s = f"{q.numerator}.0"
    else:
        s = f"(/ {q.numerator}.0 {q.denominator}.0)"
    return f"(- {s})" if neg else s


def _lin(e: Lin) -> str:
    parts = []
    for v, c in e.terms:
        if v.sort != "Real":
            raise EmissionError(f"Boolean variable {v.name} in arithmetic term")
        parts.append(_symbol(v.name) if c == 1 else f"(* {_number(c)} {_symbol(v.name)})")
    if e.const != 0 or not parts:
        parts.append(_number(e.const))
    return parts[0] if len(parts) == 1 else f"(+ {' '.join(parts)})"


def _term(phi: Formula, out: list[str]) -> None:
    # iterative-friendly recursion: formulas here are shallow but wide
    if isinstance(phi, BoolConst):
        out.append("true" if phi.value else "false")
    elif isinstance(phi, BoolVar):
        if phi.var.prime:
            raise EmissionError(f"primed variable {phi.var.name} in closed formula")
        out.append(_symbol(phi.var.name))
    elif isinstance(phi, Cmp):
        for v in phi.expr.variables():
            if v.prime:
                raise EmissionError(f"primed variable {v.name} in closed formula")
        op = {"<": "<", "<=": "<=", "=": "=", ">=": ">=", ">": ">"}[phi.op]
        out.append(f"({op} {_lin(phi.expr)} 0.0)")
    elif isinstance(phi, Not):
        out.append("(not ")
        _term(phi.arg, out)
        out.append(")")
    elif isinstance(phi, (And, Or)):
        out.append("(and" if isinstance(phi, And) else "(or")
        for a in phi.args:
            out.append(" ")
            _term(a, out)
        out.append(")")
    elif isinstance(phi, (Implies, Iff)):
        out.append("(=> " if isinstance(phi, Implies) else "(= ")
        _term(phi.lhs, out)
        out.append(" ")
        _term(phi.rhs, out)
        out.append(")")
    else:
        raise EmissionError(f"unsupported construct {type(phi).__name__}")


def emit_script(phi: Formula, *, get_model: bool = True, timeout: Optional[float] = None) -> str:
    """Render a complete QF_LRA script.  Declarations are sorted by name."""
    decls = sorted(variables(phi), key=lambda v: v.name)
    seen: dict[str, str] = {}
    lines = []
    if get_model:
        lines.append("(set-option :produce-models true)")
    if timeout is not None:
        lines.append(f"(set-option :timeout {int(timeout * 1000)})")
    lines.append("(set-logic QF_LRA)")
    for v in decls:
        if v.prime:
            raise EmissionError(f"primed variable {v.name} in closed formula")
        if v.name in seen:
            if seen[v.name] != v.sort:
                raise EmissionError(f"variable {v.name} used with two sorts")
            continue
        seen[v.name] = v.sort
        lines.append(f"(declare-fun {_symbol(v.name)} () {v.sort})")
    body: list[str] = []
    _term(phi, body)
    lines.append(f"(assert {''.join(body)})")
    lines.append("(check-sat)")
    if get_model:
        lines.append("(get-model)")
    return "\n".join(lines) + "\n"


# -- s-expressions -----------------------------------------------------------


def _tokens(text: str):
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
        elif c in "()":
            yield c
            i += 1
        elif c == "|":
            j = text.index("|", i + 1)
            yield text[i:j + 1]
            i = j + 1
        elif c == '"':
            j = i + 1
            while True:
                j = text.index('"', j)
                if j + 1 < n and text[j + 1] == '"':
                    j += 2
                    continue
                break
            yield text[i:j + 1]
            i = j + 1
        elif c == ";":
            j = text.find("\n", i)
            i = n if j < 0 else j
        else:
            j = i
            while j < n and not text[j].isspace() and text[j] not in "()":
                j += 1
            yield text[i:j]
            i = j


def parse_sexprs(text: str) -> list:
    stack: list[list] = [[]]
    for tok in _tokens(text):
        if tok == "(":
            stack.append([])
        elif tok == ")":
            if len(stack) == 1:
                raise ValueError("unbalanced ')'")
            done = stack.pop()
            stack[-1].append(done)
        else:
            stack[-1].append(tok)
    if len(stack) != 1:
        raise ValueError("unbalanced '('")
    return stack[0]


def _value(sx) -> object:
    if isinstance(sx, str):
        if sx == "true":
            return True
        if sx == "false":
            return False
        return Fraction(sx)
    head = sx[0]
    if head == "-" and len(sx) == 2:
        return -_value(sx[1])
    if head == "/" and len(sx) == 3:
        return _value(sx[1]) / _value(sx[2])
    if head == "-" and len(sx) == 3:
        return _value(sx[1]) - _value(sx[2])
    if head == "+":
        return sum((_value(a) for a in sx[1:]), Fraction(0))
    if head == "*":
        out = Fraction(1)
        for a in sx[1:]:
            out *= _value(a)
        return out
    if head == "root-obj":
        raise ValueError("irrational model value")
    raise ValueError(f"cannot read model value {sx!r}")


def parse_model(text: str) -> dict[str, object]:
    """Read ``(define-fun name () Sort value)`` entries from solver output."""
    model: dict[str, object] = {}

    def walk(sx):
        if isinstance(sx, list):
            if len(sx) == 5 and sx[0] == "define-fun" and sx[2] == []:
                name = sx[1]
                if name.startswith("|") and name.endswith("|"):
                    name = name[1:-1]
                model[name] = _value(sx[4])
            else:
                for s in sx:
                    walk(s)

    walk(parse_sexprs(text))
    return model


# -- solver process ------------------------------------------------------------


def find_solver(path: Optional[str] = None) -> Optional[str]:
    cand = path or os.environ.get(SOLVER_ENV) or DEFAULT_SOLVER
    if os.sep in cand:
        return cand if os.access(cand, os.X_OK) else None
    return shutil.which(cand)


class SolverUnavailable(RuntimeError):
    pass


class Solver:
    """One child process per query, with a result cache keyed by script hash."""

    def __init__(self, path: Optional[str] = None, timeout: float = 60.0, dump_dir: Optional[str] = None):
        self.path = find_solver(path)
        if self.path is None:
            raise SolverUnavailable(f"SMT solver not found: {path or os.environ.get(SOLVER_ENV) or DEFAULT_SOLVER}")
        self.timeout = timeout
        self.dump_dir = Path(dump_dir) if dump_dir else None
        self._cache: dict[str, Verdict] = {}
        self._lock = threading.Lock()
        self.calls = 0

    def check(self, phi: Formula, *, get_model: bool = True, tag: str = "query") -> Verdict:
        script = emit_script(phi, get_model=get_model)
        verdict = self.solve(script, tag=tag)
        if verdict.sat and get_model:
            # bool/real variables eliminated by the solver's simplifier get defaults
            for v in variables(phi):
                if v.name not in verdict.model:
                    verdict.model[v.name] = False if v.sort == BOOL else Fraction(0)
        return verdict

    def solve(self, script: str, *, tag: str = "query") -> Verdict:
        key = hashlib.sha256(script.encode()).hexdigest()
        with self._lock:
            hit = self._cache.get(key)
        if hit is not None:
            return Verdict(hit.status, dict(hit.model) if hit.model else None, dict(hit.stats, cached=True))
        if self.dump_dir is not None:
            self.dump_dir.mkdir(parents=True, exist_ok=True)
            (self.dump_dir / f"{tag}-{key[:12]}.smt2").write_text(script)
        verdict = solve(script, self.timeout, self.path)
        with self._lock:
            self.calls += 1
            if verdict.status != "unknown":
                self._cache[key] = verdict
        return verdict


def solve(script: str, timeout: float = 60.0, solver: Optional[str] = None) -> Verdict:
    """Run ``script`` through the solver and map its answer to a Verdict."""
    path = find_solver(solver)
    if path is None:
        return Verdict("unknown", diagnostic=f"solver not found: {solver or DEFAULT_SOLVER}")
    cmd = [path, "-in", "-smt2", f"-T:{max(1, int(round(timeout)))}"]
    start = time.perf_counter()
    try:
        proc = subprocess.run(cmd, input=script, capture_output=True, text=True, timeout=timeout + 5)
    except subprocess.TimeoutExpired:
        return Verdict("unknown", stats={"time": time.perf_counter() - start}, diagnostic="timeout")
    except OSError as exc:
        return Verdict("unknown", diagnostic=f"cannot run solver: {exc}")
    elapsed = time.perf_counter() - start
    out = proc.stdout.strip()
    first, _, rest = out.partition("\n")
    first = first.strip()
    stats = {"time": elapsed}
    if first == "sat":
        if "define-fun" in rest or rest.strip() in ("", "()", "(\n)"):
            try:
                return Verdict("sat", parse_model(rest), stats)
            except ValueError as exc:
                return Verdict("unknown", stats=stats, diagnostic=f"malformed model: {exc}")
        return Verdict("sat", {}, stats)
    if first == "unsat":
        return Verdict("unsat", None, stats)
    diag = first or proc.stderr.strip() or "no output"
    if first == "timeout" or "timeout" in out:
        diag = "timeout"
    return Verdict("unknown", stats=stats, diagnostic=diag)


def check_model(phi: Formula, model: dict[str, object]) -> bool:
    """Exact re-evaluation of ``phi`` under a parsed model."""
    return evaluate(phi, model)
