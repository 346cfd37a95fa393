"""The hand-written constraint set for ``true ; A ; true`` and an SMT equivalence check."""

from __future__ import annotations

from tscheck import formula as fm
from tscheck.bmc import close_primes, complete, encode_chart_structure, ok, started, view_literal
from tscheck.model import Empty, Invariant, seq


def _b(v):
    return fm.BoolVar(v)


def _n(v):
    return fm.BoolVar(v.next)


def reference_table():
    c1, c2, c3 = complete(1), complete(2), complete(3)
    s2, s3, ok2, bA = started(2), started(3), ok(2), view_literal("A")
    init = fm.conj(fm.neg(_b(c1)), fm.neg(_b(c2)), _b(ok2), fm.neg(_b(c3)))
    trans = fm.conj(
        fm.implies(_n(s2), fm.disj(_b(c1), _b(s2))),
        fm.iff(_n(c2), fm.conj(_b(s2), _n(ok2))),
        fm.iff(_n(ok2), fm.implies(_b(s2), fm.conj(_b(ok2), _b(bA)))),
        fm.implies(_n(s3), fm.disj(_n(c2), _b(s3))),
        fm.iff(_n(c3), _b(s3)),
    )
    final = _b(c3)
    return init, trans, final


def reference_chart():
    return seq(Empty(), Invariant("A"), Empty())


def equivalent(solver, a, b) -> bool:
    """``a <-> b`` is valid: both implications checked as separate unsat queries."""
    a, b = close_primes(a), close_primes(b)
    one = solver.check(fm.conj(a, fm.neg(b)), get_model=False)
    two = solver.check(fm.conj(b, fm.neg(a)), get_model=False)
    return one.unsat and two.unsat


def reference_matches(solver) -> dict[str, bool]:
    p = encode_chart_structure(reference_chart())
    i, t, f = reference_table()
    return {"init": equivalent(solver, p.init, i), "trans": equivalent(solver, p.trans, t),
            "final": equivalent(solver, p.final, f)}
