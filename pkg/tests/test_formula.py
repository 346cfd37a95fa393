from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from tscheck import formula as fm
from tscheck.formula import FALSE, TRUE, BoolVar, Lin, Var

X, Y = fm.real("x"), fm.real("y")
P, Q = fm.boolvar("p"), fm.boolvar("q")

atoms = st.one_of(
    st.sampled_from([P, Q, TRUE, FALSE]),
    st.builds(lambda op, c, k: fm.compare(X * k, op, Y + c),
              st.sampled_from(fm.COMPARATORS), st.integers(-3, 3), st.integers(-2, 2)),
)
formulas = st.recursive(
    atoms,
    lambda kids: st.one_of(
        kids.map(fm.neg),
        st.lists(kids, min_size=2, max_size=3).map(fm.conj),
        st.lists(kids, min_size=2, max_size=3).map(fm.disj),
        st.builds(fm.implies, kids, kids),
        st.builds(fm.iff, kids, kids),
    ),
    max_leaves=10,
)
envs = st.fixed_dictionaries({
    "x": st.fractions(-4, 4, max_denominator=3), "y": st.fractions(-4, 4, max_denominator=3),
    "p": st.booleans(), "q": st.booleans(),
})


def _only_nnf(phi):
    if isinstance(phi, fm.Not):
        return isinstance(phi.arg, BoolVar)
    if isinstance(phi, (fm.Implies, fm.Iff)):
        return False
    if isinstance(phi, (fm.And, fm.Or)):
        return all(_only_nnf(a) for a in phi.args)
    return True


@given(formulas, envs)
def test_nnf_preserves_truth(phi, env):
    n = fm.nnf(phi)
    assert _only_nnf(n)
    assert fm.evaluate(n, env) == fm.evaluate(phi, env)
    assert fm.evaluate(fm.nnf(phi, negate=True), env) == (not fm.evaluate(phi, env))


@given(formulas, envs)
def test_substitution_matches_environment(phi, env):
    shifted = fm.substitute(phi, {X.terms[0][0]: Y + 1})
    env2 = dict(env, x=env["y"] + 1)
    assert fm.evaluate(shifted, env) == fm.evaluate(phi, env2)


def test_linear_arithmetic():
    e = (X * 2 + Y - X - 3) * Fraction(1, 2)
    assert e == Lin.of(X.terms[0][0]) * Fraction(1, 2) + Y * Fraction(1, 2) - Fraction(3, 2)
    assert (X - X).is_const


def test_constant_folding():
    assert fm.conj() == TRUE and fm.disj() == FALSE
    assert fm.conj(P, FALSE) == FALSE and fm.disj(P, TRUE) == TRUE
    assert fm.conj(P, TRUE) == P
    assert fm.neg(fm.neg(P)) == P
    assert fm.implies(FALSE, P) == TRUE and fm.iff(TRUE, P) == P
    assert fm.compare(Lin.of(1), "<", 2) == TRUE
    assert fm.compare(Lin.of(1), ">", 2) == FALSE


def test_evaluate_next_state_and_tolerance():
    x = Var("x")
    phi = fm.lt(Lin.of(x), Lin.of(x.next))
    assert fm.evaluate(phi, {"x": 1}, {"x": 2})
    with pytest.raises(KeyError):
        fm.evaluate(phi, {"x": 1})
    near = fm.le(Lin.of(x), 0)
    assert not fm.evaluate(near, {"x": 1e-9})
    assert fm.evaluate(near, {"x": 1e-9}, tol=1e-6)


def test_variables_and_rename():
    x = Var("x")
    phi = fm.conj(fm.gt(Lin.of(x.next), 0), P)
    assert {v.name for v in fm.variables(phi)} == {"x", "p"}
    ren = fm.rename(phi, lambda v: Var(v.name + "@1", v.sort) if v.prime else v)
    assert Var("x@1") in fm.variables(ren)
