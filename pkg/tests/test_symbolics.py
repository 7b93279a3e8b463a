import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from liemech.symbolics import (
    ZERO, Const, DomainError, compile_array, compile_exprs, ParseError, SampleDomain, UndecidableError,
    UndeclaredIdentifierError, Var, diff, equal_sampled, evaluate, fold, parse,
    random_polynomial, sample_points, substitute, vanishes_sampled,
)

VARS = ["x1", "x2", "x3", "y1", "y2", "y3"]


def central_difference(e, var, point, step=1e-6):
    up = dict(point, **{var: point[var] + step})
    down = dict(point, **{var: point[var] - step})
    return (evaluate(e, up) - evaluate(e, down)) / (2 * step)


# -- parse ------------------------------------------------------------------


def test_parse_half_square():
    e = parse("y1^2/2")
    assert evaluate(e, {"y1": 3}) == 4.5


def test_parse_pythagorean_identity():
    assert evaluate(parse("sin(x1)^2 + cos(x1)^2"), {"x1": 0.7}) == pytest.approx(1.0, abs=1e-12)


def test_parse_reports_offset():
    with pytest.raises(ParseError) as info:
        parse("x1*")
    assert info.value.offset == 3


@pytest.mark.parametrize("text, offset", [("(x1 + 2", 7), ("2 $ 3", 2), ("x1 y1", 3)])
def test_parse_errors(text, offset):
    with pytest.raises(ParseError) as info:
        parse(text)
    assert info.value.offset == offset


def test_undeclared_identifier():
    with pytest.raises(UndeclaredIdentifierError) as info:
        parse("x1 + z", variables=["x1"])
    assert info.value.offset == 5 and info.value.name == "z"


def test_parameters_are_substituted():
    e = parse("I1*y1", variables=["y1"], parameters={"I1": 3})
    assert e == parse("3*y1")


def test_symbolic_exponent_rejected():
    with pytest.raises(ParseError, match="exponent"):
        parse("x1^y1")


def test_constant_exponent_expression_allowed():
    assert evaluate(parse("x1^(1/2)"), {"x1": 4.0}) == pytest.approx(2.0)
    assert evaluate(parse("2^-1"), {}) == 0.5


def test_precedence():
    assert evaluate(parse("-x^2"), {"x": 3}) == -9
    assert evaluate(parse("2^3^2"), {}) == 512
    assert evaluate(parse("8/2/2"), {}) == 2
    assert evaluate(parse("1 - 2 - 3"), {}) == -4
    assert evaluate(parse("1.5e2 + .5"), {}) == 150.5


# -- printing ---------------------------------------------------------------


polynomials = st.builds(
    lambda seed, deg: random_polynomial(VARS, deg, np.random.default_rng(seed), n_terms=5),
    st.integers(0, 2**32 - 1), st.integers(0, 4))

leaves = st.one_of(st.sampled_from([Var(v) for v in VARS[:3]]),
                   st.floats(-5, 5, allow_nan=False).map(Const))


def _tree(children):
    from liemech import symbolics as S
    return st.one_of(
        st.tuples(children, children).map(lambda ab: S.add(*ab)),
        st.tuples(children, children).map(lambda ab: S.mul(*ab)),
        st.tuples(children, children).map(lambda ab: S.sub(*ab)),
        children.map(S.neg),
        st.tuples(children, st.sampled_from([2.0, 3.0, -1.0, 0.5])).map(lambda a: S.power(*a)),
        st.tuples(st.sampled_from(["sin", "cos", "exp"]), children).map(lambda a: S.func(*a)),
        st.tuples(children, st.floats(0.5, 3)).map(lambda a: S.div(a[0], Const(a[1]))),
    )


trees = st.recursive(leaves, _tree, max_leaves=12)


@settings(max_examples=200, deadline=None)
@given(trees)
def test_print_parse_round_trip(e):
    again = parse(str(e))
    point = {"x1": 0.37, "x2": -1.21, "x3": 1.9}
    try:
        want = evaluate(e, point)
    except DomainError:
        with pytest.raises(DomainError):
            evaluate(again, point)
        return
    assert evaluate(again, point) == pytest.approx(want, rel=1e-12, abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(trees)
def test_fold_idempotent(e):
    once = fold(e)
    assert fold(once) == once


# -- diff -------------------------------------------------------------------


def test_diff_polynomial():
    assert diff(parse("y1^2/2"), "y1") == Var("y1")


def test_diff_chain_rule():
    d = diff(parse("exp(x1*y1)"), "x1")
    ok, _ = equal_sampled(d, parse("y1*exp(x1*y1)"))
    assert ok


def test_diff_absent_variable_is_structural_zero():
    assert diff(parse("sin(x2)"), "x1") is ZERO


@pytest.mark.parametrize("text", [
    "sin(x1)*cos(x2)", "tan(x1/3)", "log(2 + x1^2)", "sqrt(5 + x1*x2)",
    "x1/(3 + x2^2)", "exp(-x1^2)*x2^3", "(1 + x1^2)^(-1.5)",
])
def test_diff_matches_central_differences(text):
    e = parse(text)
    rng = np.random.default_rng(1)
    for _ in range(16):
        pt = dict(zip(["x1", "x2"], rng.uniform(-2, 2, 2)))
        for v in ("x1", "x2"):
            fd = central_difference(e, v, pt)
            exact = evaluate(diff(e, v), pt)
            assert exact == pytest.approx(fd, rel=1e-6, abs=1e-7)


@settings(max_examples=50, deadline=None)
@given(polynomials)
def test_polynomial_derivatives_match_finite_differences(e):
    pts = sample_points(VARS, SampleDomain())
    for row in pts:
        pt = dict(zip(VARS, row))
        for v in VARS:
            fd = central_difference(e, v, pt)
            exact = evaluate(diff(e, v), pt)
            assert abs(exact - fd) <= 1e-6 * max(1.0, abs(exact))


# -- evaluation -------------------------------------------------------------


@pytest.mark.parametrize("text, point", [
    ("log(x1)", {"x1": -1.0}), ("1/x1", {"x1": 0.0}), ("sqrt(x1)", {"x1": -4.0}),
    ("x1^0.5", {"x1": -2.0}), ("x1^(-1)", {"x1": 0.0}), ("exp(x1)", {"x1": 1e6}),
])
def test_domain_errors_never_nan(text, point):
    with pytest.raises(DomainError):
        evaluate(parse(text), point)


def test_substitute():
    e = parse("x1*y1 + y1^2")
    assert substitute(e, {"y1": 0.0}) is ZERO or substitute(e, {"y1": 0.0}) == ZERO
    assert substitute(e, {"x1": Var("z")}) == parse("z*y1 + y1^2")


# -- equal_sampled ----------------------------------------------------------


def test_equal_sampled_identity():
    ok, resid = equal_sampled(parse("sin(x1)^2 + cos(x1)^2"), 1)
    assert ok and resid <= 1e-12


def test_equal_sampled_detects_offset():
    ok, _ = equal_sampled(parse("y1"), parse("y1 + 1e-6"))
    assert not ok


def test_equal_sampled_commutativity():
    assert equal_sampled(parse("x1*y1 - y1*x1"), 0) == (True, 0.0)


@settings(max_examples=30, deadline=None)
@given(polynomials, polynomials)
def test_equal_sampled_reflexive_symmetric(a, b):
    d = SampleDomain(seed=3)
    assert equal_sampled(a, a, d)[0]
    assert equal_sampled(a, b, d) == equal_sampled(b, a, d)


def test_resampling_gives_up():
    with pytest.raises(UndecidableError, match="undecidable on domain"):
        vanishes_sampled([parse("log(x1)")], SampleDomain(intervals={"x1": (-3.0, -1.0)}))


def test_resampling_recovers_from_isolated_failures():
    # log fails on half the interval; a few redraws per point usually succeed
    d = SampleDomain(intervals={"x1": (-0.01, 5.0)}, n=8)
    ok, _ = equal_sampled(parse("exp(log(x1))"), parse("x1"), d)
    assert ok


def test_sample_domain_validation():
    with pytest.raises(ValueError):
        SampleDomain(n=4)
    with pytest.raises(ValueError):
        SampleDomain(intervals={"x": (1.0, 1.0)})


def test_equal_sampled_is_reproducible():
    a, b = parse("x1^3 + y1"), parse("x1^3 + y1 + 1e-10*x1")
    assert equal_sampled(a, b) == equal_sampled(a, b)


def test_math_functions_agree_with_stdlib():
    for name in ("sin", "cos", "tan", "exp"):
        assert evaluate(parse(f"{name}(x)"), {"x": 0.3}) == getattr(math, name)(0.3)


def test_compile_array_matches_scalar():
    exprs = [parse(t) for t in ("sin(x1)*x2^2", "sqrt(4 + x1^2)/(1 + x2^2)", "3", "x1^(-2)")]
    vec = compile_array(exprs, ["x1", "x2"])
    scalar = compile_exprs(exprs, ["x1", "x2"])
    pts = np.random.default_rng(2).uniform(0.5, 2, (2, 7))
    out = vec(*pts)
    assert out.shape == (4, 7)
    for j in range(7):
        assert np.allclose(out[:, j], scalar(*pts[:, j]), rtol=1e-14, atol=0)


def test_compile_array_domain_error():
    with pytest.raises(DomainError):
        compile_array([parse("log(x1)")], ["x1"])(np.array([1.0, -1.0]))
