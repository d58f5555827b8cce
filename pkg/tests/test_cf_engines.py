from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings, strategies as st

from cfcusps.cf_engines import (
    ApproximantPair,
    CFKind,
    CFStep,
    ExpansionTerminated,
    approximants,
    evaluate,
    expansion_digits,
    matrix_form,
    planar_step,
    step,
)
from cfcusps.numerics import AdaptiveReal, AlgebraicReal, DomainError

REG = CFKind.regular()
NICF = CFKind.alpha_cf(Fraction(1, 2))


def test_single_steps():
    assert step(REG, Fraction(2, 5)) == (CFStep(1, 2), Fraction(1, 2))
    assert step(NICF, Fraction(2, 5)) == (CFStep(1, 3), Fraction(-1, 2))
    lam = AlgebraicReal.lam(5)
    st_, nx = step(CFKind.rosen(5), lam - 1)
    assert st_ == CFStep(1, 1) and nx == 0


def test_step_at_zero_terminates():
    with pytest.raises(ExpansionTerminated):
        step(REG, 0)


@pytest.mark.parametrize("kind,x", [
    (REG, Fraction(1)), (REG, Fraction(-1, 3)), (NICF, Fraction(1, 2)), (NICF, Fraction(-3, 5)),
])
def test_outside_interval(kind, x):
    with pytest.raises(DomainError):
        step(kind, x)


def test_rosen_rejects_other_field():
    with pytest.raises(DomainError):
        step(CFKind.rosen(5), AlgebraicReal.lam(7) / 4)


def test_rosen_outside_interval():
    with pytest.raises(DomainError):
        step(CFKind.rosen(5), AlgebraicReal.lam(5) / 2)


def test_kind_parsing():
    assert CFKind.parse("regular") == REG
    assert CFKind.parse("alpha:1/2") == NICF
    assert CFKind.parse("rosen:5") == CFKind.rosen(5)
    assert str(CFKind.parse("alpha:3/10")) == "alpha:3/10"
    for bad in ("alpha", "rosen:x", "gauss", "alpha:2"):
        with pytest.raises((ValueError, DomainError)):
            CFKind.parse(bad)
    with pytest.raises(DomainError):
        CFKind.rosen(2)


def test_pi_digits():
    mpmath.mp.prec = 600
    v = mpmath.pi - 3
    num = int(mpmath.floor(v * mpmath.mpf(2) ** 500))
    x = Fraction(num, 2 ** 500)
    got = [s.digit for s in expansion_digits(REG, x, 12)]
    assert got == [7, 15, 1, 292, 1, 1, 1, 2, 1, 3, 1, 14]


def test_golden_ratio_all_ones():
    x = AlgebraicReal.lam(5) - 1  # 1/phi, fixed by the Gauss map
    for _ in range(5):
        st_, x = step(REG, x)
        assert st_ == CFStep(1, 1)
    assert x == AlgebraicReal.lam(5) - 1


rationals01 = st.fractions(min_value=0, max_value=1, max_denominator=10 ** 12).filter(lambda q: q < 1)


@settings(max_examples=200, deadline=None)
@given(rationals01)
def test_regular_expansion_evaluates_back(x):
    steps = expansion_digits(REG, x, 200)
    if x == 0:
        assert steps == []
        return
    assert evaluate(steps, REG) == x
    ap = approximants(steps, REG)[-1]
    assert Fraction(ap.p_cur, ap.q_cur) == x


@settings(max_examples=200, deadline=None)
@given(rationals01, st.sampled_from([Fraction(3, 10), Fraction(1, 2), Fraction(2, 3), Fraction(1)]))
def test_alpha_expansion_evaluates_back(u, alpha):
    kind = CFKind.alpha_cf(alpha)
    x = alpha - 1 + u if alpha < 1 else u
    if x >= alpha:
        return
    steps = expansion_digits(kind, x, 200)
    if x == 0:
        return
    assert evaluate(steps, kind) == x
    for ap in approximants(steps, kind):
        assert abs(ap.determinant()) == 1


@settings(max_examples=100, deadline=None)
@given(rationals01)
def test_alpha_one_equals_regular(x):
    assert expansion_digits(CFKind.alpha_cf(1), x, 100) == expansion_digits(REG, x, 100)


@settings(max_examples=100, deadline=None)
@given(st.fractions(min_value=-1, max_value=1, max_denominator=10 ** 9))
def test_rosen_three_is_nearest_integer(u):
    x = u / 2
    if x >= Fraction(1, 2):
        return
    assert expansion_digits(CFKind.rosen(3), x, 100) == expansion_digits(NICF, x, 100)


@pytest.mark.parametrize("m", [4, 5, 6, 7])
def test_rosen_expansions_evaluate_back(m):
    kind = CFKind.rosen(m)
    lam = AlgebraicReal.lam(m)
    for x in (lam / 5, lam * Fraction(-2, 9), Fraction(1, 3), lam - 1 if m == 5 else lam / 7):
        steps = expansion_digits(kind, x, 60)
        assert steps, x
        ap = approximants(steps, kind)
        for a in ap:
            d = a.determinant()
            assert d == 1 or d == -1
        if len(steps) < 60:
            assert evaluate(steps, kind) == x
        else:
            assert abs(float(evaluate(steps, kind)) - float(x)) < 1e-12


def test_matrix_form_columns():
    steps = [CFStep(1, 2), CFStep(1, 3), CFStep(1, 1)]
    M = matrix_form(steps, REG)
    ap = approximants(steps, REG)[-1]
    assert M == ((ap.p_prev, ap.p_cur), (ap.q_prev, ap.q_cur))


def test_approximants_of_two_fifths():
    ap = approximants(expansion_digits(REG, Fraction(2, 5), 10), REG)
    assert [(a.p_cur, a.q_cur) for a in ap] == [(1, 2), (2, 5)]


def test_initial_pair():
    a = ApproximantPair.initial()
    assert (a.p_prev, a.p_cur, a.q_prev, a.q_cur) == (1, 0, 0, 1)


def test_evaluate_degenerate_prefix():
    with pytest.raises(ZeroDivisionError):
        evaluate([CFStep(1, 1), CFStep(-1, 1)], NICF)


def test_planar_step():
    nx, ny = planar_step(REG, Fraction(2, 5), Fraction(0))
    assert (nx, ny) == (Fraction(1, 2), Fraction(1, 2))
    nx, ny = planar_step(NICF, Fraction(2, 5), 0.25)
    assert nx == Fraction(-1, 2) and ny == pytest.approx(1 / 3.25)


def test_adaptive_step_matches_exact():
    lam = AlgebraicReal.lam(7)
    x = lam / 9
    ax = AdaptiveReal.from_algebraic(x)
    kind = CFKind.rosen(7)
    for _ in range(8):
        s1, x = step(kind, x)
        s2, ax = step(kind, ax)
        assert s1 == s2
    assert abs(float(ax) - float(x)) < 1e-12
