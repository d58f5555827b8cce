import io
import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from cfcusps.cf_engines import CFKind, CFStep, expansion_digits
from cfcusps.numerics import AlgebraicReal, DomainError
from cfcusps.skewprod import (
    DUMP_HEADER,
    SectionPoint,
    SkewState,
    TwistContext,
    arnoux_matrix,
    closed_form_coset,
    closed_form_labels,
    direct_assignments,
    iota_twisted_run,
    label_stream,
    m_word,
    projectively_equal,
    psi_average,
    psi_average_stream,
    return_matrix,
    return_step,
    skew_orbit,
    skew_step,
    trajectory_rows,
    verify_m_words,
    word_matrix,
    write_trajectory,
    zmap,
    zmap_inverse,
)
from cfcusps.subgroups import (
    CongruenceSpec,
    PermutationSpec,
    build_coset_table,
    classify_fraction,
    cusp_partition,
    gamma0_spec,
)

REG = CFKind.regular()
NICF = CFKind.alpha_cf(Fraction(1, 2))
F = Fraction


def _det(M):
    (a, b), (c, d) = M
    return a * d - b * c


def test_arnoux_matrix_examples():
    assert arnoux_matrix(SectionPoint(-1, F(0), F(0))) == ((1, 0), (0, 1))
    M = arnoux_matrix(SectionPoint(1, F(1, 2), F(1, 3)))
    assert M == ((F(1, 2), F(5, 6)), (-1, F(1, 3))) and _det(M) == 1
    assert _det(arnoux_matrix(SectionPoint(-1, F(2, 5), F(1, 2)))) == 1


@given(st.fractions(), st.fractions(), st.sampled_from([-1, 1]))
def test_arnoux_determinant(x, y, s):
    assert _det(arnoux_matrix(SectionPoint(s, x, y))) == 1


def test_zmap():
    assert zmap(F(3, 7), F(0)) == (F(3, 7), 0)
    assert zmap(F(1, 2), F(1)) == (F(1, 2), F(2, 3))
    assert zmap_inverse(*zmap(F(2, 5), F(1, 2))) == (F(2, 5), F(1, 2))
    with pytest.raises(DomainError):
        zmap(F(-1), F(1))


def test_return_step_regular():
    ev, pt = return_step(REG, SectionPoint(-1, F(2, 5), F(0)))
    assert projectively_equal(word_matrix(ev.m_word), ((1, 2), (0, 1)))
    assert ev.t == pytest.approx(2 * math.log(5 / 2))
    assert pt == SectionPoint(1, F(1, 2), F(1, 2))


def test_return_step_golden():
    x = AlgebraicReal.lam(5) - 1
    pt = SectionPoint(-1, x, 0.3)
    sigmas = []
    for _ in range(6):
        ev, pt = return_step(REG, pt)
        assert ev.step == CFStep(1, 1)
        assert ev.t == pytest.approx(2 * math.log((1 + math.sqrt(5)) / 2))
        sigmas.append(pt.sigma)
    assert sigmas == [1, -1, 1, -1, 1, -1]


def test_return_step_alpha():
    ev, pt = return_step(NICF, SectionPoint(-1, F(2, 5), F(0)))
    assert ev.step == CFStep(1, 3)
    assert projectively_equal(word_matrix(ev.m_word), ((1, 3), (0, 1)))
    assert pt.sigma == 1


def test_m_word_examples():
    assert projectively_equal(word_matrix(m_word(REG, -1, 1, 2)), ((1, 2), (0, 1)))
    assert projectively_equal(word_matrix(m_word(REG, 1, 1, 1)), ((1, 0), (1, 1)))
    lam = AlgebraicReal.lam(5)
    W = word_matrix(m_word(CFKind.rosen(5), 1, -1, 1), 5)
    assert W == ((lam, -1), (1, 0))


@pytest.mark.parametrize("kind", [REG, NICF] + [CFKind.rosen(m) for m in (3, 4, 5, 6)], ids=str)
def test_all_word_cells(kind):
    n = verify_m_words(kind, 50)
    assert n == (100 if kind.variant == "regular" else 200)
    for d in (1, 7, 50):
        for s in (-1, 1):
            for e in ((1,) if kind.variant == "regular" else (-1, 1)):
                assert projectively_equal(word_matrix(m_word(kind, s, e, d), kind.group_m),
                                          return_matrix(kind, s, e, d))


def test_regular_rejects_negative_eps():
    with pytest.raises(ValueError):
        m_word(REG, -1, -1, 2)


def test_skew_step_basics():
    triv = build_coset_table(PermutationSpec(3, (0,), (0,)))
    st_ = SkewState.start(F(5, 17))
    while True:
        try:
            nxt = skew_step(st_, REG, triv)
        except Exception:
            break
        assert nxt.label == 0 and nxt.elapsed > st_.elapsed and nxt.k == st_.k + 1
        st_ = nxt
    t2 = build_coset_table(CongruenceSpec(3, 2))
    s1 = skew_step(SkewState.start(F(2, 5)), REG, t2)
    assert s1.label == 0 and s1.digits == (CFStep(1, 2),)


def test_component_rule():
    x = F(123456789, 987654321) - F(1, 2)
    orb = skew_orbit(x, NICF, build_coset_table(CongruenceSpec(3, 3)), 30)
    for a, b in zip(orb, orb[1:]):
        e = b.digits[-1].epsilon
        assert b.point.sigma == (-a.point.sigma if e > 0 else a.point.sigma)


def test_closed_form_examples():
    t2 = build_coset_table(CongruenceSpec(3, 2))
    assert closed_form_coset([CFStep(1, 2)], REG, t2) == 0
    assert closed_form_coset([], REG, t2) == 0


def _random_steps(kind, rng, n):
    return [CFStep(1 if kind.variant == "regular" else rng.choice([-1, 1]), rng.randint(1, 9)) for _ in range(n)]


@pytest.mark.parametrize("kind", [REG, NICF, CFKind.rosen(4), CFKind.rosen(5), CFKind.rosen(7)], ids=str)
def test_closed_form_matches_skew_labels(kind):
    rng = random.Random(17)
    m = kind.group_m
    for spec in (CongruenceSpec(m, 2), CongruenceSpec(m, 3), gamma0_spec(3, m)):
        t = build_coset_table(spec)
        for _ in range(15):
            steps = _random_steps(kind, rng, rng.randint(1, 30))
            labels, _ = label_stream(steps, t)
            assert labels == closed_form_labels(steps, kind, t)
            assert labels[-1] == closed_form_coset(steps, kind, t)


def test_label_stream_matches_word_updates():
    rng = random.Random(2)
    t = build_coset_table(gamma0_spec(7))
    for _ in range(30):
        x = F(rng.getrandbits(80), 1 << 80) - F(1, 2)
        orb = skew_orbit(x, NICF, t, 25)
        labels, sigmas = label_stream(orb[-1].digits, t)
        assert labels == [s.label for s in orb[1:]]
        assert sigmas == [s.point.sigma for s in orb[1:]]


def test_psi_trivial():
    triv = build_coset_table(PermutationSpec(3, (0,), (0,)))
    tabs = (cusp_partition(triv, "inf"), cusp_partition(triv, "0"))
    orb = skew_orbit(F(7, 19), REG, triv, 10)
    assert psi_average(orb, 0, tabs) == (0.5, 1.0)
    one = psi_average(orb[:1], 0, tabs)
    assert one[0] in (0.0, 0.5)


def test_psi_stream_matches_states():
    t = build_coset_table(CongruenceSpec(3, 3))
    tabs = (cusp_partition(t, "inf"), cusp_partition(t, "0"))
    orb = skew_orbit(F(31415926535, 99999999999), REG, t, 40)[1:]
    labels, sigmas = label_stream(orb[-1].digits, t)
    for c in range(4):
        assert psi_average(orb, c, tabs) == psi_average_stream(labels, sigmas, c, tabs)


def test_twisted_run_two_fifths():
    t = build_coset_table(CongruenceSpec(3, 2))
    inf = cusp_partition(t)
    r = iota_twisted_run(F(2, 5), REG, CongruenceSpec(3, 2), 10)
    assert r.terminated and r.steps == 2
    assert r.assignments == [classify_fraction(1, 2, t, inf), classify_fraction(2, 5, t, inf)]
    assert r.assignments == [classify_fraction(1, 0, t, inf), classify_fraction(0, 1, t, inf)]
    assert sum(r.counts) == 2 and sum(r.counts_k0) == 3


def test_twisted_run_trivial():
    r = iota_twisted_run(F(355, 1130), REG, PermutationSpec(3, (0,), (0,)), 50)
    assert r.counts == [r.steps]


@pytest.mark.parametrize("kind,spec", [
    (REG, CongruenceSpec(3, 4)), (REG, gamma0_spec(6)), (NICF, gamma0_spec(5)),
    (CFKind.alpha_cf(F(3, 10)), CongruenceSpec(3, 3)), (CFKind.rosen(4), CongruenceSpec(4, 3)),
    (CFKind.rosen(5), gamma0_spec(2, 5)),
], ids=str)
def test_twisted_matches_direct(kind, spec):
    rng = random.Random(6)
    ctx = TwistContext(spec)
    for _ in range(3):
        u = F(rng.getrandbits(300), 1 << 300)
        if kind.variant == "regular":
            x = u
        elif kind.variant == "alpha":
            x = kind.alpha - 1 + u
        else:
            x = AlgebraicReal.lam(kind.m) * (u - F(1, 2))
        r = iota_twisted_run(x, kind, N=120, ctx=ctx)
        assert r.assignments == direct_assignments(r.digits, kind, ctx.tableH, ctx.cuspsH)


def test_twisted_matches_direct_hecke5_long():
    kind = CFKind.rosen(5)
    ctx = TwistContext(CongruenceSpec(5, 2))
    rng = random.Random(9)
    lam = AlgebraicReal.lam(5)
    x = lam * (F(rng.getrandbits(2400), 1 << 2400) - F(1, 2)) + F(1, 10 ** 9) * (lam - 1)
    r = iota_twisted_run(x, kind, N=1000, ctx=ctx)
    assert r.steps == 1000
    assert r.assignments == direct_assignments(r.digits, kind, ctx.tableH, ctx.cuspsH)


def test_trajectory_dump():
    t = build_coset_table(CongruenceSpec(3, 3))
    rows, term = trajectory_rows(F(0), REG, t, 5)
    assert rows == [] and term
    rows, term = trajectory_rows(F(27, 61), REG, t, 50)
    assert term and [r[2] for r in rows] == [s.digit for s in expansion_digits(REG, F(27, 61), 50)]
    assert all(r[7] > 0 for r in rows)
    buf = io.StringIO()
    write_trajectory(buf, rows)
    lines = buf.getvalue().splitlines()
    assert lines[0].split("\t") == list(DUMP_HEADER)
    assert len(lines) == len(rows) + 1
