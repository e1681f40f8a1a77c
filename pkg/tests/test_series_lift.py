import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nthcoeff.errors import BadInitialSegment, DigitOutOfRange, InvariantViolation, NotASeries, ZeroDivisor
from nthcoeff.ff_core import FieldCtx
from nthcoeff.padic_ring import padic_ctx_new
from nthcoeff.poly_algebra import pmul_trunc, trim
from nthcoeff.series_lift import (
    AlgebraicInstance,
    TruncSeries,
    compute_basis_series,
    eval_bipoly_series,
    frobenius_expand,
    hensel_lift,
    local_section,
    newton_lift,
    oracle_nth_coeff,
    series_div,
)

from instances import field, random_instance
from oracles import series_coeffs


def test_hensel_examples(f5, F5):
    f = hensel_lift(f5, 8)
    assert f.coeffs == [0, 0, 0, 0, 1, 0, 0, 0]
    E = [[0, 4], [1]]  # y - t
    inst = AlgebraicInstance(F5, E, 0, [0])
    assert hensel_lift(inst, 20).poly() == [0, 1]


def test_hensel_against_fixed_point(f5, F5):
    # f <- t^4 - f^2 - (t^4 + t + 1) f^4, iterated until stable mod t^100
    n = 100
    f = []
    L = [1, 1, 0, 0, 1]
    for _ in range(200):
        f2 = pmul_trunc(F5, f, f, n)
        f4 = pmul_trunc(F5, f2, f2, n)
        new = [0] * n
        new[4] = 1
        for i, c in enumerate(f2):
            new[i] = (new[i] - c) % 5
        for i, c in enumerate(pmul_trunc(F5, L, f4, n)):
            new[i] = (new[i] - c) % 5
        new = trim(F5, new)
        if new == f:
            break
        f = new
    # the series root has f_4 = 1 here since E = L y^4 + y^2 + y - t^4
    assert hensel_lift(f5, n).poly() == f


def test_oracle_examples(f5, F5):
    assert oracle_nth_coeff(f5, 70) == 2
    assert oracle_nth_coeff(f5, 3) == 0
    rational = AlgebraicInstance(FieldCtx(101), [[100], [1, 100]], 0, [1])
    assert all(oracle_nth_coeff(rational, k) == 1 for k in (0, 1, 17, 500))


@pytest.mark.parametrize("p,s,d,h,rho", [(5, 1, 2, 2, 0), (3, 2, 3, 1, 0), (7, 1, 3, 4, 2), (2, 1, 2, 3, 1),
                                         (13, 1, 2, 3, 1), (3, 1, 3, 4, 2)])
def test_newton_against_undetermined_coefficients(p, s, d, h, rho):
    F = field(p, s)
    rng = random.Random(p + d + h + rho)
    for _ in range(3):
        inst = random_instance(F, d, h, rng, rho=rho)
        ref = series_coeffs(F, inst, 60)
        assert hensel_lift(inst, 60).coeffs == ref
        f = hensel_lift(inst, 60).poly()
        assert not trim(F, eval_bipoly_series(F, inst.E, f, 60))


def test_series_div_examples(F5):
    a = TruncSeries(F5, [0, 0, 1, 1], 4)
    b = TruncSeries(F5, [0, 1, 0, 0], 4)
    q = series_div(a, b)
    assert q.coeffs == [0, 1, 1] and q.prec == 3
    geo = series_div(TruncSeries(F5, [1, 0, 0, 0, 0], 5), TruncSeries(F5, [1, 4, 0, 0, 0], 5))
    assert geo.coeffs == [1, 1, 1, 1, 1]
    with pytest.raises(NotASeries):
        series_div(TruncSeries(F5, [0, 1, 0], 3), TruncSeries(F5, [0, 0, 1], 3))
    with pytest.raises(ZeroDivisor):
        series_div(a, TruncSeries(F5, [0, 0], 2))


def test_local_section_examples(F5):
    ones = TruncSeries(F5, [1] * 25, 25)
    assert local_section(ones, 0).coeffs == [1] * 5
    t7 = TruncSeries(F5, [0] * 7 + [1], 8)
    assert local_section(t7, 2).poly() == [0, 1]
    assert local_section(t7, 1).poly() == []
    with pytest.raises(DigitOutOfRange):
        local_section(t7, 5)


@settings(max_examples=80, deadline=None)
@given(st.sampled_from([(3, [1, 0, 1]), (2, [1, 1, 1]), (5, None)]), st.integers(0, 2**32), st.integers(1, 60))
def test_reconstruction_and_semilinearity(field_data, seed, n):
    p, pi = field_data
    F = FieldCtx(p) if pi is None else FieldCtx(p, pi)
    rng = random.Random(seed)
    prec = p * n
    g = TruncSeries(F, [F.random(rng) for _ in range(prec)], prec)
    total = [F.zero] * prec
    for r in range(p):
        part = frobenius_expand(local_section(g, r), p)
        for i, c in enumerate(part.coeffs):
            if r + i < prec:
                total[r + i] = F.add(total[r + i], c)
    assert total == g.coeffs
    u = TruncSeries(F, [F.random(rng) for _ in range(n)], n)
    up = frobenius_expand(u, p).truncate(prec)
    for r in range(p):
        assert local_section(up * g, r) == (u * local_section(g, r))


def test_basis_series(f5, F5):
    s = compute_basis_series(f5, 3, 40)
    assert s[0][0] == 1
    f = hensel_lift(f5, 40).poly()
    ey = eval_bipoly_series(F5, f5.Ey, f, 40)
    fp = [F5.one]
    for j in range(4):
        assert trim(F5, pmul_trunc(F5, ey, trim(F5, s[j].coeffs), 40)) == trim(F5, fp)
        fp = pmul_trunc(F5, fp, f, 40)
    inst = AlgebraicInstance(F5, [[0, 4], [1]], 0, [0])
    assert compute_basis_series(inst, 0, 10)[0].poly() == [1]


def test_basis_series_with_rho():
    F = FieldCtx(7)
    inst = random_instance(F, 3, 4, random.Random(1), rho=2)
    s = compute_basis_series(inst, 2, 30)
    f = hensel_lift(inst, 40).poly()
    ey = eval_bipoly_series(F, inst.Ey, f, 32)
    v = inst.ey_valuation()
    assert v > 0
    fp = [F.one]
    for j in range(3):
        # E_y(t, f) * (t^v s_j) == t^v f^j
        assert trim(F, pmul_trunc(F, ey, trim(F, s[j].coeffs), 30)) == trim(F, ([0] * v + fp)[:30])
        fp = pmul_trunc(F, fp, f, 40)


def test_validation_errors(F5):
    with pytest.raises(InvariantViolation):
        AlgebraicInstance(F5, [[0, 4], [1]], 0, [1]).validate()  # f0 = 1 is not a root
    with pytest.raises(InvariantViolation):
        AlgebraicInstance(F5, [[0, 4], [], [1]], 0, [0]).validate()  # y^2 - t: E_y(0, 0) = 0
    with pytest.raises(InvariantViolation):
        AlgebraicInstance(F5, [[0, 4], [1]], 0, [0, 0]).validate()
    with pytest.raises(InvariantViolation):
        AlgebraicInstance(F5, [[0, 1], [], [], [], [], [1]], 0, [0]).validate()  # y^5 + t inseparable


def test_newton_over_padic_ring():
    F = FieldCtx(5)
    W = padic_ctx_new(F, 4)
    E = [[W.from_int(-1) % W.modulus, W.from_int(-1) % W.modulus], [], [1]]  # y^2 - 1 - t
    f = newton_lift(W, E, [1], 1, 0, 12)
    sq = pmul_trunc(W, f, f, 12)
    assert trim(W, sq) == [1, 1]


def test_bad_initial_segment(F5):
    inst = AlgebraicInstance(F5, [[0, 4], [], [1]], 0, [0])
    with pytest.raises(BadInitialSegment):
        inst.ey_valuation()
