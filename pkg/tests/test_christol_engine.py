import random

import pytest
from hypothesis import given, settings, strategies as st

from instances import field, random_instance
from nthcoeff.christol_engine import (
    StableElem,
    base_p_digits,
    bivariate_section,
    build_section_matrices,
    evaluate_at_origin,
    expand_stable,
    laurent_quotient,
    represent_y,
    matrix_section_step,
    nth_coeff_bivariate,
    nth_coeff_matrix,
    residue,
    stable_section,
    stable_section_full,
    taylor_at_f,
)
from nthcoeff.errors import DigitOutOfRange, InternalInvariantError
from nthcoeff.cli import parse_instance_text
from nthcoeff.poly_algebra import bi_deg_t, bi_deg_y, bi_mul, bi_trim, pgcd, pmul, trim
from nthcoeff.series_lift import TruncSeries, hensel_lift, local_section, oracle_nth_coeff

# images of y under the five sections for the bundled F_5 example, rows indexed by y-degree
SECTIONS_OF_Y = {
    0: [[0, 0, 0, 0, 4], [0, 2, 4], [1, 1, 2]],
    1: [[0, 0, 0, 4], [1, 0, 0, 4], [0, 1, 0, 4]],
    2: [[0, 0, 2, 4], [0, 0, 3], [2, 4]],
    3: [[0, 4], [0, 1, 3], [3, 4, 2]],
    4: [[1], [3, 3], [4, 3]],
}


def _poly(terms):
    """Dense list from ``{exponent: coefficient}``."""
    out = [0] * (max(terms) + 1)
    for e, c in terms.items():
        out[e] = c
    return out


def _random_box(F, inst, rng, deg_t=None, deg_y=None):
    deg_t = inst.h if deg_t is None else deg_t
    deg_y = inst.d if deg_y is None else deg_y
    return bi_trim(F, [[F.random(rng) for _ in range(deg_t)] for _ in range(deg_y)])


def test_base_p_digits():
    assert base_p_digits(70, 5) == [0, 4, 2]
    assert base_p_digits(0, 7) == []
    assert base_p_digits(1, 2) == [1]


def test_represent_y(f5):
    # y = (4 t^4 + 2 y + 3 y^2) / E_y
    assert represent_y(f5).P == [[0, 0, 0, 0, 4], [2], [3]]


@pytest.mark.parametrize("r", range(5))
def test_sections_of_y(f5, r):
    assert stable_section(represent_y(f5), r).P == SECTIONS_OF_Y[r]


def test_composed_sections(f5):
    y = represent_y(f5)
    out = stable_section(stable_section(stable_section(y, 0), 4), 2)
    assert out.P == [[2, 0, 1], [4, 3, 0, 3], [2, 0, 4, 2]]


def test_f70_all_paths(f5):
    assert nth_coeff_bivariate(f5, 70) == 2
    assert nth_coeff_bivariate(f5, 70, skip_roots=True) == 2
    assert nth_coeff_matrix(f5, 70) == 2
    assert nth_coeff_matrix(f5, 70, skip_roots=True) == 2
    assert oracle_nth_coeff(f5, 70) == 2


def test_full_product_route_agrees(f5):
    rng = random.Random(1)
    F = f5.field
    for _ in range(30):
        x = StableElem(_random_box(F, f5, rng), f5)
        r = rng.randrange(5)
        assert stable_section_full(x, r).P == stable_section(x, r).P


def test_digit_out_of_range(f5):
    with pytest.raises(DigitOutOfRange):
        stable_section(represent_y(f5), 5)
    with pytest.raises(DigitOutOfRange):
        bivariate_section(f5.field, [[1]], 0, 7)


def test_stable_elem_bounds(f5):
    with pytest.raises(InternalInvariantError):
        StableElem([[1] * 6], f5)
    with pytest.raises(InternalInvariantError):
        StableElem([[1]] * 5, f5)


def test_section_semantics_on_series(f5):
    """Expanding the section equals the section of the expansion."""
    rng = random.Random(2)
    F = f5.field
    for _ in range(10):
        x = StableElem(_random_box(F, f5, rng), f5)
        r = rng.randrange(5)
        lhs = stable_section(x, r).expand(30)
        rhs = local_section(x.expand(150), r)
        assert lhs.truncate(30) == rhs.truncate(30)


# -- Frobenius matrices -----------------------------------------------------


def test_modulus_is_power_of_t(f5):
    S = build_section_matrices(f5, random.Random(0))
    assert S.B == [0] * 17 + [1]


def test_inverse_frobenius_first_and_last_rows(f5):
    S = build_section_matrices(f5, random.Random(0))
    first = [
        _poly({0: 1, 4: 3, 8: 1, 12: 1, 13: 1, 16: 1}),
        _poly({4: 1, 8: 2}),
        _poly({8: 1, 12: 1}),
        _poly({12: 1}),
    ]
    assert S.Minv.rows[0] == first
    last = S.Minv.rows[3]
    assert last[:3] == [[], [], []]
    assert last[3][:2] == [1, 4] and last[3][13] == 4 and last[3][16] == 1 and len(last[3]) == 17
    # the two fully displayed entries of the second row
    assert S.Minv[1, 2] == _poly({0: 3, 1: 4, 5: 1, 8: 1})
    assert S.Minv[1, 3] == _poly({0: 1, 4: 4, 5: 3, 9: 2, 12: 2})


def test_frobenius_first_column(f5):
    S = build_section_matrices(f5, random.Random(0))
    col = [S.M[i, 0] for i in range(4)]
    assert col[0] == _poly({0: 1, 4: 2, 5: 4, 6: 3, 7: 2, 8: 2, 12: 2, 13: 4, 14: 3, 15: 1, 16: 2})
    assert col[1] == _poly({1: 1, 2: 2, 3: 3, 5: 4, 6: 4, 7: 3, 8: 3, 9: 3, 10: 1, 11: 4, 13: 1, 15: 2, 16: 1})
    assert col[2] == _poly({0: 1, 1: 2, 2: 3, 5: 3, 6: 2, 7: 2, 8: 1, 9: 1, 10: 3, 11: 1, 12: 3, 14: 3, 15: 4, 16: 3})
    assert col[3] == []


def test_inverse_degree_bound_is_tight(f5):
    S = build_section_matrices(f5, random.Random(0))
    assert S.Minv.max_degree() == 16 == f5.h * (f5.p - 1)
    assert (S.M @ S.Minv).is_identity()


def test_block_triangular(f5):
    S = build_section_matrices(f5, random.Random(0))
    d = f5.d
    for j in range(d - 1):
        assert S.M[d - 1, j] == [] and S.Minv[d - 1, j] == []


def test_minv_applied_to_y(f5):
    """``Minv (4 t^4, 2, 3, 0)^T`` computed as exact polynomial products."""
    S = build_section_matrices(f5, random.Random(0))
    F = f5.field
    v = [[0, 0, 0, 0, 4], [2], [3], []]
    from nthcoeff.poly_algebra import padd, pmul

    got = []
    for i in range(4):
        acc = []
        for k in range(4):
            acc = padd(F, acc, pmul(F, S.Minv[i, k], v[k]))
        got.append(trim(F, acc))
    assert got[0] == _poly({4: 1, 8: 4, 12: 2, 16: 4, 17: 4, 20: 4})
    assert got[1] == _poly({1: 1, 4: 3, 5: 2, 8: 1, 9: 3, 10: 4, 12: 3, 13: 3, 16: 4})
    assert got[2] == _poly({0: 1, 2: 2, 3: 3, 4: 4, 5: 1, 6: 1, 7: 4, 8: 4, 9: 3, 10: 2, 13: 2, 16: 4})
    assert got[3] == []


def test_matrix_step_matches_bivariate_section(f5):
    S = build_section_matrices(f5, random.Random(0))
    F = f5.field
    rng = random.Random(3)
    for _ in range(40):
        x = StableElem(_random_box(F, f5, rng), f5)
        r = rng.randrange(5)
        want = stable_section(x, r).coords()
        got = matrix_section_step(F, S.A, x.coords(), r)
        assert [trim(F, w) for w in want] == got


def test_matrices_on_random_instances():
    rng = random.Random(4)
    for p, s in [(2, 1), (3, 2), (7, 1), (13, 1), (5, 2)]:
        F = field(p, s, rng)
        inst = random_instance(F, rng.choice([2, 3]), rng.choice([1, 2, 3]), rng)
        S = build_section_matrices(inst, rng)
        assert (S.M @ S.Minv).is_identity()
        assert S.Minv.max_degree() <= inst.h * (p - 1)
        for _ in range(10):
            x = StableElem(_random_box(F, inst, rng), inst)
            r = rng.randrange(p)
            assert [trim(F, w) for w in stable_section(x, r).coords()] == matrix_section_step(F, S.A, x.coords(), r)


# -- degree bounds ----------------------------------------------------------


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32), p=st.sampled_from([2, 3, 5, 7, 13]), s=st.sampled_from([1, 2]),
       d=st.integers(2, 4), h=st.integers(1, 3))
def test_degree_box_is_stable(seed, p, s, d, h):
    rng = random.Random(seed)
    F = field(p, s, rng)
    inst = random_instance(F, d, h, rng)
    for _ in range(5):
        r = rng.randrange(p)
        Q = stable_section(StableElem(_random_box(F, inst, rng), inst), r).P
        assert bi_deg_t(Q) < h and bi_deg_y(Q) < d
        Q2 = stable_section(StableElem(_random_box(F, inst, rng, deg_y=d - 1), inst), r).P
        assert bi_deg_y(Q2) <= d - 2


# -- residue probes ---------------------------------------------------------


def _residue_instance(seed):
    rng = random.Random(seed)
    p = rng.choice([2, 3, 5, 7])
    F = field(p, rng.choice([1, 2]), rng)
    return F, random_instance(F, rng.choice([2, 3]), rng.choice([1, 2, 3]), rng), rng


@pytest.mark.parametrize("seed", range(8))
def test_residue_identity(seed):
    F, inst, rng = _residue_instance(seed)
    P = [[F.random(rng) for _ in range(4)] for _ in range(inst.d + 1)]
    res = residue(laurent_quotient(P, inst, 30, 2))
    assert res.coeffs == TruncSeries(F, expand_stable(inst, P, 30).coeffs, 30).coeffs


@pytest.mark.parametrize("seed", range(8))
def test_section_commutes_with_residue(seed):
    """``Lambda_r(res(G / E^p)) == res(Lambda_{r,p-1}(G) / E)`` at t-precision 30."""
    F, inst, rng = _residue_instance(seed)
    p = F.p
    G = [[F.random(rng) for _ in range(2 * p)] for _ in range(2 * p)]
    r = rng.randrange(p)
    tp = 30 * p + p
    num = taylor_at_f(G, inst, tp, p + 1)
    e_inv = taylor_at_f(inst.E, inst, tp, p + 2).inverse()
    power = e_inv
    for _ in range(p - 1):
        power = power * e_inv
    lhs = local_section(residue(num * power), r).truncate(30)
    Q = bivariate_section(F, G, r, p - 1)
    rhs = residue(laurent_quotient(Q, inst, 30, 2))
    assert trim(F, lhs.coeffs) == trim(F, rhs.coeffs)


def test_evaluate_at_origin(f5):
    assert evaluate_at_origin(f5, represent_y(f5).P) == 0
    x = StableElem([[3]], f5)
    # 3 / E_y(0, f_0) with E_y(0, 0) = 1
    assert evaluate_at_origin(f5, x.P) == 3


def test_engines_against_oracle_small():
    rng = random.Random(5)
    for _ in range(12):
        p = rng.choice([2, 3, 5, 7])
        F = field(p, rng.choice([1, 2]), rng)
        inst = random_instance(F, rng.choice([2, 3]), rng.choice([1, 2]), rng)
        f = hensel_lift(inst, 300)
        for N in rng.sample(range(300), 10):
            assert nth_coeff_bivariate(inst, N) == f[N]
            assert nth_coeff_bivariate(inst, N, skip_roots=True) == f[N]
            assert nth_coeff_matrix(inst, N, rng=rng) == f[N]
            assert nth_coeff_matrix(inst, N, skip_roots=True) == f[N]


def test_product_with_e_power_roundtrip(f5):
    # a section of P * E^p is P' * E, with P' the section of P
    F = f5.field
    rng = random.Random(6)
    P = _random_box(F, f5, rng)
    Ep = f5.E
    for _ in range(4):
        Ep = bi_mul(F, Ep, f5.E)
    for r in range(5):
        lhs = bivariate_section(F, bi_mul(F, P, Ep), r, 4)
        rhs = bi_mul(F, bivariate_section(F, P, r, 4), f5.E)
        assert lhs == rhs


@pytest.mark.parametrize("text", [
    # L = 1 + t^3 and R(0) = 0: both elements of F_2 are roots of L R
    "p 2\nE 4 4\n0 1 0 1\n0 0 0 0\n1 0 1 0\n1 0 0 1\nrho 0\ninit 1\n",
    # here every monic quadratic over F_2 shares a factor with L R
    "p 2\nE 5 2\n0 1\n1 1\n1 0\n1 0\n1 1\nrho 0\ninit 0\n",
])
def test_modulus_when_every_point_is_bad(text):
    inst = parse_instance_text(text)
    F = inst.field
    S = build_section_matrices(inst, random.Random(0))
    assert len(pgcd(F, S.B, pmul(F, inst.L, inst.resultant))) == 1
    f = hensel_lift(inst, 3000)
    for N in (0, 5, 777, 2999):
        assert nth_coeff_matrix(inst, N) == f[N]
