"""Acceptance criteria, one test per criterion.

Each test records a PASS/FAIL line that the terminal summary prints (see
``conftest.py``); run ``pytest tests/test_acceptance.py -v`` or execute this
file directly.
"""
import random
import time

import pytest

from instances import field, random_instance
from nthcoeff.christol_engine import (
    StableElem,
    base_p_digits,
    bivariate_section,
    build_section_matrices,
    expand_stable,
    laurent_quotient,
    matrix_section_step,
    nth_coeff_bivariate,
    nth_coeff_matrix,
    represent_y,
    residue,
    stable_section,
    taylor_at_f,
)
from nthcoeff import christol_engine
from nthcoeff.cli import bundled_instance
from nthcoeff.hermite_pade import build_hp_system, nth_coeff_hp
from nthcoeff.poly_algebra import bi_deg_t, bi_deg_y, bi_trim, peval, trim
from nthcoeff.recurrence import (
    FactorialCounter,
    LiftedField,
    RecurrenceStats,
    Unroller,
    _expand_branch,
    _recover,
    _tilde,
    change_origin,
    derive_ode,
    is_good,
    is_ordinary,
    legendre,
    lift_instance,
    matrix_factorial,
    nth_coeff_recurrence,
    ode_to_recurrence,
    reconstruct_section,
    section_coeffs,
)
from nthcoeff.series_lift import TruncSeries, hensel_lift, local_section, oracle_nth_coeff

RESULTS: dict[int, tuple[bool, str]] = {}


class Criterion:
    """Context manager recording the outcome of one criterion."""

    def __init__(self, number: int, title: str):
        self.number, self.title = number, title
        self.detail = ""

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        ok = exc_type is None
        note = self.detail if ok else f"{exc_type.__name__}: {exc}"[:300]
        RESULTS[self.number] = (ok, f"{self.title}; {note}" if note else self.title)
        print(f"{'PASS' if ok else 'FAIL'} criterion {self.number}: {RESULTS[self.number][1]}")
        return False


def _lift(lifted, P):
    return [[lifted.A.lift(c) for c in row] for row in P]


def _box(F, inst, rng, deg_y=None):
    deg_y = inst.d if deg_y is None else deg_y
    return bi_trim(F, [[F.random(rng) for _ in range(inst.h)] for _ in range(deg_y)])


def _ordinary_instance(p, d, h, rng):
    F = field(p)
    for _ in range(100):
        inst = random_instance(F, d, h, rng)
        lifted = lift_instance(inst, require_h1=False)
        if not lifted.h1_at(0):
            continue
        ode = derive_ode(lifted, _lift(lifted, represent_y(inst).P))
        if is_ordinary(ode):
            return inst, lifted, ode
    raise RuntimeError("no ordinary instance found")


# ---------------------------------------------------------------------------


ENGINES = {
    "bivariate": lambda inst, N: nth_coeff_bivariate(inst, N),
    "matrix": lambda inst, N: nth_coeff_matrix(inst, N, rng=random.Random(0)),
    "hermite-pade": lambda inst, N: nth_coeff_hp(inst, N),
    "recurrence": lambda inst, N: nth_coeff_recurrence(inst, N),
}


def test_criterion_1_worked_example_all_engines():
    with Criterion(1, "f_70 = 2 on the F_5 example, every engine under 1 s") as c:
        times = {}
        for name, run in ENGINES.items():
            inst = bundled_instance()  # fresh caches, so set-up cost is included
            t0 = time.perf_counter()
            value = run(inst, 70)
            times[name] = time.perf_counter() - t0
            assert value == 2, f"{name} gave {value}"
        slow = {k: v for k, v in times.items() if v >= 1.0}
        assert not slow, f"too slow: {slow}"
        c.detail = ", ".join(f"{k} {v:.3f}s" for k, v in times.items())


SECTIONS_OF_Y = {
    0: [[0, 0, 0, 0, 4], [0, 2, 4], [1, 1, 2]],
    1: [[0, 0, 0, 4], [1, 0, 0, 4], [0, 1, 0, 4]],
    2: [[0, 0, 2, 4], [0, 0, 3], [2, 4]],
    3: [[0, 4], [0, 1, 3], [3, 4, 2]],
    4: [[1], [3, 3], [4, 3]],
}


def test_criterion_2_section_images():
    with Criterion(2, "five sections of y and the composed section, coefficient-exact") as c:
        inst = bundled_instance()
        y = represent_y(inst)
        for r, want in SECTIONS_OF_Y.items():
            assert stable_section(y, r).P == want, f"section {r}"
        comp = stable_section(stable_section(stable_section(y, 0), 4), 2).P
        # the y^0 and y^1 rows are (2 + t^2) and (4 + 3t + 3t^3); the y^2 row is also asserted
        assert comp[:2] == [[2, 0, 1], [4, 3, 0, 3]]
        assert comp == [[2, 0, 1], [4, 3, 0, 3], [2, 0, 4, 2]]
        c.detail = f"composition {comp}"


def _dense(terms):
    out = [0] * (max(terms) + 1)
    for e, v in terms.items():
        out[e] = v
    return out


def test_criterion_3_frobenius_matrix():
    with Criterion(3, "B = t^17, Minv first/last rows, degree 16, block-triangular") as c:
        inst = bundled_instance()
        S = build_section_matrices(inst, random.Random(0))
        assert S.B == [0] * 17 + [1]
        assert S.Minv.rows[0] == [
            _dense({0: 1, 4: 3, 8: 1, 12: 1, 13: 1, 16: 1}),
            _dense({4: 1, 8: 2}),
            _dense({8: 1, 12: 1}),
            _dense({12: 1}),
        ]
        last = S.Minv.rows[3]
        assert last[:3] == [[], [], []]
        assert len(last[3]) == 17 and last[3][:2] == [1, 4] and last[3][13] == 4 and last[3][16] == 1
        assert S.Minv.max_degree() == 16 == inst.h * (inst.field.p - 1)
        d = inst.d
        for j in range(d - 1):
            assert S.M[d - 1, j] == [] and S.Minv[d - 1, j] == []
        assert (S.M @ S.Minv).is_identity()
        c.detail = f"deg Minv = {S.Minv.max_degree()}"


def _criterion_4_instances(count, rng):
    out = []
    while len(out) < count:
        p = rng.choice([2, 3, 5, 7, 13])
        F = field(p, rng.choice([1, 2]), rng)
        d = rng.choice([1, 2, 3, 4])
        h = rng.choice([1, 2, 3])
        # a pole of 1/E_y at the origin needs h >= d + 1 here (smaller heights give reducible E)
        rho = 1 if d == 2 and h == 3 and rng.random() < 0.5 else 0
        out.append(random_instance(F, d, h, rng, rho=rho))
    return out


def test_criterion_4_oracle_equivalence():
    with Criterion(4, "all engines equal the Newton oracle on >= 200 seeded instances, N <= 10^4, < 5 min") as c:
        t0 = time.perf_counter()
        rng = random.Random(20260401)
        instances = _criterion_4_instances(210, rng)
        checks = downgraded = 0
        for inst in instances:
            Ns = [rng.randrange(10**4 + 1), rng.randrange(2000)]
            f = hensel_lift(inst, max(Ns) + 1)
            assert oracle_nth_coeff(inst, Ns[1]) == f[Ns[1]]
            for N in Ns:
                for name, run in ENGINES.items():
                    if name == "recurrence":
                        stats = []
                        value = nth_coeff_recurrence(inst, N, stats_out=stats)
                        downgraded += stats[0].downgraded
                    else:
                        value = run(inst, N)
                    assert value == f[N], (name, inst.field, inst.E, N)
                    checks += 1
        elapsed = time.perf_counter() - t0
        assert elapsed < 300, f"took {elapsed:.0f}s"
        c.detail = (f"{len(instances)} instances, {checks} engine checks, "
                    f"{downgraded} recurrence runs fell back to Hermite-Pade, {elapsed:.0f}s")


FAMILIES = [(5, 1, 4, 4), (2, 1, 3, 2), (3, 2, 2, 3), (7, 1, 4, 2), (13, 1, 2, 3), (5, 2, 3, 1)]


def test_criterion_5_degree_box_fuzz():
    with Criterion(5, "1000 random (P, r) per family stay in the degree box") as c:
        rng = random.Random(55)
        for p, s, d, h in FAMILIES:
            F = field(p, s, rng)
            insts = [bundled_instance()] if (p, s, d, h) == (5, 1, 4, 4) else []
            insts += [random_instance(F, d, h, rng) for _ in range(4)]
            for k in range(1000):
                inst = insts[k % len(insts)]
                r = rng.randrange(p)
                Q = stable_section(StableElem(_box(inst.field, inst, rng), inst), r).P
                assert bi_deg_t(Q) < inst.h and bi_deg_y(Q) < inst.d, (p, s, d, h)
                Q2 = stable_section(StableElem(_box(inst.field, inst, rng, deg_y=inst.d - 1), inst), r).P
                assert bi_deg_y(Q2) <= inst.d - 2, (p, s, d, h)
        c.detail = f"{len(FAMILIES)} families x 1000 pairs x 2 subspaces"


def test_criterion_6_residue_probes():
    with Criterion(6, "residue identity and section-residue commutation on 100 probes at t-precision 30") as c:
        rng = random.Random(66)
        for _ in range(100):
            p = rng.choice([2, 3, 5, 7])
            F = field(p, rng.choice([1, 2]), rng)
            inst = random_instance(F, rng.choice([2, 3]), rng.choice([1, 2, 3]), rng)
            P = [[F.random(rng) for _ in range(4)] for _ in range(inst.d + 1)]
            res = residue(laurent_quotient(P, inst, 30, 2))
            assert res.coeffs == TruncSeries(F, expand_stable(inst, P, 30).coeffs, 30).coeffs
            G = [[F.random(rng) for _ in range(2 * p)] for _ in range(2 * p)]
            r = rng.randrange(p)
            tp = 31 * p
            num = taylor_at_f(G, inst, tp, p + 1)
            e_inv = taylor_at_f(inst.E, inst, tp, p + 2).inverse()
            power = e_inv
            for _ in range(p - 1):
                power = power * e_inv
            lhs = local_section(residue(num * power), r).truncate(30)
            rhs = residue(laurent_quotient(bivariate_section(F, G, r, p - 1), inst, 30, 2))
            assert trim(F, lhs.coeffs) == trim(F, rhs.coeffs)
        c.detail = "100 probes, both identities"


def test_criterion_7_recurrence_engine():
    with Criterion(7, "p in {101, 211}: bsgs = naive, unrolling to 2*10^4 matches expansion, 50 shifted sections") as c:
        rng = random.Random(77)
        factorials = unrolled = 0
        for p in (101, 211):
            inst, lifted, ode = _ordinary_instance(p, 2, 1, rng)
            n_max = 2 * 10**4
            m = legendre(n_max, p) + 1
            origin = change_origin(lifted, 0)
            LF = LiftedField(lifted.A, origin.l, origin.emb, m)
            P = represent_y(inst).P
            # p-adic expansion for the low indices, expansion over k for all of them
            n_padic = 1500
            g = _expand_branch(LF, lifted.E, _lift(lifted, P), 0, inst.init[0], n_padic + 1)
            gt = _tilde(LF.W, g)
            direct = expand_stable(inst, P, n_max + 1)
            rec = ode_to_recurrence(ode.coeffs, LF.W)
            # bsgs and naive matrix factorials on the recurrence matrix itself
            for _ in range(5):
                a = rng.randrange(rec.order, 3 * p)
                b = a + rng.randrange(p, 4 * p)
                assert (matrix_factorial(LF.W, rec.companion(), a, b, "naive")
                        == matrix_factorial(LF.W, rec.companion(), a, b, "bsgs", FactorialCounter()))
                factorials += 1
            for mode in ("naive", "bsgs"):
                un = Unroller(rec, gt[: rec.order], mode)
                for n in sorted(rng.sample(range(rec.order, n_padic + 1), 20)):
                    assert un.advance_to(n) == gt[n], (p, mode, n)
                for n in sorted(rng.sample(range(n_padic + 1, n_max + 1), 40)) + [n_max]:
                    assert _recover(LF.W, un.advance_to(n), n) == direct[n], (p, mode, n)
                unrolled += 61
        shifted = with_recurrence = 0
        while shifted < 50:
            p = rng.choice([101, 211])
            F = field(p)
            inst = random_instance(F, 2, rng.choice([1, 2]), rng)
            lifted = lift_instance(inst, require_h1=False)
            x = StableElem(_box(F, inst, rng), inst)
            if not x.P:
                continue
            ode = None
            if with_recurrence < 5:
                ode = derive_ode(lifted, _lift(lifted, x.P))
                if not is_good(ode):
                    ode = None
            lead = ode.leading_mod_p() if ode is not None else None
            cands = [a for a in range(1, 40) if lifted.h1_at(a)
                     and (lead is None or not F.is_zero(peval(F, lead, a)))]
            if not cands:
                continue
            origin = change_origin(lifted, rng.choice(cands), random.Random(shifted))
            r = rng.randrange(p)
            coeffs = section_coeffs(lifted, x.P, r, origin, ode, "bsgs")
            assert reconstruct_section(lifted, coeffs, origin, None) == stable_section(x, r).P
            shifted += 1
            with_recurrence += ode is not None
        c.detail = (f"{factorials} factorial pairs, {unrolled} unrolled indices up to 2*10^4, "
                    f"{shifted} shifted sections ({with_recurrence} through the recurrence)")


def test_criterion_8_scaling():
    with Criterion(8, "HP solves = digit count, sqrt(p) block products, matrix cost independent of N") as c:
        # Hermite-Pade: one reconstruction per digit
        inst = bundled_instance()
        sys_hp = build_hp_system(inst)
        for N in (1, 70, 5**20 + 3, 12345678901234567890):
            before = sys_hp.solves
            nth_coeff_hp(inst, N)
            assert sys_hp.solves - before == len(base_p_digits(N, 5)), N
        # recurrence: block products for one digit at p = 401 vs p = 101
        rng = random.Random(88)
        ratios = []
        for d, h in [(2, 1), (2, 2), (3, 1)]:
            counts = {}
            for p in (101, 401):
                inst_p, lifted, ode = _ordinary_instance(p, d, h, random.Random(3))
                stats = RecurrenceStats()
                section_coeffs(lifted, represent_y(inst_p).P, p - 1, change_origin(lifted, 0), ode, "bsgs", stats)
                counts[p] = stats.block_mults
            ratio = counts[401] / counts[101]
            ratios.append(round(ratio, 2))
            assert 1.5 <= ratio <= 2.5, (d, h, counts)
        # matrix engine: one set-up, then a bounded number of operations per digit
        per_digit = {}
        bound = None
        for N in (10**3, 10**60, 10**200):
            inst = bundled_instance()
            F = inst.field
            calls = {"build": 0, "steps": 0, "muls": []}
            real_build = christol_engine._build_with_modulus
            real_step = christol_engine.matrix_section_step

            def build(*a, **k):
                calls["build"] += 1
                return real_build(*a, **k)

            def step(F_, A, cvec, r, root=True):
                calls["steps"] += 1
                n = sum(len(e) for e in cvec)
                calls["muls"].append(n)
                return real_step(F_, A, cvec, r, root)

            christol_engine._build_with_modulus = build
            christol_engine.matrix_section_step = step
            try:
                assert nth_coeff_matrix(inst, N, rng=random.Random(0)) == nth_coeff_hp(bundled_instance(), N)
            finally:
                christol_engine._build_with_modulus = real_build
                christol_engine.matrix_section_step = real_step
            assert calls["build"] == 1 and calls["steps"] == len(base_p_digits(N, 5))
            # every step works on a coordinate vector of at most d entries of t-degree <= h
            bound = inst.d * (inst.h + 1)
            assert max(calls["muls"]) <= bound
            per_digit[N] = max(calls["muls"])
        c.detail = f"block-product ratios {ratios}; matrix step input sizes {sorted(set(per_digit.values()))} <= {bound}"


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v", "-s"]))
