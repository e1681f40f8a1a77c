"""Section operators on the stable space P/E_y and the two digit-by-digit drivers.

An element of the stable space is stored as a bivariate ``P`` with
``deg_t P <= h`` and ``deg_y P < d``; it stands for ``P(t, f) / E_y(t, f)``.
The t-degree box is closed because ``y`` itself needs ``t^h``; sections
with a nonzero digit land in ``deg_t < h``.
"""
from __future__ import annotations

import logging
import random
from dataclasses import dataclass
from math import comb

from .errors import DigitOutOfRange, InternalInvariantError, NoGoodModulus, NotInvertibleModB, ZeroDivisor
from .poly_algebra import (
    PolyMatrix,
    bi_deg_t,
    bi_deg_y,
    bi_deriv_y,
    bi_mul,
    bi_trim,
    bipoly_pow_pm1,
    padd,
    pgcd,
    pinvmod,
    pmul,
    pmul_trunc,
    polymatrix_inverse_mod,
    prem,
    psub,
    pscale,
    trim,
)
from .series_lift import AlgebraicInstance, TruncSeries, eval_bipoly_series, hensel_lift, series_div, series_inverse

log = logging.getLogger(__name__)

RETRY_BUDGET = 5


def base_p_digits(N: int, p: int) -> list[int]:
    """Little-endian digits of ``N`` (empty for 0)."""
    out = []
    while N:
        N, r = divmod(N, p)
        out.append(r)
    return out


# ---------------------------------------------------------------------------
# bivariate sections


def bivariate_section(F, P, r: int, s: int, root: bool = True):
    """``sum root(c_{p i + r, p j + s}) t^i y^j`` for ``P = sum c_{ij} t^i y^j``."""
    p = F.p
    if not (0 <= r < p and 0 <= s < p):
        raise DigitOutOfRange(f"digits ({r}, {s}) not in [0, {p})")
    out = []
    for row in P[s::p]:
        vals = row[r::p]
        out.append([F.pth_root(c) for c in vals] if root else list(vals))
    return bi_trim(F, out)


def _frob_bipoly(F, P, k: int):
    if k % F.s == 0:
        return P
    return [[F.frob_pow(c, k) for c in row] for row in P]


@dataclass
class StableElem:
    P: list
    inst: AlgebraicInstance

    def __post_init__(self):
        F = self.inst.field
        self.P = bi_trim(F, self.P)
        if bi_deg_t(self.P) > self.inst.h or bi_deg_y(self.P) >= self.inst.d:
            raise InternalInvariantError(
                f"stable element out of bounds: deg_t={bi_deg_t(self.P)}, deg_y={bi_deg_y(self.P)}"
            )

    def coords(self):
        """Coefficient vector in the basis ``y^j / E_y`` (length d, polynomials in t)."""
        d = self.inst.d
        return [list(self.P[j]) if j < len(self.P) else [] for j in range(d)]

    def expand(self, prec: int) -> TruncSeries:
        """Power-series expansion of ``P(t, f)/E_y(t, f)`` to precision ``prec``."""
        return expand_stable(self.inst, self.P, prec)


def expand_stable(inst: AlgebraicInstance, P, prec: int, E=None, f=None) -> TruncSeries:
    F = inst.field
    v = inst.ey_valuation()
    n = prec + v
    if f is None:
        f = hensel_lift(inst, n).poly()
    Ey = inst.Ey if E is None else _ey(F, E)
    num = TruncSeries(F, eval_bipoly_series(F, P, f, n), n)
    den = TruncSeries(F, eval_bipoly_series(F, Ey, f, n), n)
    return series_div(num, den).truncate(prec)


def _ey(F, E):

    return bi_deriv_y(F, E)


def evaluate_at_origin(inst: AlgebraicInstance, P, twist: int = 0):
    """Constant term of ``P(t, f)/E_y(t, f)`` using only ``f mod t^(rho+1)``.

    With ``twist = k`` the instance data (``E`` and ``f``) are replaced by
    their images under ``Frob^k``.
    """
    F = inst.field
    n = inst.rho + 1
    fbar = inst.fbar(n)
    E = inst.E
    if twist % F.s:
        fbar = [F.frob_pow(c, twist) for c in fbar]
        E = _frob_bipoly(F, E, twist)
    Ey = _ey(F, E)
    num = TruncSeries(F, eval_bipoly_series(F, P, fbar, n), n)
    den = TruncSeries(F, eval_bipoly_series(F, Ey, fbar, n), n)
    q = series_div(num, den)
    if q.prec < 1:
        raise InternalInvariantError("evaluation lost all precision")
    return q[0]


def represent_y(inst: AlgebraicInstance) -> StableElem:
    """``y = P / E_y mod E`` with ``P = -sum_{i<d} (d - i) e_i(t) y^i``."""
    F = inst.field
    d = inst.d
    P = [pscale(F, F.neg(F.from_int(d - i)), inst.E[i]) for i in range(d)]
    return StableElem(P, inst)


def _e_pm1(inst: AlgebraicInstance, twist: int = 0):
    F = inst.field
    key = ("Epm1", twist % F.s)
    if key not in inst._cache:
        base = inst._cache.get(("Epm1", 0))
        if base is None:
            base = bipoly_pow_pm1(F, inst.E)
            inst._cache[("Epm1", 0)] = base
        inst._cache[key] = _frob_bipoly(F, base, twist)
    return inst._cache[key]


def _section_of_product(F, P, G, r: int, s: int, h: int, d: int, root: bool = True):
    """``Lambda_{r,s}(P * G)`` restricted to ``t^{<=h} y^{<d}``, one coefficient at a time."""
    p = F.p
    terms = [(b, a, c) for b, row in enumerate(P) for a, c in enumerate(row) if c]
    out = []
    for j in range(d):
        row = []
        for i in range(h + 1):
            ti, yj = p * i + r, p * j + s
            acc = F.zero
            for b, a, c in terms:
                yb, ta = yj - b, ti - a
                if 0 <= yb < len(G) and 0 <= ta < len(G[yb]):
                    g = G[yb][ta]
                    if g:
                        acc = F.add(acc, F.mul(c, g))
            row.append(F.pth_root(acc) if root else acc)
        out.append(row)
    return bi_trim(F, out)


def stable_section(x: StableElem, r: int, *, root: bool = True, twist: int = 0) -> StableElem:
    """``Lambda_r(P/E_y) = Q/E_y`` with ``Q = Lambda_{r,p-1}(P E^(p-1))``.

    ``root=False`` skips the p-th root on coefficients; the caller then
    tracks the Frobenius twist of ``E`` (``twist``).
    """
    inst = x.inst
    F = inst.field
    if not 0 <= r < F.p:
        raise DigitOutOfRange(f"digit {r} not in [0, {F.p})")
    G = _e_pm1(inst, twist)
    Q = _section_of_product(F, x.P, G, r, F.p - 1, inst.h, inst.d, root)
    if bi_deg_y(x.P) <= inst.d - 2 and bi_deg_y(Q) > inst.d - 2:
        raise InternalInvariantError("section left the subspace deg_y <= d-2")
    if r > 0 and bi_deg_t(Q) >= inst.h:
        raise InternalInvariantError("nonzero digit produced t-degree h")
    return StableElem(Q, inst)


def stable_section_full(x: StableElem, r: int) -> StableElem:
    """Same as ``stable_section`` but through the full product ``P E^(p-1)``.

    Raises if the section has terms outside the expected degree box.
    """

    inst = x.inst
    F = inst.field
    Q = bivariate_section(F, bi_mul(F, x.P, _e_pm1(inst)), r, F.p - 1)
    return StableElem(Q, inst)


def nth_coeff_bivariate(inst: AlgebraicInstance, N: int, skip_roots: bool = False):
    """``f_N`` by applying the bivariate section once per base-p digit of ``N``."""
    if N <= 2 * inst.rho:
        return inst.init[N]
    F = inst.field
    x = represent_y(inst)
    digits = base_p_digits(N, F.p)
    for i, r in enumerate(digits):
        x = stable_section(x, r, root=not skip_roots, twist=i if skip_roots else 0)
    ell = len(digits)
    if skip_roots:
        return evaluate_at_origin(inst, x.P, twist=ell)
    return F.frob_pow(evaluate_at_origin(inst, x.P), ell)


# ---------------------------------------------------------------------------
# Frobenius matrix algorithm


class _ModB:
    """Arithmetic in ``k[t]/B`` with a shortcut when ``B`` is a power of ``t``."""

    def __init__(self, F, B):
        self.F = F
        self.B = trim(F, B)
        self.K = len(self.B) - 1
        self.monomial = all(F.is_zero(c) for c in self.B[:-1])

    def red(self, a):
        a = trim(self.F, a)
        if self.monomial:
            return trim(self.F, a[: self.K])
        return prem(self.F, a, self.B)

    def mul(self, a, b):
        if self.monomial:
            return pmul_trunc(self.F, a, b, self.K)
        return prem(self.F, pmul(self.F, a, b), self.B)

    def inv(self, a):
        try:
            return pinvmod(self.F, self.red(a), self.B)
        except Exception as exc:
            raise NotInvertibleModB("element not invertible modulo B") from exc


def _ypoly_mulmod(R: _ModB, a, b, Emonic):
    """Product in ``(k[t]/B)[y]/(Emonic)``; ``a``, ``b`` have length ``d``."""
    F = R.F
    d = len(Emonic) - 1
    prod = [[] for _ in range(2 * d - 1)]
    for i, x in enumerate(a):
        if not x:
            continue
        for j, y in enumerate(b):
            if y:
                prod[i + j] = padd(F, prod[i + j], pmul(F, x, y))
    prod = [R.red(c) for c in prod]
    for k in range(2 * d - 2, d - 1, -1):
        c = prod[k]
        if c:
            for i in range(d):
                prod[k - d + i] = R.red(psub(F, prod[k - d + i], R.mul(c, Emonic[i])))
    return prod[:d]


def _ypoly_powmod(R: _ModB, a, e: int, Emonic):
    d = len(Emonic) - 1
    result = [[R.F.one]] + [[] for _ in range(d - 1)]
    base = list(a)
    while e:
        if e & 1:
            result = _ypoly_mulmod(R, result, base, Emonic)
        e >>= 1
        if e:
            base = _ypoly_mulmod(R, base, base, Emonic)
    return result


@dataclass
class SectionMatrixSet:
    B: list
    M: PolyMatrix
    Minv: PolyMatrix
    A: list  # A[a] is a d x d list of polynomials: entrywise Lambda_a of Minv
    p: int

    def twisted(self, F, k: int):
        """Matrices with every coefficient hit by ``Frob^k`` (used when roots are skipped)."""
        if k % F.s == 0:
            return self.A
        return [[[[F.frob_pow(c, k) for c in e] for e in row] for row in Aa] for Aa in self.A]


def _candidate_moduli(inst: AlgebraicInstance, rng: random.Random):
    F = inst.field
    K = inst.h * (F.p - 1) + 1
    LR = pmul(F, inst.L, inst.resultant)
    if LR and not F.is_zero(LR[0]):
        yield [F.zero] * K + [F.one]
    bad = {b for b in F.elements() if F.is_zero(_peval(F, LR, b))} if F.q <= 1 << 16 else None
    for _ in range(RETRY_BUDGET):
        if bad is not None and F.q - len(bad) >= K:
            pool = [b for b in F.elements() if b not in bad]
            betas = rng.sample(pool, K)
            B = [F.one]
            for b in betas:
                B = pmul(F, B, [F.neg(b), F.one])
            yield B
        elif bad is None or len(bad) < F.q:
            # too few points in k for distinct roots: a power of one good linear factor
            while True:
                beta = F.random(rng)
                if not F.is_zero(_peval(F, LR, beta)):
                    break
            yield _binomial_power(F, beta, K)
        else:
            # L R vanishes on all of k: any monic modulus of degree >= K coprime to it
            # will do; small degrees may all share a factor with L R, so grow slowly
            tries = 0
            while True:
                B = [F.random(rng) for _ in range(K + tries // 8)] + [F.one]
                if len(pgcd(F, B, LR)) == 1:
                    break
                tries += 1
            yield B


def _peval(F, a, x):
    acc = F.zero
    for c in reversed(a):
        acc = F.add(F.mul(acc, x), c)
    return acc


def _binomial_power(F, beta, K):
    """``(t - beta)^K``."""
    nb = F.neg(beta)
    out = []
    for i in range(K + 1):
        c = F.from_int(comb(K, i) % F.p)
        out.append(F.mul(c, F.pow(nb, K - i)))
    return trim(F, out)


def _build_with_modulus(inst: AlgebraicInstance, B) -> SectionMatrixSet:
    F = inst.field
    p, d, h = F.p, inst.d, inst.h
    R = _ModB(F, B)
    Linv = R.inv(inst.L)
    Emonic = [R.mul(Linv, e) for e in inst.E]
    Ey = [R.red(c) for c in inst.Ey] + [[] for _ in range(d - len(inst.Ey))]
    Ey = Ey[:d]
    # multiplication-by-E_y matrix on the basis 1, y, ..., y^(d-1); its inverse gives 1/E_y
    cols = []
    vec = [[F.one]] + [[] for _ in range(d - 1)]
    for j in range(d):
        cols.append(_ypoly_mulmod(R, Ey, vec, Emonic))
        vec = _ypoly_mulmod(R, vec, [[], [F.one]] + [[] for _ in range(d - 2)], Emonic) if d > 1 else vec
    mult = PolyMatrix(F, [[cols[j][i] for j in range(d)] for i in range(d)], R.B)
    mult_inv = polymatrix_inverse_mod(mult, R.B)
    ey_inv = [mult_inv[i, 0] for i in range(d)]
    w = _ypoly_powmod(R, ey_inv, p - 1, Emonic)
    ypow = [[] for _ in range(d)]
    if d > 1:
        ypow[1] = [F.one]
        yp = _ypoly_powmod(R, ypow, p, Emonic)
    else:
        yp = [R.red([F.neg(c) for c in Emonic[0]])]
        yp = _ypoly_powmod(R, yp, p, Emonic)
    Mcols = []
    cur = [[F.one]] + [[] for _ in range(d - 1)]
    for j in range(d):
        Mcols.append(_ypoly_mulmod(R, cur, w, Emonic))
        cur = _ypoly_mulmod(R, cur, yp, Emonic)
    M = PolyMatrix(F, [[Mcols[j][i] for j in range(d)] for i in range(d)], R.B)
    Minv = polymatrix_inverse_mod(M, R.B)
    if not (M @ Minv).is_identity():
        raise InternalInvariantError("M * Minv is not the identity modulo B")
    if Minv.max_degree() > h * (p - 1):
        raise NotInvertibleModB("inverse exceeds the degree bound; modulus unsuitable")
    A = []
    for a in range(p):
        A.append([[trim(F, [F.pth_root(c) for c in Minv[i, k][a::p]]) for k in range(d)] for i in range(d)])
    return SectionMatrixSet(trim(F, B), M, Minv, A, p)


def build_section_matrices(inst: AlgebraicInstance, rng: random.Random | None = None) -> SectionMatrixSet:
    if "matrices" in inst._cache:
        return inst._cache["matrices"]
    rng = rng or random.Random(0)
    last = None
    for attempt, B in enumerate(_candidate_moduli(inst, rng)):
        try:
            S = _build_with_modulus(inst, B)
        except NotInvertibleModB as exc:
            log.info("modulus attempt %d rejected: %s", attempt, exc)
            last = exc
            continue
        inst._cache["matrices"] = S
        return S
    raise NoGoodModulus(f"no usable modulus after {RETRY_BUDGET} random draws") from last


def matrix_section_step(F, A, c, r: int, root: bool = True):
    """New coordinates ``Lambda_r(Minv c)`` via ``A_a = Lambda_a(Minv)`` and semilinearity."""
    p = F.p
    d = len(c)
    out = [[] for _ in range(d)]
    for k, ck in enumerate(c):
        for m, cm in enumerate(ck):
            if F.is_zero(cm):
                continue
            q, b = divmod(m, p)
            a = (r - b) % p
            shift = q + (1 if b > r else 0)
            val = F.pth_root(cm) if root else cm
            Aa = A[a]
            for i in range(d):
                e = Aa[i][k]
                if e:
                    out[i] = padd(F, out[i], [F.zero] * shift + [F.mul(val, x) for x in e])
    return [trim(F, o) for o in out]


def nth_coeff_matrix(inst: AlgebraicInstance, N: int, skip_roots: bool = False, rng: random.Random | None = None):
    if N <= 2 * inst.rho:
        return inst.init[N]
    F = inst.field
    S = build_section_matrices(inst, rng)
    c = represent_y(inst).coords()
    digits = base_p_digits(N, F.p)
    for i, r in enumerate(digits):
        A = S.twisted(F, i + 1) if skip_roots else S.A
        c = matrix_section_step(F, A, c, r, root=not skip_roots)
    ell = len(digits)
    if any(len(e) > inst.h + 1 for e in c):
        raise InternalInvariantError("coordinates exceed the t-degree bound")
    if skip_roots:
        return evaluate_at_origin(inst, c, twist=ell)
    return F.frob_pow(evaluate_at_origin(inst, c), ell)


# ---------------------------------------------------------------------------
# Laurent series in T over k[[t]] (the probe for the residue identities)


class LaurentT:
    """``sum_{k = low}^{low + len - 1} coeffs[k - low](t) T^k + O(T^(low+len))``.

    Every T-coefficient is a polynomial known modulo ``t^tprec``.
    """

    def __init__(self, F, low: int, coeffs, tprec: int):
        self.F = F
        self.low = low
        self.tprec = tprec
        self.coeffs = [trim(F, list(c)[:tprec]) for c in coeffs]

    @property
    def high(self) -> int:
        return self.low + len(self.coeffs)

    def coeff(self, k: int):
        if k < self.low:
            return []
        if k >= self.high:
            raise ValueError(f"T^{k} coefficient is beyond the known precision")
        return self.coeffs[k - self.low]

    def __mul__(self, other: "LaurentT") -> "LaurentT":
        F = self.F
        n = min(len(self.coeffs), len(other.coeffs))
        tp = min(self.tprec, other.tprec)
        out = [[] for _ in range(n)]
        for i in range(n):
            a = self.coeffs[i]
            if not a:
                continue
            for j in range(n - i):
                b = other.coeffs[j]
                if b:
                    out[i + j] = padd(F, out[i + j], pmul_trunc(F, a, b, tp))
        return LaurentT(F, self.low + other.low, out, tp)

    def inverse(self) -> "LaurentT":
        """Inverse when the leading T-coefficient is a unit of ``k[[t]]``."""
        F = self.F
        lead_idx = next((i for i, c in enumerate(self.coeffs) if c), None)
        if lead_idx is None:
            raise ZeroDivisor("Laurent series is zero at its precision")
        u = self.coeffs[lead_idx:]
        if F.is_zero(u[0][0]) if u[0] else True:
            raise ZeroDivisor("leading T-coefficient is not a unit in k[[t]]")

        tp = self.tprec
        n = len(u)
        u0inv = series_inverse(F, u[0], tp)
        inv = [u0inv]
        for k in range(1, n):
            acc = []
            for j in range(1, k + 1):
                acc = padd(F, acc, pmul_trunc(F, u[j], inv[k - j], tp))
            inv.append(trim(F, [F.neg(c) for c in pmul_trunc(F, acc, u0inv, tp)]))
        return LaurentT(F, -(self.low + lead_idx), inv, tp)

    def section(self, r: int, s: int) -> "LaurentT":
        """``Lambda_{r,s}``: keeps T-exponents ``p n + s`` and applies ``Lambda_r`` to coefficients."""
        F = self.F
        p = F.p
        first = -(-(self.low - s) // p)
        last = (self.high - 1 - s) // p
        out = []
        for n in range(first, last + 1):
            c = self.coeff(p * n + s)
            out.append([F.pth_root(x) for x in c[r::p]])
        tp = -(-(self.tprec - r) // p)
        return LaurentT(F, first, out, tp)


def residue(x: LaurentT) -> TruncSeries:
    return TruncSeries(x.F, x.coeff(-1), x.tprec)


def taylor_at_f(P, inst: AlgebraicInstance, t_prec: int, T_prec: int) -> LaurentT:
    """``P(t, f + T)`` truncated at ``t^t_prec`` and ``T^T_prec``."""
    F = inst.field
    f = hensel_lift(inst, t_prec).poly()
    P = bi_trim(F, P)
    fpow = [[F.one]]
    for _ in range(len(P)):
        fpow.append(pmul_trunc(F, fpow[-1], f, t_prec))
    out = []
    for k in range(T_prec):
        acc = []
        for j in range(k, len(P)):
            if P[j]:
                c = F.from_int(comb(j, k) % F.p)
                if not F.is_zero(c):
                    term = pmul_trunc(F, P[j], fpow[j - k], t_prec)
                    acc = padd(F, acc, [F.mul(c, x) for x in term])
        out.append(acc)
    return LaurentT(F, 0, out, t_prec)


def laurent_quotient(P, inst: AlgebraicInstance, t_prec: int, T_prec: int) -> LaurentT:
    """``P(t, f+T) / E(t, f+T)`` with T-precision ``T_prec`` (starting at ``T^-1``)."""
    num = taylor_at_f(P, inst, t_prec, T_prec)
    den = taylor_at_f(inst.E, inst, t_prec, T_prec + 2)
    if den.coeffs[0]:
        raise InternalInvariantError("E(t, f) is not zero at this precision")
    return num * den.inverse()
