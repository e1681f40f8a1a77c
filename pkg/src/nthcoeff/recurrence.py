"""Sections through a p-adic linear recurrence.

For each digit the current element ``g = P/E_y`` is lifted over the
unramified ring, a linear differential equation for the lift is derived
exactly, turned into a recurrence on ``g~_n = n! g_n``, and unrolled modulo
``p^m``.  The needed coefficients ``g_{r + p j}`` then feed the same
Hermite-Pade reconstruction as the plain engine.  When the expansion point
``t = 0`` is unsuitable the computation moves to ``t = alpha``, possibly
over an extension of ``k``.
"""
from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb, factorial, gcd

from .christol_engine import StableElem, base_p_digits, evaluate_at_origin, represent_y
from .errors import (
    H1Violated,
    InstanceNotIrreducible,
    InternalInvariantError,
    NoAdmissibleAlpha,
    SingularDerivation,
    SplitFailed,
)
from .ff_core import FieldCtx, FieldEmbedding, extension_with_root, irreducible_factors
from .hermite_pade import build_hp_system, hp_reconstruct, nth_coeff_hp
from .padic_ring import ExactCtx, PadicCtx, padic_ctx_new
from .poly_algebra import (
    PolyRing,
    bi_deriv_t,
    bi_deriv_y,
    bi_map,
    bi_add,
    bi_mul,
    bi_pseudo_rem,
    bi_trim,
    det_bareiss,
    det_division_free,
    padd,
    pderiv,
    peval,
    pmul,
    pmul_trunc,
    pscale,
    psub,
    ptaylor_shift,
    sylvester,
    trim,
)
from .series_lift import AlgebraicInstance, eval_bipoly_series, newton_lift, series_inverse

log = logging.getLogger(__name__)

RETRY_BUDGET = 5


@dataclass
class RecurrenceStats:
    block_mults: int = 0
    digits: int = 0
    reconstructions: int = 0
    shifted_digits: int = 0
    splits: int = 0
    direct_digits: int = 0
    downgraded: bool = False
    per_digit_block_mults: list = field(default_factory=list)


# ---------------------------------------------------------------------------
# precision


def legendre(n: int, p: int) -> int:
    """``v_p(n!)``."""
    v = 0
    while n:
        n //= p
        v += n
    return v


def num_section_coeffs(inst: AlgebraicInstance) -> int:
    return 2 * inst.d * inst.h if inst.h > 0 else inst.d


def derive_precision(inst: AlgebraicInstance, r_digit: int) -> int:
    """``v_p((r + 2 d h p)!) + 1``."""
    return legendre(r_digit + num_section_coeffs(inst) * inst.p, inst.p) + 1


# ---------------------------------------------------------------------------
# exact lift


def _det(R, M):
    PR = PolyRing(R)
    if getattr(R, "is_field", False) or (R.s == 1 and hasattr(R, "divexact")):
        return det_bareiss(PR, M)
    return det_division_free(PR, M)


@dataclass
class LiftedInstance:
    inst: AlgebraicInstance
    A: ExactCtx
    E: list  # E_hat over A
    Ey: list
    Et: list
    L: list
    R: list  # det of the Sylvester matrix of (E_hat, E_hat_y)
    V: list  # U E_hat + V E_hat_y = R, V of y-degree < d
    Y: list  # L^d R * (y') reduced mod E_hat
    H: list  # common denominator L^(d + e2) R
    Hd: list  # derivative of H
    e2: int
    Lpow: list = field(default_factory=list, repr=False)

    @property
    def d(self) -> int:
        return len(self.E) - 1

    def lpow(self, k: int):
        while len(self.Lpow) <= k:
            self.Lpow.append(pmul(self.A, self.Lpow[-1], self.L) if self.Lpow else [self.A.one])
        return self.Lpow[k]

    def reduce_fixed(self, P, e_target: int):
        """``L^e_target * P mod E_hat`` as a length-d vector (pseudo-remainder rescaled)."""
        A = self.A
        rem, e = bi_pseudo_rem(A, P, self.E)
        if e > e_target:
            raise InternalInvariantError("pseudo-remainder exponent above its fixed bound")
        scale = self.lpow(e_target - e)
        out = [pmul(A, scale, row) for row in rem]
        return out + [[] for _ in range(self.d - len(out))]

    def h1_at(self, alpha: int, F: FieldCtx | None = None) -> bool:
        """``L(alpha) R(alpha) != 0`` in ``k``."""
        F = F or self.inst.field
        return not F.is_zero(_eval_mod_p(self.A, self.L, alpha)) and not F.is_zero(_eval_mod_p(self.A, self.R, alpha))


def _reduce_poly(A: ExactCtx, a):
    F = A.field
    return trim(F, [A.to_field(c) for c in a])


def _eval_mod_p(A: ExactCtx, a, alpha: int):
    F = A.field
    return peval(F, _reduce_poly(A, a), alpha)


def _lift_bipoly(A: ExactCtx, P):
    return bi_map(A, P, A.lift)


def lift_instance(inst: AlgebraicInstance, require_h1: bool = True) -> LiftedInstance:
    if "lifted" in inst._cache:
        lifted = inst._cache["lifted"]
    else:
        A = ExactCtx(inst.field)
        E = _lift_bipoly(A, inst.E)
        d = len(E) - 1
        Ey = bi_deriv_y(A, E)
        Et = bi_deriv_t(A, E)
        PR = PolyRing(A)
        S = sylvester(PR, E, Ey)
        n = len(S)
        R = _det(A, S)
        # first row of adj(S): cofactors along column 0
        cof = []
        for i in range(n):
            minor = [row[1:] for k, row in enumerate(S) if k != i]
            m = _det(A, minor)
            cof.append(m if i % 2 == 0 else PR.neg(m))
        U, V = cof[: d - 1], cof[d - 1:]
        check = bi_add(A, _ymul_sum(A, U, E), _ymul_sum(A, V, Ey))
        if bi_trim(A, check) != bi_trim(A, [R]):
            raise InternalInvariantError("Bezout identity from Sylvester cofactors failed")
        lifted = LiftedInstance(inst, A, E, Ey, Et, E[-1], R, V, [], [], [], 0)
        e2 = max(0, d - 2)
        lifted.e2 = e2
        negEt = [[A.neg(c) for c in row] for row in Et]
        lifted.Y = lifted.reduce_fixed(bi_mul(A, negEt, [list(v) for v in V]), d)
        lifted.H = pmul(A, lifted.lpow(d + e2), R)
        lifted.Hd = pderiv(A, lifted.H)
        inst._cache["lifted"] = lifted
    if require_h1 and not lifted.h1_at(inst.field.zero):
        raise H1Violated("L(0) R(0) = 0 in k")
    return lifted


def _ymul_sum(A, coeffs, B):
    """``sum_i coeffs[i] y^i * B`` flattened to a bivariate list."""
    out = []
    for i, c in enumerate(coeffs):
        if not c:
            continue
        for j, row in enumerate(B):
            while len(out) <= i + j:
                out.append([])
            out[i + j] = padd(A, out[i + j], pmul(A, c, row))
    return out


# ---------------------------------------------------------------------------
# differential equation


@dataclass
class OdeSystem:
    """``sum_j a_j(t) g^(j) = 0`` for ``g = P_hat / E_hat_y``.

    ``w[j]`` is the numerator vector of ``g^(j) = w[j] / H^(j+1)`` in the
    basis ``1, y, ..., y^(d-1)``; the coefficients ``a_j`` come from Cramer's
    rule and are computed on demand.
    """

    lifted: LiftedInstance
    w: list
    _coeffs: list | None = None
    removed: list = field(default_factory=lambda: [1])

    @property
    def order(self) -> int:
        return self.lifted.d

    def matrix(self, replace: int | None = None):
        d = self.order
        cols = [self.w[d] if j == replace else self.w[j] for j in range(d)]
        return [[cols[j][i] for j in range(d)] for i in range(d)]

    @property
    def coeffs(self):
        """Exact ``a_0 .. a_d`` over ``Z[X]/(pi_hat)``."""
        if self._coeffs is None:
            A, d, H = self.lifted.A, self.order, self.lifted.H
            detN = _det(A, self.matrix())
            if not detN:
                raise SingularDerivation("derivatives of g are linearly dependent over the base")
            hp = [[A.one]]
            for _ in range(d):
                hp.append(pmul(A, hp[-1], H))
            a = []
            for j in range(d):
                dj = _det(A, self.matrix(replace=j))
                a.append([A.neg(c) for c in pmul(A, dj, hp[j])])
            a.append(pmul(A, detN, hp[d]))
            a = [trim(A, c) for c in a]
            if A.s == 1:
                base = _primitive(pmul(A, self.lifted.L, self.lifted.R))
                a, self.removed = _strip_common_factor(a, base)
            self._coeffs = a
        return self._coeffs

    def leading_mod_p(self):
        """``a_d mod p`` as a polynomial over ``k``, without the exact determinant."""
        A = self.lifted.A
        F = A.field
        Nk = [[_reduce_poly(A, e) for e in row] for row in self.matrix()]
        detk = _det(F, Nk)
        Hk = _reduce_poly(A, self.lifted.H)
        out = detk
        for _ in range(self.order):
            out = pmul(F, out, Hk)
        return out

    def degree_bound(self) -> int:
        """A priori bound on ``max_j deg a_j`` from column degree sums."""
        d = self.order
        degH = len(self.lifted.H) - 1
        coldeg = [max((len(e) - 1 for e in self.w[j]), default=-1) for j in range(d + 1)]
        best = 0
        for j in range(d + 1):
            cols = [coldeg[k] for k in range(d) if k != j] + ([coldeg[d]] if j < d else [])
            if j == d:
                cols = coldeg[:d]
            best = max(best, sum(max(c, 0) for c in cols) + j * degH)
        return best


def _primitive(a):
    """Integer polynomial divided by its content, with positive leading coefficient."""
    a = trim_int(a)
    if not a:
        return a
    c = 0
    for x in a:
        c = gcd(c, x)
    if a[-1] < 0:
        c = -c
    return [x // c for x in a]


def trim_int(a):
    a = list(a)
    while a and not a[-1]:
        a.pop()
    return a


def _qrem(a, b):
    """Remainder of ``a`` modulo ``b`` over Q, returned primitive over Z."""
    r = [Fraction(x) for x in a]
    lb = b[-1]
    db = len(b) - 1
    while len(r) - 1 >= db and r:
        q = r[-1] / lb
        off = len(r) - 1 - db
        for i, c in enumerate(b):
            r[off + i] -= q * c
        r = trim_int(r)
    if not r:
        return []
    den = 1
    for x in r:
        den = den * x.denominator // gcd(den, x.denominator)
    return _primitive([int(x * den) for x in r])


def _int_poly_gcd(base, polys):
    """Primitive gcd over Q of ``base`` and every polynomial in ``polys``."""
    g = base
    for a in polys:
        if len(g) <= 1:
            break
        r = _qrem(a, g)
        while r:
            g, r = r, _qrem(g, r)
        g = _primitive(g)
    return g


def _divide_int(a, b):
    """Exact quotient ``a / b`` over Z, or None."""
    a = list(a)
    db = len(b) - 1
    q = [0] * (len(a) - db)
    for k in range(len(q) - 1, -1, -1):
        c, rem = divmod(a[k + db], b[-1])
        if rem:
            return None
        q[k] = c
        if c:
            for i, x in enumerate(b):
                a[k + i] -= c * x
    return q if not any(a[:db]) else None


def _mul_int(a, b):
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] += x * y
    return out


def _strip_common_factor(a, base):
    """Divide every ``a_j`` by the largest common factor built from divisors of ``base``.

    The factor is primitive, so the quotients stay integral (Gauss) and its
    reduction mod ``p`` is nonzero. Returns the quotients and the factor.
    """
    removed = [1]
    nonzero = [c for c in a if c]
    while len(base) > 1:
        g = _int_poly_gcd(base, nonzero)
        if len(g) <= 1:
            break
        while True:
            q = [_divide_int(c, g) for c in nonzero]
            if any(x is None for x in q):
                break
            nonzero = q
            removed = _mul_int(removed, g)
        base = g
    it = iter(nonzero)
    return [next(it) if c else c for c in a], removed


def derive_ode(lifted: LiftedInstance, P_hat) -> OdeSystem:
    """Numerator vectors ``w_0 .. w_d`` of the derivatives of ``P_hat / E_hat_y``."""
    A = lifted.A
    d = lifted.d
    E_tot = d + lifted.e2
    V = [list(v) for v in lifted.V]
    prod = bi_mul(A, bi_trim(A, P_hat), V)
    if not prod:
        raise SingularDerivation("g is zero")
    rem, e0 = bi_pseudo_rem(A, prod, lifted.E)
    scale = lifted.lpow(E_tot - e0)
    w = [[pmul(A, scale, row) for row in rem] + [[] for _ in range(d - len(rem))]]
    H, Hd = lifted.H, lifted.Hd
    for j in range(d):
        cur = w[-1]
        dy = [pscale(A, A.from_int(i + 1), cur[i + 1]) for i in range(d - 1)]
        gamma = lifted.reduce_fixed(bi_mul(A, bi_trim(A, dy), lifted.Y), lifted.e2) if any(dy) else [[] for _ in range(d)]
        nxt = []
        for i in range(d):
            term = pmul(A, H, pderiv(A, cur[i]))
            term = psub(A, term, pscale(A, A.from_int(j + 1), pmul(A, Hd, cur[i])))
            term = padd(A, term, gamma[i])
            nxt.append(trim(A, term))
        w.append(nxt)
    return OdeSystem(lifted, w)


def is_ordinary(ode: OdeSystem, alpha: int = 0) -> bool:
    """``a_d(alpha) != 0 mod p``."""
    F = ode.lifted.A.field
    return not F.is_zero(peval(F, ode.leading_mod_p(), alpha))


def is_good(ode: OdeSystem) -> bool:
    return bool(trim(ode.lifted.A.field, ode.leading_mod_p()))


def transform_for_section(coeffs, A, r_shift: int):
    """ODE for ``G = t^r_shift g`` (multiplied by ``t^(r_shift + d)``), by Leibniz."""
    d = len(coeffs) - 1
    out = []
    for k in range(d + 1):
        acc = []
        for i in range(d - k + 1):
            rising = 1
            for u in range(i):
                rising *= r_shift + u
            c = (-1) ** i * comb(k + i, i) * rising
            if c == 0 or not coeffs[k + i]:
                continue
            term = [A.zero] * (d - i) + [A.mul(A.from_int(c), x) for x in coeffs[k + i]]
            acc = padd(A, acc, term)
        out.append(trim(A, acc))
    return out


# ---------------------------------------------------------------------------
# recurrences


def _falling_shifted(d: int, k: int):
    """Coefficients in ``n`` of ``(n-d)(n-d-1)...(n-d-k+1)`` over Z."""
    poly = [1]
    for u in range(k):
        root = d + u
        new = [0] * (len(poly) + 1)
        for i, c in enumerate(poly):
            new[i + 1] += c
            new[i] -= root * c
        poly = new
    return poly


@dataclass
class RecurrenceSystem:
    """``sum_{i=0}^{r} b_i(n) g~_{n-i} = 0`` for ``n >= start``; ``b_0`` is a constant."""

    ctx: PadicCtx
    b: list  # b[i] is a polynomial in n over ctx
    order: int
    start: int

    @property
    def lead(self):
        return self.b[0][0] if self.b[0] else self.ctx.zero

    def companion_row(self):
        """Polynomials ``m_j(n) = -b_{r-j}(n) / b_0`` for ``j < r``."""
        C = self.ctx
        inv = C.inv(self.lead)
        ninv = C.neg(inv)
        return [trim(C, [C.mul(ninv, c) for c in self.b[self.order - j]]) for j in range(self.order)]

    def companion(self):
        """Companion polynomial matrix ``M(n)`` (rows of polynomials in ``n``)."""
        C = self.ctx
        r = self.order
        rows = []
        for i in range(r - 1):
            rows.append([[C.one] if j == i + 1 else [] for j in range(r)])
        rows.append(self.companion_row())
        return rows


def ode_to_recurrence(coeffs, ctx: PadicCtx, convert=None) -> RecurrenceSystem:
    """Recurrence for ``g~_n = n! g_n`` from ``sum_j a_j g^(j) = 0`` (``a_j`` exact).

    ``convert`` maps exact coefficients into ``ctx`` (default ``ctx.from_exact``).
    """
    convert = convert or ctx.from_exact
    d = len(coeffs) - 1
    terms = {}
    for j, a in enumerate(coeffs):
        for k, c in enumerate(a):
            cc = convert(c)
            if ctx.is_zero(cc):
                continue
            i = d - j + k
            terms.setdefault(i, []).append((k, cc))
    r = max([d] + list(terms))
    b = []
    for i in range(r + 1):
        acc = []
        for k, c in terms.get(i, []):
            ff = [ctx.from_int(x) for x in _falling_shifted(d, k)]
            acc = padd(ctx, acc, pscale(ctx, c, ff))
        b.append(trim(ctx, acc))
    return RecurrenceSystem(ctx, b, r, d)


# ---------------------------------------------------------------------------
# matrix factorials


def _mat_mul(C, X, Y):
    n, k, m = len(X), len(Y), len(Y[0])
    out = [[C.zero] * m for _ in range(n)]
    for i in range(n):
        Xi = X[i]
        for l in range(k):
            a = Xi[l]
            if C.is_zero(a):
                continue
            Yl = Y[l]
            row = out[i]
            for j in range(m):
                if not C.is_zero(Yl[j]):
                    row[j] = C.add(row[j], C.mul(a, Yl[j]))
    return out


def _identity(C, r):
    return [[C.one if i == j else C.zero for j in range(r)] for i in range(r)]


def _eval_matrix(C, Mn, x):
    xv = C.from_int(x)
    return [[peval(C, e, xv) for e in row] for row in Mn]


def _polymat_mul(C, X, Y):
    n, k, m = len(X), len(Y), len(Y[0])
    out = []
    for i in range(n):
        row = []
        for j in range(m):
            acc = []
            for l in range(k):
                if X[i][l] and Y[l][j]:
                    acc = padd(C, acc, pmul(C, X[i][l], Y[l][j]))
            row.append(acc)
        out.append(row)
    return out


def _shift_matrix(C, Mn, c):
    cv = C.from_int(c)
    return [[ptaylor_shift(C, e, cv) if e else [] for e in row] for row in Mn]


@dataclass
class FactorialCounter:
    block_mults: int = 0


def matrix_factorial(C, Mn, a: int, b: int, mode: str = "naive", counter: FactorialCounter | None = None):
    """``M(b) M(b-1) ... M(a)`` for a polynomial matrix ``M(n)`` over ``C``."""
    counter = counter or FactorialCounter()
    r = len(Mn)
    acc = _identity(C, r)
    if a > b:
        return acc
    if mode == "naive":
        for i in range(a, b + 1):
            acc = _mat_mul(C, _eval_matrix(C, Mn, i), acc)
            counter.block_mults += 1
        return acc
    if mode != "bsgs":
        raise ValueError(f"unknown mode {mode!r}")
    length = b - a + 1
    beta = max(1, _isqrt_ceil(length))
    # block(x) = M(x + beta) ... M(x + 1)
    block = _shift_matrix(C, Mn, 1)
    for k in range(2, beta + 1):
        block = _polymat_mul(C, _shift_matrix(C, Mn, k), block)
        counter.block_mults += 1
    pos = a
    while pos + beta - 1 <= b:
        acc = _mat_mul(C, _eval_matrix(C, block, pos - 1), acc)
        counter.block_mults += 1
        pos += beta
    for i in range(pos, b + 1):
        acc = _mat_mul(C, _eval_matrix(C, Mn, i), acc)
        counter.block_mults += 1
    return acc


def _isqrt_ceil(n: int) -> int:
    from math import isqrt

    s = isqrt(n)
    return s if s * s == n else s + 1


class Unroller:
    """Walks the companion recurrence forward on a state vector."""

    def __init__(self, rec: RecurrenceSystem, initial, mode: str = "naive", block: int | None = None):
        self.rec = rec
        self.C = rec.ctx
        self.mode = mode
        self.row = rec.companion_row()
        r = rec.order
        if len(initial) < r:
            raise InternalInvariantError("not enough initial values for the recurrence")
        self.state = list(initial[len(initial) - r:]) if r else []
        self.n = len(initial)  # index of the next value to produce
        self.block_mults = 0
        self.beta = block
        self._block = None

    def _step(self):
        C = self.C
        n = self.n
        nv = C.from_int(n)
        acc = C.zero
        for mj, v in zip(self.row, self.state):
            if mj and not C.is_zero(v):
                acc = C.add(acc, C.mul(peval(C, mj, nv), v))
        self.state = self.state[1:] + [acc]
        self.n += 1
        self.block_mults += 1

    def _build_block(self):
        """``Pi(x) = M(x + beta) ... M(x + 1)`` built with companion-row updates."""
        C = self.C
        r = self.rec.order
        beta = self.beta
        Pi = [[[C.one] if i == j else [] for j in range(r)] for i in range(r)]
        for k in range(1, beta + 1):
            shifted = [ptaylor_shift(C, m, C.from_int(k)) if m else [] for m in self.row]
            last = []
            for j in range(r):
                acc = []
                for l in range(r):
                    if shifted[l] and Pi[l][j]:
                        acc = padd(C, acc, pmul(C, shifted[l], Pi[l][j]))
                last.append(acc)
            Pi = Pi[1:] + [last]
            self.block_mults += 1
        self._block = Pi

    def _giant(self):
        C = self.C
        xv = C.from_int(self.n - 1)
        vals = [[peval(C, e, xv) if e else C.zero for e in row] for row in self._block]
        self.state = [
            _dot(C, vals[i], self.state) for i in range(self.rec.order)
        ]
        self.n += self.beta
        self.block_mults += 1

    def advance_to(self, n_last: int):
        """Step until the state ends with ``g~_{n_last}``."""
        target = n_last + 1
        if self.mode == "bsgs" and self.rec.order:
            if self.beta is None:
                self.beta = max(1, _isqrt_ceil(self.rec.ctx.p))
            if self._block is None:
                self._build_block()
            while self.n + self.beta <= target:
                self._giant()
        while self.n < target:
            self._step()
        return self.state[-1]


def _dot(C, a, b):
    acc = C.zero
    for x, y in zip(a, b):
        if not C.is_zero(x) and not C.is_zero(y):
            acc = C.add(acc, C.mul(x, y))
    return acc


# ---------------------------------------------------------------------------
# expansions over W'


class LiftedField:
    """``W'`` for a field ``l`` containing ``k``, with the embedding of ``Z[X]/(pi_hat)``."""

    def __init__(self, A: ExactCtx, l: FieldCtx, emb: FieldEmbedding, m: int):
        self.A = A
        self.l = l
        self.emb = emb
        self.W = padic_ctx_new(l, m)
        k = A.field
        if k.s == 1:
            self.theta = None
        else:
            self.theta = _lift_root(self.W, [self.W.from_int(c) for c in k.pi], self.W.lift(emb.theta))
            self.theta_pows = [self.W.one]
            for _ in range(k.s - 1):
                self.theta_pows.append(self.W.mul(self.theta_pows[-1], self.theta))

    def convert(self, a):
        W = self.W
        if self.theta is None:
            return W.from_int(a)
        acc = W.zero
        for c, tp in zip(a, self.theta_pows):
            if c:
                acc = W.add(acc, W.mul(W.from_int(c), tp))
        return acc


def _lift_root(W: PadicCtx, f, z):
    """Newton lift of a simple root ``z`` (mod p) of ``f`` to full precision in ``W``."""
    df = pderiv(W, f)
    prec = 1
    while True:
        fz = peval(W, f, z)
        if W.is_zero(fz) and prec >= W.m:
            return z
        z = W.sub(z, W.mul(fz, W.inv(peval(W, df, z))))
        prec *= 2
        if prec >= 2 * W.m:
            if not W.is_zero(peval(W, f, z)):
                raise InternalInvariantError("p-adic root lifting did not converge")
            return z


def _expand_branch(LF: LiftedField, E_hat, P_hat, alpha_hat, root0: int, n: int, twist_power: int = 0):
    """Coefficients ``0..n-1`` of ``(u+alpha)^twist * P_hat/E_hat_y`` at the branch through ``root0``.

    All bivariate data are exact; ``u = t - alpha`` is the local parameter.
    """
    W, A = LF.W, LF.A
    Es = [trim(W, [LF.convert(c) for c in ptaylor_shift(A, row, alpha_hat)]) if row else [] for row in E_hat]
    Ps = [trim(W, [LF.convert(c) for c in ptaylor_shift(A, row, alpha_hat)]) if row else [] for row in P_hat]
    E0 = [row[0] if row else W.zero for row in Es]
    z = _lift_root(W, E0, W.lift(root0))
    f = newton_lift(W, Es, [z], 1, 0, n)
    Ey = bi_deriv_y(W, Es)
    num = eval_bipoly_series(W, Ps, f, n)
    den = eval_bipoly_series(W, Ey, f, n)
    g = pmul_trunc(W, num, series_inverse(W, den, n), n)
    if twist_power:
        a = LF.convert(alpha_hat)
        lin = [a, W.one]
        fac = [W.one]
        for _ in range(twist_power):
            fac = pmul(W, fac, lin)
        g = pmul_trunc(W, g, fac, n)
    return g + [W.zero] * (n - len(g))


def _tilde(W: PadicCtx, g):
    """``g~_n = n! g_n`` modulo ``p^m``."""
    out = []
    fact = 1
    M = W.modulus
    for n, c in enumerate(g):
        if n:
            fact = fact * n % M
        out.append(W.mul(W.from_int(fact), c))
    return out


def _recover(W: PadicCtx, gt, n: int) -> int:
    """``(g~_n / n!) mod p`` as a packed element of the residue field."""
    p = W.p
    v = legendre(n, p)
    ctx, val = W.divide_exact_p_power(gt, v)
    unit = factorial(n) // p ** v
    l = W.field
    return l.div(ctx.reduce(val), l.from_int(unit % p))


# ---------------------------------------------------------------------------
# one digit


@dataclass
class ShiftContext:
    """Expansion point ``alpha``, residue field ``l`` of the branch, and ``f_alpha(0)`` in ``l``."""

    alpha: int
    l: FieldCtx
    emb: FieldEmbedding
    root0: int


def _choose_origin(lifted: LiftedInstance, ode: OdeSystem | None, need_ordinary: bool) -> int:
    """First ``alpha`` in ``k`` (packed order) usable as expansion point."""
    F = lifted.inst.field
    lead = ode.leading_mod_p() if (need_ordinary and ode is not None) else None
    for alpha in F.elements():
        if not lifted.h1_at(alpha):
            continue
        if lead is not None and F.is_zero(peval(F, lead, alpha)):
            continue
        if alpha == 0 and lifted.inst.ey_valuation() != 0:
            continue
        return alpha
    raise NoAdmissibleAlpha(f"no admissible expansion point in a field of size {F.q}")


def change_origin(lifted: LiftedInstance, alpha: int, rng: random.Random | None = None) -> ShiftContext:
    """Residue field ``l`` and branch ``f_alpha(0)`` for the expansion at ``t = alpha``."""
    inst = lifted.inst
    F = inst.field
    if alpha == 0:
        return ShiftContext(0, F, FieldEmbedding(F, F, F.elem([0, 1]) if F.s > 1 else F.one), inst.init[0])
    rng = rng or random.Random(alpha)
    Ealpha = [peval(F, row, alpha) for row in inst.E]
    mu = irreducible_factors(F, trim(F, Ealpha), rng)[0]
    l, emb, root = extension_with_root(F, mu, rng)
    return ShiftContext(alpha, l, emb, root)


def shifted_instance(inst: AlgebraicInstance, origin: ShiftContext) -> AlgebraicInstance:
    """``E(u + alpha, y)`` over ``l`` with the branch through ``origin.root0``."""
    F = inst.field
    E = [[origin.emb(c) for c in ptaylor_shift(F, row, origin.alpha)] if row else [] for row in inst.E]
    return AlgebraicInstance(origin.l, E, 0, [origin.root0])


def section_coeffs(lifted: LiftedInstance, P, r: int, origin: ShiftContext, ode: OdeSystem | None,
                   mode: str = "naive", stats: RecurrenceStats | None = None):
    """The ``nrows`` coefficients of the section, as elements of ``origin.l``.

    At ``alpha = 0`` these are ``root(g_{r + p j})``; otherwise
    ``root(G_{p - 1 + p j})`` for ``G = t^(p-1-r) g`` expanded in ``u = t - alpha``.
    """
    inst = lifted.inst
    A = lifted.A
    p = inst.p
    nrows = num_section_coeffs(inst)
    shifted = origin.alpha != 0
    digit = p - 1 if shifted else r
    m = derive_precision(inst, digit)
    LF = LiftedField(A, origin.l, origin.emb, m)
    W = LF.W
    indices = [digit + p * j for j in range(nrows)]
    alpha_hat = A.lift(origin.alpha)
    P_hat = _lift_bipoly(A, P)
    twist = p - 1 - r if shifted else 0

    if ode is None:
        n_init = indices[-1] + 1
        rec = None
    else:
        coeffs = ode.coeffs
        if shifted:
            coeffs = transform_for_section(coeffs, A, twist)
            coeffs = [ptaylor_shift(A, c, alpha_hat) if c else [] for c in coeffs]
        rec = ode_to_recurrence(coeffs, W, convert=LF.convert)
        if W.field.is_zero(W.reduce(rec.lead)):
            raise InternalInvariantError("leading recurrence coefficient is not a unit")
        n_init = min(rec.order, indices[-1] + 1)

    g = _expand_branch(LF, lifted.E, P_hat, alpha_hat, origin.root0, max(n_init, 1), twist)
    gt = _tilde(W, g)
    values = {}
    unroller = None
    if rec is not None and indices[-1] >= len(gt):
        unroller = Unroller(rec, gt[: rec.order] if rec.order else [], mode)
        if rec.order == 0:
            raise InternalInvariantError("zero-order recurrence")
    for n in indices:
        values[n] = gt[n] if n < len(gt) else unroller.advance_to(n)
    if stats is not None and unroller is not None:
        stats.block_mults += unroller.block_mults
        stats.per_digit_block_mults.append(unroller.block_mults)
    l = origin.l
    return [l.pth_root(_recover(W, values[n], n)) for n in indices]


def section_coeffs_ordinary(lifted: LiftedInstance, ode: OdeSystem, P, r: int, mode: str = "naive"):
    """Section coefficients at ``t = 0`` through the recurrence; needs (H1) and (H2) there."""
    if not lifted.h1_at(0) or lifted.inst.ey_valuation() != 0:
        raise H1Violated("t = 0 is not a regular point of the branch")
    if not is_ordinary(ode):
        raise InternalInvariantError("leading coefficient of the equation vanishes at 0 mod p")
    return section_coeffs(lifted, P, r, change_origin(lifted, 0), ode, mode)


def reconstruct_section(lifted: LiftedInstance, coeffs, origin: ShiftContext, stats: RecurrenceStats | None):
    inst = lifted.inst
    F = inst.field
    if origin.alpha == 0:
        sys = build_hp_system(inst, for_sections=False)
        x = hp_reconstruct(sys, coeffs)
        if stats is not None:
            stats.reconstructions += 1
        return x.P
    key = ("shifted", origin.alpha)
    if key not in inst._cache:
        inst._cache[key] = shifted_instance(inst, origin)
    sinst = inst._cache[key]
    sys = build_hp_system(sinst, for_sections=False)
    xa = hp_reconstruct(sys, coeffs)
    if stats is not None:
        stats.reconstructions += 1
    try:
        Qa = [[origin.emb.back(c) for c in row] for row in xa.P]
    except ValueError as exc:
        raise InternalInvariantError("shifted reconstruction has coefficients outside k") from exc
    minus = F.neg(origin.alpha)
    return bi_trim(F, [ptaylor_shift(F, row, minus) if row else [] for row in Qa])


class RecurrenceEngine:
    """Digit loop of the recurrence method with splitting and change of origin."""

    def __init__(self, inst: AlgebraicInstance, mode: str = "naive", seed: int = 0, use_direct: bool = True):
        self.inst = inst
        self.mode = mode
        self.rng = random.Random(seed)
        self.stats = RecurrenceStats()
        self.use_direct = use_direct
        self.lifted = lift_instance(inst, require_h1=False)
        self._origins = {}

    def _origin(self, alpha):
        if alpha not in self._origins:
            self._origins[alpha] = change_origin(self.lifted, alpha, random.Random(alpha))
        return self._origins[alpha]

    def _needs_recurrence(self, ode: OdeSystem) -> bool:
        inst = self.inst
        n_max = inst.p - 1 + inst.p * (num_section_coeffs(inst) - 1)
        return not self.use_direct or n_max >= inst.d + ode.degree_bound()

    def section_good(self, P, r: int, ode: OdeSystem):
        use_rec = self._needs_recurrence(ode)
        alpha = _choose_origin(self.lifted, ode, need_ordinary=use_rec)
        origin = self._origin(alpha)
        if alpha != 0:
            self.stats.shifted_digits += 1
        if not use_rec:
            self.stats.direct_digits += 1
        coeffs = section_coeffs(self.lifted, P, r, origin, ode if use_rec else None, self.mode, self.stats)
        return reconstruct_section(self.lifted, coeffs, origin, self.stats)

    def _ode(self, P, require_good: bool = True):
        try:
            ode = derive_ode(self.lifted, _lift_bipoly(self.lifted.A, P))
        except SingularDerivation:
            return None
        return ode if (is_good(ode) or not require_good) else None

    def section(self, x: StableElem, r: int) -> StableElem:
        F = self.inst.field
        if not x.P:
            return x
        parts = goodness_split(self, x)
        if len(parts) > 1:
            self.stats.splits += 1
        Q = []
        for part, ode in parts:
            Q = bi_add(F, Q, self.section_good(part, r, ode))
        return StableElem(Q, self.inst)

    def nth_coeff(self, N: int):
        inst = self.inst
        if N <= 2 * inst.rho:
            return inst.init[N]
        F = inst.field
        x = represent_y(inst)
        digits = base_p_digits(N, F.p)
        for r in digits:
            x = self.section(x, r)
            self.stats.digits += 1
        return F.frob_pow(evaluate_at_origin(inst, x.P), len(digits))


def goodness_split(engine: RecurrenceEngine, x: StableElem):
    """``[(P1, ode1), (P2, ode2)]`` with ``P1 + P2 = P`` and both halves good.

    A good ``x`` comes back unsplit as a single pair.
    """
    inst = engine.inst
    F = inst.field
    ode = engine._ode(x.P, require_good=False)
    if ode is not None and (is_good(ode) or not engine._needs_recurrence(ode)):
        # direct expansion does not care about goodness
        return [(x.P, ode)]
    for _ in range(RETRY_BUDGET):
        P1 = [[F.random(engine.rng) for _ in range(inst.h)] for _ in range(inst.d)]
        P1 = bi_trim(F, P1)
        P2 = bi_trim(F, [psub(F, a, b) for a, b in zip(_pad(x.P, inst.d), _pad(P1, inst.d))])
        if not P1 or not P2:
            continue
        o1, o2 = engine._ode(P1), engine._ode(P2)
        if o1 is not None and o2 is not None:
            return [(P1, o1), (P2, o2)]
    raise SplitFailed(f"no good splitting after {RETRY_BUDGET} tries")


def _pad(P, d):
    return [list(P[j]) if j < len(P) else [] for j in range(d)]


def nth_coeff_recurrence(inst: AlgebraicInstance, N: int, mode: str = "naive", seed: int = 0,
                         stats_out: list | None = None, use_direct: bool = True):
    """``f_N`` by the recurrence method; falls back to Hermite-Pade when no origin or split works."""
    engine = RecurrenceEngine(inst, mode=mode, seed=seed, use_direct=use_direct)
    try:
        value = engine.nth_coeff(N)
    except (NoAdmissibleAlpha, SplitFailed, InstanceNotIrreducible) as exc:
        log.warning("recurrence engine downgraded to Hermite-Pade: %s", exc)
        engine.stats.downgraded = True
        value = nth_coeff_hp(inst, N)
    if stats_out is not None:
        stats_out.append(engine.stats)
    return value
