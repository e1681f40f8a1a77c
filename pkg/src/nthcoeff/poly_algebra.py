"""Dense univariate / bivariate polynomials and exact linear algebra.

Polynomials are plain Python lists of ring elements, lowest degree first.
A univariate polynomial is normalized when its last entry is nonzero; the
zero polynomial is ``[]``.  A bivariate polynomial is a list indexed by the
``y``-degree whose entries are univariate polynomials in ``t``::

    E = [e0, e1, ..., ed]      # E = sum_j e_j(t) * y**j

Every function takes the coefficient ring ``R`` as first argument.  Rings are
duck-typed: ``zero``, ``one``, ``add``, ``sub``, ``neg``, ``mul``,
``is_zero``, ``from_int``, and, for fields or unit-aware rings, ``inv``.  A
ring may provide ``poly_mul(a, b)`` for a faster product.
"""
from __future__ import annotations

from itertools import combinations
from typing import Callable, Sequence

from .errors import (
    InexactDivision,
    Inconsistent,
    NotInvertibleModB,
    RankDeficient,
)

Poly = list
BiPoly = list


# ---------------------------------------------------------------------------
# univariate


def trim(R, a: Sequence) -> Poly:
    a = list(a)
    while a and R.is_zero(a[-1]):
        a.pop()
    return a


def deg(a: Sequence) -> int:
    """Degree of a normalized polynomial; -1 for zero."""
    return len(a) - 1


def padd(R, a, b):
    if len(a) < len(b):
        a, b = b, a
    out = list(a)
    add = R.add
    for i, c in enumerate(b):
        out[i] = add(out[i], c)
    return trim(R, out)


def psub(R, a, b):
    n = max(len(a), len(b))
    z = R.zero
    sub = R.sub
    out = [sub(a[i] if i < len(a) else z, b[i] if i < len(b) else z) for i in range(n)]
    return trim(R, out)


def pneg(R, a):
    return [R.neg(c) for c in a]


def pscale(R, c, a):
    if R.is_zero(c):
        return []
    mul = R.mul
    return trim(R, [mul(c, x) for x in a])


def pshift(R, a, k):
    """Multiply by ``t**k``."""
    if not a:
        return []
    return [R.zero] * k + list(a)


def pmul(R, a, b):
    if not a or not b:
        return []
    fast = getattr(R, "poly_mul", None)
    if fast is not None:
        return trim(R, fast(a, b))
    return trim(R, classical_mul(R, a, b))


def classical_mul(R, a, b):
    out = [R.zero] * (len(a) + len(b) - 1)
    add, mul, is_zero = R.add, R.mul, R.is_zero
    for i, x in enumerate(a):
        if is_zero(x):
            continue
        for j, y in enumerate(b):
            out[i + j] = add(out[i + j], mul(x, y))
    return out


def pmul_trunc(R, a, b, n):
    """``a*b mod t**n`` (result length <= n, trimmed)."""
    if not a or not b or n <= 0:
        return []
    return trim(R, pmul(R, a[:n], b[:n])[:n])


def ppow(R, a, e):
    result = [R.one]
    base = a
    while e:
        if e & 1:
            result = pmul(R, result, base)
        e >>= 1
        if e:
            base = pmul(R, base, base)
    return result


def peval(R, a, x):
    fast = getattr(R, "poly_eval", None)
    if fast is not None:
        return fast(a, x)
    acc = R.zero
    for c in reversed(a):
        acc = R.add(R.mul(acc, x), c)
    return acc


def pderiv(R, a):
    return trim(R, [R.mul(R.from_int(i), a[i]) for i in range(1, len(a))])


def pdivrem(R, a, b):
    """Euclidean division; the leading coefficient of ``b`` must be invertible."""
    b = trim(R, b)
    if not b:
        raise ZeroDivisionError("polynomial division by zero")
    a = trim(R, a)
    if len(a) < len(b):
        return [], a
    inv_lead = R.inv(b[-1])
    q = [R.zero] * (len(a) - len(b) + 1)
    r = list(a)
    lb = len(b)
    sub, mul = R.sub, R.mul
    for i in range(len(a) - lb, -1, -1):
        c = r[i + lb - 1]
        if R.is_zero(c):
            continue
        c = mul(c, inv_lead)
        q[i] = c
        for j in range(lb):
            r[i + j] = sub(r[i + j], mul(c, b[j]))
    return trim(R, q), trim(R, r[: lb - 1])


def prem(R, a, b):
    return pdivrem(R, a, b)[1]


def pdiv_exact(R, a, b):
    """Exact quotient ``a/b``; raises InexactDivision if there is a remainder.

    Over rings without ``inv`` the leading coefficient division uses
    ``R.divexact``.
    """
    b = trim(R, b)
    if not b:
        raise ZeroDivisionError("polynomial division by zero")
    a = trim(R, a)
    if not a:
        return []
    if len(a) < len(b):
        raise InexactDivision("degree of dividend below divisor")
    divide = getattr(R, "divexact", None)
    if divide is None:
        inv_lead = R.inv(b[-1])

        def divide(x, _y):
            return R.mul(x, inv_lead)

    q = [R.zero] * (len(a) - len(b) + 1)
    r = list(a)
    lb = len(b)
    for i in range(len(a) - lb, -1, -1):
        c = r[i + lb - 1]
        if R.is_zero(c):
            continue
        c = divide(c, b[-1])
        q[i] = c
        for j in range(lb):
            r[i + j] = R.sub(r[i + j], R.mul(c, b[j]))
    if any(not R.is_zero(x) for x in r[: lb - 1]):
        raise InexactDivision("nonzero remainder")
    return trim(R, q)


def pmonic(R, a):
    a = trim(R, a)
    if not a:
        return a
    return pscale(R, R.inv(a[-1]), a)


def pgcd(R, a, b):
    """Monic gcd over a field."""
    a, b = trim(R, a), trim(R, b)
    while b:
        a, b = b, prem(R, a, b)
    return pmonic(R, a)


def pxgcd(R, a, b):
    """Return (g, u, v) with u*a + v*b = g, g monic (over a field)."""
    r0, r1 = trim(R, a), trim(R, b)
    s0, s1 = [R.one], []
    t0, t1 = [], [R.one]
    while r1:
        q, r = pdivrem(R, r0, r1)
        r0, r1 = r1, r
        s0, s1 = s1, psub(R, s0, pmul(R, q, s1))
        t0, t1 = t1, psub(R, t0, pmul(R, q, t1))
    if not r0:
        return [], s0, t0
    c = R.inv(r0[-1])
    return pscale(R, c, r0), pscale(R, c, s0), pscale(R, c, t0)


def pinvmod(R, a, m):
    """Inverse of ``a`` modulo ``m`` over a field; NotInvertibleModB if none."""
    g, u, _ = pxgcd(R, prem(R, a, m), m)
    if len(g) != 1:
        raise NotInvertibleModB("not invertible modulo the given polynomial")
    return prem(R, u, m)


def pmulmod(R, a, b, m):
    return prem(R, pmul(R, a, b), m)


def ppowmod(R, a, e, m):
    result = prem(R, [R.one], m)
    base = prem(R, a, m)
    while e:
        if e & 1:
            result = pmulmod(R, result, base, m)
        e >>= 1
        if e:
            base = pmulmod(R, base, base, m)
    return result


def ptaylor_shift(R, a, c):
    """Coefficients of ``a(t + c)``."""
    out = list(a)
    n = len(out)
    # repeated synthetic division (Horner scheme), O(n^2)
    for i in range(n - 1):
        for j in range(n - 2, i - 1, -1):
            out[j] = R.add(out[j], R.mul(c, out[j + 1]))
    return trim(R, out)


def valuation(R, a) -> int | None:
    for i, c in enumerate(a):
        if not R.is_zero(c):
            return i
    return None


def uni_arith(R, a, b, op: str):
    """Dispatcher over ``add``, ``mul``, ``divrem`` and ``gcd``."""
    if op == "add":
        return padd(R, a, b)
    if op == "mul":
        return pmul(R, a, b)
    if op == "divrem":
        return pdivrem(R, a, b)
    if op == "gcd":
        return pgcd(R, a, b)
    raise ValueError(f"unknown operation {op!r}")


# ---------------------------------------------------------------------------
# bivariate


def bi_trim(R, P):
    P = [trim(R, row) for row in P]
    while P and not P[-1]:
        P.pop()
    return P


def bi_deg_y(P) -> int:
    return len(P) - 1


def bi_deg_t(P) -> int:
    return max((len(row) - 1 for row in P), default=-1)


def bi_coeff(R, P, i, j):
    """Coefficient of ``t**i * y**j``."""
    if j < len(P) and i < len(P[j]):
        return P[j][i]
    return R.zero


def bi_add(R, P, Q):
    n = max(len(P), len(Q))
    return bi_trim(R, [padd(R, P[j] if j < len(P) else [], Q[j] if j < len(Q) else []) for j in range(n)])


def bi_sub(R, P, Q):
    n = max(len(P), len(Q))
    return bi_trim(R, [psub(R, P[j] if j < len(P) else [], Q[j] if j < len(Q) else []) for j in range(n)])


def bi_scale(R, c, P):
    return bi_trim(R, [pscale(R, c, row) for row in P])


def bi_mul_t(R, a, P):
    """Multiply by the univariate polynomial ``a(t)``."""
    return bi_trim(R, [pmul(R, a, row) for row in P])


def bi_mul(R, P, Q):
    if not P or not Q:
        return []
    out = [[] for _ in range(len(P) + len(Q) - 1)]
    for i, a in enumerate(P):
        if not a:
            continue
        for j, b in enumerate(Q):
            if b:
                out[i + j] = padd(R, out[i + j], pmul(R, a, b))
    return bi_trim(R, out)


def bi_deriv_y(R, P):
    return bi_trim(R, [pscale(R, R.from_int(j), P[j]) for j in range(1, len(P))])


def bi_deriv_t(R, P):
    return bi_trim(R, [pderiv(R, row) for row in P])


def bi_eval_t(R, P, x):
    """Univariate polynomial in y obtained by setting ``t = x``."""
    return trim(R, [peval(R, row, x) for row in P])


def bi_taylor_shift_t(R, P, c):
    """``P(t + c, y)``."""
    return bi_trim(R, [ptaylor_shift(R, row, c) for row in P])


def bi_map(R_out, P, fn: Callable):
    return bi_trim(R_out, [[fn(c) for c in row] for row in P])


def bi_divexact(R, P, E):
    """Exact quotient of bivariate polynomials over a field, dividing in ``y``."""
    P = bi_trim(R, P)
    E = bi_trim(R, E)
    if not E:
        raise ZeroDivisionError("bivariate division by zero")
    if not P:
        return []
    d = len(E) - 1
    if len(P) - 1 < d:
        raise InexactDivision("y-degree of dividend below divisor")
    lead = E[-1]
    rem = [list(row) for row in P]
    q = [[] for _ in range(len(P) - d)]
    for j in range(len(P) - 1 - d, -1, -1):
        c = rem[j + d]
        if not c:
            continue
        c = pdiv_exact(R, c, lead)
        q[j] = c
        for i in range(d + 1):
            rem[j + i] = psub(R, rem[j + i], pmul(R, c, E[i]))
    if any(rem[j] for j in range(d)):
        raise InexactDivision("nonzero remainder in bivariate division")
    return bi_trim(R, q)


def bipoly_pow_pm1(F, E):
    """``E**(p-1)`` over the field ``F``, as ``E**p / E``.

    ``E**p`` is formed without multiplication: every coefficient goes
    through the Frobenius and ``t**i y**j`` becomes ``t**(p i) y**(p j)``.
    """
    p = F.p
    E = bi_trim(F, E)
    if p == 2:
        return [list(row) for row in E]
    Ep = [[] for _ in range(p * (len(E) - 1) + 1)]
    for j, row in enumerate(E):
        if not row:
            continue
        new = [F.zero] * (p * (len(row) - 1) + 1)
        for i, c in enumerate(row):
            new[p * i] = F.frob(c)
        Ep[p * j] = trim(F, new)
    return bi_divexact(F, Ep, E)


def bi_pseudo_rem(R, P, E):
    """Pseudo-remainder of ``P`` by ``E`` in ``y``: ``L**e * P = q*E + rem``.

    Returns ``(rem, e)``; ``L`` is the leading coefficient of ``E`` (a
    univariate polynomial) and ``e = max(0, deg_y P - deg_y E + 1)``.
    Works over any commutative ring.
    """
    P = bi_trim(R, P)
    d = len(E) - 1
    if len(P) - 1 < d:
        return P, 0
    lead = E[-1]
    e = len(P) - d
    rem = [list(row) for row in P]
    for k in range(len(P) - 1, d - 1, -1):
        c = rem[k]
        rem = [pmul(R, lead, row) for row in rem[:k]]
        if c:
            for i in range(d):
                rem[k - d + i] = psub(R, rem[k - d + i], pmul(R, c, E[i]))
    return bi_trim(R, rem), e


def bi_to_str(P, fmt=str, t="t", y="y") -> str:
    terms = []
    for j, row in enumerate(P):
        for i, c in enumerate(row):
            if c == 0 or c == ():
                continue
            mono = ""
            if i:
                mono += t if i == 1 else f"{t}^{i}"
            if j:
                mono += ("*" if mono else "") + (y if j == 1 else f"{y}^{j}")
            terms.append(f"{fmt(c)}*{mono}" if mono else fmt(c))
    return " + ".join(terms) if terms else "0"


# ---------------------------------------------------------------------------
# resultants and determinants


def sylvester(R, A, B):
    """Sylvester matrix of two univariate polynomials over ``R`` (lists).

    Rows ``y**i * A`` for ``i < deg B`` followed by ``y**i * B`` for
    ``i < deg A``; columns are the monomials ``1, y, ..., y**(m+n-1)``.
    """
    m, n = len(A) - 1, len(B) - 1
    size = m + n
    rows = []
    for i in range(n):
        row = [R.zero] * size
        for k, c in enumerate(A):
            row[i + k] = c
        rows.append(row)
    for i in range(m):
        row = [R.zero] * size
        for k, c in enumerate(B):
            row[i + k] = c
        rows.append(row)
    return rows


class PolyRing:
    """The ring ``R[t]`` seen as a coefficient ring (lists as elements)."""

    def __init__(self, R):
        self.R = R
        self.zero = []
        self.one = [R.one]

    def add(self, a, b):
        return padd(self.R, a, b)

    def sub(self, a, b):
        return psub(self.R, a, b)

    def neg(self, a):
        return pneg(self.R, a)

    def mul(self, a, b):
        return pmul(self.R, a, b)

    def is_zero(self, a):
        return not a

    def from_int(self, n):
        return trim(self.R, [self.R.from_int(n)])

    def divexact(self, a, b):
        return pdiv_exact(self.R, a, b)


def det_bareiss(R, M):
    """Fraction-free (Bareiss) determinant; needs exact division in ``R``.

    Row swaps are allowed, so the elimination never divides by zero.
    """
    n = len(M)
    if n == 0:
        return R.one
    A = [list(row) for row in M]
    sign = 1
    prev = R.one
    divide = getattr(R, "divexact", None)
    if divide is None:
        def divide(x, y):
            return R.mul(x, R.inv(y))
    for k in range(n - 1):
        if R.is_zero(A[k][k]):
            for i in range(k + 1, n):
                if not R.is_zero(A[i][k]):
                    A[k], A[i] = A[i], A[k]
                    sign = -sign
                    break
            else:
                return R.zero
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                num = R.sub(R.mul(A[i][j], A[k][k]), R.mul(A[i][k], A[k][j]))
                A[i][j] = divide(num, prev)
        prev = A[k][k]
    d = A[n - 1][n - 1]
    return d if sign == 1 else R.neg(d)


def det_division_free(R, M):
    """Determinant by Laplace expansion with memoized minors (n * 2**n products).

    Uses only ring operations, so it is safe over rings where exact division
    is awkward (e.g. polynomials over ``Z[X]/(pi)``).
    """
    n = len(M)
    if n == 0:
        return R.one
    # minors[cols] = det of the last len(cols) rows restricted to cols
    minors = {(): R.one}
    for size in range(1, n + 1):
        row = M[n - size]
        new = {}
        for cols in combinations(range(n), size):
            acc = R.zero
            for pos, c in enumerate(cols):
                entry = row[c]
                if R.is_zero(entry):
                    continue
                sub = minors.get(cols[:pos] + cols[pos + 1:])
                if sub is None or R.is_zero(sub):
                    continue
                term = R.mul(entry, sub)
                acc = R.add(acc, term) if pos % 2 == 0 else R.sub(acc, term)
            new[cols] = acc
        minors = new
    return minors[tuple(range(n))]


def resultant_y(R, E, F):
    """``Res_y(E, F)`` for bivariate polynomials over a field ``R``.

    Determinant of the Sylvester matrix over ``R[t]``, computed by Bareiss
    elimination (exact division in ``R[t]``).
    """
    E, F = bi_trim(R, E), bi_trim(R, F)
    if len(E) < 2 and len(F) < 2:
        raise ValueError("resultant needs at least one polynomial of positive y-degree")
    PR = PolyRing(R)
    return det_bareiss(PR, sylvester(PR, E, F))


# ---------------------------------------------------------------------------
# dense linear algebra over a field


class LinearSolver:
    """Reusable elimination record for ``A x = b`` with ``A`` of full column rank.

    The constructor row-reduces ``[A | I]``; ``solve`` then costs one
    matrix-vector product plus a consistency check on the rows below the
    pivots, and verifies ``A x == b`` exactly.
    """

    def __init__(self, F, A):
        self.F = F
        self.A = [list(r) for r in A]
        n = len(A)
        m = len(A[0]) if n else 0
        self.nrows, self.ncols = n, m
        aug = [list(A[i]) + [F.one if i == j else F.zero for j in range(n)] for i in range(n)]
        row = 0
        for col in range(m):
            piv = next((i for i in range(row, n) if not F.is_zero(aug[i][col])), None)
            if piv is None:
                raise RankDeficient(f"column {col} has no pivot")
            aug[row], aug[piv] = aug[piv], aug[row]
            inv = F.inv(aug[row][col])
            aug[row] = [F.mul(inv, x) for x in aug[row]]
            pr = aug[row]
            for i in range(n):
                if i != row and not F.is_zero(aug[i][col]):
                    c = aug[i][col]
                    aug[i] = [F.sub(x, F.mul(c, y)) for x, y in zip(aug[i], pr)]
            row += 1
        self.T = [r[m:] for r in aug]

    def transform(self, b):
        F = self.F
        out = []
        for trow in self.T:
            acc = F.zero
            for c, x in zip(trow, b):
                if not F.is_zero(c) and not F.is_zero(x):
                    acc = F.add(acc, F.mul(c, x))
            out.append(acc)
        return out

    def solve(self, b):
        F = self.F
        if len(b) != self.nrows:
            raise ValueError("right-hand side has wrong length")
        y = self.transform(b)
        if any(not F.is_zero(v) for v in y[self.ncols:]):
            raise Inconsistent("linear system is inconsistent")
        x = y[: self.ncols]
        for i, arow in enumerate(self.A):
            acc = F.zero
            for a, v in zip(arow, x):
                acc = F.add(acc, F.mul(a, v))
            if acc != b[i]:
                raise Inconsistent("nonzero residual after solve")
        return x


def dense_solve(F, A, b):
    """Unique solution of ``A x = b`` over the field ``F``."""
    return LinearSolver(F, A).solve(b)


def rank(F, A) -> int:
    A = [list(r) for r in A]
    n = len(A)
    m = len(A[0]) if n else 0
    r = 0
    for col in range(m):
        piv = next((i for i in range(r, n) if not F.is_zero(A[i][col])), None)
        if piv is None:
            continue
        A[r], A[piv] = A[piv], A[r]
        inv = F.inv(A[r][col])
        for i in range(r + 1, n):
            if not F.is_zero(A[i][col]):
                c = F.mul(A[i][col], inv)
                A[i] = [F.sub(x, F.mul(c, y)) for x, y in zip(A[i], A[r])]
        r += 1
    return r


# ---------------------------------------------------------------------------
# matrices over k[t]/B


class PolyMatrix:
    """Matrix with polynomial entries, optionally reduced modulo ``B``."""

    def __init__(self, F, rows, B=None):
        self.F = F
        self.B = trim(F, B) if B is not None else None
        if self.B is not None:
            rows = [[prem(F, e, self.B) for e in r] for r in rows]
        self.rows = [list(r) for r in rows]

    @property
    def shape(self):
        return len(self.rows), len(self.rows[0]) if self.rows else 0

    def __getitem__(self, ij):
        i, j = ij
        return self.rows[i][j]

    def __matmul__(self, other):
        F = self.F
        n, k = self.shape
        k2, m = other.shape
        if k != k2:
            raise ValueError("shape mismatch")
        out = []
        for i in range(n):
            row = []
            for j in range(m):
                acc = []
                for l in range(k):
                    acc = padd(F, acc, pmul(F, self.rows[i][l], other.rows[l][j]))
                row.append(acc)
            out.append(row)
        return PolyMatrix(F, out, self.B if self.B is not None else other.B)

    def max_degree(self) -> int:
        return max((len(e) - 1 for r in self.rows for e in r), default=-1)

    def is_identity(self) -> bool:
        n, m = self.shape
        return n == m and all(
            self.rows[i][j] == ([self.F.one] if i == j else []) for i in range(n) for j in range(m)
        )


def _unit_inverse_mod(F, a, B):
    if not a:
        raise NotInvertibleModB("zero pivot")
    g, u, _ = pxgcd(F, a, B)
    if len(g) != 1:
        raise NotInvertibleModB("pivot shares a factor with the modulus")
    return prem(F, u, B)


def polymatrix_inverse_mod(M: PolyMatrix, B) -> PolyMatrix:
    """Inverse of a square polynomial matrix in ``(k[t]/B)^(n x n)``.

    Gauss-Jordan elimination that only accepts unit pivots; a column with
    no unit pivot raises NotInvertibleModB.
    """
    F = M.F
    B = trim(F, B)
    n, m = M.shape
    if n != m:
        raise ValueError("matrix must be square")
    aug = [[prem(F, e, B) for e in M.rows[i]] + [[F.one] if i == j else [] for j in range(n)] for i in range(n)]
    for col in range(n):
        piv = None
        for i in range(col, n):
            e = aug[i][col]
            if e and len(pgcd(F, e, B)) == 1:
                piv = i
                break
        if piv is None:
            raise NotInvertibleModB(f"no unit pivot in column {col}")
        aug[col], aug[piv] = aug[piv], aug[col]
        inv = _unit_inverse_mod(F, aug[col][col], B)
        aug[col] = [pmulmod(F, inv, e, B) for e in aug[col]]
        prow = aug[col]
        for i in range(n):
            if i != col and aug[i][col]:
                c = aug[i][col]
                aug[i] = [prem(F, psub(F, e, pmul(F, c, f)), B) for e, f in zip(aug[i], prow)]
    return PolyMatrix(F, [r[n:] for r in aug], B)
