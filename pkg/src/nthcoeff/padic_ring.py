"""Truncated unramified p-adic rings W' = (Z/p^m)[X]/(pi_hat) and the exact ring Z[X]/(pi_hat).

For ``s == 1`` elements are plain ints; otherwise tuples of ``s`` ints
(coefficients of ``X^0 .. X^(s-1)``).  Precision belongs to the context:
mixing precisions requires an explicit ``PadicCtx.lower`` conversion.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from . import kernels
from .errors import ContextMismatch, NotAUnit, NotDivisible
from .ff_core import FieldCtx

_SMALL = 1 << 31


# ---------------------------------------------------------------------------
# Kronecker substitution on Python integers


def _pack(values, nbytes):
    return int.from_bytes(b"".join(v.to_bytes(nbytes, "little") for v in values), "little")


def kron_mul(a, b):
    """Product of two integer coefficient lists (signs allowed)."""
    if not a or not b:
        return []
    ma = max(abs(x) for x in a)
    mb = max(abs(x) for x in b)
    if ma == 0 or mb == 0:
        return [0] * (len(a) + len(b) - 1)
    bits = ma.bit_length() + mb.bit_length() + min(len(a), len(b)).bit_length() + 2
    nb = (bits + 7) // 8
    if min(len(a), len(b)) < 8:
        out = [0] * (len(a) + len(b) - 1)
        for i, x in enumerate(a):
            if x:
                for j, y in enumerate(b):
                    out[i + j] += x * y
        return out
    A = _pack([x if x > 0 else 0 for x in a], nb) - _pack([-x if x < 0 else 0 for x in a], nb)
    B = _pack([x if x > 0 else 0 for x in b], nb) - _pack([-x if x < 0 else 0 for x in b], nb)
    n = len(a) + len(b) - 1
    half = 1 << (8 * nb - 1)
    offset = _pack([half] * n, nb)
    raw = (A * B + offset).to_bytes(n * nb + 1, "little")
    return [int.from_bytes(raw[i * nb:(i + 1) * nb], "little") - half for i in range(n)]


def _kron_mul_tuples(a, b, s, pi):
    """Product of polynomials whose coefficients are integer tuples mod monic ``pi``."""
    w = 2 * s - 1
    fa = [0] * (len(a) * w)
    for i, c in enumerate(a):
        fa[i * w:i * w + s] = c
    fb = [0] * (len(b) * w)
    for i, c in enumerate(b):
        fb[i * w:i * w + s] = c
    prod = kron_mul(fa, fb)
    n = len(a) + len(b) - 1
    out = []
    for i in range(n):
        chunk = prod[i * w:(i + 1) * w]
        chunk += [0] * (w - len(chunk))
        out.append(_reduce_int_poly(chunk, s, pi))
    return out


def _reduce_int_poly(c, s, pi):
    c = list(c)
    for i in range(len(c) - 1, s - 1, -1):
        top = c[i]
        if top:
            for j in range(s):
                c[i - s + j] -= top * pi[j]
    return tuple(c[:s]) if len(c) >= s else tuple(c) + (0,) * (s - len(c))


# ---------------------------------------------------------------------------
# exact ring


class ExactCtx:
    """``Z[X]/(pi_hat)`` with unbounded integer coefficients.

    Used for the differential-equation derivation, reduced to a ``PadicCtx``
    only once the derivation is finished.
    """

    is_field = False

    def __init__(self, field: FieldCtx):
        self.field = field
        self.p = field.p
        self.s = field.s
        self.pi_hat = tuple(field.pi)
        if self.s == 1:
            self.zero, self.one = 0, 1
        else:
            self.zero = (0,) * self.s
            self.one = (1,) + (0,) * (self.s - 1)

    def is_zero(self, a):
        return a == self.zero

    def from_int(self, n):
        return n if self.s == 1 else (n,) + (0,) * (self.s - 1)

    def add(self, a, b):
        if self.s == 1:
            return a + b
        return tuple(x + y for x, y in zip(a, b))

    def sub(self, a, b):
        if self.s == 1:
            return a - b
        return tuple(x - y for x, y in zip(a, b))

    def neg(self, a):
        return -a if self.s == 1 else tuple(-x for x in a)

    def mul(self, a, b):
        if self.s == 1:
            return a * b
        prod = [0] * (2 * self.s - 1)
        for i, x in enumerate(a):
            if x:
                for j, y in enumerate(b):
                    prod[i + j] += x * y
        return _reduce_int_poly(prod, self.s, self.pi_hat)

    def poly_mul(self, a, b):
        if self.s == 1:
            return kron_mul(a, b)
        return _kron_mul_tuples(a, b, self.s, self.pi_hat)

    def divexact(self, a, b):
        if self.s != 1:
            raise NotImplementedError("exact division only over Z")
        q, r = divmod(a, b)
        if r:
            raise NotDivisible(f"{b} does not divide {a}")
        return q

    def lift(self, a: int):
        """Canonical lift of a packed field element."""
        c = self.field.coeffs(a)
        return c[0] if self.s == 1 else tuple(c)

    def scalar_valuation(self, a) -> int | None:
        """``p``-adic valuation (min over coordinates); None for zero."""
        vals = [a] if self.s == 1 else list(a)
        best = None
        p = self.p
        for x in vals:
            if x:
                v = 0
                while x % p == 0:
                    x //= p
                    v += 1
                best = v if best is None else min(best, v)
        return best

    def div_p_power(self, a, v):
        pv = self.p ** v
        if self.s == 1:
            return a // pv
        return tuple(x // pv for x in a)

    def to_field(self, a) -> int:
        vals = [a] if self.s == 1 else list(a)
        return self.field.elem([x % self.p for x in vals])


# ---------------------------------------------------------------------------
# truncated ring


class PadicCtx:
    """``(Z/p^m)[X]/(pi_hat)`` with ``pi_hat`` the canonical lift of ``pi``."""

    is_field = False

    def __init__(self, field: FieldCtx, m: int):
        if m < 1:
            raise ValueError("precision exponent must be >= 1")
        self.field = field
        self.p = field.p
        self.s = field.s
        self.m = m
        self.modulus = self.p ** m
        self.pi_hat = tuple(c % self.modulus for c in field.pi)
        if self.s == 1:
            self.zero, self.one = 0, 1
        else:
            self.zero = (0,) * self.s
            self.one = (1,) + (0,) * (self.s - 1)

    def __eq__(self, other):
        return isinstance(other, PadicCtx) and (self.field, self.m) == (other.field, other.m)

    def __hash__(self):
        return hash((self.field, self.m))

    def __repr__(self):
        return f"PadicCtx(p={self.p}, m={self.m}, pi_hat={list(self.pi_hat)})"

    def is_zero(self, a):
        return a == self.zero

    def from_int(self, n):
        n %= self.modulus
        return n if self.s == 1 else (n,) + (0,) * (self.s - 1)

    def add(self, a, b):
        M = self.modulus
        if self.s == 1:
            return (a + b) % M
        return tuple((x + y) % M for x, y in zip(a, b))

    def sub(self, a, b):
        M = self.modulus
        if self.s == 1:
            return (a - b) % M
        return tuple((x - y) % M for x, y in zip(a, b))

    def neg(self, a):
        M = self.modulus
        return -a % M if self.s == 1 else tuple(-x % M for x in a)

    def mul(self, a, b):
        M = self.modulus
        if self.s == 1:
            return a * b % M
        prod = [0] * (2 * self.s - 1)
        for i, x in enumerate(a):
            if x:
                for j, y in enumerate(b):
                    prod[i + j] += x * y
        return tuple(x % M for x in _reduce_int_poly(prod, self.s, self.pi_hat))

    def poly_mul(self, a, b):
        M = self.modulus
        if self.s == 1:
            if M < _SMALL:
                return kernels.poly_mul_mod(a, b, M)
            return [x % M for x in kron_mul(a, b)]
        return [tuple(x % M for x in c) for c in _kron_mul_tuples(a, b, self.s, self.pi_hat)]

    def poly_eval(self, a, x):
        """Horner evaluation; plain integer arithmetic when ``s = 1``."""
        if self.s == 1:
            M = self.modulus
            acc = 0
            for c in reversed(a):
                acc = (acc * x + c) % M
            return acc
        acc = self.zero
        for c in reversed(a):
            acc = self.add(self.mul(acc, x), c)
        return acc

    def inv(self, a):
        """Inverse of a unit, by Newton iteration from the residue-field inverse."""
        r = self.reduce(a)
        if r == 0:
            raise NotAUnit("element is divisible by p")
        if self.s == 1:
            return pow(a, -1, self.modulus)
        x = self.lift(self.field.inv(r))
        prec = 1
        two = self.from_int(2)
        while prec < self.m:
            x = self.mul(x, self.sub(two, self.mul(a, x)))
            prec *= 2
        return x

    def reduce(self, a) -> int:
        """Reduction modulo p to a packed field element."""
        vals = [a] if self.s == 1 else list(a)
        return self.field.elem([x % self.p for x in vals])

    def lift(self, a: int):
        """Canonical lift of a packed field element (representatives in [0, p))."""
        c = self.field.coeffs(a)
        return c[0] if self.s == 1 else tuple(c)

    def from_exact(self, a):
        M = self.modulus
        return a % M if self.s == 1 else tuple(x % M for x in a)

    def lower(self, m: int) -> "PadicCtx":
        return padic_ctx_new(self.field, m)

    def convert(self, a, other: "PadicCtx"):
        """Map ``a`` into a context of lower (or equal) precision."""
        if other.field != self.field or other.m > self.m:
            raise ContextMismatch("can only lower precision within one residue field")
        return other.from_exact(a)

    def valuation(self, a) -> int:
        """p-adic valuation, capped at ``m`` for zero."""
        vals = [a] if self.s == 1 else list(a)
        best = self.m
        for x in vals:
            if x:
                v = 0
                while x % self.p == 0:
                    x //= self.p
                    v += 1
                best = min(best, v)
        return best

    def divide_exact_p_power(self, a, v: int):
        """``(ctx', a / p^v)`` with ``ctx'`` of precision ``m - v``."""
        if v == 0:
            return self, a
        if v >= self.m:
            raise NotDivisible("division exhausts all precision")
        pv = self.p ** v
        vals = [a] if self.s == 1 else list(a)
        if any(x % pv for x in vals):
            raise NotDivisible(f"element not divisible by p^{v}")
        low = self.lower(self.m - v)
        q = [x // pv for x in vals]
        return low, (q[0] % low.modulus if self.s == 1 else tuple(x % low.modulus for x in q))


@lru_cache(maxsize=None)
def padic_ctx_new(field: FieldCtx, m: int) -> PadicCtx:
    return PadicCtx(field, m)


@dataclass(frozen=True)
class PadicElem:
    ctx: PadicCtx
    value: object

    @property
    def coeffs(self):
        return [self.value] if self.ctx.s == 1 else list(self.value)

    def _check(self, other):
        if not isinstance(other, PadicElem) or other.ctx != self.ctx:
            raise ContextMismatch("elements of different p-adic contexts")
        return other.value

    def __add__(self, other):
        return PadicElem(self.ctx, self.ctx.add(self.value, self._check(other)))

    def __sub__(self, other):
        return PadicElem(self.ctx, self.ctx.sub(self.value, self._check(other)))

    def __mul__(self, other):
        return PadicElem(self.ctx, self.ctx.mul(self.value, self._check(other)))


def unit_inverse(a: PadicElem) -> PadicElem:
    return PadicElem(a.ctx, a.ctx.inv(a.value))


def reduce_mod_p(a: PadicElem):
    from .ff_core import FieldElem

    return FieldElem(a.ctx.field, a.ctx.reduce(a.value))


def canonical_lift(a, ctx: PadicCtx) -> PadicElem:
    if a.ctx != ctx.field:
        raise ContextMismatch("field of element does not match the p-adic context")
    return PadicElem(ctx, ctx.lift(a.value))


def divide_exact_p_power(a: PadicElem, v: int) -> PadicElem:
    ctx, val = a.ctx.divide_exact_p_power(a.value, v)
    return PadicElem(ctx, val)
