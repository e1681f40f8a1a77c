"""The finite field k = F_p[X]/(pi) with Frobenius and its inverse.

Elements are stored packed: the element ``c0 + c1 X + ... + c_{s-1} X^{s-1}``
is the integer ``c0 + c1 p + ... + c_{s-1} p^{s-1}`` in ``[0, q)``.  For the
prime field this is just the residue.  ``FieldElem`` wraps a packed value
with its context for the public, operator-based API; the engines call the
context methods on raw integers.
"""
from __future__ import annotations

import random as _random
from dataclasses import dataclass
from functools import cached_property

from . import kernels
from .errors import ContextMismatch, NonPrime, NotMonic, Reducible

_TABLE_LIMIT = 1 << 12


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    small = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)
    for q in small:
        if n % q == 0:
            return n == q
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    for a in small:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def _factor_small(n: int) -> list[int]:
    out, q = [], 2
    while q * q <= n:
        if n % q == 0:
            out.append(q)
            while n % q == 0:
                n //= q
        q += 1
    if n > 1:
        out.append(n)
    return out


class PrimeField:
    """Z/pZ on plain ints; also the coefficient ring for ``pi``."""

    def __init__(self, p: int):
        self.p = p
        self.zero, self.one = 0, 1

    def add(self, a, b):
        return (a + b) % self.p

    def sub(self, a, b):
        return (a - b) % self.p

    def neg(self, a):
        return -a % self.p

    def mul(self, a, b):
        return a * b % self.p

    def inv(self, a):
        if a % self.p == 0:
            raise ZeroDivisionError("inverse of zero")
        return pow(a, -1, self.p)

    def is_zero(self, a):
        return a == 0

    def from_int(self, n):
        return n % self.p

    def poly_mul(self, a, b):
        return kernels.poly_mul_mod(a, b, self.p)


class FieldCtx:
    """The field ``F_p[X]/(pi)``, ``pi`` monic irreducible of degree ``s``.

    ``pi`` is a coefficient list, low degree first.
    """

    is_field = True

    def __init__(self, p: int, pi=None):
        if not isinstance(p, int) or p < 2 or not is_prime(p):
            raise NonPrime(f"{p} is not prime")
        if pi is None:
            pi = [0, 1]
        pi = [int(c) % p for c in pi]
        while len(pi) > 1 and pi[-1] == 0:
            pi.pop()
        if len(pi) < 2 or pi[-1] != 1:
            raise NotMonic(f"modulus {pi} is not monic of positive degree")
        self.p = p
        self.pi = tuple(pi)
        self.s = len(pi) - 1
        self.q = p ** self.s
        self.zero, self.one = 0, 1
        self._slots = None
        self.Fp = PrimeField(p)
        if self.s > 1:
            self._check_irreducible()
            self._build_tables()

    # -- construction helpers -------------------------------------------------

    def _check_irreducible(self):
        from .poly_algebra import pgcd, ppowmod, psub

        Fp, pi, s, p = self.Fp, list(self.pi), self.s, self.p
        x = [0, 1]
        xp = x
        for i in range(1, s // 2 + 1):
            xp = ppowmod(Fp, xp, p, pi)
            if len(pgcd(Fp, psub(Fp, xp, x), pi)) != 1:
                raise Reducible(f"{list(pi)} is reducible over F_{p}")
        for _ in range(s - s // 2):
            xp = ppowmod(Fp, xp, p, pi)
        if xp != x:
            raise Reducible(f"{list(pi)} is reducible over F_{p}")

    def _build_tables(self):
        self._exp = self._log = None
        if self.q > _TABLE_LIMIT:
            return
        order = self.q - 1
        primes = _factor_small(order)
        for g in range(2, self.q):
            if all(self._slow_pow(g, order // r) != 1 for r in primes):
                break
        exp = [0] * (2 * order)
        log = [0] * self.q
        x = 1
        for i in range(order):
            exp[i] = x
            log[x] = i
            x = self._slow_mul(x, g)
        for i in range(order, 2 * order):
            exp[i] = exp[i - order]
        self._exp, self._log = exp, log

    # -- representation ---------------------------------------------------------

    def coeffs(self, a: int) -> list[int]:
        p = self.p
        out = []
        for _ in range(self.s):
            a, c = divmod(a, p)
            out.append(c)
        return out

    def elem(self, coeffs) -> int:
        coeffs = [int(c) % self.p for c in coeffs]
        if len(coeffs) > self.s:
            coeffs = self._reduce_digits(coeffs)
        v = 0
        for c in reversed(coeffs):
            v = v * self.p + c
        return v

    def _reduce_digits(self, c):
        """Reduce a coefficient list of any length modulo ``pi``."""
        p, s, pi = self.p, self.s, self.pi
        c = [x % p for x in c]
        for i in range(len(c) - 1, s - 1, -1):
            top = c[i]
            if top:
                for j in range(s):
                    c[i - s + j] = (c[i - s + j] - top * pi[j]) % p
        return c[:s]

    def from_int(self, n: int) -> int:
        return n % self.p

    def element(self, coeffs) -> "FieldElem":
        return FieldElem(self, self.elem(coeffs))

    def __eq__(self, other):
        return isinstance(other, FieldCtx) and (self.p, self.pi) == (other.p, other.pi)

    def __hash__(self):
        return hash((self.p, self.pi))

    def __repr__(self):
        return f"FieldCtx(p={self.p}, pi={list(self.pi)})"

    # -- arithmetic on packed ints ---------------------------------------------

    def is_zero(self, a):
        return a == 0

    def add(self, a, b):
        if self.s == 1:
            return (a + b) % self.p
        p = self.p
        out, scale = 0, 1
        while a or b:
            a, x = divmod(a, p)
            b, y = divmod(b, p)
            out += ((x + y) % p) * scale
            scale *= p
        return out

    def neg(self, a):
        if self.s == 1:
            return -a % self.p
        p = self.p
        out, scale = 0, 1
        while a:
            a, x = divmod(a, p)
            out += (-x % p) * scale
            scale *= p
        return out

    def sub(self, a, b):
        if self.s == 1:
            return (a - b) % self.p
        return self.add(a, self.neg(b))

    def _slow_mul(self, a, b):
        from .poly_algebra import classical_mul

        if a == 0 or b == 0:
            return 0
        prod = classical_mul(self.Fp, self.coeffs(a), self.coeffs(b))
        return self.elem(self._reduce_digits(prod))

    def _slow_pow(self, a, e):
        r = 1
        while e:
            if e & 1:
                r = self._slow_mul(r, a)
            a = self._slow_mul(a, a)
            e >>= 1
        return r

    def mul(self, a, b):
        if self.s == 1:
            return a * b % self.p
        if a == 0 or b == 0:
            return 0
        if self._exp is not None:
            return self._exp[self._log[a] + self._log[b]]
        return self._slow_mul(a, b)

    def inv(self, a):
        if a == 0:
            raise ZeroDivisionError("inverse of zero in a finite field")
        if self.s == 1:
            return pow(a, -1, self.p)
        if self._exp is not None:
            return self._exp[(self.q - 1 - self._log[a]) % (self.q - 1)]
        return self.pow(a, self.q - 2)

    def div(self, a, b):
        return self.mul(a, self.inv(b))

    def pow(self, a, e: int):
        if e < 0:
            a, e = self.inv(a), -e
        if self.s == 1:
            return pow(a, e, self.p)
        if a == 0:
            return 0 if e else 1
        if self._exp is not None:
            return self._exp[(self._log[a] * e) % (self.q - 1)]
        return self._slow_pow(a, e)

    def frob(self, a):
        """``a**p``."""
        if self.s == 1:
            return a
        return self._frob_table[a] if self._frob_table is not None else self.pow(a, self.p)

    def pth_root(self, a):
        """``a**(1/p)``, computed as ``a**(p**(s-1))``."""
        if self.s == 1:
            return a
        return self._root_table[a] if self._root_table is not None else self.pow(a, self.p ** (self.s - 1))

    @cached_property
    def _frob_table(self):
        if self.s == 1 or self.q > _TABLE_LIMIT:
            return None
        return [self.pow(a, self.p) for a in range(self.q)]

    @cached_property
    def _root_table(self):
        if self.s == 1 or self.q > _TABLE_LIMIT:
            return None
        e = self.p ** (self.s - 1)
        return [self.pow(a, e) for a in range(self.q)]

    def frob_pow(self, a, k: int):
        """Apply the Frobenius ``k`` times (negative ``k``: p-th roots)."""
        if self.s == 1:
            return a
        k %= self.s
        for _ in range(k):
            a = self.frob(a)
        return a

    def random(self, rng: _random.Random) -> int:
        return rng.randrange(self.q)

    def elements(self):
        return range(self.q)

    # -- polynomials over k -----------------------------------------------------

    def poly_mul(self, a, b):
        if self.s == 1:
            return kernels.poly_mul_mod(a, b, self.p)
        if len(a) * len(b) <= 64:
            from .poly_algebra import classical_mul

            return classical_mul(self, a, b)
        # Kronecker substitution X-slots of width 2s-1 inside an F_p product
        s, p = self.s, self.p
        w = 2 * s - 1

        table = self._slot_table()

        def pack(poly):
            if table is not None:
                digits = self._digit_slots
                flat = []
                for c in poly:
                    flat += digits[c]
                return flat
            flat = [0] * (len(poly) * w)
            for i, c in enumerate(poly):
                base = i * w
                for j in range(s):
                    c, flat[base + j] = divmod(c, p)
            return flat

        prod = kernels.poly_mul_mod(pack(a), pack(b), p)
        # slot products have degree 2s-2 < w, so chunk i is exactly the t^i coefficient
        n = len(a) + len(b) - 1
        if table is None:
            return [self.elem(self._reduce_digits(prod[i * w: (i + 1) * w])) for i in range(n)]
        prod += [0] * (n * w - len(prod))
        key = prod[w - 1::w]
        for j in range(w - 2, -1, -1):
            key = [k * p + c for k, c in zip(key, prod[j::w])]
        return [table[k] for k in key]

    def _slot_table(self):
        """Packed reduction of every base-``p`` slot of width ``2s - 1``, when small enough."""
        if self._slots is None:
            w = 2 * self.s - 1
            size = self.p ** w
            if size > 1 << 16:
                self._slots = False
            else:
                self._slots = [self.elem(self._reduce_digits(self.coeffs_width(k, w))) for k in range(size)]
                self._digit_slots = [self.coeffs_width(a, w) for a in range(self.q)]
        return self._slots or None

    def coeffs_width(self, a: int, width: int) -> list[int]:
        out = []
        for _ in range(width):
            a, c = divmod(a, self.p)
            out.append(c)
        return out


@dataclass(frozen=True)
class FieldElem:
    """A value in a ``FieldCtx``; supports ``+ - * /`` and ``**``."""

    ctx: FieldCtx
    value: int

    @property
    def coeffs(self) -> list[int]:
        return self.ctx.coeffs(self.value)

    def _other(self, other):
        if isinstance(other, FieldElem):
            if other.ctx != self.ctx:
                raise ContextMismatch("elements of different fields")
            return other.value
        if isinstance(other, int):
            return self.ctx.from_int(other)
        return NotImplemented

    def __add__(self, other):
        o = self._other(other)
        return o if o is NotImplemented else FieldElem(self.ctx, self.ctx.add(self.value, o))

    __radd__ = __add__

    def __sub__(self, other):
        o = self._other(other)
        return o if o is NotImplemented else FieldElem(self.ctx, self.ctx.sub(self.value, o))

    def __rsub__(self, other):
        o = self._other(other)
        return o if o is NotImplemented else FieldElem(self.ctx, self.ctx.sub(o, self.value))

    def __mul__(self, other):
        o = self._other(other)
        return o if o is NotImplemented else FieldElem(self.ctx, self.ctx.mul(self.value, o))

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._other(other)
        return o if o is NotImplemented else FieldElem(self.ctx, self.ctx.div(self.value, o))

    def __neg__(self):
        return FieldElem(self.ctx, self.ctx.neg(self.value))

    def __pow__(self, e: int):
        return FieldElem(self.ctx, self.ctx.pow(self.value, e))

    def __bool__(self):
        return self.value != 0

    def __str__(self):
        return format_elem(self.ctx, self.value)


def field_ctx_new(p: int, pi) -> FieldCtx:
    return FieldCtx(p, pi)


def field_arith(a: FieldElem, b: FieldElem, op: str) -> FieldElem:
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b
    raise ValueError(f"unknown operation {op!r}")


def frobenius(a: FieldElem) -> FieldElem:
    return FieldElem(a.ctx, a.ctx.frob(a.value))


def pth_root(a: FieldElem) -> FieldElem:
    return FieldElem(a.ctx, a.ctx.pth_root(a.value))


def sample_uniform(ctx: FieldCtx, rng: _random.Random) -> FieldElem:
    return FieldElem(ctx, ctx.random(rng))


def format_elem(ctx: FieldCtx, a: int) -> str:
    """Serialization: ``s`` space-separated residues, low coefficient first."""
    return " ".join(str(c) for c in ctx.coeffs(a))


def parse_elem(ctx: FieldCtx, text: str) -> int:
    parts = text.split()
    if len(parts) != ctx.s:
        raise ValueError(f"expected {ctx.s} residues, got {len(parts)}")
    vals = [int(x) for x in parts]
    if any(not 0 <= v < ctx.p for v in vals):
        raise ValueError("residue out of range")
    return ctx.elem(vals)


# ---------------------------------------------------------------------------
# factoring and root finding over k


def _xq_minus_x(F, f, k):
    """``X^(q^k) - X mod f``."""
    from .poly_algebra import ppowmod, psub

    x = [F.zero, F.one]
    xq = x
    for _ in range(k):
        xq = ppowmod(F, xq, F.q, f)
    return psub(F, xq, x)


def distinct_degree_factorization(F: FieldCtx, f) -> list[tuple[int, list]]:
    """``[(e, g_e)]`` with ``g_e`` the product of the monic irreducible factors of degree ``e``.

    ``f`` must be squarefree.
    """
    from .poly_algebra import pdivrem, pgcd, pmonic, ppowmod, psub

    f = pmonic(F, f)
    out = []
    x = [F.zero, F.one]
    xq = x
    e = 0
    while len(f) - 1 >= 2 * (e + 1):
        e += 1
        xq = ppowmod(F, xq, F.q, f)
        g = pgcd(F, psub(F, xq, x), f)
        if len(g) > 1:
            out.append((e, g))
            f, _ = pdivrem(F, f, g)
            f = pmonic(F, f)
            xq = pdivrem(F, xq, f)[1] if len(f) > 1 else xq
    if len(f) > 1:
        out.append((len(f) - 1, f))
    return out


def equal_degree_split(F: FieldCtx, f, e: int, rng: _random.Random) -> list[list]:
    """Monic irreducible factors (all of degree ``e``) of ``f``, Cantor-Zassenhaus."""
    from .poly_algebra import padd, pdivrem, pgcd, pmonic, ppowmod, psub

    f = pmonic(F, f)
    n = len(f) - 1
    if n == e:
        return [f]
    while True:
        a = [F.random(rng) for _ in range(n)]
        if F.p == 2:
            # trace map a + a^2 + ... + a^(2^(s e - 1))
            b = a
            acc = a
            for _ in range(F.s * e - 1):
                b = ppowmod(F, b, 2, f)
                acc = padd(F, acc, b)
            cand = acc
        else:
            cand = psub(F, ppowmod(F, a, (F.q ** e - 1) // 2, f), [F.one])
        g = pgcd(F, cand, f)
        if 1 < len(g) < len(f):
            h, _ = pdivrem(F, f, g)
            return equal_degree_split(F, g, e, rng) + equal_degree_split(F, pmonic(F, h), e, rng)


def squarefree_part(F: FieldCtx, f):
    """Product of the distinct monic irreducible factors of ``f`` (characteristic-aware)."""
    from .poly_algebra import pderiv, pdivrem, pgcd, pmonic

    f = pmonic(F, f)
    if len(f) <= 2:
        return f
    df = pderiv(F, f)
    if not df:
        # f = g(X^p): take the p-th root coefficientwise
        root = [F.pth_root(c) for c in f[:: F.p]]
        return squarefree_part(F, root)
    g = pgcd(F, f, df)
    if len(g) == 1:
        return f
    q, _ = pdivrem(F, f, g)
    return pmonic(F, _lcm_sqf(F, squarefree_part(F, q), squarefree_part(F, g)))


def _lcm_sqf(F, a, b):
    from .poly_algebra import pdivrem, pgcd, pmul

    g = pgcd(F, a, b)
    q, _ = pdivrem(F, pmul(F, a, b), g)
    return q


def irreducible_factors(F: FieldCtx, f, rng: _random.Random) -> list[list]:
    """Distinct monic irreducible factors of ``f``, sorted by degree then coefficients."""
    out = []
    for e, g in distinct_degree_factorization(F, squarefree_part(F, f)):
        out.extend(equal_degree_split(F, g, e, rng))
    return sorted(out, key=lambda g: (len(g), g))


def roots_in_field(F: FieldCtx, f, rng: _random.Random) -> list[int]:
    return sorted((F.neg(g[0]) for g in irreducible_factors(F, f, rng) if len(g) == 2))


def find_irreducible(p: int, n: int, rng: _random.Random) -> list[int]:
    """A random monic irreducible polynomial of degree ``n`` over F_p."""
    from .poly_algebra import pgcd, ppowmod, psub

    Fp = PrimeField(p)
    if n == 1:
        return [0, 1]
    while True:
        f = [rng.randrange(p) for _ in range(n)] + [1]
        if f[0] == 0:
            continue
        x = [0, 1]
        xp = x
        ok = True
        for i in range(1, n // 2 + 1):
            xp = ppowmod(Fp, xp, p, f)
            if len(pgcd(Fp, psub(Fp, xp, x), f)) != 1:
                ok = False
                break
        if ok:
            return f


class FieldEmbedding:
    """An embedding ``k -> l`` of finite fields of the same characteristic.

    ``theta`` is the image of the generator ``X`` of ``k`` (a root of ``pi``
    in ``l``).  ``back`` inverts the map on its image.
    """

    def __init__(self, k: FieldCtx, l: FieldCtx, theta: int):
        if k.p != l.p or l.s % k.s:
            raise ContextMismatch("no embedding between these fields")
        self.k, self.l, self.theta = k, l, theta
        self.powers = [l.one]
        for _ in range(k.s - 1):
            self.powers.append(l.mul(self.powers[-1], theta))
        self._table = None
        self._basis = None

    def __call__(self, a: int) -> int:
        l = self.l
        acc = l.zero
        for c, tp in zip(self.k.coeffs(a), self.powers):
            if c:
                acc = l.add(acc, l.mul(l.from_int(c), tp))
        return acc

    def back(self, b: int) -> int:
        """Preimage of ``b``; raises ValueError if ``b`` is not in the image."""
        if self.k.s == 1 and self.l.s == 1:
            return b
        if self._table is None and self.k.q <= 1 << 16:
            self._table = {self(a): a for a in self.k.elements()}
        if self._table is not None:
            if b not in self._table:
                raise ValueError("element is not in the image of the smaller field")
            return self._table[b]
        from .poly_algebra import LinearSolver

        if self._basis is None:
            cols = [self.l.coeffs(x) for x in self.powers]
            A = [[cols[j][i] for j in range(self.k.s)] for i in range(self.l.s)]
            self._basis = LinearSolver(PrimeField(self.k.p), A)
        try:
            x = self._basis.solve(self.l.coeffs(b))
        except Exception as exc:
            raise ValueError("element is not in the image of the smaller field") from exc
        return self.k.elem(x)


def extension_with_root(F: FieldCtx, f, rng: _random.Random):
    """Field ``l`` containing ``k`` and a root of the irreducible ``f in k[y]``.

    Returns ``(l, embedding, root)``.  When ``deg f == 1`` the field is ``k``.
    """
    e = len(f) - 1
    if e == 1:
        return F, FieldEmbedding(F, F, F.one if F.s == 1 else F.elem([0, 1])), F.div(F.neg(f[0]), f[1])
    n = F.s * e
    L = FieldCtx(F.p, find_irreducible(F.p, n, rng))
    if F.s == 1:
        theta = L.one
    else:
        pi_in_l = [L.from_int(c) for c in F.pi]
        theta = roots_in_field(L, pi_in_l, rng)[0]
    emb = FieldEmbedding(F, L, theta)
    fl = [emb(c) for c in f]
    root = roots_in_field(L, fl, rng)[0]
    return L, emb, root
