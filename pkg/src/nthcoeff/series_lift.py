"""Truncated power series, Newton lifting of the root f, local sections, and the oracle."""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field

from .errors import (
    BadInitialSegment,
    DigitOutOfRange,
    InvariantViolation,
    NotASeries,
    ZeroDivisor,
)
from .ff_core import FieldCtx
from .poly_algebra import (
    bi_deg_t,
    bi_deriv_y,
    bi_trim,
    padd,
    pmul_trunc,
    psub,
    resultant_y,
    trim,
    valuation,
)


class TruncSeries:
    """``sum_{n < prec} coeffs[n] t^n + O(t^prec)`` over the ring ``R``."""

    __slots__ = ("R", "coeffs", "prec")

    def __init__(self, R, coeffs, prec: int | None = None):
        coeffs = list(coeffs)
        if prec is None:
            prec = len(coeffs)
        if len(coeffs) < prec:
            coeffs = coeffs + [R.zero] * (prec - len(coeffs))
        self.R = R
        self.coeffs = coeffs[:prec]
        self.prec = prec

    def __repr__(self):
        return f"TruncSeries({self.coeffs!r}, prec={self.prec})"

    def __eq__(self, other):
        return isinstance(other, TruncSeries) and self.prec == other.prec and self.coeffs == other.coeffs

    def __getitem__(self, n):
        return self.coeffs[n]

    def poly(self):
        return trim(self.R, self.coeffs)

    def truncate(self, n: int) -> "TruncSeries":
        if n > self.prec:
            raise ValueError("cannot raise precision by truncation")
        return TruncSeries(self.R, self.coeffs[:n], n)

    def valuation(self):
        """Index of the first nonzero coefficient, or None if zero at this precision."""
        return valuation(self.R, self.coeffs)

    def __add__(self, other):
        n = min(self.prec, other.prec)
        return TruncSeries(self.R, padd(self.R, self.coeffs[:n], other.coeffs[:n]), n)

    def __sub__(self, other):
        n = min(self.prec, other.prec)
        return TruncSeries(self.R, psub(self.R, self.coeffs[:n], other.coeffs[:n]), n)

    def __mul__(self, other):
        n = min(self.prec, other.prec)
        return TruncSeries(self.R, pmul_trunc(self.R, trim(self.R, self.coeffs), trim(self.R, other.coeffs), n), n)

    def scale(self, c) -> "TruncSeries":
        return TruncSeries(self.R, [self.R.mul(c, x) for x in self.coeffs], self.prec)


# ---------------------------------------------------------------------------
# raw list helpers (trimmed polynomials standing for series mod t^n)


def series_inverse(R, b, n):
    """``1/b mod t^n``; ``b[0]`` must be invertible in ``R``."""
    if n <= 0:
        return []
    g = [R.inv(b[0])]
    k = 1
    two = R.from_int(2)
    while k < n:
        k = min(2 * k, n)
        bg = pmul_trunc(R, b, g, k)
        corr = psub(R, [two], bg)
        g = pmul_trunc(R, g, corr, k)
    return g


def eval_bipoly_series(R, E, f, n):
    """``E(t, f(t)) mod t^n`` for a bivariate ``E`` (rows indexed by y-degree)."""
    acc = []
    for row in reversed(E):
        acc = padd(R, pmul_trunc(R, acc, f, n), trim(R, row[:n]))
    return acc


def series_div(a: TruncSeries, b: TruncSeries) -> TruncSeries:
    R = a.R
    v = b.valuation()
    if v is None:
        raise ZeroDivisor("divisor vanishes at its whole precision")
    va = a.valuation()
    if va is not None and va < v:
        raise NotASeries("quotient has a pole at t = 0")
    n = min(a.prec, b.prec) - v
    if n <= 0:
        return TruncSeries(R, [], 0)
    num = trim(R, a.coeffs[v:v + n])
    den = trim(R, b.coeffs[v:v + n])
    q = pmul_trunc(R, num, series_inverse(R, den, n), n)
    return TruncSeries(R, q, n)


def div_raw(R, a, b, n):
    """``a/b`` with ``a``, ``b`` known mod ``t^n``; returns (quotient, precision)."""
    sa = TruncSeries(R, a, n)
    sb = TruncSeries(R, b, n)
    q = series_div(sa, sb)
    return trim(R, q.coeffs), q.prec


# ---------------------------------------------------------------------------
# instances


@dataclass
class AlgebraicInstance:
    """Input data: ``E`` over ``field``, ``rho`` and ``f_0 .. f_{2 rho}``, optional query ``N``.

    ``E`` is a list of rows, row ``j`` holding ``e_j(t)`` as packed field
    elements, so that ``E = sum_j e_j(t) y^j``.
    """

    field: FieldCtx
    E: list
    rho: int
    init: list
    N: int | None = None
    _cache: dict = dc_field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self.E = bi_trim(self.field, [list(r) for r in self.E])

    @property
    def d(self) -> int:
        return len(self.E) - 1

    @property
    def h(self) -> int:
        return bi_deg_t(self.E)

    @property
    def p(self) -> int:
        return self.field.p

    @property
    def Ey(self):
        if "Ey" not in self._cache:
            self._cache["Ey"] = bi_deriv_y(self.field, self.E)
        return self._cache["Ey"]

    @property
    def L(self):
        return self.E[-1]

    @property
    def resultant(self):
        if "R" not in self._cache:
            self._cache["R"] = resultant_y(self.field, self.E, self.Ey) if self.d >= 1 and self.Ey else []
        return self._cache["R"]

    def fbar(self, n=None):
        """The given initial segment as a trimmed polynomial (first ``n`` terms)."""
        init = self.init if n is None else self.init[:n]
        return trim(self.field, init)

    def ey_valuation(self) -> int:
        F = self.field
        val = valuation(F, eval_bipoly_series(F, self.Ey, self.fbar(self.rho + 1), self.rho + 1))
        if val is None:
            raise BadInitialSegment("E_y(t, f) vanishes modulo t^(rho+1)")
        return val

    def validate(self) -> "AlgebraicInstance":
        F = self.field
        if self.d < 1:
            raise InvariantViolation("degree", "deg_y E must be at least 1")
        if self.rho < 0:
            raise InvariantViolation("rho", "rho must be nonnegative")
        if len(self.init) != 2 * self.rho + 1:
            raise InvariantViolation("init", f"expected {2 * self.rho + 1} initial coefficients, got {len(self.init)}")
        if self.rho > (2 * self.d - 1) * max(self.h, 0):
            raise InvariantViolation("rho", "rho exceeds (2d-1)h")
        if not self.Ey or not self.resultant:
            raise InvariantViolation("separability", "E and E_y share a factor in k(t)[y]")
        n = 2 * self.rho + 1
        if trim(F, eval_bipoly_series(F, self.E, self.fbar(), n)):
            raise InvariantViolation("root", "E(t, f) is not 0 modulo t^(2 rho + 1)")
        if valuation(F, eval_bipoly_series(F, self.Ey, self.fbar(self.rho + 1), self.rho + 1)) is None:
            raise InvariantViolation("simple root", "E_y(t, f) vanishes modulo t^(rho + 1)")
        return self


# ---------------------------------------------------------------------------
# Newton iteration


def newton_lift(R, E, f, known: int, v: int, target: int):
    """Refine a root ``f`` of ``E(t, y)`` from precision ``known`` to ``target``.

    ``f`` agrees with the true root modulo ``t^known`` and ``E_y(t, f)`` has
    valuation ``v < known``.  Each step turns precision ``k`` into
    ``2k - v``.  Returns the root modulo ``t^target`` (trimmed list).
    """
    Ey = bi_deriv_y(R, E)
    f = trim(R, f[:known])
    k = known
    while k < target:
        n = min(2 * k, target + v)
        ev = eval_bipoly_series(R, E, f, n)
        dv = eval_bipoly_series(R, Ey, f, n)
        corr, prec = div_raw(R, ev, dv, n)
        k_new = min(2 * k - v, target)
        f = trim(R, psub(R, f, corr)[:k_new])
        if prec < k_new:
            raise BadInitialSegment("Newton step lost too much precision")
        k = k_new
    return trim(R, f[:target])


def hensel_lift(inst: AlgebraicInstance, target_prec: int) -> TruncSeries:
    F = inst.field
    cache = inst._cache.setdefault("lift", {})
    best = max((k for k in cache if k >= target_prec), default=None)
    if best is not None:
        return TruncSeries(F, cache[best], best).truncate(target_prec)
    v = inst.ey_valuation()
    start = inst.rho + 1
    if cache:
        k0 = max(cache)
        seed, start = cache[k0], k0
    else:
        seed = inst.fbar(start)
    if target_prec <= start:
        f = trim(F, seed[:target_prec])
    else:
        f = newton_lift(F, inst.E, seed, start, v, target_prec)
    if trim(F, eval_bipoly_series(F, inst.E, f, target_prec)):
        raise BadInitialSegment("lifted series is not a root")
    cache[target_prec] = f
    return TruncSeries(F, f, target_prec)


def local_section(g: TruncSeries, r: int, p: int | None = None) -> TruncSeries:
    """``(Lambda_r g)_n = g_{pn+r}^(1/p)`` at precision ``ceil((prec - r)/p)``."""
    R = g.R
    if p is None:
        p = R.p
    if not 0 <= r < p:
        raise DigitOutOfRange(f"digit {r} not in [0, {p})")
    root = getattr(R, "pth_root", None)
    vals = g.coeffs[r::p]
    if root is not None:
        vals = [root(c) for c in vals]
    n = max(0, -(-(g.prec - r) // p))
    return TruncSeries(R, vals[:n], n)


def frobenius_expand(g: TruncSeries, p: int) -> TruncSeries:
    """``Phi(g)``: Frobenius on coefficients and ``t -> t^p``."""
    R = g.R
    out = [R.zero] * (p * (g.prec - 1) + 1 if g.prec else 0)
    for i, c in enumerate(g.coeffs):
        out[p * i] = R.frob(c)
    return TruncSeries(R, out, p * g.prec)


def compute_basis_series(inst: AlgebraicInstance, j_max: int, prec: int) -> list[TruncSeries]:
    """``t^v f^j / E_y(t, f)`` for ``0 <= j <= j_max`` at precision ``prec``.

    ``v`` is the order of ``E_y(t, f)`` at the origin (at most ``rho``). When
    it is positive the plain quotients ``s_j`` are Laurent series, and the
    scaling keeps every entry a power series. For ``v = 0`` these are
    exactly the ``s_j``.
    """
    F = inst.field
    key = ("basis", j_max)
    cached = inst._cache.get(key)
    if cached is not None and cached[0].prec >= prec:
        return [s.truncate(prec) for s in cached]
    v = inst.ey_valuation()
    n = prec + v
    f = hensel_lift(inst, n).poly()
    ey = eval_bipoly_series(F, inst.Ey, f, n)
    den = TruncSeries(F, ey, n)
    out = []
    power = [F.one]
    for j in range(j_max + 1):
        num = [F.zero] * v + power[: n - v]
        out.append(series_div(TruncSeries(F, num, n), den).truncate(prec))
        power = pmul_trunc(F, power, f, n)
    inst._cache[key] = out
    return out


def oracle_nth_coeff(inst: AlgebraicInstance, N: int):
    """``f_N`` by Newton expansion to precision ``N + 1`` (packed field element)."""
    if N < len(inst.init) and N <= inst.rho:
        return inst.init[N]
    return hensel_lift(inst, N + 1)[N]
