"""Independent reference computations used only by the tests.

Nothing here calls the package's series or engine code: field arithmetic
is redone with plain integer polynomials modulo (p, pi), and the series
root is built one coefficient at a time from the linear equation for the
next unknown.
"""


class RefField:
    """Elements as coefficient tuples; multiplication by schoolbook product and reduction."""

    def __init__(self, p, pi):
        self.p = p
        self.pi = list(pi)
        self.s = len(pi) - 1

    def norm(self, c):
        c = [x % self.p for x in c]
        for i in range(len(c) - 1, self.s - 1, -1):
            top = c[i]
            if top:
                for j in range(self.s + 1):
                    c[i - self.s + j] = (c[i - self.s + j] - top * self.pi[j]) % self.p
        c = c[: self.s] + [0] * (self.s - len(c))
        return tuple(c)

    def add(self, a, b):
        return self.norm([x + y for x, y in zip(a, b)])

    def sub(self, a, b):
        return self.norm([x - y for x, y in zip(a, b)])

    def mul(self, a, b):
        out = [0] * (2 * self.s - 1)
        for i, x in enumerate(a):
            for j, y in enumerate(b):
                out[i + j] += x * y
        return self.norm(out)

    def pow(self, a, e):
        r = self.norm([1])
        for _ in range(e):
            r = self.mul(r, a)
        return r

    def inv(self, a):
        # brute force over the whole field: fine for q <= a few thousand
        one = self.norm([1])
        for b in self.elements():
            if self.mul(a, b) == one:
                return b
        raise ZeroDivisionError

    def elements(self):
        q = self.p ** self.s
        for n in range(q):
            c = []
            for _ in range(self.s):
                n, r = divmod(n, self.p)
                c.append(r)
            yield tuple(c)

    def zero(self):
        return (0,) * self.s


def to_ref(F, a):
    return tuple(F.coeffs(a))


def series_coeffs(F, inst, n_terms):
    """First ``n_terms`` coefficients of the root by undetermined coefficients.

    With ``v`` the valuation of ``E_y(t, f)``, the coefficient ``c`` of
    ``t^n`` (``n > 2 rho``) enters ``E(t, f)`` at ``t^(n + v)`` linearly with
    slope ``[E_y(t, f)]_v``.
    """
    R = RefField(F.p, F.pi)
    E = [[to_ref(F, c) for c in row] for row in inst.E]
    zero = R.zero()
    f = [to_ref(F, c) for c in inst.init]

    def mul_trunc(a, b, n):
        out = [zero] * n
        for i, x in enumerate(a[:n]):
            if x == zero:
                continue
            for j, y in enumerate(b[: n - i]):
                if y != zero:
                    out[i + j] = R.add(out[i + j], R.mul(x, y))
        return out

    def eval_E(poly_rows, g, n):
        acc = [zero] * n
        for row in reversed(poly_rows):
            acc = mul_trunc(acc, g, n)
            for i, c in enumerate(row[:n]):
                acc[i] = R.add(acc[i], c)
        return acc

    d = len(E) - 1
    Ey = [[R.mul(R.norm([j]), c) for c in E[j]] for j in range(1, d + 1)]
    rho = inst.rho
    ey = eval_E(Ey, f[: rho + 1] + [zero], rho + 1)
    v = next(i for i, c in enumerate(ey) if c != zero)
    slope_inv = R.inv(ey[v])
    while len(f) < n_terms:
        n = len(f)
        val = eval_E(E, f + [zero], n + v + 1)[n + v]
        f.append(R.mul(R.sub(zero, val), slope_inv))
    return [F.elem(list(c)) for c in f[:n_terms]]
