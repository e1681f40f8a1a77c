"""Pure-Python polynomial kernels over Z/mZ.

Same interface and results as the compiled ``_kernels``; used whenever the
extension is unavailable (or when forced through ``NTHCOEFF_PURE_PYTHON=1``).
Long products go through Kronecker substitution so the work happens in
CPython's big-integer multiplication instead of a Python-level loop.
"""

CLASSICAL_CUTOFF = 32


def _classical(a, b, m):
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return [c % m for c in out]


def _kronecker(a, b, m):
    """``a * b mod m`` by packing nonnegative coefficients into one integer each."""
    n = len(a) + len(b) - 1
    nbytes = ((2 * (m - 1).bit_length() + min(len(a), len(b)).bit_length()) + 7) // 8
    A = int.from_bytes(b"".join(x.to_bytes(nbytes, "little") for x in a), "little")
    B = int.from_bytes(b"".join(x.to_bytes(nbytes, "little") for x in b), "little")
    raw = (A * B).to_bytes(n * nbytes, "little")
    return [int.from_bytes(raw[i * nbytes:(i + 1) * nbytes], "little") % m for i in range(n)]


def poly_mul_mod(a, b, m):
    """Product of two coefficient lists modulo ``m`` (full length, not trimmed)."""
    if not a or not b:
        return []
    a = [x % m for x in a]
    b = [x % m for x in b]
    if min(len(a), len(b)) < CLASSICAL_CUTOFF:
        return _classical(a, b, m)
    return _kronecker(a, b, m)


def poly_mul_mod_trunc(a, b, m, n):
    """First ``n`` coefficients of ``a*b`` modulo ``m``."""
    return poly_mul_mod(a[:n], b[:n], m)[:n]
