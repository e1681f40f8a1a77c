# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled polynomial kernels over Z/mZ for moduli below 2**31."""

from libc.stdlib cimport malloc, free
from libc.stdint cimport uint64_t, int64_t

DEF CUTOFF = 64

ctypedef uint64_t u64


cdef inline u64 _addm(u64 x, u64 y, u64 m) nogil:
    x += y
    return x - m if x >= m else x


cdef inline u64 _subm(u64 x, u64 y, u64 m) nogil:
    return x - y if x >= y else x + m - y


cdef inline void _classical(const u64* a, Py_ssize_t la, const u64* b, Py_ssize_t lb,
                            u64* out, u64 m, bint lazy) nogil:
    cdef Py_ssize_t i, j
    cdef u64 x
    for i in range(la + lb - 1):
        out[i] = 0
    if lazy:
        # m < 2**26: 2048 products fit in 63 bits, CUTOFF-sized blocks never overflow
        for i in range(la):
            x = a[i]
            if x:
                for j in range(lb):
                    out[i + j] += x * b[j]
        for i in range(la + lb - 1):
            out[i] %= m
    else:
        for i in range(la):
            x = a[i]
            if x:
                for j in range(lb):
                    out[i + j] = (out[i + j] + x * b[j]) % m


cdef void _kara(const u64* a, Py_ssize_t la, const u64* b, Py_ssize_t lb,
                u64* out, u64 m, bint lazy) nogil:
    cdef Py_ssize_t k, i, l0, l2, l1, lsa, lsb
    cdef u64* sa
    cdef u64* sb
    cdef u64* z0
    cdef u64* z1
    cdef u64* z2
    if la < CUTOFF or lb < CUTOFF or (la <= 1 or lb <= 1):
        _classical(a, la, b, lb, out, m, lazy and la < 2048 and lb < 2048)
        return
    k = (la if la > lb else lb) // 2
    if la <= k or lb <= k:
        if la < lb:
            _unbalanced(b, lb, a, la, out, m, lazy)
        else:
            _unbalanced(a, la, b, lb, out, m, lazy)
        return
    lsa = k if k > la - k else la - k
    lsb = k if k > lb - k else lb - k
    sa = <u64*> malloc(lsa * sizeof(u64))
    sb = <u64*> malloc(lsb * sizeof(u64))
    for i in range(lsa):
        sa[i] = 0
    for i in range(lsb):
        sb[i] = 0
    for i in range(k):
        sa[i] = a[i]
        sb[i] = b[i]
    for i in range(la - k):
        sa[i] = _addm(sa[i], a[k + i], m)
    for i in range(lb - k):
        sb[i] = _addm(sb[i], b[k + i], m)
    l0 = 2 * k - 1
    l2 = (la - k) + (lb - k) - 1
    l1 = lsa + lsb - 1
    z0 = <u64*> malloc(l0 * sizeof(u64))
    z2 = <u64*> malloc(l2 * sizeof(u64))
    z1 = <u64*> malloc(l1 * sizeof(u64))
    _kara(a, k, b, k, z0, m, lazy)
    _kara(a + k, la - k, b + k, lb - k, z2, m, lazy)
    _kara(sa, lsa, sb, lsb, z1, m, lazy)
    for i in range(l0):
        z1[i] = _subm(z1[i], z0[i], m)
    for i in range(l2):
        z1[i] = _subm(z1[i], z2[i], m)
    for i in range(la + lb - 1):
        out[i] = 0
    for i in range(l0):
        out[i] = z0[i]
    for i in range(l2):
        out[i + 2 * k] = _addm(out[i + 2 * k], z2[i], m)
    for i in range(l1):
        if i + k < la + lb - 1:
            out[i + k] = _addm(out[i + k], z1[i], m)
    free(sa)
    free(sb)
    free(z0)
    free(z1)
    free(z2)


cdef void _unbalanced(const u64* a, Py_ssize_t la, const u64* b, Py_ssize_t lb,
                      u64* out, u64 m, bint lazy) nogil:
    """``la > 2 lb``: multiply ``lb``-sized slices of ``a`` by ``b`` and add up."""
    cdef Py_ssize_t i, j, w
    cdef u64* tmp = <u64*> malloc((2 * lb - 1) * sizeof(u64))
    for i in range(la + lb - 1):
        out[i] = 0
    i = 0
    while i < la:
        w = lb if la - i > lb else la - i
        _kara(a + i, w, b, lb, tmp, m, lazy)
        for j in range(w + lb - 1):
            out[i + j] = _addm(out[i + j], tmp[j], m)
        i += w
    free(tmp)


def poly_mul_mod(a, b, m):
    """Product of two coefficient lists modulo ``m`` (requires m < 2**31)."""
    cdef Py_ssize_t la = len(a), lb = len(b), i
    cdef u64 mm = m
    if la == 0 or lb == 0:
        return []
    if m >= (1 << 31):
        raise OverflowError("modulus too large for the compiled kernel")
    cdef u64* ca = <u64*> malloc(la * sizeof(u64))
    cdef u64* cb = <u64*> malloc(lb * sizeof(u64))
    cdef u64* co = <u64*> malloc((la + lb - 1) * sizeof(u64))
    try:
        for i in range(la):
            ca[i] = a[i] % m
        for i in range(lb):
            cb[i] = b[i] % m
        with nogil:
            _kara(ca, la, cb, lb, co, mm, mm < (1 << 26))
        return [co[i] for i in range(la + lb - 1)]
    finally:
        free(ca)
        free(cb)
        free(co)


def poly_mul_mod_trunc(a, b, m, n):
    """First ``n`` coefficients of ``a*b`` modulo ``m``."""
    return poly_mul_mod(a[:n], b[:n], m)[:n]
