"""Kernel selection: compiled extension when importable, pure Python otherwise.

Set ``NTHCOEFF_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _kernels_py

_compiled = None
if os.environ.get("NTHCOEFF_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:  # pragma: no cover - depends on the build
        _compiled = None

COMPILED = _compiled is not None
BACKEND = "cython" if COMPILED else "python"
_SMALL = 1 << 31


def poly_mul_mod(a, b, m):
    if _compiled is not None and m < _SMALL:
        return _compiled.poly_mul_mod(a, b, m)
    return _kernels_py.poly_mul_mod(a, b, m)


def poly_mul_mod_trunc(a, b, m, n):
    if _compiled is not None and m < _SMALL:
        return _compiled.poly_mul_mod_trunc(a, b, m, n)
    return _kernels_py.poly_mul_mod_trunc(a, b, m, n)
