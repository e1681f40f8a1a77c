"""Per-digit recovery of the section by a Hermite-Pade solve with a fixed left-hand side."""
from __future__ import annotations

from dataclasses import dataclass, field

from .christol_engine import StableElem, base_p_digits, evaluate_at_origin, represent_y
from .errors import InstanceNotIrreducible, RankDeficient
from .poly_algebra import LinearSolver, bi_trim
from .series_lift import AlgebraicInstance, TruncSeries, compute_basis_series


@dataclass
class HPSystem:
    """Left-hand side of the approximation problem, factored once.

    Columns are indexed by ``(j, m)`` with ``j < d`` and ``m <= h``; row ``n``
    holds the coefficient of ``t^n`` in ``t^(m + v) s_j``, with ``v`` the order of ``E_y(t, f)`` at the origin. Matching
    ``t^v Q(t, f) / E_y(t, f)`` instead of the Laurent series itself costs
    nothing: ``Q(t, f)`` still vanishes to order ``nrows`` whenever the
    residual does, so the uniqueness argument is unchanged.
    """

    inst: AlgebraicInstance
    H: list
    solver: LinearSolver
    basis: list  # t^v s_j as coefficient lists
    nrows: int
    width: int  # h + 1 coefficients per unknown polynomial
    solves: int = field(default=0)


def _num_rows(inst: AlgebraicInstance) -> int:
    return 2 * inst.d * inst.h if inst.h > 0 else inst.d


def build_hp_system(inst: AlgebraicInstance, for_sections: bool = True) -> HPSystem:
    """Factor the approximation matrix.

    With ``for_sections`` the basis series are kept to the precision needed
    by ``section_rhs``; otherwise only the ``nrows`` reconstruction rows.
    """
    key = ("hp", for_sections)
    if key in inst._cache:
        return inst._cache[key]
    F = inst.field
    d, h, p = inst.d, inst.h, inst.p
    nrows = _num_rows(inst)
    prec = nrows * p + inst.rho if for_sections else nrows
    basis = [s.coeffs for s in compute_basis_series(inst, d - 1, prec)]
    width = h + 1
    H = []
    for n in range(nrows):
        row = []
        for j in range(d):
            s = basis[j]
            for m in range(width):
                row.append(s[n - m] if n >= m else F.zero)
        H.append(row)
    try:
        solver = LinearSolver(F, H)
    except RankDeficient as exc:
        raise InstanceNotIrreducible("Hermite-Pade matrix is rank deficient; E is likely reducible") from exc
    sys = HPSystem(inst, H, solver, basis, nrows, width)
    inst._cache[key] = sys
    return sys


def hp_reconstruct(sys: HPSystem, c) -> StableElem:
    """The unique ``Q`` with ``sum_j b_j s_j = c mod t^nrows``."""
    F = sys.inst.field
    if isinstance(c, TruncSeries):
        c = c.coeffs
    c = list(c[: sys.nrows]) + [F.zero] * (sys.nrows - len(c))
    x = sys.solver.solve(c)
    sys.solves += 1
    w = sys.width
    Q = [x[j * w:(j + 1) * w] for j in range(sys.inst.d)]
    return StableElem(bi_trim(F, Q), sys.inst)


def section_rhs(sys: HPSystem, P, r: int):
    """Right-hand side for the section: coefficients ``0..nrows-1`` of ``t^v c``.

    Here ``c`` is the ``r``-th section of ``sum_i a_i s_i``; its coefficient
    at ``t^(n - v)`` is the p-th root of the coefficient at ``t^(r + p (n - v) + v)``
    of the scaled sum held in ``basis``.
    """
    F = sys.inst.field
    p = F.p
    rho = sys.inst.ey_valuation()
    out = []
    terms = [(i, m, a) for i, row in enumerate(P) for m, a in enumerate(row) if a]
    for n in range(sys.nrows):
        idx = r + p * (n - rho) + rho
        if idx < 0:
            out.append(F.zero)
            continue
        acc = F.zero
        for i, m, a in terms:
            if idx >= m:
                s = sys.basis[i][idx - m]
                if s:
                    acc = F.add(acc, F.mul(a, s))
        out.append(F.pth_root(acc))
    return out


def hp_step(sys: HPSystem, x: StableElem, r: int) -> StableElem:
    return hp_reconstruct(sys, section_rhs(sys, x.P, r))


def nth_coeff_hp(inst: AlgebraicInstance, N: int):
    if N <= 2 * inst.rho:
        return inst.init[N]
    F = inst.field
    sys = build_hp_system(inst)
    x = represent_y(inst)
    digits = base_p_digits(N, F.p)
    for r in digits:
        x = hp_step(sys, x, r)
    return F.frob_pow(evaluate_at_origin(inst, x.P), len(digits))
