"""Small dense simplex method with Bland's anticycling rule.

Only what the cap predicates need: minimize c.z subject to A z = b, z >= 0,
started from a known feasible basis, plus an L1 phase-one wrapper that
reports how far A x = b, x >= 0 is from being feasible.  Nearly degenerate
inputs (caps sharing generators up to rounding) can drive the floating
point path into near-singular bases; those problems are re-solved exactly
in rational arithmetic on the same (binary exact) data.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

PIVOT_TOL = 1e-9
COST_TOL = 1e-12
# basic values this far below zero are rounding from skipped tiny pivots
PRIMAL_TOL = 1e-7
# Harris ratio test: basic values may dip this far below zero
HARRIS_DELTA = 1e-10
# final bases worse conditioned than this are not trusted
COND_LIMIT = 1e8
MAX_ITER = 50_000


class LPError(RuntimeError):
    pass


@dataclass(frozen=True)
class LPResult:
    x: np.ndarray
    value: float
    iterations: int
    condition: float = 1.0
    exact: bool = False
    basis: tuple = ()


def simplex_minimize(c, A, b, basis, lower_bound: float | None = None) -> LPResult:
    """Minimize ``c @ z`` s.t. ``A z = b``, ``z >= 0``.

    Revised simplex: the basic solution and the duals are re-solved from
    the original ``A`` every iteration, so no tableau error accumulates.
    ``basis`` lists one column per row giving a feasible start.  Entering
    column: lowest index with negative reduced cost.  Leaving row: Harris
    two-pass ratio test, i.e. the largest pivot among rows whose ratio is
    within ``HARRIS_DELTA`` slack of the minimum, so nearly degenerate
    problems do not walk into near-singular bases.  If a basis repeats,
    the search falls back to strict Bland (exact minimum ratio, lowest
    basic index), which cannot cycle.  Pivots smaller than ``PIVOT_TOL``
    relative to the direction are never taken.  A known ``lower_bound``
    on the objective ends the search once reached.

    Both the Harris slack and skipped tiny pivots can leave basic values
    slightly below zero; these are clipped.  Callers that need an exact
    residual recompute it from the returned z.
    """
    c = np.asarray(c, dtype=float)
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    m, ncols = A.shape
    basis = list(basis)
    if len(basis) != m:
        raise LPError("basis size does not match row count")
    seen = set()
    strict = False

    for it in range(MAX_ITER):
        B = A[:, basis]
        try:
            xb = np.linalg.solve(B, b)
            y = np.linalg.solve(B.T, c[basis])
        except np.linalg.LinAlgError as exc:
            raise LPError("singular basis") from exc
        if np.any(xb < -PRIMAL_TOL * max(1.0, float(np.max(np.abs(xb))))):
            raise LPError("basis lost feasibility")
        xb = np.maximum(xb, 0.0)
        if lower_bound is not None and c[basis] @ xb <= lower_bound + 1e-15:
            break
        key = frozenset(basis)
        if key in seen:
            strict = True
        seen.add(key)
        reduced = c - y @ A
        reduced[basis] = 0.0
        candidates = np.flatnonzero(reduced < -COST_TOL)
        if candidates.size == 0:
            break
        col = int(candidates[0])
        direction = np.linalg.solve(B, A[:, col])
        rows = np.flatnonzero(direction > PIVOT_TOL * max(1.0, np.max(np.abs(direction))))
        if rows.size == 0:
            raise LPError("objective unbounded below")
        ratios = xb[rows] / direction[rows]
        if strict:
            best = ratios.min()
            tied = rows[ratios <= best + 1e-12 * max(1.0, abs(best))]
            row = int(min(tied, key=lambda r: basis[r]))
        else:
            bound = ((xb[rows] + HARRIS_DELTA) / direction[rows]).min()
            ok = rows[ratios <= bound]
            row = int(ok[np.argmax(direction[ok])])
        basis[row] = col
    else:
        raise LPError("simplex iteration limit reached")
    z = np.zeros(ncols)
    z[basis] = xb
    return LPResult(z, float(c @ z), it, float(np.linalg.cond(A[:, basis])), False, tuple(basis))


def exact_simplex_minimize(c, A, b, basis, warm=None) -> LPResult:
    """``simplex_minimize`` in exact arithmetic with strict Bland.

    Floats are dyadic rationals, so scaling each row by a power of two
    makes the data integral without rounding and the optimum found is the
    exact optimum of the given data.  The tableau is pivoted fraction-free
    (every entry stays a minor of the scaled data, all divisions exact),
    which keeps Python integers small and avoids gcd work.  ``warm`` is an
    optional starting basis (typically the float solver's last one), used
    when it is exactly nonsingular and feasible.
    """
    A = np.asarray(A, dtype=float)
    m, ncols = A.shape
    data = [_integer_row(list(A[i]) + [float(b[i])])[0] for i in range(m)]
    cost_row, cost_scale = _integer_row(list(np.asarray(c, dtype=float)) + [0.0])
    data.append(cost_row)
    start = None
    if warm:
        start = _canonical(data, list(warm))
        if start is not None:
            T, D = start
            if any(T[i][-1] * D < 0 for i in range(m)):
                start = None
    basis = list(warm) if start is not None else list(basis)
    if start is None:
        start = _canonical(data, basis)
        if start is None:
            raise LPError("singular basis")
    T, D = start
    it = 0
    for it in range(MAX_ITER):
        sd = 1 if D > 0 else -1
        in_basis = set(basis)
        col = next((j for j in range(ncols) if j not in in_basis and T[m][j] * sd < 0), None)
        if col is None:
            break
        rows = [i for i in range(m) if T[i][col] * sd > 0]
        if not rows:
            raise LPError("objective unbounded below")
        ratios = {i: Fraction(T[i][-1], T[i][col]) for i in rows}
        best = min(ratios.values())
        row = min((i for i in rows if ratios[i] == best), key=lambda i: basis[i])
        D = _int_pivot(T, row, col, D)
        basis[row] = col
    else:
        raise LPError("simplex iteration limit reached")
    z = np.zeros(ncols)
    for i, col in enumerate(basis):
        z[col] = float(Fraction(T[i][-1], D))
    value = -Fraction(T[m][-1], D) / cost_scale
    return LPResult(z, float(value), it, float(np.linalg.cond(A[:, basis])), True, tuple(basis))


def _integer_row(values):
    fracs = [Fraction(v) for v in values]
    scale = max(f.denominator for f in fracs)
    return [int(f * scale) for f in fracs], scale


def _int_pivot(T, row, col, D):
    p = T[row][col]
    pivot_row = T[row]
    for i, r in enumerate(T):
        if i == row:
            continue
        f = r[col]
        T[i] = [(a * p - f * q) // D for a, q in zip(r, pivot_row)]
    return p


def _canonical(data, basis):
    """Integer tableau in canonical form for ``basis``, or None if singular."""
    T = [list(r) for r in data]
    D = 1
    for r, col in enumerate(basis):
        if T[r][col] == 0:
            return None
        D = _int_pivot(T, r, col, D)
    return T, D


def l1_feasibility(A, b, recheck=None) -> LPResult:
    """Find x >= 0 minimizing ||A x - b||_1.

    Returns the x part and the optimal L1 residual; the system is feasible
    (to tolerance) when ``value`` is small.  The floating point answer is
    replaced by the exact one when the final basis is ill-conditioned, or
    when its residual falls inside the open interval ``recheck`` (a band
    just above the caller's feasibility tolerance, where rounding could
    flip the caller's decision).
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    m, k = A.shape
    sign = np.where(b < 0, -1.0, 1.0)
    eye = np.eye(m)
    # rows flipped so the starting artificial (a+ or a-) has coefficient +1
    big = np.hstack([A, eye, -eye]) * sign[:, None]
    rhs = b * sign
    basis = [k + i if sign[i] > 0 else k + m + i for i in range(m)]
    cost = np.concatenate([np.zeros(k), np.ones(2 * m)])
    warm = None
    try:
        res = simplex_minimize(cost, big, rhs, basis, lower_bound=0.0)
        warm = res.basis
        trusted = res.condition <= COND_LIMIT
        if trusted and recheck is not None:
            value = float(np.abs(A @ res.x[:k] - b).sum())
            trusted = not recheck[0] < value < recheck[1]
    except LPError:
        trusted = False
    if not trusted:
        res = exact_simplex_minimize(cost, big, rhs, basis, warm)
    x = res.x[:k]
    # report the residual of the returned x, not the tableau's bookkeeping
    return LPResult(x, float(np.abs(A @ x - b).sum()), res.iterations, res.condition, res.exact)
