"""Covering certificates for n+2 caps, uncovered points for <= n+1 caps.

For a family of n+2 caps on S^n, coverage is decided by two finite
intersection tests: (i) all caps have no common point and (ii) every n+1 of
them share a point.  The points found for (ii) additionally span a
nondegenerate simplex around the origin whenever the family is a cover.
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from . import geom
from .caps import (
    FEAS_TOL,
    Cap,
    as_shortset,
    cap_membership,
    geodesic_hull,
    intersection_search,
    make_cap,
)

PERTURB_EPS = 1e-9
RETRY_LIMIT = 16
SELECTION_LIMIT = 10 ** 6
FRAGILE_FACTOR = 10.0


class FamilySizeError(ValueError):
    pass


class WitnessError(RuntimeError):
    pass


@dataclass(frozen=True)
class ConditionIII:
    nondegenerate: bool
    origin_barycentric: list
    origin_interior: bool
    normalized_det: float = 0.0

    def to_json(self) -> dict:
        return {
            "nondegenerate": self.nondegenerate,
            "origin_barycentric": list(self.origin_barycentric),
            "origin_interior": self.origin_interior,
        }


@dataclass(frozen=True)
class CoverCertificate:
    condition_i: bool
    condition_ii: bool
    condition_iii: ConditionIII
    witnesses: list
    margins: list
    fragile: bool
    common_point: np.ndarray | None = None
    note: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def certified(self) -> bool:
        return self.condition_i and self.condition_ii

    def to_json(self) -> dict:
        out = {
            "certified": self.certified,
            "condition_i": self.condition_i,
            "condition_ii": self.condition_ii,
            "condition_iii": self.condition_iii.to_json(),
            "witnesses": [None if w is None else list(map(float, w)) for w in self.witnesses],
            "margins": [float(m) for m in self.margins],
            "fragile": self.fragile,
        }
        if self.note:
            out["note"] = self.note
        return out


def _common_dim(sets) -> int:
    dims = {s.dim for s in sets}
    if len(dims) != 1:
        raise geom.GeometryError(f"dimension mismatch in family: {sorted(dims)}")
    return dims.pop()


def facet_caps(vertices) -> list:
    """Radial projections of the facets of a simplex with the origin inside.

    Cap j is generated by every vertex except v_j.
    """
    V = np.array([geom.as_point(v) for v in vertices])
    n = V.shape[1] - 1
    if V.shape[0] != n + 2:
        raise geom.GeometryError(f"need n+2 = {n + 2} vertices, got {V.shape[0]}")
    lam = geom.barycentric_origin(V)
    if not np.all(lam > geom.INTERIOR_MARGIN):
        raise geom.GeometryError("origin is not interior to the simplex")
    return [make_cap(np.delete(V, j, axis=0)) for j in range(n + 2)]


def _condition_iii(witnesses) -> ConditionIII:
    if any(w is None for w in witnesses):
        return ConditionIII(False, [], False)
    W = np.array(witnesses)
    det = geom.normalized_determinant(W)
    nondeg = det > geom.DEGENERACY_TOL
    if not nondeg:
        return ConditionIII(False, [], False, det)
    lam = geom.barycentric_origin(W)
    return ConditionIII(True, lam.tolist(), bool(np.all(lam > geom.INTERIOR_MARGIN)), det)


def _fragile(total_gap, sub_gaps, cond3: ConditionIII, certified: bool) -> bool:
    limit = FRAGILE_FACTOR * FEAS_TOL
    gaps = [g for g in [total_gap, *sub_gaps] if g is not None and g > 0]
    if any(g < limit for g in gaps):
        return True
    if certified and cond3.origin_barycentric and min(cond3.origin_barycentric) < limit:
        return True
    return False


def cover_certificate(caps) -> CoverCertificate:
    """Decide whether n+2 caps cover S^n.

    ``margins`` holds the phase-one residual of the total intersection,
    then of each (n+1)-subfamily (0 where a witness was found), then the
    smallest origin barycentric weight (0 when not computed).  A positive
    residual or weight below ``10 * FEAS_TOL`` marks the result fragile.
    """
    caps = list(caps)
    if not all(isinstance(c, Cap) for c in caps):
        raise TypeError("cover_certificate takes caps; use shortset_family_check for short sets")
    n = _common_dim(caps)
    if len(caps) != n + 2:
        raise FamilySizeError(f"need n+2 = {n + 2} caps on S^{n}, got {len(caps)}")
    common, total_gap = intersection_search(caps)
    witnesses, sub_gaps = [], []
    for j in range(n + 2):
        w, gap = intersection_search(caps[:j] + caps[j + 1:])
        witnesses.append(w)
        sub_gaps.append(0.0 if w is not None else gap)
    return _assemble(common, total_gap, witnesses, sub_gaps)


def _assemble(common, total_gap, witnesses, sub_gaps, note="") -> CoverCertificate:
    cond_i = common is None
    cond_ii = all(w is not None for w in witnesses)
    cond3 = _condition_iii(witnesses)
    margins = [0.0 if common is not None else total_gap, *sub_gaps,
               min(cond3.origin_barycentric) if cond3.origin_barycentric else 0.0]
    fragile = _fragile(total_gap if common is None else None,
                       [g for g, w in zip(sub_gaps, witnesses) if w is None],
                       cond3, cond_i and cond_ii)
    return CoverCertificate(cond_i, cond_ii, cond3, witnesses, margins, fragile,
                            common_point=common, note=note)


# -- uncovered points -----------------------------------------------------


def _instance_seed(arrays) -> int:
    h = hashlib.sha256()
    for a in arrays:
        h.update(np.ascontiguousarray(a, dtype=float).tobytes())
    return int.from_bytes(h.digest()[:8], "little")


def uncovered_witness(caps) -> np.ndarray:
    """A unit vector outside every cap of a family of at most n+1 caps.

    Any unit x with <u_i, x> <= 0 for all hemisphere witnesses u_i works.
    With k <= n caps, or n+1 linearly dependent witnesses, x is taken from
    the null space of the witness matrix (sign chosen to keep every <u_i, x>
    nonpositive); otherwise <u_i, x> = -1 is solved.  If the check fails the
    witnesses are perturbed by ``PERTURB_EPS`` (seeded from the instance)
    and the construction is retried.
    """
    caps = list(caps)
    if not caps:
        raise FamilySizeError("need at least one cap")
    n = _common_dim(caps)
    k = len(caps)
    if k > n + 1:
        raise FamilySizeError(f"{k} caps on S^{n}: family size admits a cover; use check")
    U = np.array([c.witness for c in caps])
    rng = np.random.Generator(np.random.Philox(_instance_seed([U])))
    for attempt in range(RETRY_LIMIT + 1):
        Ut = U if attempt == 0 else U + PERTURB_EPS * rng.standard_normal(U.shape)
        _, s, vt = np.linalg.svd(Ut)
        if k <= n or s[-1] <= geom.DEGENERACY_TOL * s[0]:
            x = vt[-1]
            if np.max(U @ x) > np.max(-U @ x):
                x = -x
        else:
            x = np.linalg.solve(Ut, -np.ones(k))
        x = x / np.linalg.norm(x)
        if np.all(U @ x <= 1e-12) and not any(cap_membership(c, x) for c in caps):
            return x
    raise WitnessError("retry limit exceeded while searching for an uncovered point")


# -- short sets -----------------------------------------------------------


@dataclass(frozen=True)
class ShortSetReport:
    certificate: CoverCertificate
    selections: list
    note: str = ("conditions (i)-(iii) are necessary for a cover by short closed sets; "
                 "unlike for caps they do not imply coverage")

    @property
    def condition_i(self):
        return self.certificate.condition_i

    @property
    def condition_ii(self):
        return self.certificate.condition_ii

    @property
    def condition_iii(self):
        return self.certificate.condition_iii

    @property
    def witnesses(self):
        return self.certificate.witnesses

    def to_json(self) -> dict:
        out = self.certificate.to_json()
        out["selections"] = [None if s is None else list(s) for s in self.selections]
        out["note"] = self.note
        return out


def _find_selection(sets, guide=None):
    """Depth-first search for one part per set with a common point.

    Parts containing ``guide`` are tried first.  Returns
    (point, selection, residual) where residual is the smallest phase-one
    residual among the pruned selections when nothing was found.
    """
    if all(len(s.parts) == 1 for s in sets):
        point, gap = intersection_search([s.parts[0] for s in sets])
        return point, (None if point is None else (0,) * len(sets)), (0.0 if point is not None else gap)
    orders = []
    for s in sets:
        idx = list(range(len(s.parts)))
        if guide is not None:
            idx.sort(key=lambda i: not cap_membership(s.parts[i], guide))
        orders.append(idx)
    best_gap = math.inf
    chosen = []

    def dfs(level):
        nonlocal best_gap
        if level == len(sets):
            return None
        for i in orders[level]:
            chosen.append(i)
            caps = [sets[m].parts[p] for m, p in enumerate(chosen)]
            point, gap = intersection_search(caps)
            if point is not None:
                if level == len(sets) - 1:
                    return point
                found = dfs(level + 1)
                if found is not None:
                    return found
            else:
                best_gap = min(best_gap, gap)
            chosen.pop()
        return None

    point = dfs(0)
    if point is None:
        return None, None, best_gap
    return point, tuple(chosen), 0.0


def shortset_family_check(sets) -> ShortSetReport:
    """Necessary covering conditions for n+2 short closed sets.

    Intersections of unions are expanded into part selections.  Condition
    (i) first tries the hull shortcut: the sets sit inside their geodesic
    hulls, so disjoint hulls settle it without expansion.
    """
    sets = [as_shortset(s) for s in sets]
    n = _common_dim(sets)
    if len(sets) != n + 2:
        raise FamilySizeError(f"need n+2 = {n + 2} short sets on S^{n}, got {len(sets)}")
    if math.prod(len(s.parts) for s in sets) > SELECTION_LIMIT:
        raise FamilySizeError("part selections exceed the expansion limit")

    hulls = [geodesic_hull(s) if len(s.parts) > 1 else s.parts[0] for s in sets]
    hull_common, hull_gap = intersection_search(hulls)
    if hull_common is None:
        common, total_gap = None, hull_gap
    else:
        common, _, total_gap = _find_selection(sets, guide=hull_common)

    witnesses, sub_gaps, selections = [], [], []
    for j in range(n + 2):
        others = sets[:j] + sets[j + 1:]
        guide = intersection_search(hulls[:j] + hulls[j + 1:])[0]
        point, sel, gap = _find_selection(others, guide=guide)
        witnesses.append(point)
        sub_gaps.append(gap if point is None else 0.0)
        selections.append(sel)
    cert = _assemble(common, total_gap, witnesses, sub_gaps)
    return ShortSetReport(cert, selections)
