"""Caps and short sets as finitely generated spherical polytopes.

A cap is ``cone(generators) ∩ S^n`` for unit generators that all lie in one
open hemisphere.  Every predicate here (membership, distance, intersection,
slicing) reduces to a small linear or least-squares problem on the
generators.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .geom import GeometryError, UNIT_TOL, as_point, normalize, orthonormal_complement
from .lp import l1_feasibility

FEAS_TOL = 1e-9
SHORT_MARGIN = 1e-7
DIST_TOL = 1e-6
FACE_LIMIT = 12
# float residuals in (FEAS_TOL, RECHECK_FACTOR * FEAS_TOL) are re-solved exactly
RECHECK_FACTOR = 1e4

_RANK_TOL = 1e-10


class NotShort(GeometryError):
    """The points are not contained in any open hemisphere."""


class FaceLimitExceeded(ValueError):
    pass


def _as_points(points) -> np.ndarray:
    rows = [as_point(p) for p in points]
    if not rows:
        raise GeometryError("need at least one point")
    dims = {r.size for r in rows}
    if len(dims) != 1:
        raise GeometryError(f"dimension mismatch among points: {sorted(dims)}")
    arr = np.array(rows)
    arr.flags.writeable = False
    return arr


def min_norm_point(points) -> np.ndarray:
    """Nearest point of conv(points) to the origin (Wolfe's algorithm)."""
    P = np.asarray(points, dtype=float)
    scale = float(np.max(np.sum(P * P, axis=1)))
    tol = 1e-15 * max(scale, 1.0)
    active = [int(np.argmin(np.sum(P * P, axis=1)))]
    weights = np.array([1.0])
    x = P[active[0]].copy()
    for _ in range(100 * (len(P) + 1)):
        j = int(np.argmin(P @ x))
        if x @ x - P[j] @ x <= 1e-12 * scale or j in active:
            break
        active.append(j)
        weights = np.append(weights, 0.0)
        while True:
            S = P[active]
            s = len(active)
            kkt = np.zeros((s + 1, s + 1))
            kkt[:s, :s] = S @ S.T
            kkt[:s, s] = 1.0
            kkt[s, :s] = 1.0
            rhs = np.zeros(s + 1)
            rhs[s] = 1.0
            w = np.linalg.lstsq(kkt, rhs, rcond=None)[0][:s]
            if np.all(w > tol):
                weights = w
                x = w @ S
                break
            neg = w <= tol
            theta = min(1.0, float(np.min(weights[neg] / (weights[neg] - w[neg]))))
            weights = weights + theta * (w - weights)
            keep = weights > tol
            keep[np.argmax(weights)] = True
            active = [a for a, k in zip(active, keep) if k]
            weights = weights[keep]
            weights = weights / weights.sum()
            x = weights @ P[active]
    return x


def shortness_witness(points) -> np.ndarray:
    """Unit u maximizing min_g <u, g>; raises ``NotShort`` if that max-min
    margin does not exceed ``SHORT_MARGIN``.

    The optimum is the direction of the nearest point of conv(points) to 0,
    so failure is the same as 0 lying (within tolerance) in the hull.
    """
    P = np.asarray(points, dtype=float)
    if P.ndim != 2 or P.shape[0] == 0:
        raise GeometryError("shortness test needs a nonempty list of points")
    p = min_norm_point(P)
    norm = np.linalg.norm(p)
    if norm <= SHORT_MARGIN:
        raise NotShort("points are not contained in an open hemisphere")
    u = p / norm
    if float(np.min(P @ u)) <= SHORT_MARGIN:
        raise NotShort("hemisphere margin below tolerance")
    return u


@dataclass(frozen=True, eq=False)
class Cap:
    generators: np.ndarray
    witness: np.ndarray
    margin: float

    @property
    def dim(self) -> int:
        return self.generators.shape[1] - 1

    @property
    def ambient(self) -> int:
        return self.generators.shape[1]

    def __len__(self):
        return self.generators.shape[0]

    def __repr__(self):
        return f"Cap(dim={self.dim}, generators={self.generators.tolist()})"

    @cached_property
    def independent(self) -> bool:
        k, d = self.generators.shape
        if k > d:
            return False
        s = np.linalg.svd(self.generators, compute_uv=False)
        return bool(s[-1] > _RANK_TOL * s[0])

    @cached_property
    def _pinv(self) -> np.ndarray:
        return np.linalg.pinv(self.generators.T)

    @cached_property
    def _faces(self) -> list:
        G = self.generators
        k, d = G.shape
        if k > FACE_LIMIT:
            raise FaceLimitExceeded(
                f"{k} generators exceed the face-enumeration limit {FACE_LIMIT}")
        faces = []
        for size in range(1, min(k, d) + 1):
            for idx in itertools.combinations(range(k), size):
                sub = G[list(idx)]
                s = np.linalg.svd(sub, compute_uv=False)
                if s[-1] <= _RANK_TOL * s[0]:
                    continue
                faces.append((sub, np.linalg.pinv(sub.T)))
        return faces


@dataclass(frozen=True, eq=False)
class ShortSet:
    parts: tuple
    witness: np.ndarray
    margin: float

    @property
    def dim(self) -> int:
        return self.parts[0].dim

    @property
    def generators(self) -> np.ndarray:
        return np.vstack([c.generators for c in self.parts])

    def __repr__(self):
        return f"ShortSet(dim={self.dim}, parts={len(self.parts)})"


@dataclass(frozen=True)
class SeparatingHalfspace:
    """{y : <normal, y> + offset <= 0} contains the cap; the origin is strictly outside."""

    normal: np.ndarray
    offset: float


def make_cap(generators) -> Cap:
    G = _as_points(generators)
    u = shortness_witness(G)
    return Cap(G, u, float(np.min(G @ u)))


def make_shortset(caps) -> ShortSet:
    parts = tuple(c if isinstance(c, Cap) else make_cap(c) for c in caps)
    if not parts:
        raise GeometryError("a short set needs at least one part")
    if len({c.ambient for c in parts}) != 1:
        raise GeometryError("parts of a short set must share the dimension")
    G = np.vstack([c.generators for c in parts])
    u = shortness_witness(G)
    return ShortSet(parts, u, float(np.min(G @ u)))


def as_shortset(obj) -> ShortSet:
    if isinstance(obj, ShortSet):
        return obj
    if isinstance(obj, Cap):
        return ShortSet((obj,), obj.witness, obj.margin)
    raise TypeError(f"expected Cap or ShortSet, got {type(obj).__name__}")


# -- membership -----------------------------------------------------------


def _member_exact(cap: Cap, x: np.ndarray) -> bool:
    res = l1_feasibility(cap.generators.T, x)
    if res.value <= FEAS_TOL:
        return True
    if res.value > math.sqrt(cap.ambient) * FEAS_TOL:
        return False
    # L1 and L2 disagree about the tolerance; settle it with the projector
    if len(cap) <= FACE_LIMIT:
        _, resid = project_to_cone(cap, x[None, :])
        return bool(resid[0] <= FEAS_TOL)
    return True


def cap_members(cap: Cap, X) -> np.ndarray:
    """Vectorized membership: rows x of X with dist(x, cone) <= FEAS_TOL."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != cap.ambient:
        raise GeometryError("dimension mismatch between cap and points")
    if not cap.independent:
        return np.array([_member_exact(cap, x) for x in X], dtype=bool)
    lam = X @ cap._pinv.T
    resid = np.linalg.norm(X - lam @ cap.generators, axis=1)
    lo = lam.min(axis=1)
    inside = (lo >= 0.0) & (resid <= FEAS_TOL)
    slack = np.linalg.norm(cap._pinv, 2) * FEAS_TOL
    outside = (lo < -slack) | (resid > FEAS_TOL)
    result = inside.copy()
    for i in np.flatnonzero(~inside & ~outside):
        result[i] = _member_exact(cap, X[i])
    return result


def cap_membership(cap: Cap, x) -> bool:
    return bool(cap_members(cap, np.asarray(x, dtype=float)[None, :])[0])


def set_members(s, X) -> np.ndarray:
    """Membership in a Cap or in the union of a ShortSet's parts."""
    s = as_shortset(s)
    X = np.atleast_2d(np.asarray(X, dtype=float))
    out = np.zeros(X.shape[0], dtype=bool)
    for part in s.parts:
        todo = ~out
        if not todo.any():
            break
        out[todo] = cap_members(part, X[todo])
    return out


# -- projection and distance ----------------------------------------------


def project_to_cone(cap: Cap, X):
    """Euclidean projection of each row of X onto cone(generators).

    Enumerates the linearly independent generator subsets (faces), keeps the
    nonnegative least-squares solutions and takes the closest.  The apex 0
    is always a candidate.  Returns (projections, residual norms).
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    best_p = np.zeros_like(X)
    best_r = np.linalg.norm(X, axis=1)
    for sub, pinv in cap._faces:
        mu = X @ pinv.T
        ok = mu.min(axis=1) >= -1e-12
        if not ok.any():
            continue
        p = np.clip(mu[ok], 0.0, None) @ sub
        r = np.linalg.norm(X[ok] - p, axis=1)
        rows = np.flatnonzero(ok)
        better = r < best_r[rows]
        best_r[rows[better]] = r[better]
        best_p[rows[better]] = p[better]
    return best_p, best_r


def cap_distances(cap: Cap, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != cap.ambient:
        raise GeometryError("dimension mismatch between cap and points")
    p, r = project_to_cone(cap, X)
    pn = np.linalg.norm(p, axis=1)
    dist = np.arctan2(r, pn)
    apex = pn <= 1e-12
    if apex.any():
        # x lies in the polar cone; the nearest cap point is a generator
        G = cap.generators
        Xa = X[apex]
        diff = np.linalg.norm(Xa[:, None, :] - G[None, :, :], axis=2)
        summ = np.linalg.norm(Xa[:, None, :] + G[None, :, :], axis=2)
        dist[apex] = np.min(2.0 * np.arctan2(diff, summ), axis=1)
    return dist


def cap_distance(cap: Cap, x) -> float:
    """Geodesic distance (radians) from x to the cap."""
    return float(cap_distances(cap, np.asarray(x, dtype=float)[None, :])[0])


def set_distances(s, X) -> np.ndarray:
    s = as_shortset(s)
    return np.min([cap_distances(part, X) for part in s.parts], axis=0)


# -- hulls, intersections, separation, slicing ----------------------------


def geodesic_hull(obj) -> Cap:
    """Geodesic convex hull of a short set or point list, as a single cap."""
    if isinstance(obj, ShortSet):
        return make_cap(obj.generators)
    if isinstance(obj, Cap):
        return obj
    return make_cap(obj)


def intersection_search(caps):
    """Joint feasibility problem behind ``intersection_witness``.

    Returns (point or None, L1 residual of the phase-one problem).  The
    common cone vector is normalized by <u, v> = 1 for the first cap's
    witness u, which excludes the trivial solution v = 0.
    """
    caps = list(caps)
    if not caps:
        raise GeometryError("need at least one cap")
    d = caps[0].ambient
    if any(c.ambient != d for c in caps):
        raise GeometryError("dimension mismatch among caps")
    sizes = [len(c) for c in caps]
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    nvar = int(offsets[-1])
    rows = d * (len(caps) - 1) + 1
    A = np.zeros((rows, nvar))
    b = np.zeros(rows)
    G0 = caps[0].generators.T
    for i, c in enumerate(caps[1:], start=1):
        r = slice(d * (i - 1), d * i)
        A[r, offsets[0]:offsets[1]] = G0
        A[r, offsets[i]:offsets[i + 1]] = -c.generators.T
    A[-1, offsets[0]:offsets[1]] = caps[0].witness @ G0
    b[-1] = 1.0
    res = l1_feasibility(A, b, recheck=(FEAS_TOL, RECHECK_FACTOR * FEAS_TOL))
    if res.value > FEAS_TOL:
        return None, res.value
    vecs = [caps[i].generators.T @ res.x[offsets[i]:offsets[i + 1]] for i in range(len(caps))]
    for v in (vecs[0], np.mean(vecs, axis=0)):
        if np.linalg.norm(v) == 0.0:
            continue
        x = normalize(v)
        if all(cap_membership(c, x) for c in caps):
            return x, res.value
    return None, res.value


def intersection_witness(caps):
    """A point common to all caps, or None when they do not meet."""
    return intersection_search(caps)[0]


def separating_halfspace(cap: Cap) -> SeparatingHalfspace:
    return SeparatingHalfspace(-cap.witness, cap.margin / 2.0)


def slice_to_equator(cap: Cap, h, basis=None):
    """Intersect the cap with the great subsphere orthogonal to ``h``.

    Returns a cap of S^(n-1) in the coordinates of ``basis`` (rows: an
    orthonormal basis of h-perp; derived from h when omitted), or None when
    the cap misses the equator.
    """
    h = normalize(h)
    if h.size != cap.ambient:
        raise GeometryError("normal has the wrong dimension")
    if cap.ambient < 3:
        raise GeometryError("the equator of S^1 is not a sphere of dimension >= 1")
    basis = orthonormal_complement(h) if basis is None else np.asarray(basis, dtype=float)
    if basis.shape != (cap.ambient - 1, cap.ambient) or not np.allclose(
            basis @ basis.T, np.eye(cap.ambient - 1), atol=UNIT_TOL) or np.any(
            np.abs(basis @ h) > UNIT_TOL):
        raise GeometryError("basis must be orthonormal and orthogonal to h")
    G = cap.generators
    level = G @ h
    on = np.abs(level) <= FEAS_TOL
    new = [g for g in G[on]]
    pos = np.flatnonzero(level > FEAS_TOL)
    neg = np.flatnonzero(level < -FEAS_TOL)
    for i in pos:
        for j in neg:
            v = level[i] * G[j] - level[j] * G[i]
            new.append(normalize(v))
    if not new:
        return None
    local = np.array([normalize(basis @ v) for v in new])
    return make_cap(local)


def lift_from_equator(points, h, basis=None) -> np.ndarray:
    """Inverse of the equator coordinates used by ``slice_to_equator``."""
    h = normalize(h)
    basis = orthonormal_complement(h) if basis is None else np.asarray(basis, dtype=float)
    return np.atleast_2d(points) @ basis


# -- JSON -----------------------------------------------------------------


def cap_to_json(cap: Cap) -> dict:
    return {"generators": cap.generators.tolist()}


def shortset_to_json(s: ShortSet) -> dict:
    return {"parts": [cap_to_json(c) for c in s.parts]}


def _unit(row) -> np.ndarray:
    return as_point([float(a) for a in row])


def cap_from_json(obj) -> Cap:
    return make_cap([_unit(g) for g in obj["generators"]])


def shortset_from_json(obj) -> ShortSet:
    return make_shortset([cap_from_json(p) for p in obj["parts"]])
