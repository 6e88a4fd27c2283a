"""Spherical and flat-simplex geometry shared by every other module.

Points of S^n are plain float64 arrays of length n+1; ``as_point`` is the
validating constructor.  All functions are pure.
"""
from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

UNIT_TOL = 1e-9
DEGENERACY_TOL = 1e-9
SOLVE_TOL = 1e-9
INTERIOR_MARGIN = 1e-9


class GeometryError(ValueError):
    """Invalid geometric input (bad norm, wrong count, degenerate simplex)."""


class DegenerateSimplex(GeometryError):
    pass


def as_point(coords, tol: float = UNIT_TOL) -> np.ndarray:
    """Validate ``coords`` as a point of S^n (n >= 1) and return a read-only copy."""
    x = np.array(coords, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise GeometryError(f"sphere point needs a 1-d vector of length >= 2, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise GeometryError("sphere point has non-finite coordinates")
    if abs(np.linalg.norm(x) - 1.0) > tol:
        raise GeometryError(f"not a unit vector (norm {np.linalg.norm(x)!r})")
    x.flags.writeable = False
    return x


def normalize(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    norm = np.linalg.norm(v)
    if norm == 0.0:
        raise GeometryError("cannot normalize the zero vector")
    return v / norm


def geodesic_distance(x, y) -> float:
    """Great-circle distance in radians, in [0, pi].

    Uses ``2 atan2(|x - y|, |x + y|)``, which agrees with the clamped arccos
    of the inner product but keeps full precision near 0 and pi.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise GeometryError(f"dimension mismatch: {x.shape} vs {y.shape}")
    return float(2.0 * math.atan2(np.linalg.norm(x - y), np.linalg.norm(x + y)))


def _augmented(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] != pts.shape[1] + 1:
        raise GeometryError(
            f"need n+2 points in R^(n+1), got array of shape {pts.shape}")
    return np.vstack([pts.T, np.ones(pts.shape[0])])


def normalized_determinant(points) -> float:
    """|det([points; 1])| divided by the product of the augmented column norms.

    The value lies in [0, 1] (Hadamard) and is what the degeneracy tolerance
    is compared against.
    """
    m = _augmented(points)
    return float(abs(np.linalg.det(m)) / np.prod(np.linalg.norm(m, axis=0)))


def simplex_nondegenerate(points, tol: float = DEGENERACY_TOL) -> bool:
    return normalized_determinant(points) > tol


def barycentric_origin(points, tol: float = DEGENERACY_TOL) -> np.ndarray:
    """Affine weights lambda with sum(lambda) = 1 and sum(lambda_i v_i) = 0.

    The origin is interior to the simplex iff every weight exceeds
    ``INTERIOR_MARGIN``.  Raises ``DegenerateSimplex`` instead of
    regularizing a rank-deficient system.
    """
    m = _augmented(points)
    u, s, vt = np.linalg.svd(m / np.linalg.norm(m, axis=0))
    if s[-1] <= tol * s[0]:
        raise DegenerateSimplex(f"simplex is degenerate (singular values {s})")
    rhs = np.zeros(m.shape[0])
    rhs[-1] = 1.0
    lam = np.linalg.solve(m, rhs)
    if np.linalg.norm(m @ lam - rhs) > SOLVE_TOL:
        raise DegenerateSimplex("barycentric solve residual above tolerance")
    return lam


def origin_interior(points, margin: float = INTERIOR_MARGIN) -> bool:
    try:
        lam = barycentric_origin(points)
    except DegenerateSimplex:
        return False
    return bool(np.all(lam > margin))


def regular_simplex(n: int) -> np.ndarray:
    """Vertices of the regular (n+1)-simplex inscribed in S^n, as rows."""
    e = np.eye(n + 2)
    centered = e - e.mean(axis=0)
    # orthonormal basis of the hyperplane sum(x) = 0 in R^(n+2)
    q, _ = np.linalg.qr(centered.T[:, : n + 1])
    pts = centered @ q
    return pts / np.linalg.norm(pts, axis=1, keepdims=True)


def orthonormal_complement(h) -> np.ndarray:
    """Rows form an orthonormal basis of the hyperplane orthogonal to ``h``.

    Deterministic: Gram-Schmidt over the coordinate axes, skipping the axis
    most aligned with ``h``; for ``h = e_k`` this gives the other axes.
    """
    h = normalize(h)
    d = h.size
    skip = int(np.argmax(np.abs(h)))
    basis = []
    for k in range(d):
        if k == skip:
            continue
        v = np.zeros(d)
        v[k] = 1.0
        v = v - (v @ h) * h
        for b in basis:
            v = v - (v @ b) * b
        basis.append(v / np.linalg.norm(v))
    return np.array(basis)


# -- charts ---------------------------------------------------------------


class ChartKind(enum.Enum):
    SHORT = "short"
    HEMISPHERE = "hemisphere"


@dataclass(frozen=True, eq=False)
class SimplexChart:
    """Parametrization of a spherical simplex by the standard flat simplex.

    ``SHORT`` charts map t to normalize(sum t_i d_i).  ``HEMISPHERE`` charts
    have their vertices on the equator of ``pole`` and add the bump
    ``prod(t) * pole``, which vanishes on the boundary of the flat simplex,
    so the image is the closed hemisphere around ``pole``.
    """

    kind: ChartKind
    vertices: np.ndarray
    pole: np.ndarray | None = None

    def __post_init__(self):
        verts = np.array(self.vertices, dtype=float)
        if verts.ndim != 2 or verts.shape[0] != verts.shape[1]:
            raise GeometryError("chart needs n+1 vertices in R^(n+1)")
        for v in verts:
            as_point(v)
        verts.flags.writeable = False
        object.__setattr__(self, "vertices", verts)
        if self.kind is ChartKind.HEMISPHERE:
            # n+1 equator vertices span only n dimensions: require affine
            # independence inside the equator instead of linear independence
            if self.pole is None:
                raise GeometryError("hemisphere chart needs a pole")
            pole = as_point(self.pole)
            object.__setattr__(self, "pole", pole)
            if np.any(np.abs(verts @ pole) > UNIT_TOL):
                raise GeometryError("hemisphere chart vertices must lie on the equator")
            basis = orthonormal_complement(pole)
            flat = verts @ basis.T
            lam = barycentric_origin(flat)
            if not np.all(lam > INTERIOR_MARGIN):
                raise GeometryError("origin is not interior to the equatorial simplex")
        else:
            if self.pole is not None:
                raise GeometryError("short chart takes no pole")
            if np.linalg.det(verts @ verts.T) <= DEGENERACY_TOL:
                raise DegenerateSimplex("chart vertices are linearly dependent")
            # local import keeps geom free of a module-level cycle
            from .caps import shortness_witness

            shortness_witness(verts)

    @property
    def dim(self) -> int:
        return self.vertices.shape[1] - 1

    def map(self, t) -> np.ndarray:
        return chart_map(self, t)


def chart_map(chart: SimplexChart, t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if t.shape[-1] != chart.vertices.shape[0]:
        raise GeometryError("barycentric vector has the wrong length")
    if np.any(t < -SOLVE_TOL) or np.any(np.abs(t.sum(axis=-1) - 1.0) > SOLVE_TOL):
        raise GeometryError("t is not in the standard simplex")
    t = np.clip(t, 0.0, None)
    v = t @ chart.vertices
    if chart.kind is ChartKind.HEMISPHERE:
        v = v + np.prod(t, axis=-1)[..., None] * chart.pole
    norms = np.linalg.norm(v, axis=-1, keepdims=True)
    assert np.all(norms > 0.0), "chart image hit the zero vector"
    return v / norms


# -- edgewise subdivision -------------------------------------------------


@dataclass(frozen=True, eq=False)
class Triangulation:
    """Edgewise (Freudenthal) subdivision of the standard n-simplex.

    ``lattice`` rows are integer barycentric numerators summing to
    ``resolution``; ``cells`` index into them, each listed along its
    monotone lattice path so that re-subdividing a cell is hereditary.
    """

    n: int
    depth: int
    resolution: int
    lattice: np.ndarray
    cells: tuple

    @property
    def bary(self) -> np.ndarray:
        return self.lattice / self.resolution


def _path_to_bary(y, k: int) -> tuple:
    # y: k >= y_1 >= ... >= y_n >= 0  ->  barycentric numerators
    ext = (k, *y, 0)
    return tuple(ext[i] - ext[i + 1] for i in range(len(ext) - 1))


@lru_cache(maxsize=None)
def _subdivide(n: int, depth: int) -> Triangulation:
    k = 2 ** depth
    index: dict = {}
    lattice = []

    def vid(y):
        key = _path_to_bary(y, k)
        if key not in index:
            index[key] = len(lattice)
            lattice.append(key)
        return index[key]

    cells = []
    perms = list(itertools.permutations(range(n)))
    for base in itertools.product(range(k), repeat=n):
        for perm in perms:
            path = [list(base)]
            for axis in perm:
                nxt = list(path[-1])
                nxt[axis] += 1
                path.append(nxt)
            if all(k >= y[0] and all(y[i] >= y[i + 1] for i in range(n - 1)) and y[-1] >= 0
                   for y in path):
                cells.append(tuple(vid(tuple(y)) for y in path))
    if n == 0:
        cells.append((vid(()),))
    order = sorted(range(len(lattice)), key=lambda i: lattice[i], reverse=True)
    remap = {old: new for new, old in enumerate(order)}
    lat = np.array([lattice[i] for i in order], dtype=np.int64).reshape(len(order), n + 1)
    cells = sorted(tuple(remap[v] for v in c) for c in cells)
    lat.flags.writeable = False
    return Triangulation(n, depth, k, lat, tuple(cells))


def subdivide(n: int, depth: int) -> Triangulation:
    """Edgewise subdivision of the standard n-simplex into 2**(n*depth) cells."""
    if n < 0 or depth < 0:
        raise GeometryError("subdivide needs n >= 0 and depth >= 0")
    return _subdivide(n, depth)


def cell_diameter(bary_vertices) -> float:
    """Diameter of a flat cell in the max-norm on barycentric coordinates."""
    b = np.asarray(bary_vertices, dtype=float)
    return float(np.max(np.abs(b[:, None, :] - b[None, :, :])))
