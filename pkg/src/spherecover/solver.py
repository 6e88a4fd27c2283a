"""Common points of closed covers of a spherical simplex, and Sperner cells.

``common_point`` looks for a point close to all n+1 sets of a
``Lemma1Instance`` by branch and bound on the potential
``phi(t) = max_i dist(sets[i], chart(t))`` over nested edgewise
subdivisions of the barycentric simplex.  Under the instance hypotheses
(the sets cover the chart image and set i contains the face opposite
vertex i) the sets have a common point, so phi has a zero.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import geom
from .caps import DIST_TOL, as_shortset, project_to_cone, set_distances, set_members
from .geom import SimplexChart, chart_map, geodesic_distance, subdivide
from .oracle import rng_for

DEPTH_LIMIT = 20
FACE_PROBES = 50
BEAM_WIDTH = 256
POLISH_STEPS = 60


class BoundaryConditionError(ValueError):
    def __init__(self, vertex, label):
        super().__init__(f"label {label} at vertex {vertex} is outside its support")
        self.vertex = vertex
        self.label = label


@dataclass(frozen=True, eq=False)
class Lemma1Instance:
    chart: SimplexChart
    sets: tuple
    face_condition_checked: bool
    face_failures: tuple = ()

    @property
    def n(self) -> int:
        return self.chart.dim


def make_instance(chart: SimplexChart, sets, probes: int = FACE_PROBES, seed: int = 0) -> Lemma1Instance:
    """Wrap a chart and its sets, probing the face condition.

    For each i, ``probes`` seeded points of the face opposite vertex i (plus
    the face's vertices) must belong to ``sets[i]``.  Fewer than n+1 sets
    are accepted so that broken covers can be diagnosed; the face check
    then fails.
    """
    sets = tuple(as_shortset(s) for s in sets)
    n = chart.dim
    if not sets or len(sets) > n + 1:
        raise geom.GeometryError(f"need between 1 and {n + 1} sets, got {len(sets)}")
    if any(s.dim != n for s in sets):
        raise geom.GeometryError("set dimension does not match the chart")
    rng = rng_for(seed)
    failures = []
    for i, s in enumerate(sets):
        t = rng.dirichlet(np.ones(n), size=probes) if n > 1 else np.ones((probes, 1))
        t = np.vstack([t, np.eye(n)])
        full = np.insert(t, i, 0.0, axis=1)
        ok = set_members(s, chart_map(chart, full))
        if not ok.all():
            failures.append(i)
    checked = len(sets) == n + 1 and not failures
    return Lemma1Instance(chart, sets, checked, tuple(failures))


@dataclass(frozen=True)
class SolverResult:
    status: str
    point: np.ndarray
    bary: np.ndarray
    max_dist: float
    depth: int
    history: list = field(default_factory=list)
    message: str = ""

    def to_json(self) -> dict:
        return {
            "point": self.point.tolist(),
            "max_dist": float(self.max_dist),
            "depth": self.depth,
            "status": self.status,
        }


class _Potential:
    def __init__(self, inst: Lemma1Instance):
        self.inst = inst
        self.cache: dict = {}

    @staticmethod
    def _key(t):
        return tuple(np.round(t * 2.0 ** 52).astype(np.int64).tolist())

    def __call__(self, T: np.ndarray):
        keys = [self._key(t) for t in T]
        todo = [i for i, k in enumerate(keys) if k not in self.cache]
        if todo:
            X = chart_map(self.inst.chart, T[todo])
            n = self.inst.n
            D = np.full((len(todo), n + 1), math.pi)
            for i, s in enumerate(self.inst.sets):
                D[:, i] = set_distances(s, X)
            for row, idx in enumerate(todo):
                present = D[row, : len(self.inst.sets)]
                self.cache[keys[idx]] = (float(D[row].max()), float(present.min()), X[row])
        return [self.cache[k] for k in keys]


def _children(cell: np.ndarray, template) -> list:
    lat = template.lattice / template.resolution
    return [lat[list(c)] @ cell for c in template.cells]


def _nearest_on_set(s, x):
    best = None
    for part in s.parts:
        p, r = project_to_cone(part, x[None, :])
        if np.linalg.norm(p[0]) > 0 and (best is None or r[0] < best[0]):
            best = (r[0], p[0] / np.linalg.norm(p[0]))
    return None if best is None else best[1]


def _short_chart_coords(chart: SimplexChart, x):
    w = np.linalg.solve(chart.vertices.T, x)
    if w.sum() <= 0:
        return None
    t = w / w.sum()
    return t if t.min() >= 0.0 else None


def _polish(inst: Lemma1Instance, phi, start_t, start_val, eps):
    """Averaged projections from the incumbent, kept only while phi drops.

    Short charts only: the result must map back into the flat simplex.
    """
    if inst.chart.kind is not geom.ChartKind.SHORT or len(inst.sets) != inst.n + 1:
        return None
    t, val = start_t, start_val
    x = chart_map(inst.chart, t)
    for _ in range(POLISH_STEPS):
        targets = [_nearest_on_set(s, x) for s in inst.sets]
        if any(q is None for q in targets):
            return None
        x = geom.normalize(np.mean(targets, axis=0))
        cand = _short_chart_coords(inst.chart, x)
        if cand is None:
            break
        cval = phi(cand[None, :])[0][0]
        if cval >= val:
            break
        t, val = cand, cval
        if val <= eps:
            break
    return (val, t, chart_map(inst.chart, t)) if val < start_val else None


def common_point(inst: Lemma1Instance, eps: float, depth_limit: int = DEPTH_LIMIT,
                 beam: int = BEAM_WIDTH, cover_slack: float = DIST_TOL,
                 polish: bool = True) -> SolverResult:
    """Find p on the chart with max_i dist(sets[i], p) <= eps.

    Each level evaluates phi at the vertices and centroid of every live
    cell.  A cell's lower bound is its best value minus twice the geodesic
    spread of its evaluated images (phi is 1-Lipschitz on the sphere);
    cells whose bound exceeds the incumbent are dropped, the rest refined.
    A point at distance > ``cover_slack`` from every set proves the sets do
    not cover the chart image (status "not_a_cover").  With ``polish`` the
    incumbent of each level is also refined by averaged projections onto
    the sets (short charts), which converges quickly once the bound has
    localized the common point.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    n = inst.n
    template = subdivide(n, 1)
    phi = _Potential(inst)
    cells = [np.eye(n + 1)]
    best = None
    history = []
    for depth in range(depth_limit + 1):
        pts = np.vstack([np.vstack([c, c.mean(axis=0)]) for c in cells])
        vals = phi(pts)
        for t, (val, nearest, x) in zip(pts, vals):
            if nearest > cover_slack:
                return SolverResult("not_a_cover", x, t, val, depth, history,
                                    f"point at distance {nearest:.3g} from every set")
            if best is None or val < best[0]:
                best = (val, t, x)
        if polish and best[0] > eps:
            better = _polish(inst, phi, best[1], best[0], eps)
            if better is not None:
                best = better
        history.append(best[0])
        if best[0] <= eps:
            return SolverResult("ok", best[2], best[1], best[0], depth, history)
        if depth == depth_limit:
            break
        per = n + 2
        scored = []
        for idx, cell in enumerate(cells):
            block = vals[idx * per:(idx + 1) * per]
            centre = block[-1][2]
            spread = max(geodesic_distance(centre, v[2]) for v in block[:-1])
            lb = min(v[0] for v in block) - 2.0 * spread
            if lb <= best[0]:
                scored.append((lb, idx))
        scored.sort()
        cells = [child for _, idx in scored[:beam] for child in _children(cells[idx], template)]
    return SolverResult("limit", best[2], best[1], best[0], depth_limit, history,
                        "depth limit reached: hypotheses violated or eps too small")


# -- fixtures -------------------------------------------------------------


def hemisphere_voronoi_instance(seed: int = 0) -> Lemma1Instance:
    """Northern hemisphere of S^2 on the three cube roots of unity.

    Set i is the closed region of the hemisphere nearest to the face
    opposite d_i, i.e. the spherical Voronoi cell of -d_i: cone(d_j, d_k,
    north pole).  The three sets meet only at the pole.
    """
    from .caps import make_cap

    ang = 2 * math.pi * np.arange(3) / 3
    d = np.column_stack([np.cos(ang), np.sin(ang), np.zeros(3)])
    pole = np.array([0.0, 0.0, 1.0])
    chart = SimplexChart(geom.ChartKind.HEMISPHERE, d, pole)
    sets = [make_cap(np.vstack([np.delete(d, i, axis=0), pole])) for i in range(3)]
    return make_instance(chart, sets, seed=seed)


# -- Sperner --------------------------------------------------------------


def _labels(labeling, tri) -> list:
    out = []
    for row in tri.lattice:
        key = tuple(int(a) for a in row)
        label = labeling[key] if isinstance(labeling, dict) else labeling(key)
        support = {i + 1 for i, a in enumerate(key) if a > 0}
        if label not in support:
            raise BoundaryConditionError(key, label)
        out.append(label)
    return out


def fully_labeled_cells(labeling, n: int, depth: int) -> list:
    """All cells of ``subdivide(n, depth)`` carrying every label 1..n+1.

    ``labeling`` maps integer barycentric numerators (summing to 2**depth)
    to a label, as a callable or a dict.
    """
    tri = subdivide(n, depth)
    labels = _labels(labeling, tri)
    full = set(range(1, n + 2))
    return [c for c in tri.cells if {labels[v] for v in c} == full]


def sperner_fully_labeled(labeling, n: int, depth: int) -> tuple:
    """First fully labeled cell in lexicographic cell order, as lattice rows."""
    tri = subdivide(n, depth)
    labels = _labels(labeling, tri)
    full = set(range(1, n + 2))
    for c in tri.cells:
        if {labels[v] for v in c} == full:
            return tuple(tuple(int(a) for a in tri.lattice[v]) for v in c)
    raise AssertionError("no fully labeled cell; Sperner's lemma guarantees one")


def star_instance(n: int, seed: int, shatter_depth: int = 1):
    """Short-chart instance whose sets meet at one random interior point.

    The chart vertices d_i are a random short simplex and c = chart(t_c)
    a random interior point.  Set i is the cap on the d_k (k != i) and c,
    shattered into ``shatter_depth`` levels of pieces.  The sets cover the
    spherical simplex (star decomposition from c), set i contains the face
    opposite d_i, and their only common point is c.  Returns (instance, c).
    """
    from .caps import make_cap
    from .oracle import shatter_cap

    rng = rng_for(seed)
    while True:
        axis = geom.normalize(rng.standard_normal(n + 1))
        d = axis + 0.9 * rng.standard_normal((n + 1, n + 1))
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        if np.min(d @ axis) < 0.2 or abs(np.linalg.det(d)) < 0.05:
            continue
        try:
            chart = SimplexChart(geom.ChartKind.SHORT, d)
        except geom.GeometryError:
            continue
        t_c = rng.dirichlet(np.full(n + 1, 4.0))
        if t_c.min() < 0.1:
            continue
        c = chart_map(chart, t_c)
        sets = []
        for i in range(n + 1):
            gens = d.copy()
            gens[i] = c
            sets.append(shatter_cap(make_cap(gens), shatter_depth))
        return make_instance(chart, sets, seed=seed), c
