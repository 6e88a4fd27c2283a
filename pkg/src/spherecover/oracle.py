"""Ground truth and instance generators.

On the circle coverage is decided exactly by an endpoint sweep over arcs
whose angles (in degrees) may be ``fractions.Fraction``.  On S^n, n >= 2,
a deterministic octahedral mesh gives refutation-only evidence.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import geom
from .caps import (
    Cap,
    ShortSet,
    as_shortset,
    cap_members,
    intersection_witness,
    make_cap,
    make_shortset,
    set_members,
)
from .geom import GeometryError

FULL = 360
ORIGIN_FLOOR = 0.01
MAX_REJECTIONS = 10 ** 5


def rng_for(seed: int) -> np.random.Generator:
    """Counter-based generator so any seed gives the same stream everywhere."""
    return np.random.Generator(np.random.Philox(int(seed)))


# -- arcs -----------------------------------------------------------------


def _mod(a):
    return a % FULL


@dataclass(frozen=True)
class ArcSet:
    """Finite union of closed counterclockwise arcs, stored as (start, length) in degrees."""

    arcs: tuple

    @classmethod
    def from_pairs(cls, pairs) -> "ArcSet":
        arcs = []
        for start, end in pairs:
            length = _mod(end - start)
            if length == 0:
                # [a, a + 360] would be the whole circle; a point arc has no length
                raise GeometryError(f"arc [{start}, {end}] has no length in (0, 360)")
            arcs.append((_mod(start), length))
        if not arcs:
            raise GeometryError("an ArcSet needs at least one arc")
        return cls(tuple(arcs))

    def pairs(self) -> list:
        return [(s, s + length) for s, length in self.arcs]

    def to_json(self) -> dict:
        return {"arcs": [[_num(s), _num(s + length)] for s, length in self.arcs]}

    @classmethod
    def from_json(cls, obj, exact: bool = False) -> "ArcSet":
        conv = _to_fraction if exact else float
        return cls.from_pairs([(conv(a), conv(b)) for a, b in obj["arcs"]])

    def negated(self) -> "ArcSet":
        return ArcSet(tuple((_mod(s + 180), length) for s, length in self.arcs))

    def contains(self, angle) -> bool:
        return any(_mod(angle - s) <= length for s, length in self.arcs)


def _num(a):
    if isinstance(a, int):
        return a
    if isinstance(a, Fraction):
        return int(a) if a.denominator == 1 else float(a)
    return float(a)


def _to_fraction(a) -> Fraction:
    # Decimal/str go through their exact decimal expansion
    return Fraction(str(a)) if not isinstance(a, Fraction) else a


def arc_intersection(a, b):
    """A common angle of two closed arcs (start, length), or None."""
    (sa, la), (sb, lb) = a, b
    for shift in (-FULL, 0, FULL):
        lo = max(sa, sb + shift)
        hi = min(sa + la, sb + shift + lb)
        if lo <= hi:
            return _mod(lo)
    return None


def arcset_intersection(f: ArcSet, g: ArcSet):
    for a in f.arcs:
        for b in g.arcs:
            w = arc_intersection(a, b)
            if w is not None:
                return w
    return None


def antipodal_free(f: ArcSet) -> bool:
    return arcset_intersection(f, f.negated()) is None


@dataclass(frozen=True)
class CircleReport:
    covered: bool
    gaps: list

    def to_json(self) -> dict:
        return {"covered": self.covered, "gaps": [[_num(a), _num(b)] for a, b in self.gaps]}


def circle_cover_check(family) -> CircleReport:
    """Exact sweep over the union of arcs.

    Gaps are open arcs (start, end) with start in [0, 360); a gap that
    wraps through 0 has end > 360.
    """
    pieces = []
    for f in family:
        for s, length in f.arcs:
            if s + length <= FULL:
                pieces.append((s, s + length))
            else:
                pieces.append((s, FULL))
                pieces.append((0, s + length - FULL))
    if not pieces:
        return CircleReport(False, [(0, FULL)])
    pieces.sort()
    gaps = []
    cur = 0
    for a, b in pieces:
        if a > cur:
            gaps.append((cur, a))
        cur = max(cur, b)
    if cur < FULL:
        gaps.append((cur, FULL))
    if len(gaps) > 1 and gaps[0][0] == 0 and gaps[-1][1] == FULL:
        first = gaps.pop(0)
        last = gaps.pop()
        gaps.append((last[0], FULL + first[1]))
    return CircleReport(not gaps, gaps)


def arc_to_cap(start, end) -> Cap:
    """Cap on S^1 spanned by the closed arc [start, end] (degrees, length < 180)."""
    pts = [(math.cos(math.radians(float(_mod(a)))), math.sin(math.radians(float(_mod(a)))))
           for a in (start, end)]
    if _mod(end - start) == 0:
        pts = pts[:1]
    return make_cap(pts)


def arcset_to_shortset(f: ArcSet) -> ShortSet:
    return make_shortset([arc_to_cap(s, s + length) for s, length in f.arcs])


def cap_to_arcset(cap: Cap) -> ArcSet:
    """Angles of the extreme generators of a cap on S^1, as exact fractions of degrees."""
    if cap.ambient != 2:
        raise GeometryError("only caps on S^1 convert to arcs")
    base = math.atan2(cap.witness[1], cap.witness[0])
    rel = [math.remainder(math.atan2(g[1], g[0]) - base, 2 * math.pi) for g in cap.generators]
    lo = cap.generators[int(np.argmin(rel))]
    hi = cap.generators[int(np.argmax(rel))]
    start = Fraction(math.degrees(math.atan2(lo[1], lo[0])))
    end = Fraction(math.degrees(math.atan2(hi[1], hi[0])))
    if _mod(end - start) == 0:
        raise GeometryError("single-point caps have no arc representation")
    return ArcSet.from_pairs([(start, end)])


def sweep_uncovered(family, count: int = 10 ** 5) -> np.ndarray:
    """Brute-force check: equally spaced test angles not covered by any arc."""
    angles = np.arange(count) * (FULL / count)
    covered = np.zeros(count, dtype=bool)
    for f in family:
        for start, length in f.arcs:
            covered |= np.mod(angles - float(start), FULL) <= float(length)
    return angles[~covered]


# -- sampling on S^n ------------------------------------------------------


@dataclass(frozen=True)
class SampleSet:
    n: int
    depth: int
    points: np.ndarray
    mesh_bound: float


def _compositions(k: int, parts: int):
    for cuts in itertools.combinations(range(k + parts - 1), parts - 1):
        prev = -1
        out = []
        for c in cuts:
            out.append(c - prev - 1)
            prev = c
        out.append(k + parts - 2 - prev)
        yield out


def sample_sphere(n: int, depth: int, seed: int = 0, extra: int = 0) -> SampleSet:
    """Midpoint-refined octahedral mesh of S^n plus optional random points.

    Mesh points are the integer vectors of l1-norm 2**depth, normalized;
    duplicates across facets are excluded by construction.
    """
    if n < 1 or depth < 0:
        raise GeometryError("sample_sphere needs n >= 1 and depth >= 0")
    k = 2 ** depth
    rows = []
    for comp in _compositions(k, n + 1):
        comp = np.array(comp)
        nz = np.flatnonzero(comp)
        for signs in itertools.product((1, -1), repeat=nz.size):
            v = comp.copy()
            v[nz] *= signs
            rows.append(v)
    pts = np.array(rows, dtype=float)
    pts /= np.linalg.norm(pts, axis=1, keepdims=True)
    if extra:
        rnd = rng_for(seed).standard_normal((extra, n + 1))
        pts = np.vstack([pts, rnd / np.linalg.norm(rnd, axis=1, keepdims=True)])
    return SampleSet(n, depth, pts, (math.pi / 2) / k * 1.1)


@dataclass(frozen=True)
class SamplingReport:
    all_covered: bool
    uncovered: np.ndarray
    mesh_bound: float
    sample_count: int

    def to_json(self, limit: int = 20) -> dict:
        return {
            "all_covered": self.all_covered,
            "uncovered_count": int(len(self.uncovered)),
            "uncovered": self.uncovered[:limit].tolist(),
            "mesh_bound": self.mesh_bound,
            "samples": self.sample_count,
        }


def sampling_cover_check(family, samples: SampleSet) -> SamplingReport:
    """Membership of every sample in the union of the family.

    Any uncovered sample refutes coverage; all-covered is only evidence at
    resolution ``mesh_bound``.
    """
    X = samples.points
    covered = np.zeros(len(X), dtype=bool)
    for member in family:
        todo = ~covered
        if not todo.any():
            break
        covered[todo] = set_members(as_shortset(member), X[todo])
    unc = X[~covered]
    return SamplingReport(bool(covered.all()), unc, samples.mesh_bound, len(X))


# -- generators -----------------------------------------------------------


def random_simplex_with_origin(n: int, seed: int, origin_floor: float = ORIGIN_FLOOR) -> np.ndarray:
    """n+2 random unit vectors whose simplex holds the origin with all
    barycentric weights above ``origin_floor``."""
    if n < 1:
        raise GeometryError("n must be >= 1")
    rng = rng_for(seed)
    for _ in range(MAX_REJECTIONS):
        V = rng.standard_normal((n + 2, n + 1))
        V /= np.linalg.norm(V, axis=1, keepdims=True)
        try:
            lam = geom.barycentric_origin(V)
        except geom.DegenerateSimplex:
            continue
        if np.all(lam > origin_floor):
            return V
    raise RuntimeError("rejection limit reached in random_simplex_with_origin")


def shatter_cap(cap: Cap, depth: int, seed: int = 0, jitter: float = 0.0) -> ShortSet:
    """Split a simplicial cap into the radial images of an edgewise subdivision.

    ``jitter`` (fraction of the lattice spacing, < 0.5) moves interior
    subdivision vertices by a seeded amount; the pieces still tile the cap.
    """
    G = cap.generators
    n = cap.dim
    if G.shape[0] != n + 1 or not cap.independent:
        raise GeometryError("shatter_cap needs a cap with n+1 independent generators")
    tri = geom.subdivide(n, depth)
    bary = tri.bary.copy()
    if jitter:
        if not 0 < jitter < 0.5:
            raise GeometryError("jitter must lie in (0, 0.5)")
        rng = rng_for(seed)
        interior = np.all(tri.lattice > 0, axis=1)
        step = rng.uniform(-1.0, 1.0, (int(interior.sum()), n + 1))
        step -= step.mean(axis=1, keepdims=True)
        step *= jitter / tri.resolution / np.max(np.abs(step), axis=1, keepdims=True).clip(1e-300)
        before = [np.sign(np.linalg.det(bary[list(c)])) for c in tri.cells]
        bary[interior] += step
        # a cell whose orientation flips has folded over a neighbour
        after = [np.sign(np.linalg.det(bary[list(c)])) for c in tri.cells]
        if before != after:
            raise GeometryError("jitter folded the subdivision; use a smaller jitter")
    parts = []
    for cell in tri.cells:
        V = bary[list(cell)] @ G
        parts.append(make_cap(V / np.linalg.norm(V, axis=1, keepdims=True)))
    return make_shortset(parts)


def random_arc_family(seed: int, size: int = 3) -> list:
    """Three short arcs in quarter degrees, roughly half of them covering."""
    rng = rng_for(seed)
    q = Fraction(1, 4)
    while True:
        if rng.uniform() < 0.2:
            arcs = []
            for _ in range(size):
                start = int(rng.integers(0, 1440)) * q
                length = int(rng.integers(1, 720)) * q
                arcs.append(ArcSet.from_pairs([(start, start + length)]))
            return arcs
        cuts = sorted(int(c) for c in rng.choice(1440, size=size, replace=False))
        pts = [c * q for c in cuts]
        arcs = []
        ok = True
        for i in range(size):
            a, b = pts[i], pts[(i + 1) % size]
            slack_a = int(rng.choice([0, 0, 0, -1, 1, 2, 4, 8, -4, 20])) * q * 4
            slack_b = int(rng.choice([0, 0, 0, -1, 1, 2, 4, 8, -4, 20])) * q * 4
            start = a - slack_a
            length = _mod(b - a) + slack_a + slack_b
            if not 0 < length < 180:
                ok = False
                break
            arcs.append(ArcSet.from_pairs([(start, start + length)]))
        if ok:
            return arcs


def random_antipodal_free_cover(seed: int, max_tries: int = 10 ** 4) -> list:
    """Three closed arc unions covering S^1, each disjoint from its antipode."""
    rng = rng_for(seed)
    q = Fraction(1, 4)
    for _ in range(max_tries):
        k = int(rng.integers(3, 10))
        cuts = sorted(int(c) for c in rng.choice(1440, size=k, replace=False))
        pts = [c * q for c in cuts]
        labels = [int(x) for x in rng.integers(0, 3, size=k)]
        if len(set(labels)) < 3:
            continue
        members = [[] for _ in range(3)]
        for i in range(k):
            members[labels[i]].append((pts[i], pts[(i + 1) % k]))
        try:
            family = [ArcSet.from_pairs(_merge_adjacent(m)) for m in members]
        except GeometryError:
            continue
        if all(antipodal_free(f) for f in family):
            return family
    raise RuntimeError("could not generate an antipodal-free cover")


def _merge_adjacent(pairs):
    pairs = [list(p) for p in pairs]
    merged = True
    while merged and len(pairs) > 1:
        merged = False
        for i, j in itertools.permutations(range(len(pairs)), 2):
            if _mod(pairs[i][1] - pairs[j][0]) == 0:
                pairs[i][1] = pairs[j][1]
                del pairs[j]
                merged = True
                break
    return [tuple(p) for p in pairs]


@dataclass(frozen=True)
class RemarkReport:
    pairwise: list
    witnesses: list
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None and all(self.pairwise)

    def to_json(self) -> dict:
        return {
            "pairwise": self.pairwise,
            "witnesses": [None if w is None else _num(w) for w in self.witnesses],
            "error": self.error,
        }


def remark_pairwise_check(family) -> RemarkReport:
    """Pairwise intersections of three antipodal-free closed sets covering S^1."""
    family = list(family)
    if len(family) != 3:
        return RemarkReport([], [], "need exactly three arc sets")
    for i, f in enumerate(family):
        if not antipodal_free(f):
            return RemarkReport([], [], f"set {i} meets its antipodal image")
    cover = circle_cover_check(family)
    if not cover.covered:
        return RemarkReport([], [], f"family does not cover S^1; gaps {cover.gaps}")
    pairs = [(0, 1), (0, 2), (1, 2)]
    wits = [arcset_intersection(family[i], family[j]) for i, j in pairs]
    return RemarkReport([w is not None for w in wits], wits)


# -- antipodal-free cap unions on S^2 ----------------------------------------
#
# Experiment hook only.  On the circle three antipodal-free closed sets that
# cover meet pairwise; whether n+2 such sets on S^n always have nonempty
# (n+1)-wise intersections is open here, so nothing depends on the outcome.


def caps_antipodal_free(parts) -> bool:
    """True when the union of ``parts`` is disjoint from its antipodal image."""
    neg = [make_cap(-p.generators) for p in parts]
    return all(intersection_witness([a, b]) is None for a in parts for b in neg)


def random_antipodal_free_sphere_cover(seed: int, depth: int = 1, moves: int = 12) -> list:
    """Four cap unions covering S^2, each antipodal-free but not necessarily short.

    Starts from shattered facet caps of a random simplex and moves pieces
    between members while every member stays nonempty and antipodal-free;
    the union is untouched, so the family still covers.
    """
    rng = rng_for(seed)
    from .certify import facet_caps

    caps = facet_caps(random_simplex_with_origin(2, seed))
    members = [list(shatter_cap(c, depth).parts) for c in caps]
    for _ in range(moves):
        src, dst = (int(i) for i in rng.choice(len(members), size=2, replace=False))
        if len(members[src]) < 2:
            continue
        k = int(rng.integers(len(members[src])))
        part = members[src][k]
        if caps_antipodal_free(members[dst] + [part]):
            members[dst].append(part)
            del members[src][k]
    return members


@dataclass(frozen=True)
class SphereRemarkReport:
    covered: bool
    antipodal_free: list
    total_empty: bool
    subfamily_meets: list

    @property
    def ok(self) -> bool:
        return self.covered and all(self.antipodal_free) and all(self.subfamily_meets)

    def to_json(self) -> dict:
        return {
            "covered": self.covered,
            "antipodal_free": self.antipodal_free,
            "total_empty": self.total_empty,
            "subfamily_meets": self.subfamily_meets,
        }


def _unions_meet(members) -> bool:
    return any(intersection_witness(list(sel)) is not None for sel in itertools.product(*members))


def remark_sphere_check(members, mesh_depth: int = 4) -> SphereRemarkReport:
    """Coverage (by sampling), antipodal-freeness and the k-1 wise
    intersections of k cap unions on S^n."""
    dim = members[0][0].ambient
    X = sample_sphere(dim - 1, mesh_depth).points
    covered = np.zeros(len(X), dtype=bool)
    for parts in members:
        for p in parts:
            covered |= cap_members(p, X)
    k = len(members)
    return SphereRemarkReport(
        covered=bool(covered.all()),
        antipodal_free=[caps_antipodal_free(m) for m in members],
        total_empty=not _unions_meet(members),
        subfamily_meets=[_unions_meet(members[:j] + members[j + 1:]) for j in range(k)],
    )
