import itertools
import math

import numpy as np
import pytest

from spherecover import geom
from spherecover.caps import cap_distance, make_cap, set_distances
from spherecover.geom import ChartKind, SimplexChart, chart_map, geodesic_distance
from spherecover.oracle import rng_for
from spherecover.solver import (
    BoundaryConditionError,
    common_point,
    fully_labeled_cells,
    hemisphere_voronoi_instance,
    make_instance,
    sperner_fully_labeled,
    star_instance,
)

NORTH = np.array([0.0, 0.0, 1.0])


def independent_max_dist(inst, x):
    return max(min(cap_distance(p, x) for p in s.parts) for s in inst.sets)


# -- instances ------------------------------------------------------------


def test_voronoi_fixture_passes_face_check():
    inst = hemisphere_voronoi_instance()
    assert inst.face_condition_checked
    assert inst.face_failures == ()
    assert inst.n == 2


def test_face_check_detects_swapped_sets():
    inst = hemisphere_voronoi_instance()
    swapped = make_instance(inst.chart, [inst.sets[1], inst.sets[0], inst.sets[2]])
    assert not swapped.face_condition_checked
    assert swapped.face_failures == (0, 1)


def test_make_instance_validation():
    inst = hemisphere_voronoi_instance()
    with pytest.raises(geom.GeometryError):
        make_instance(inst.chart, [])
    with pytest.raises(geom.GeometryError):
        make_instance(inst.chart, [make_cap([[1.0, 0.0]])] * 3)
    partial = make_instance(inst.chart, inst.sets[:2])
    assert not partial.face_condition_checked


# -- common points --------------------------------------------------------


def test_voronoi_fixture_finds_north_pole():
    res = common_point(hemisphere_voronoi_instance(), 1e-6)
    assert res.status == "ok"
    assert geodesic_distance(res.point, NORTH) <= 1e-6
    assert res.max_dist <= 1e-6


def test_arc_instance_finds_midpoint():
    a1 = np.array([1.0, 0.0])
    a2 = np.array([math.cos(1.0), math.sin(1.0)])
    mid = np.array([math.cos(0.5), math.sin(0.5)])
    chart = SimplexChart(ChartKind.SHORT, np.array([a1, a2]))
    inst = make_instance(chart, [make_cap([mid, a2]), make_cap([a1, mid])])
    assert inst.face_condition_checked
    res = common_point(inst, 1e-9)
    assert res.status == "ok"
    assert geodesic_distance(res.point, mid) <= 1e-9


@pytest.mark.parametrize("seed", range(6))
def test_star_instances_converge(seed):
    inst, c = star_instance(2, seed, 1 + seed % 2)
    assert inst.face_condition_checked
    res = common_point(inst, 1e-4, depth_limit=12)
    assert res.status == "ok" and res.depth <= 12
    assert independent_max_dist(inst, res.point) <= 1e-4
    np.testing.assert_allclose(chart_map(inst.chart, res.bary), res.point, atol=1e-12)
    # c is the unique common point; the sets meet transversally there
    assert geodesic_distance(res.point, c) < 1e-2


def test_star_instances_without_polish_still_converge_in_bound():
    inst, _ = star_instance(2, 0, 1)
    res = common_point(inst, 1e-3, depth_limit=12, polish=False)
    assert res.status == "ok"
    assert independent_max_dist(inst, res.point) <= 1e-3


def test_star_instance_in_three_dimensions():
    inst, c = star_instance(3, 1, 1)
    res = common_point(inst, 1e-4, depth_limit=12)
    assert res.status == "ok"
    assert independent_max_dist(inst, res.point) <= 1e-4


def test_history_is_monotone():
    for seed in range(4):
        inst, _ = star_instance(2, seed, 1)
        res = common_point(inst, 1e-9, depth_limit=8, polish=False)
        assert all(a >= b for a, b in zip(res.history, res.history[1:]))
        assert len(res.history) == res.depth + 1


def test_missing_set_is_not_a_cover():
    inst = hemisphere_voronoi_instance()
    broken = make_instance(inst.chart, inst.sets[1:])
    res = common_point(broken, 1e-6)
    assert res.status == "not_a_cover"
    # the reported vertex is at positive distance from every remaining set
    d = set_distances(inst.sets[1], res.point[None])[0], set_distances(inst.sets[2], res.point[None])[0]
    assert min(d) > 1e-6
    # it is covered by the deleted set
    assert set_distances(inst.sets[0], res.point[None])[0] <= 1e-12


def test_tiny_eps_hits_depth_limit():
    res = common_point(hemisphere_voronoi_instance(), 1e-15)
    assert res.status == "limit"
    assert res.depth == 20
    assert geodesic_distance(res.point, NORTH) < 1e-12


def test_solver_is_deterministic():
    inst, _ = star_instance(2, 7, 2)
    a = common_point(inst, 1e-5, depth_limit=12)
    b = common_point(inst, 1e-5, depth_limit=12)
    assert a.to_json() == b.to_json()
    np.testing.assert_array_equal(a.bary, b.bary)


def test_eps_must_be_positive():
    with pytest.raises(ValueError):
        common_point(hemisphere_voronoi_instance(), 0.0)


def test_result_json_schema():
    out = common_point(hemisphere_voronoi_instance(), 1e-6).to_json()
    assert set(out) == {"point", "max_dist", "depth", "status"}


# -- Sperner --------------------------------------------------------------


def min_support(key):
    return 1 + min(i for i, a in enumerate(key) if a > 0)


def test_depth_zero_whole_simplex():
    cell = sperner_fully_labeled(min_support, 2, 0)
    assert sorted(cell) == [(0, 0, 1), (0, 1, 0), (1, 0, 0)]


def test_two_dimensional_depth_one_parity():
    cells = fully_labeled_cells(min_support, 2, 1)
    assert len(cells) % 2 == 1
    labels = [{min_support(tuple(geom.subdivide(2, 1).lattice[v])) for v in c} for c in cells]
    assert all(lab == {1, 2, 3} for lab in labels)


def test_one_dimensional_bichromatic_edge():
    rng = rng_for(0)
    for _ in range(20):
        table = {}
        for row in geom.subdivide(1, 5).lattice:
            key = tuple(int(a) for a in row)
            support = [i + 1 for i, a in enumerate(key) if a > 0]
            table[key] = int(rng.choice(support))
        cell = sperner_fully_labeled(table, 1, 5)
        assert {table[v] for v in cell} == {1, 2}


def random_labeling(n, depth, rng):
    table = {}
    for row in geom.subdivide(n, depth).lattice:
        key = tuple(int(a) for a in row)
        table[key] = int(rng.choice([i + 1 for i, a in enumerate(key) if a > 0]))
    return table


@pytest.mark.parametrize("n,depth", [(1, 3), (2, 2), (2, 3), (3, 2)])
def test_random_labelings_have_odd_count(n, depth):
    rng = rng_for(n * 10 + depth)
    for _ in range(50):
        assert len(fully_labeled_cells(random_labeling(n, depth, rng), n, depth)) % 2 == 1


def test_exhaustive_parity_small():
    tri = geom.subdivide(2, 1)
    keys = [tuple(int(a) for a in row) for row in tri.lattice]
    supports = [[i + 1 for i, a in enumerate(k) if a > 0] for k in keys]
    count = 0
    for choice in itertools.product(*supports):
        table = dict(zip(keys, choice))
        assert len(fully_labeled_cells(table, 2, 1)) % 2 == 1
        count += 1
    assert count == 8


def test_boundary_violation_is_reported():
    def bad(key):
        return 3 if key == (2, 0, 0) else min_support(key)

    with pytest.raises(BoundaryConditionError) as info:
        sperner_fully_labeled(bad, 2, 1)
    assert info.value.vertex == (2, 0, 0) and info.value.label == 3
