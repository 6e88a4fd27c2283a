import math

import numpy as np
import pytest

from spherecover import geom
from spherecover.caps import cap_membership, cap_members, make_cap, make_shortset
from spherecover.certify import (
    FamilySizeError,
    cover_certificate,
    facet_caps,
    shortset_family_check,
    uncovered_witness,
)
from spherecover.oracle import (
    ArcSet,
    arc_to_cap,
    circle_cover_check,
    random_simplex_with_origin,
    sample_sphere,
    sampling_cover_check,
    shatter_cap,
)


def angle_point(deg):
    r = math.radians(deg)
    return np.array([math.cos(r), math.sin(r)])


def arcs(*pairs):
    return [arc_to_cap(a, b) for a, b in pairs]


EQUILATERAL = [angle_point(0), angle_point(120), angle_point(240)]


# -- facet caps -----------------------------------------------------------


def test_facet_caps_equilateral_triangle():
    caps = facet_caps(EQUILATERAL)
    # cap j spans the two vertices other than v_j
    for j, cap in enumerate(caps):
        expected = np.delete(np.array(EQUILATERAL), j, axis=0)
        np.testing.assert_allclose(cap.generators, expected)
    assert circle_cover_check([ArcSet.from_pairs([(120, 240)]), ArcSet.from_pairs([(240, 360)]),
                               ArcSet.from_pairs([(0, 120)])]).covered


def test_facet_caps_tetrahedron_covers_by_sampling():
    caps = facet_caps(geom.regular_simplex(2))
    rep = sampling_cover_check(caps, sample_sphere(2, 5))
    assert rep.all_covered
    # integer points of l1-norm 32 in Z^3: 4 * 32**2 + 2
    assert rep.sample_count == 4098


def test_facet_caps_rejects_bad_vertices():
    with pytest.raises(geom.GeometryError):
        facet_caps([angle_point(0), angle_point(30), angle_point(60)])
    with pytest.raises(geom.GeometryError):
        facet_caps(EQUILATERAL[:2])


# -- certificates ---------------------------------------------------------


def test_certificate_equilateral():
    cert = cover_certificate(facet_caps(EQUILATERAL))
    assert cert.certified and cert.condition_i and cert.condition_ii
    for j in range(3):
        np.testing.assert_allclose(cert.witnesses[j], EQUILATERAL[j], atol=1e-9)
    np.testing.assert_allclose(cert.condition_iii.origin_barycentric, [1 / 3] * 3, atol=1e-9)
    assert cert.condition_iii.nondegenerate and cert.condition_iii.origin_interior
    assert not cert.fragile


def test_certificate_gapped_arcs():
    caps = arcs((0, 100), (100, 200), (200, 300))
    cert = cover_certificate(caps)
    assert not cert.certified
    assert cert.condition_i
    assert not cert.condition_ii
    # first and third arcs are disjoint; the subfamily without the second fails
    assert cert.witnesses[1] is None
    assert cert.witnesses[0] is not None and cert.witnesses[2] is not None
    rep = circle_cover_check([ArcSet.from_pairs([p]) for p in [(0, 100), (100, 200), (200, 300)]])
    assert rep.gaps == [(300, 360)]


def test_certificate_tetrahedron_witnesses_are_vertices():
    V = geom.regular_simplex(2)
    cert = cover_certificate(facet_caps(V))
    assert cert.certified
    for j in range(4):
        np.testing.assert_allclose(cert.witnesses[j], V[j], atol=1e-9)
    np.testing.assert_allclose(cert.condition_iii.origin_barycentric, 0.25, atol=1e-9)


def test_certificate_common_point_breaks_condition_i():
    caps = arcs((0, 100), (50, 150), (90, 200))
    cert = cover_certificate(caps)
    assert not cert.condition_i and not cert.certified
    assert cap_membership(caps[0], cert.common_point)


def test_certificate_family_size_and_types():
    with pytest.raises(FamilySizeError):
        cover_certificate(arcs((0, 100), (100, 200)))
    with pytest.raises(TypeError):
        cover_certificate([make_shortset([arc_to_cap(0, 10)])] * 3)
    with pytest.raises(geom.GeometryError):
        cover_certificate(arcs((0, 100), (100, 200)) + [make_cap([[1.0, 0.0, 0.0]])])


def test_certificate_json_schema():
    out = cover_certificate(facet_caps(EQUILATERAL)).to_json()
    assert set(out) == {"certified", "condition_i", "condition_ii", "condition_iii",
                        "witnesses", "margins", "fragile"}
    assert set(out["condition_iii"]) == {"nondegenerate", "origin_barycentric", "origin_interior"}
    assert len(out["margins"]) == 5


def test_fragile_flag_on_near_miss():
    # the second arc starts 1e-7 degrees (1.7e-9 rad) after the first ends:
    # refuted, but only by a residual below 10 * FEAS_TOL
    cert = cover_certificate(arcs((0, 120), (120 + 1e-7, 240), (240, 360)))
    assert not cert.condition_ii
    assert 0 < max(cert.margins[1:4]) < 1e-8
    assert cert.fragile
    robust = cover_certificate(arcs((0, 120), (120 + 1e-5, 240), (240, 360)))
    assert not robust.condition_ii and not robust.fragile


@pytest.mark.parametrize("n", [1, 2, 3])
def test_random_facet_families_are_certified(n):
    for seed in range(20):
        V = random_simplex_with_origin(n, seed)
        cert = cover_certificate(facet_caps(V))
        assert cert.certified
        assert cert.condition_iii.nondegenerate and cert.condition_iii.origin_interior
        caps = facet_caps(V)
        for j, w in enumerate(cert.witnesses):
            assert all(cap_membership(c, w) for i, c in enumerate(caps) if i != j)


# -- uncovered witnesses --------------------------------------------------


def test_uncovered_single_arc():
    cap = make_cap([[1.0, 0.0]])
    x = uncovered_witness([cap])
    assert abs(x[0]) < 1e-15 and abs(abs(x[1]) - 1.0) < 1e-15
    assert not cap_membership(cap, x)


def test_uncovered_two_arcs_is_sixty_degrees():
    caps = arcs((120, 240), (240, 360))
    x = uncovered_witness(caps)
    np.testing.assert_allclose(x, angle_point(60), atol=1e-12)
    for c in caps:
        assert c.witness @ x <= 0
        assert not cap_membership(c, x)


def test_uncovered_tetrahedron_subfamilies():
    V = geom.regular_simplex(2)
    caps = facet_caps(V)
    samples = sample_sphere(2, 4).points
    for j in range(4):
        sub = caps[:j] + caps[j + 1:]
        x = uncovered_witness(sub)
        assert not any(cap_membership(c, x) for c in sub)
        # a neighbourhood of x is uncovered: the sphere-mesh points near x
        near = samples[samples @ x > math.cos(0.05)]
        covered = np.zeros(len(near), dtype=bool)
        for c in sub:
            covered |= cap_members(c, near)
        assert not covered.any()


def test_uncovered_with_dependent_witnesses():
    # three caps on S^2 whose witnesses all lie on the equator
    caps = [make_cap([[1.0, 0.0, 0.0]]), make_cap([[0.0, 1.0, 0.0]]),
            make_cap([[-math.sqrt(0.5), -math.sqrt(0.5), 0.0]])]
    x = uncovered_witness(caps)
    assert not any(cap_membership(c, x) for c in caps)
    # the only directions orthogonal to all three witnesses are +-e3
    assert abs(abs(x[2]) - 1.0) < 1e-12
    assert np.array_equal(x, uncovered_witness(caps))


def test_uncovered_rejects_large_families():
    with pytest.raises(FamilySizeError, match="admits a cover"):
        uncovered_witness(facet_caps(EQUILATERAL))
    with pytest.raises(FamilySizeError):
        uncovered_witness([])


# -- short sets -----------------------------------------------------------


def test_shortset_shattered_equilateral_arcs():
    sets = [shatter_cap(c, 1) for c in facet_caps(EQUILATERAL)]
    assert all(len(s.parts) == 2 for s in sets)
    rep = shortset_family_check(sets)
    assert rep.condition_i and rep.condition_ii
    assert rep.condition_iii.nondegenerate and rep.condition_iii.origin_interior
    for j in range(3):
        np.testing.assert_allclose(rep.witnesses[j], EQUILATERAL[j], atol=1e-9)
    assert "necessary" in rep.note


def test_shortset_common_point_fails_condition_i():
    e = np.eye(3)
    sets = [make_shortset([[e[0]], [e[1]]]), make_shortset([[e[0]], [e[2]]]),
            make_shortset([[e[0], e[1]]]), make_shortset([[e[0], e[2]]])]
    rep = shortset_family_check(sets)
    assert not rep.condition_i
    np.testing.assert_allclose(rep.certificate.common_point, e[0], atol=1e-9)


@pytest.mark.parametrize("seed", range(5))
def test_singleton_shortsets_match_cover_certificate(seed):
    n = 1 + seed % 3
    caps = facet_caps(random_simplex_with_origin(n, seed))
    if seed % 2:
        caps[0] = make_cap(caps[1].generators)
    a = cover_certificate(caps).to_json()
    b = shortset_family_check([make_shortset([c]) for c in caps]).certificate.to_json()
    assert a == b


def test_shortset_selection_guard():
    caps = facet_caps(geom.regular_simplex(2))
    sets = [shatter_cap(c, 5) for c in caps]
    with pytest.raises(FamilySizeError):
        shortset_family_check(sets)


# -- numerically delicate families ----------------------------------------


def test_tiny_gaps_do_not_break_the_solver():
    # a 3e-8 degree gap once drove the float simplex out of feasibility
    for gap in (1e-7, 3e-8, 1e-8, 1e-10):
        cert = cover_certificate(arcs((0, 120), (120 + gap, 240), (240, 360)))
        assert cert.condition_i


@pytest.mark.parametrize("start", [0.0, 33.3, 200.7])
def test_certification_is_monotone_in_the_gap(start):
    # next to a nearly antipodal arc the L1 residual is badly scaled; the
    # verdict must still switch exactly once as the gap grows
    verdicts = []
    for gap in np.logspace(-12, -5, 40):
        caps = arcs((start, start + 179.5), (start + 179.5 + gap, start + 270),
                    (start + 270, start + 360))
        verdicts.append(cover_certificate(caps).certified)
    assert verdicts[0] and not verdicts[-1]
    assert sum(a != b for a, b in zip(verdicts, verdicts[1:])) == 1


@pytest.mark.parametrize("n", [2, 3])
def test_perturbed_shared_vertices(n):
    # caps that share vertices only up to a small perturbation give
    # near-singular LP bases; the certificate must still be computed
    rng = np.random.default_rng(n)
    for seed in range(15):
        caps = facet_caps(random_simplex_with_origin(n, seed))
        eps = 10 ** rng.uniform(-10, -6)
        G = caps[0].generators + eps * rng.standard_normal(caps[0].generators.shape)
        caps[0] = make_cap(G / np.linalg.norm(G, axis=1, keepdims=True))
        cert = cover_certificate(caps)
        assert cert.condition_i
        assert not cert.certified or cert.condition_iii.origin_interior
