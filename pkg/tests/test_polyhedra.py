import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import dense_distance_ft, dense_face_samples, qhull_inside, random_hexahedron

from landingrisk.geodesy import M_PER_FT, lla_to_ecef
from landingrisk.polyhedra import (CORRIDOR, NOFLY, PRISM_FACES, Polyhedron, PolyhedronError, PolyhedronSet,
                                   contains, distances, face_normal, load_polyhedra, min_distance,
                                   point_in_polyhedron, proximity_cost, proximity_from_distance,
                                   proximity_heatmap, save_polyhedra, set_cost)
from landingrisk.traffic_grid import GridSpec

CUBE = np.array([[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0],
                 [0, 0, 1], [1, 0, 1], [1, 1, 1], [0, 1, 1]], dtype=float) * 100.0


def box(id="b", scale=100.0, kind=CORRIDOR):
    return Polyhedron(id, CUBE / 100.0 * scale, PRISM_FACES, kind)


def test_face_normal_axis_aligned_and_degenerate():
    n = face_normal([0, 0, 0], [1, 0, 0], [0, 1, 0])
    assert np.allclose(n, [0, 0, 1])
    with pytest.raises(PolyhedronError):
        face_normal([0, 0, 0], [1, 0, 0], [2, 0, 0])


def test_normals_unit_outward_orthogonal():
    rng = np.random.default_rng(0)
    for _ in range(50):
        P = Polyhedron("p", random_hexahedron(rng), PRISM_FACES)
        assert np.allclose(np.linalg.norm(P.normals, axis=1), 1.0, atol=1e-12)
        for i, f in enumerate(P.faces):
            v = P.vertices[f]
            for e in (v[1] - v[0], v[3] - v[0]):
                assert abs(P.normals[i] @ e) < 1e-9 * max(1.0, np.linalg.norm(e))
            assert P.normals[i] @ (P.centroids[i] - P.center) > 0


def test_inward_winding_is_flipped():
    faces = PRISM_FACES[:, ::-1].copy()
    P = Polyhedron("r", CUBE, faces)
    assert np.allclose(P.normals[0], [0, 0, -1]) and np.allclose(P.normals[1], [0, 0, 1])


def test_validation_rejects_bad_shapes():
    with pytest.raises(PolyhedronError):
        Polyhedron("x", CUBE[:6], PRISM_FACES)
    warped = CUBE.copy()
    warped[6, 2] += 30.0
    with pytest.raises(PolyhedronError):
        Polyhedron("w", warped, PRISM_FACES)
    with pytest.raises(PolyhedronError):
        Polyhedron("k", CUBE, PRISM_FACES, kind="other")


def test_centroid_and_face_centroids_inside():
    P = box()
    assert point_in_polyhedron(P.center, P)
    for c in P.centroids:
        assert point_in_polyhedron(c, P)
        assert min_distance(c, P) == 0.0


def test_point_above_top_face():
    P = box()
    p = [50.0, 50.0, 100.0 + 500 * M_PER_FT]
    assert min_distance(p, P) == pytest.approx(500.0, abs=1e-6)


def test_edge_and_vertex_regions():
    P = box()
    # beyond the x = 100, y = 100 vertical edge
    assert min_distance([103, 104, 50], P) == pytest.approx(5 / M_PER_FT)
    # beyond the top corner
    assert min_distance([102, 103, 106], P) == pytest.approx(7 / M_PER_FT)


def test_inclusion_matches_qhull_half_spaces():
    rng = np.random.default_rng(1)
    for _ in range(50):
        v = random_hexahedron(rng)
        P = Polyhedron("p", v, PRISM_FACES)
        pts = P.center + rng.uniform(-1.2, 1.2, (200, 3)) * P.radius
        assert np.array_equal(contains(P, pts), qhull_inside(v, pts))


def test_distance_matches_dense_sampling():
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(40):
        v = random_hexahedron(rng)
        P = Polyhedron("p", v, PRISM_FACES)
        samples = dense_face_samples(v)
        dirs = rng.normal(size=(10, 3))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        pts = P.center + dirs * (P.radius + rng.uniform(10, 100, (10, 1)))
        got = distances(P, pts)
        want = dense_distance_ft(samples, pts)
        worst = max(worst, float(np.max(np.abs(got - want) / want)))
    assert worst < 1e-4


def test_literal_two_edge_variant_overestimates_some_points():
    P = box()
    near = [-30.0, 50.0, 50.0]
    assert min_distance(near, P, literal=True) == pytest.approx(min_distance(near, P))
    # nearest feature is the top edge at y = 100, which the two-edge test never checks
    p = [24.0, 120.0, 113.0]
    assert min_distance(p, P) == pytest.approx(math.hypot(20, 13) / M_PER_FT)
    assert min_distance(p, P, literal=True) > min_distance(p, P) + 10.0
    rng = np.random.default_rng(0)
    pts = rng.uniform(-100, 200, (5000, 3))
    assert np.all(distances(P, pts, literal=True) >= distances(P, pts) - 1e-9)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-300, 400), min_size=3, max_size=3))
def test_zero_distance_iff_inside(p):
    P = box()
    inside = point_in_polyhedron(p, P)
    d = min_distance(p, P)
    assert (d == 0.0) == inside
    assert d >= 0 and math.isfinite(d)


def test_distance_is_one_lipschitz_along_rays():
    rng = np.random.default_rng(3)
    P = Polyhedron("p", random_hexahedron(rng), PRISM_FACES)
    for _ in range(20):
        a = P.center + rng.normal(size=3) * 2 * P.radius
        b = P.center - (a - P.center)
        s = np.linspace(0, 1, 400)[:, None]
        pts = a + s * (b - a)
        d = distances(P, pts)
        step_ft = np.linalg.norm(b - a) / 399 / M_PER_FT
        assert np.all(np.abs(np.diff(d)) <= step_ft * (1 + 1e-6) + 1e-6)


def test_no_nan_on_random_queries():
    rng = np.random.default_rng(4)
    P = Polyhedron("p", random_hexahedron(rng), PRISM_FACES)
    pts = P.center + rng.normal(size=(100000, 3)) * P.radius * 3
    pts[:10] = P.vertices[[0, 1, 2, 3, 4, 5, 6, 7, 0, 1]]
    assert np.all(np.isfinite(distances(P, pts)))
    assert np.all(np.isfinite(distances(P, pts, literal=True)))


def test_proximity_cost_values():
    assert proximity_from_distance(0.0) == 1.0
    assert proximity_from_distance(500.0) == 0.0
    assert proximity_from_distance(800.0) == 0.0
    assert proximity_from_distance(250.0, 500.0) == 0.5
    P = box()
    assert proximity_cost(P.center, P) == 1.0
    with pytest.raises(ValueError):
        proximity_from_distance(1.0, 0.0)


@given(st.floats(0, 1000), st.floats(0, 1000))
def test_proximity_monotone(a, b):
    lo, hi = sorted((a, b))
    assert proximity_from_distance(lo) >= proximity_from_distance(hi)


def test_set_cost_is_member_supremum():
    rng = np.random.default_rng(5)
    members = [Polyhedron(f"p{i}", random_hexahedron(rng, (30, 100), 200.0), PRISM_FACES) for i in range(6)]
    S = PolyhedronSet(members)
    pts = rng.normal(0, 300, (1000, 3))
    want = np.max([[proximity_cost(p, m, 100.0) for m in members] for p in pts], axis=1)
    assert np.allclose(S.costs(pts, 100.0), want, atol=1e-12)
    shuffled = PolyhedronSet(members[::-1])
    assert np.array_equal(S.costs(pts, 100.0), shuffled.costs(pts, 100.0))
    assert set_cost(members[0].center, S) == 1.0
    assert set_cost([0, 0, 0], PolyhedronSet([])) == 0.0
    assert np.array_equal(S.inside_any(pts), want == 1.0)


def test_set_ids_unique():
    with pytest.raises(PolyhedronError):
        PolyhedronSet([box("a"), box("a")])


def test_prism_from_lat_lon_is_planar_and_has_correct_height():
    base = [[38.80, -77.00], [38.80, -76.98], [38.82, -76.98], [38.82, -77.00]]
    P = Polyhedron.from_prism("c", base, 0.0, 1500.0)
    mid = lla_to_ecef(38.81, -76.99, 700.0)
    assert point_in_polyhedron(mid, P)
    above = lla_to_ecef(38.81, -76.99, 2000.0)
    assert min_distance(above, P) == pytest.approx(500.0, rel=2e-3)


def test_polyhedra_json_round_trip(tmp_path):
    base = [[38.80, -77.00], [38.80, -76.98], [38.82, -76.98], [38.82, -77.00]]
    c = PolyhedronSet([Polyhedron.from_prism("c", base, 0.0, 1500.0)], CORRIDOR)
    n = PolyhedronSet([Polyhedron.from_prism("n", base, 0.0, 9000.0, NOFLY)], NOFLY)
    save_polyhedra(tmp_path / "p.json", c, n)
    c2, n2 = load_polyhedra(tmp_path / "p.json")
    assert [p.id for p in c2] == ["c"] and [p.id for p in n2] == ["n"]
    assert np.allclose(c2.members[0].vertices, c.members[0].vertices)
    data = json.loads((tmp_path / "p.json").read_text())
    assert data["polyhedra"][1]["kind"] == NOFLY


def test_proximity_heatmap_matches_direct_costs():
    base = [[38.80, -77.00], [38.80, -76.98], [38.82, -76.98], [38.82, -77.00]]
    S = PolyhedronSet([Polyhedron.from_prism("c", base, 0.0, 1500.0)])
    spec = GridSpec((38.78, 38.84), (-77.02, -76.96), (0, 3000), 6, 6, 3)
    g = proximity_heatmap(S, spec)
    le, oe, ae = spec.edges()
    c = ((le[2] + le[3]) / 2, (oe[2] + oe[3]) / 2, (ae[0] + ae[1]) / 2)
    assert g.normalized[2, 2, 0] == pytest.approx(set_cost(lla_to_ecef(*c), S))
    assert g.normalized.max() == 1.0
