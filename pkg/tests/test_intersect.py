import numpy as np
import pytest

import oracles
from toposynth.intersect import (detect_self_intersections, detect_vertex_folds, find_collisions,
                                 has_self_intersection, tri_tri_intersect)
from toposynth.mesh import TriangleMesh, merge
from toposynth.primitives import icosphere, torus


def random_soup(rng, n):
    """n independent triangles in a box, dense enough for many crossings."""
    V = rng.uniform(0, 3, (3 * n, 3))
    T = np.arange(3 * n).reshape(n, 3)
    return TriangleMesh(V, T)


def test_far_spheres_clean(sphere):
    scene = merge([sphere, sphere.translated((20, 0, 0))])
    assert detect_self_intersections(scene) == []
    assert not has_self_intersection(scene)


def test_offset_spheres_hit(sphere):
    scene = merge([sphere, sphere.translated((0.5, 0, 0))])
    hits = detect_self_intersections(scene)
    assert hits
    expected = oracles.brute_intersections(scene.vertices, scene.triangles)
    assert set(hits) == expected


def test_shared_edge_not_reported():
    v = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0.2, 0.2, 0.0]], float)
    m = TriangleMesh(v, np.array([[0, 1, 2], [0, 1, 3]]))
    assert detect_self_intersections(m) == []


@pytest.mark.parametrize("seed", range(8))
def test_bvh_matches_independent_oracle(seed):
    soup = random_soup(np.random.default_rng(seed), 60)
    got = detect_self_intersections(soup)
    assert got == sorted(got)
    assert set(got) == oracles.brute_intersections(soup.vertices, soup.triangles)


@pytest.mark.parametrize("seed", range(5))
def test_bvh_equals_brute_on_dense_scenes(seed):
    rng = np.random.default_rng(100 + seed)
    parts = [icosphere(3, radius=rng.uniform(0.5, 1.5)).translated(rng.uniform(0, 2, 3)) for _ in range(3)]
    scene = merge(parts)
    assert scene.n_faces <= 2000 * 2
    assert detect_self_intersections(scene) == detect_self_intersections(scene, method="brute")


def test_bvh_equals_brute_coplanar():
    # a grid of flat, partly overlapping triangles in one plane
    rng = np.random.default_rng(7)
    V = np.column_stack([rng.integers(0, 4, (90, 2)).astype(float), np.zeros(90)])
    T = np.arange(90).reshape(30, 3)
    m = TriangleMesh(V, T)
    assert detect_self_intersections(m) == detect_self_intersections(m, method="brute")


def test_tri_tri_batch_matches_scalar(rng):
    P = rng.uniform(0, 1, (400, 3, 3))
    Q = rng.uniform(0, 1, (400, 3, 3))
    got = tri_tri_intersect(P, Q)
    want = [oracles.triangles_meet(p, q) for p, q in zip(P, Q)]
    assert got.tolist() == want


def test_touching_vertex_on_face_counts():
    v = np.array([[0, 0, 0], [2, 0, 0], [0, 2, 0], [0.5, 0.5, 0], [0.5, 0.5, 1], [1.5, 0.5, 1]], float)
    m = TriangleMesh(v, np.array([[0, 1, 2], [3, 4, 5]]))
    assert detect_self_intersections(m) == [(0, 1)]


def test_fold_through_shared_vertex():
    # two triangles sharing vertex 0; the second pokes back through the first
    v = np.array([[0, 0, 0], [2, 0, 0], [0, 2, 0], [1, 0.5, -1], [0.5, 1, 1]], float)
    m = TriangleMesh(v, np.array([[0, 1, 2], [0, 3, 4]]))
    assert detect_self_intersections(m) == []
    assert detect_vertex_folds(m) == [(0, 1)]
    assert find_collisions(m) == [(0, 1)]
    assert detect_vertex_folds(m, method="brute") == [(0, 1)]


def test_clean_torus_has_no_folds():
    t = torus(12, 8)
    assert detect_vertex_folds(t) == [] and find_collisions(t) == []
