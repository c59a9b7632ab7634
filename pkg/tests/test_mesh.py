import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from toposynth.mesh import (MeshEditor, MeshError, TriangleMesh, UnsupportedEditError, connected_components,
                            edge_collapse, edge_split, edges, euler_characteristic, merge, read_obj, read_off,
                            surface_area, validate_manifold, write_obj, write_off)
from toposynth.primitives import cube, icosphere, tetrahedron, torus


def counts(m):
    return m.n_vertices, len(edges(m)), m.n_faces


def test_cube_euler(unit_cube):
    assert counts(unit_cube) == (8, 18, 12)
    assert euler_characteristic(unit_cube) == 2


@pytest.mark.parametrize("n,m", [(3, 3), (5, 4), (10, 10)])
def test_torus_euler_matches_set_count(n, m):
    t = torus(n, m)
    assert euler_characteristic(t) == 0 == oracles.euler_by_sets(t.triangles)


def test_disjoint_spheres_euler(sphere):
    assert euler_characteristic(merge([sphere, sphere.translated((5, 0, 0))])) == 4


def test_invalid_index_raises():
    with pytest.raises(MeshError):
        euler_characteristic(TriangleMesh(np.zeros((3, 3)), np.array([[0, 1, 7]])))


def test_components_order_and_empty(sphere, small_torus):
    scene = merge([small_torus, sphere.translated((10, 0, 0))])
    parts = connected_components(scene)
    assert len(parts) == 2
    assert parts[0].n_faces == small_torus.n_faces
    assert connected_components(TriangleMesh(np.zeros((0, 3)), np.zeros((0, 3), int))) == []
    assert len(connected_components(small_torus)) == 1


def test_manifold_diagnostics(small_torus):
    d = validate_manifold(small_torus)
    assert d.is_closed and d.is_oriented and d.euler_characteristic == 0
    assert d.euler_characteristic == d.vertex_count - d.edge_count + d.face_count
    tri = TriangleMesh(np.eye(3), np.array([[0, 1, 2]]))
    assert not validate_manifold(tri).is_closed


def test_opposite_winding_strip_not_oriented():
    v = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0]], float)
    good = TriangleMesh(v, np.array([[0, 1, 2], [2, 1, 3]]))
    bad = TriangleMesh(v, np.array([[0, 1, 2], [1, 2, 3]]))
    assert validate_manifold(good).is_oriented
    assert not validate_manifold(bad).is_oriented


def test_flipped_face_on_closed_mesh(unit_cube):
    t = unit_cube.triangles.copy()
    t[0] = t[0][::-1]
    d = validate_manifold(TriangleMesh(unit_cube.vertices, t))
    assert d.is_closed and not d.is_oriented and d.is_orientable


def test_split_counts(small_torus):
    out = edge_split(small_torus, edges(small_torus)[0])
    assert counts(out) == oracles.TORUS9_SPLIT
    assert validate_manifold(out).is_oriented


def test_split_twice_on_child_edges(small_torus):
    a, b = edges(small_torus)[0]
    ed = MeshEditor(small_torus)
    mid = ed.split(int(a), int(b))
    ed.split(int(a), mid)
    ed.split(mid, int(b))
    assert euler_characteristic(ed.to_mesh()) == 0


def test_split_boundary_edge_rejected():
    tri = TriangleMesh(np.eye(3), np.array([[0, 1, 2]]))
    with pytest.raises(UnsupportedEditError):
        edge_split(tri, (0, 1))


def test_random_splits_preserve_chi(rng):
    m = torus(4, 4)
    for _ in range(1000):
        e = edges(m)
        before = euler_characteristic(m)
        m = edge_split(m, e[rng.integers(len(e))])
        assert euler_characteristic(m) == before
        if m.n_vertices > 60:
            m = torus(4, 4)
    assert euler_characteristic(m) == 0 and validate_manifold(m, check_intersections=False).is_oriented


def test_tetrahedron_collapse_rejected():
    t = tetrahedron()
    for a, b in edges(t):
        assert edge_collapse(t, (a, b)) is None


def test_collapse_on_large_torus_keeps_chi():
    t = torus(12, 8)
    out = edge_collapse(t, edges(t)[0])
    assert out is not None
    assert counts(out) == (t.n_vertices - 1, len(edges(t)) - 3, t.n_faces - 2)
    assert euler_characteristic(out) == 0


def test_random_collapses_keep_components(rng):
    m = merge([icosphere(4), icosphere(4).translated((4, 0, 0))])
    ed = MeshEditor(m)
    accepted = 0
    while accepted < 1000:
        fi = int(rng.integers(len(ed.faces)))
        if ed.faces[fi] is None:
            continue
        k = int(rng.integers(3))
        a, b = ed.faces[fi][k], ed.faces[fi][(k + 1) % 3]
        if ed.collapse(a, b):
            accepted += 1
            if accepted % 100 == 0:
                out = ed.to_mesh()
                assert oracles.triangle_components(out.triangles) == 2
                assert euler_characteristic(out) == 4
    out = ed.to_mesh()
    assert out.n_vertices == m.n_vertices - 1000
    assert validate_manifold(out, check_intersections=False).is_oriented


def test_surface_area(unit_cube):
    assert surface_area(unit_cube) == pytest.approx(6.0)
    assert surface_area(TriangleMesh(np.zeros((0, 3)), np.zeros((0, 3), int))) == 0.0


@settings(max_examples=30, deadline=None)
@given(st.floats(0.01, 100.0))
def test_area_scales_quadratically(s):
    m = icosphere(1)
    assert surface_area(m.scaled(s)) == pytest.approx(s * s * surface_area(m), rel=1e-9)


def test_off_obj_round_trip(tmp_path, rng):
    m = merge([icosphere(1), torus(4, 3).translated((5, 0, 0))])
    m = TriangleMesh(m.vertices + rng.normal(0, 1e-3, m.vertices.shape), m.triangles, m.object_id)
    write_off(m, tmp_path / "a.off")
    back = read_off(tmp_path / "a.off")
    assert np.array_equal(back.vertices, m.vertices) and np.array_equal(back.triangles, m.triangles)
    write_obj(m, tmp_path / "a.obj")
    assert "g object_1" in (tmp_path / "a.obj").read_text()
    back = read_obj(tmp_path / "a.obj")
    assert np.array_equal(back.vertices, m.vertices)
    assert np.array_equal(np.unique(back.object_id), [0, 1])


def test_malformed_off(tmp_path):
    (tmp_path / "bad.off").write_text("OFF\n3 1 0\n0 0 0\n")
    with pytest.raises(MeshError):
        read_off(tmp_path / "bad.off")


def test_cube_bounds():
    lo, hi = cube(2.0).bounds()
    assert np.allclose(lo, 0) and np.allclose(hi, 2)
