import numpy as np
import pytest

from toposynth.growth import (EnvField, GrowthConfig, grow, growth_gradient, objective, snapshot_stages,
                              tangent_point_energy, tangent_point_gradient)
from toposynth.intersect import detect_self_intersections
from toposynth.mesh import TriangleMesh, merge, surface_area
from toposynth.primitives import icosphere, torus
from toposynth.seeds import make_linked_pair, make_seed
from toposynth.topology import scene_summary
from toposynth.wfc import OccupancyGrid


def brute_energy(mesh: TriangleMesh) -> float:
    """Direct double loop over vertex pairs with area-weighted vertex normals."""
    V, T = mesh.vertices, mesh.triangles
    A = np.zeros(len(V))
    N = np.zeros((len(V), 3))
    for a, b, c in T:
        cr = np.cross(V[b] - V[a], V[c] - V[a])
        for v in (a, b, c):
            A[v] += np.linalg.norm(cr) / 6.0
            N[v] += cr  # |cr| = 2 * area, so this is area weighted
    N /= np.linalg.norm(N, axis=1)[:, None]
    E = 0.0
    for i in range(len(V)):
        for j in range(len(V)):
            if i == j:
                continue
            d = V[i] - V[j]
            r = max(np.linalg.norm(d), 1e-9)
            E += A[i] * A[j] * (N[i] @ d) ** 2 / r ** 6
    return E


def test_energy_matches_double_loop():
    m = torus(6, 5)
    assert tangent_point_energy(m) == pytest.approx(brute_energy(m), rel=1e-10)


def test_energy_scale_invariant(rng):
    for _ in range(5):
        m = icosphere(2)
        m = TriangleMesh(m.vertices * rng.uniform(0.5, 2, 3), m.triangles)
        e = tangent_point_energy(m)
        assert tangent_point_energy(m.scaled(2.0)) == pytest.approx(e, rel=1e-9)


def patch(z):
    xs = np.linspace(0, 1, 5)
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    V = np.column_stack([X.ravel(), Y.ravel(), np.full(25, z)])
    T = []
    for i in range(4):
        for j in range(4):
            a, b, c, d = i * 5 + j, (i + 1) * 5 + j, (i + 1) * 5 + j + 1, i * 5 + j + 1
            T += [(a, b, c), (a, c, d)]
    return TriangleMesh(V, np.array(T))


def test_parallel_patches_repel():
    far = merge([patch(0.0), patch(0.5)])
    near = merge([patch(0.0), patch(0.2)])
    assert tangent_point_energy(near) > tangent_point_energy(far)
    assert tangent_point_energy(patch(0.0)) == pytest.approx(0.0, abs=1e-20)


def fd_gradient(f, x, h=1e-5):
    g = np.zeros_like(x)
    for i in range(x.shape[0]):
        for k in range(3):
            xp, xm = x.copy(), x.copy()
            xp[i, k] += h
            xm[i, k] -= h
            g[i, k] = (f(xp) - f(xm)) / (2 * h)
    return g


def test_energy_gradient_fd():
    m = torus(6, 5, R=2.0, r=0.8)
    _, g = tangent_point_gradient(m)
    fd = fd_gradient(lambda x: tangent_point_energy(TriangleMesh(x, m.triangles)), m.vertices)
    assert np.max(np.abs(g - fd)) / np.max(np.abs(fd)) < 1e-6


def test_area_only_gradient():
    m = icosphere(1)
    cfg = GrowthConfig(w_area=1.0, w_rep=0.0, w_env=0.0)
    g = growth_gradient(m, None, cfg)
    fd = fd_gradient(lambda x: -surface_area(TriangleMesh(x, m.triangles)), m.vertices)
    assert np.allclose(g, fd, atol=1e-7)
    stepped = TriangleMesh(m.vertices - 1e-3 * g, m.triangles)
    assert surface_area(stepped) > surface_area(m)


def test_env_term_zero_in_free_space():
    env = OccupancyGrid(np.zeros((9, 9, 9), dtype=bool), 1.0)
    d, g = EnvField(env).depth(np.array([[4.5, 4.5, 4.5], [1.0, 2.0, 3.0]]))
    assert np.all(d == 0) and np.all(g == 0)


def test_env_depth_continuous_and_differentiable(rng):
    occ = rng.random((9, 9, 9)) < 0.4
    field = EnvField(OccupancyGrid(occ, 1.0))
    x = rng.uniform(-1, 10, (5000, 3))
    d, g = field.depth(x)
    y = x + rng.normal(0, 1e-4, x.shape)
    ratio = np.abs(field.depth(y)[0] - d) / np.linalg.norm(y - x, axis=1)
    assert ratio.max() <= 1.0 + 1e-9  # 1-Lipschitz, so no jumps
    # outside the grid counts as blocked
    assert field.depth(np.array([[-0.5, 4.5, 4.5]]))[0][0] > 0
    # central differences agree away from kinks
    h = 1e-6
    for k in range(3):
        e = np.zeros(3)
        e[k] = h
        fd = (field.depth(x + e)[0] - field.depth(x - e)[0]) / (2 * h)
        assert np.mean(np.abs(fd - g[:, k]) < 1e-5) > 0.97


def test_full_objective_gradient_with_env():
    occ = np.zeros((6, 6, 6), dtype=bool)
    occ[3:, :, :] = True
    env = OccupancyGrid(occ, 1.0)
    m = icosphere(1, radius=0.8).translated((2.9, 3, 3))
    cfg = GrowthConfig(w_area=1.0, w_rep=0.05, w_env=10.0)
    g = growth_gradient(m, env, cfg)
    field = EnvField(env)
    fd = fd_gradient(lambda x: objective(TriangleMesh(x, m.triangles), cfg, field, False)[0], m.vertices, 1e-6)
    assert np.max(np.abs(g - fd)) / np.max(np.abs(fd)) < 1e-4


def test_zero_iterations_identity():
    seeds = [make_seed(1)]
    out, trace = grow(seeds, None, GrowthConfig(max_iterations=0))
    assert np.array_equal(out[0].vertices, seeds[0].vertices) and trace.records == []


def test_torus_growth_short():
    seed = make_seed(1)
    out, trace = grow([seed], None, GrowthConfig(max_iterations=50, rng_seed=1))
    assert all(r.chi == [0] and r.components == 1 for r in trace.records)
    assert surface_area(out[0]) > surface_area(seed)
    assert scene_summary(out).genera == [1]


def test_growth_deterministic():
    cfg = GrowthConfig(max_iterations=15, rng_seed=7)
    a, _ = grow([make_seed(2)], None, cfg)
    b, _ = grow([make_seed(2)], None, cfg)
    assert np.array_equal(a[0].vertices, b[0].vertices)


def test_descent_without_area_never_increases():
    m = icosphere(2)
    m = TriangleMesh(m.vertices * np.array([1.0, 1.0, 0.4]), m.triangles)
    cfg = GrowthConfig(w_area=0.0, w_rep=1.0, w_env=0.0, max_iterations=15, remesh_every=1000, jitter=0.0)
    values = []
    grow([m], None, cfg, callback=lambda it, scene, rec: values.append(objective(scene, cfg)[0]))
    F0 = objective(m, cfg)[0]
    seq = [F0] + values
    assert all(b <= a + 1e-9 for a, b in zip(seq, seq[1:]))


def test_snapshot_stages():
    seeds = [make_seed(1)]
    cfg = GrowthConfig(max_iterations=20, rng_seed=3)
    snaps, _ = snapshot_stages(seeds, None, cfg, [0])
    assert np.array_equal(snaps[0][0].vertices, seeds[0].vertices)
    snaps, _ = snapshot_stages(seeds, None, cfg, [10, 20])
    ten, _ = grow(seeds, None, GrowthConfig(max_iterations=10, rng_seed=3))
    assert np.array_equal(snaps[0][0].vertices, ten[0].vertices)


def test_linked_stages_grow_and_stay_linked():
    pair = list(make_linked_pair(1, 3))
    snaps, trace = snapshot_stages(pair, None, GrowthConfig(max_iterations=40, rng_seed=5), [10, 20, 30, 40])
    areas = [sum(surface_area(m) for m in s) for s in snaps]
    assert all(b > a for a, b in zip(areas, areas[1:]))
    for s in snaps:
        assert scene_summary(s).genera == [1, 3]
        assert detect_self_intersections(merge(s)) == []


def test_config_validation():
    with pytest.raises(ValueError):
        GrowthConfig(w_area=0, w_rep=0, w_env=0)
    with pytest.raises(ValueError):
        GrowthConfig(edge_min=2.0, edge_max=1.0)


def test_trace_csv(tmp_path):
    _, trace = grow([make_seed(0)], None, GrowthConfig(max_iterations=3))
    trace.write_csv(tmp_path / "t.csv")
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "iteration,area,energy,chi,components,accepted" and len(lines) == 4
