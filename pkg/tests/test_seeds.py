import numpy as np
import pytest

import oracles
from toposynth.intersect import detect_self_intersections
from toposynth.mesh import merge, validate_manifold
from toposynth.seeds import (PlacementError, PreconditionError, SeedSpec, make_linked_pair, make_seed,
                             place_seeds, voxel_surface)
from toposynth.topology import genus_of_component, scene_summary
from toposynth.wfc import OccupancyGrid


@pytest.mark.parametrize("g", range(7))
def test_seed_topology_up_to_six(g):
    m = make_seed(g)
    d = validate_manifold(m)
    assert d.is_closed and d.is_oriented and d.component_count == 1
    assert d.euler_characteristic == 2 - 2 * g == oracles.euler_by_sets(m.triangles)
    assert d.self_intersections == [] and d.degenerate_faces == []


def test_negative_genus_rejected():
    with pytest.raises(PreconditionError):
        make_seed(-1)


def test_voxel_surface_resolves_edge_contact():
    # two cubes touching along an edge: the shared edge is duplicated, not pinched
    occ = np.zeros((2, 2, 1), dtype=bool)
    occ[0, 0, 0] = occ[1, 1, 0] = True
    m = voxel_surface(occ)
    d = validate_manifold(m)
    assert d.is_closed and d.is_oriented and d.component_count == 2
    assert d.euler_characteristic == 4


@pytest.mark.parametrize("ga,gb", [(1, 3), (1, 1), (2, 2)])
def test_linked_pair(ga, gb):
    a, b = make_linked_pair(ga, gb)
    s = scene_summary([a, b])
    assert s.genera == [ga, gb]
    assert detect_self_intersections(merge([a, b])) == []


def test_linked_pair_needs_handles():
    with pytest.raises(PreconditionError):
        make_linked_pair(0, 1)


def empty_env(n=18):
    return OccupancyGrid(np.zeros((n, n, n), dtype=bool), 1.0)


def test_place_single_seed():
    (m,) = place_seeds([SeedSpec(0)], empty_env(), 3)
    lo, hi = m.bounds()
    assert np.all(lo >= 0) and np.all(hi <= 18)
    assert genus_of_component(m) == 0


def test_place_three_seeds_separated():
    specs = [SeedSpec(1), SeedSpec(2), SeedSpec(3)]
    meshes = place_seeds(specs, empty_env(), 11)
    assert scene_summary(meshes).genera == [1, 2, 3]
    boxes = [m.bounds() for m in meshes]
    for i in range(3):
        for j in range(i + 1, 3):
            (l1, h1), (l2, h2) = boxes[i], boxes[j]
            gap = np.maximum(l2 - h1, l1 - h2).max()
            assert gap >= 1.0 - 1e-9
    assert detect_self_intersections(merge(meshes)) == []
    again = place_seeds(specs, empty_env(), 11)
    assert all(np.array_equal(a.vertices, b.vertices) for a, b in zip(meshes, again))


def test_place_fails_in_crowded_env():
    occ = np.ones((9, 9, 9), dtype=bool)
    occ[:5, :5, :5] = False  # one pocket, room for a single seed
    with pytest.raises(PlacementError, match="scene seed 4"):
        place_seeds([SeedSpec(0), SeedSpec(0), SeedSpec(0)], OccupancyGrid(occ, 1.0), 4)


def test_place_linked_pair():
    specs = [SeedSpec(1, linked_to=1), SeedSpec(3, linked_to=0)]
    meshes = place_seeds(specs, empty_env(), 2)
    assert scene_summary(meshes).genera == [1, 3]
    assert detect_self_intersections(merge(meshes)) == []


def test_too_many_seeds():
    with pytest.raises(PreconditionError):
        place_seeds([SeedSpec(0)] * 4, empty_env(), 0)
