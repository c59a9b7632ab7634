"""Genus-g seed surfaces built as boundaries of voxel solids, plus linked pairs and placement."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .intersect import find_collisions
from .mesh import TriangleMesh, degenerate_faces, enclosed_volume, merge, split_objects
from .wfc import OccupancyGrid

SMOOTHING_ROUNDS = 3
MAX_PLACEMENT_ATTEMPTS = 1000


class PlacementError(RuntimeError):
    pass


class PreconditionError(ValueError):
    pass


@dataclass
class SeedSpec:
    genus: int
    placement: tuple[float, float, float] | None = None
    linked_to: int | None = None
    scale: float = 4.0  # longest side, in environment cells


# ---------------------------------------------------------------------------
# voxel boundary extraction

def _cube_components():
    """For each of 256 occupancy patterns of a 2x2x2 block: face-connected labels per cell."""
    table = np.zeros((256, 8), dtype=np.int64)
    for cfg in range(256):
        occ = [(cfg >> c) & 1 for c in range(8)]
        label = [-1] * 8
        nxt = 0
        for c in range(8):
            if label[c] >= 0:
                continue
            label[c] = nxt
            stack = [c]
            while stack:
                u = stack.pop()
                for bit in (1, 2, 4):
                    v = u ^ bit
                    if label[v] < 0 and occ[v] == occ[u]:
                        label[v] = nxt
                        stack.append(v)
            nxt += 1
        table[cfg] = label
    return table


_CUBE_LABELS = _cube_components()


def voxel_surface(occ: np.ndarray, origin=(0, 0, 0)) -> TriangleMesh:
    """Outward-wound triangulated boundary of a voxel solid.

    Lattice points where the solid (or its complement) only touches itself
    along an edge or corner get one vertex per local face-connected piece,
    which keeps the output a closed 2-manifold.
    """
    occ = np.asarray(occ, dtype=bool)
    pad = np.pad(occ, 1)
    origin = np.asarray(origin, float)
    vert_index: dict[tuple, int] = {}
    verts: list[np.ndarray] = []
    tris: list[tuple[int, int, int]] = []

    def corner_vertex(p, solid_cell, empty_cell):
        # p is a lattice point in padded coords; the 2x2x2 block spans cells p-1..p
        block = pad[p[0] - 1:p[0] + 1, p[1] - 1:p[1] + 1, p[2] - 1:p[2] + 1]
        cfg = 0
        for dz in range(2):
            for dy in range(2):
                for dx in range(2):
                    if block[dx, dy, dz]:
                        cfg |= 1 << (dx + 2 * dy + 4 * dz)
        labels = _CUBE_LABELS[cfg]

        def local(c):
            d = np.asarray(c) - (np.asarray(p) - 1)
            return int(d[0] + 2 * d[1] + 4 * d[2])

        key = (*p, labels[local(solid_cell)], labels[local(empty_cell)])
        if key not in vert_index:
            vert_index[key] = len(verts)
            verts.append(origin + np.asarray(p, float) - 1.0)
        return vert_index[key]

    cells = np.argwhere(pad)
    for c in cells:
        c = tuple(int(v) for v in c)
        for axis in range(3):
            u, v = (axis + 1) % 3, (axis + 2) % 3
            for sign in (1, -1):
                nb = list(c)
                nb[axis] += sign
                if pad[tuple(nb)]:
                    continue
                base = list(c)
                if sign > 0:
                    base[axis] += 1
                offs = [(0, 0), (1, 0), (1, 1), (0, 1)]
                if sign < 0:
                    offs = offs[::-1]
                quad = []
                for ou, ov in offs:
                    p = list(base)
                    p[u] += ou
                    p[v] += ov
                    quad.append(corner_vertex(tuple(p), c, tuple(nb)))
                a, b, cc, d = quad
                tris += [(a, b, cc), (a, cc, d)]
    return TriangleMesh(np.array(verts).reshape(-1, 3), np.array(tris, dtype=np.int64).reshape(-1, 3))


def slab_voxels(genus: int) -> np.ndarray:
    """(4g+3) x 3 x 3 solid with g unit tunnels along z; g = 0 is a solid block."""
    occ = np.ones((4 * genus + 3, 3, 3), dtype=bool)
    for i in range(genus):
        occ[3 + 4 * i, 1, :] = False
    return occ


def plate_voxels(genus: int) -> np.ndarray:
    """(4g+1) x 5 x 1 plate with g square 3x3 holes; bars are one cell wide.

    The wide holes leave room for another plate's bar to pass through.
    """
    occ = np.ones((4 * genus + 1, 5, 1), dtype=bool)
    for i in range(genus):
        occ[1 + 4 * i:4 + 4 * i, 1:4, :] = False
    return occ


# ---------------------------------------------------------------------------
# smoothing

def _laplacian_step(mesh: TriangleMesh, lam: float) -> TriangleMesh:
    n = mesh.n_vertices
    e = np.sort(mesh.triangles[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2), axis=1)
    e = np.unique(e, axis=0)
    acc = np.zeros((n, 3))
    deg = np.zeros(n)
    np.add.at(acc, e[:, 0], mesh.vertices[e[:, 1]])
    np.add.at(acc, e[:, 1], mesh.vertices[e[:, 0]])
    np.add.at(deg, e[:, 0], 1)
    np.add.at(deg, e[:, 1], 1)
    avg = acc / np.maximum(deg, 1)[:, None]
    return TriangleMesh(mesh.vertices + lam * (avg - mesh.vertices), mesh.triangles, mesh.object_id)


def smooth_guarded(mesh: TriangleMesh, rounds: int = SMOOTHING_ROUNDS, lam: float = 0.5) -> TriangleMesh:
    """Volume-restoring Laplacian relaxation per object; a round is dropped if it
    creates a self-intersection or a degenerate triangle anywhere in the union."""
    current = mesh
    for _ in range(rounds):
        parts = split_objects(current) if current.object_id is not None else [current]
        moved = []
        for part in parts:
            v0 = enclosed_volume(part)
            c0 = part.vertices.mean(axis=0)
            step = _laplacian_step(part, lam)
            v1 = enclosed_volume(step)
            if v0 > 0 and v1 > 0:
                c1 = step.vertices.mean(axis=0)
                s = (v0 / v1) ** (1.0 / 3.0)
                step = TriangleMesh(c0 + (step.vertices - c1) * s, step.triangles, step.object_id)
            moved.append(step)
        trial = merge(moved, [int(p.object_id[0]) for p in parts]) if current.object_id is not None else moved[0]
        if len(degenerate_faces(trial)) or find_collisions(trial):
            continue
        current = trial
    return current


# ---------------------------------------------------------------------------
# seeds

def make_seed(genus: int, smooth: bool = True) -> TriangleMesh:
    """Closed orientable surface of exactly ``genus`` handles, in voxel units."""
    if genus < 0:
        raise PreconditionError("genus must be non-negative")
    mesh = voxel_surface(slab_voxels(genus))
    if smooth:
        mesh = smooth_guarded(mesh)
    return mesh


def linked_voxels(genus_a: int, genus_b: int):
    """Two plates whose bars thread through each other's first hole.

    A lies in the xy plane; B is stood up in the xz plane at y = 2 so that
    B's left bar passes the centre of A's first hole and A's second vertical
    bar passes the centre of B's first hole. Cells of the two solids are at
    least one empty cell apart everywhere.
    """
    pa = plate_voxels(genus_a)
    pb = plate_voxels(genus_b)
    a_cells = [(x, y, 0) for x, y, _ in np.argwhere(pa)]
    b_cells = [(2 + x, 2, -2 + y) for x, y, _ in np.argwhere(pb)]
    allc = np.array(a_cells + b_cells)
    lo = allc.min(axis=0)
    shape = tuple(allc.max(axis=0) - lo + 1)
    occ_a = np.zeros(shape, dtype=bool)
    occ_b = np.zeros(shape, dtype=bool)
    occ_a[tuple((np.array(a_cells) - lo).T)] = True
    occ_b[tuple((np.array(b_cells) - lo).T)] = True
    return occ_a, occ_b


def make_linked_pair(genus_a: int, genus_b: int, smooth: bool = True) -> tuple[TriangleMesh, TriangleMesh]:
    if genus_a < 1 or genus_b < 1:
        raise PreconditionError("linked seeds need genus >= 1 on both sides")
    occ_a, occ_b = linked_voxels(genus_a, genus_b)
    a, b = voxel_surface(occ_a), voxel_surface(occ_b)
    if smooth:
        both = smooth_guarded(merge([a, b]))
        a, b = split_objects(both)
        a.object_id = b.object_id = None
    return a, b


# ---------------------------------------------------------------------------
# placement

_ROTATIONS = [
    np.array(m) for m in (
        [[1, 0, 0], [0, 1, 0], [0, 0, 1]],
        [[0, 1, 0], [0, 0, 1], [1, 0, 0]],
        [[0, 0, 1], [1, 0, 0], [0, 1, 0]],
        [[0, 1, 0], [1, 0, 0], [0, 0, -1]],
        [[1, 0, 0], [0, 0, 1], [0, -1, 0]],
        [[0, 0, 1], [0, -1, 0], [1, 0, 0]],
    )
]


def _orient(mesh: TriangleMesh, rot: np.ndarray) -> TriangleMesh:
    # proper rotations only, so winding stays outward
    return TriangleMesh(mesh.vertices @ rot.T, mesh.triangles, mesh.object_id)


def _boxes_apart(lo1, hi1, lo2, hi2, gap) -> bool:
    return bool(np.any(lo1 - gap >= hi2) or np.any(lo2 - gap >= hi1))


def seed_units(specs: list[SeedSpec]) -> list[tuple[list[int], list[TriangleMesh]]]:
    """Group specs into placement units: singles, and linked pairs kept together."""
    units, done = [], set()
    for i, spec in enumerate(specs):
        if i in done:
            continue
        j = spec.linked_to
        if j is not None:
            if specs[j].linked_to != i:
                raise PreconditionError(f"seed {i} links to {j} but not back")
            a, b = make_linked_pair(spec.genus, specs[j].genus)
            units.append(([i, j], [a, b]))
            done.update((i, j))
        else:
            units.append(([i], [make_seed(spec.genus)]))
            done.add(i)
    return units


def place_seeds(specs: list[SeedSpec], env: OccupancyGrid, rng_seed, max_attempts: int = MAX_PLACEMENT_ATTEMPTS,
                gap_cells: float = 1.0) -> list[TriangleMesh]:
    """Scale, orient and translate seeds into free space of ``env``.

    Each unit's bounding box must avoid occupied cells and stay ``gap_cells``
    cells away from every other unit. Returns meshes in spec order.
    """
    if not 1 <= len(specs) <= 3:
        raise PreconditionError("a scene holds 1 to 3 seeds")
    rng = np.random.default_rng(rng_seed)
    cs = env.cell_size
    placed_boxes: list[tuple[np.ndarray, np.ndarray]] = []
    out: dict[int, TriangleMesh] = {}
    attempts = 0
    for idxs, meshes in seed_units(specs):
        both = merge(meshes)
        lo, hi = both.bounds()
        target = max(specs[i].scale for i in idxs) * cs
        s = target / float((hi - lo).max())
        while True:
            attempts += 1
            if attempts > max_attempts:
                raise PlacementError(f"no valid placement after {max_attempts} attempts (scene seed {rng_seed})")
            rot = _ROTATIONS[rng.integers(len(_ROTATIONS))]
            m = _orient(both, rot)
            m = TriangleMesh((m.vertices - m.vertices.min(axis=0)) * s, m.triangles, m.object_id)
            size = m.vertices.max(axis=0)
            room = env.extent - size
            if np.any(room <= 0):
                continue
            shift = rng.random(3) * room
            if attempts % 2 == 0:
                # every other try sits on the cell lattice, where free boxes line up
                shift = np.minimum(np.round(shift / cs) * cs, room)
            blo, bhi = shift, shift + size
            if not env.box_is_free(blo, bhi):
                continue
            if not all(_boxes_apart(blo, bhi, plo, phi, gap_cells * cs) for plo, phi in placed_boxes):
                continue
            placed_boxes.append((blo, bhi))
            for k, part in zip(idxs, split_objects(m.translated(shift))):
                part.object_id = None
                out[k] = part
            break
    return [out[i] for i in range(len(specs))]
