"""Wave function collapse over 3x3x3 corridor tiles, producing voxel barrier environments."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

# direction index -> (axis, sign); opposite of d is d ^ 1
DIRECTIONS = [(0, 1), (0, -1), (1, 1), (1, -1), (2, 1), (2, -1)]
DIR_NAMES = ["+x", "-x", "+y", "-y", "+z", "-z"]
MAX_RESTARTS = 100


class GenerationError(RuntimeError):
    pass


@dataclass
class Tile:
    id: int
    cells: np.ndarray
    name: str
    weight: float = 1.0

    @property
    def occupied_count(self) -> int:
        return int(self.cells.sum())


@dataclass
class TileGrid:
    dims: tuple[int, int, int]
    assignment: np.ndarray  # (nx, ny, nz) tile ids
    rng_seed: int
    tile_names: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        # x varies fastest
        ids = self.assignment.transpose(2, 1, 0).reshape(-1)
        return {"dims": list(self.dims), "rng_seed": int(self.rng_seed),
                "tiles": [int(i) for i in ids], "tileset": list(self.tile_names)}

    @classmethod
    def from_json(cls, data: dict) -> TileGrid:
        nx, ny, nz = data["dims"]
        ids = np.asarray(data["tiles"], dtype=np.int64).reshape(nz, ny, nx).transpose(2, 1, 0)
        return cls((nx, ny, nz), ids, int(data["rng_seed"]), list(data.get("tileset", [])))

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_json()))


@dataclass
class OccupancyGrid:
    occupied: np.ndarray  # bool (3nx, 3ny, 3nz)
    cell_size: float = 1.0

    @property
    def dims(self) -> tuple[int, int, int]:
        return tuple(int(d) for d in self.occupied.shape)

    @property
    def extent(self) -> np.ndarray:
        return np.array(self.dims, dtype=float) * self.cell_size

    def box_is_free(self, lo, hi) -> bool:
        """True when the box lies inside the grid and touches no occupied cell."""
        lo = np.asarray(lo, float) / self.cell_size
        hi = np.asarray(hi, float) / self.cell_size
        if np.any(lo < 0) or np.any(hi > np.array(self.dims)):
            return False
        i0 = np.floor(lo).astype(int)
        i1 = np.maximum(np.ceil(hi).astype(int), i0 + 1)
        return not self.occupied[i0[0]:i1[0], i0[1]:i1[1], i0[2]:i1[2]].any()


def _arm_tile(arms, name, tid) -> Tile:
    cells = np.zeros((3, 3, 3), dtype=bool)
    if arms is not None:
        cells[1, 1, 1] = True
        for d in arms:
            axis, sign = DIRECTIONS[d]
            idx = [1, 1, 1]
            idx[axis] += sign
            cells[tuple(idx)] = True
    return Tile(tid, cells, name)


def default_tileset(include_caps: bool = False) -> list[Tile]:
    """Empty, 3 straights, 12 quarter turns, 3 planar crosses and the 3D cross.

    ``include_caps`` appends the 6 dead-end tiles (one per axis direction).
    """
    specs: list[tuple[list[int] | None, str]] = [(None, "empty")]
    for axis, label in enumerate("xyz"):
        specs.append(([2 * axis, 2 * axis + 1], f"straight-{label}"))
    for d1, d2 in itertools.combinations(range(6), 2):
        if d1 // 2 != d2 // 2:
            specs.append(([d1, d2], f"turn{DIR_NAMES[d1]}{DIR_NAMES[d2]}"))
    for a1, a2 in itertools.combinations(range(3), 2):
        specs.append(([2 * a1, 2 * a1 + 1, 2 * a2, 2 * a2 + 1], f"cross-{'xyz'[a1]}{'xyz'[a2]}"))
    specs.append((list(range(6)), "cross-xyz"))
    if include_caps:
        for d in range(6):
            specs.append(([d], f"cap{DIR_NAMES[d]}"))
    return [_arm_tile(arms, name, i) for i, (arms, name) in enumerate(specs)]


def face_pattern(tile: Tile, direction: int) -> np.ndarray:
    axis, sign = DIRECTIONS[direction]
    return np.take(tile.cells, 2 if sign > 0 else 0, axis=axis)


def face_compatible(a: Tile, b: Tile, direction: int) -> bool:
    """Can ``b`` sit next to ``a`` on a's ``direction`` side."""
    return bool(np.array_equal(face_pattern(a, direction), face_pattern(b, direction ^ 1)))


def _slot_neighbors(dims):
    nx, ny, nz = dims
    n = nx * ny * nz
    nbr = np.full((n, 6), -1, dtype=np.int64)
    for s in range(n):
        x, y, z = s % nx, (s // nx) % ny, s // (nx * ny)
        p = [x, y, z]
        for d, (axis, sign) in enumerate(DIRECTIONS):
            q = list(p)
            q[axis] += sign
            if 0 <= q[axis] < dims[axis]:
                nbr[s, d] = q[0] + nx * (q[1] + ny * q[2])
    return nbr


def collapse(dims, tileset: list[Tile], rng_seed: int, boundary_rule: str = "closed",
             weights=None, max_restarts: int = MAX_RESTARTS) -> TileGrid:
    """Solve a tiling by minimum-entropy collapse with constraint propagation.

    A contradiction restarts the whole solve with the generator advanced, so
    the result depends only on the arguments.
    """
    dims = tuple(int(d) for d in dims)
    if min(dims) < 1 or not tileset:
        raise ValueError("dims must be positive and the tileset non-empty")
    if boundary_rule not in ("closed", "open"):
        raise ValueError(f"unknown boundary rule {boundary_rule!r}")
    T = len(tileset)
    w = np.array([t.weight for t in tileset] if weights is None else weights, dtype=float)
    compat = np.array([[[face_compatible(a, b, d) for b in tileset] for a in tileset] for d in range(6)])
    nbr = _slot_neighbors(dims)
    n = len(nbr)

    base = np.ones((n, T), dtype=bool)
    if boundary_rule == "closed":
        closed_face = np.array([[not face_pattern(t, d).any() for t in tileset] for d in range(6)])
        for d in range(6):
            base[nbr[:, d] < 0] &= closed_face[d]

    rng = np.random.default_rng(rng_seed)
    logw = np.log(np.where(w > 0, w, 1.0))

    def propagate(dom, stack):
        while stack:
            s = stack.pop()
            allowed_here = dom[s]
            for d in range(6):
                m = nbr[s, d]
                if m < 0:
                    continue
                reach = compat[d][allowed_here].any(axis=0)
                new = dom[m] & reach
                if not np.array_equal(new, dom[m]):
                    if not new.any():
                        return False
                    dom[m] = new
                    stack.append(m)
        return True

    for _ in range(max_restarts + 1):
        dom = base.copy()
        dom[:, w <= 0] = False
        ok = dom.any(axis=1).all() and propagate(dom, list(range(n)))
        while ok:
            counts = dom.sum(axis=1)
            open_slots = np.flatnonzero(counts > 1)
            if len(open_slots) == 0:
                assignment = np.argmax(dom, axis=1)
                grid = assignment.reshape(dims[2], dims[1], dims[0]).transpose(2, 1, 0)
                return TileGrid(dims, grid.copy(), int(rng_seed), [t.name for t in tileset])
            dw = dom[open_slots] * w
            tot = dw.sum(axis=1)
            entropy = np.log(tot) - (dw * logw).sum(axis=1) / tot
            entropy = entropy + 1e-6 * rng.random(len(open_slots))
            s = int(open_slots[np.argmin(entropy)])
            p = dom[s] * w
            choice = int(rng.choice(T, p=p / p.sum()))
            dom[s] = False
            dom[s, choice] = True
            ok = propagate(dom, [s])
    raise GenerationError(f"tiling unsatisfiable after {max_restarts} restarts (seed {rng_seed})")


def audit_tiling(grid: TileGrid, tileset: list[Tile], boundary_rule: str = "closed") -> list[str]:
    """Exhaustively list adjacency and boundary violations (empty list means valid)."""
    problems = []
    a = grid.assignment
    nx, ny, nz = grid.dims
    for x, y, z in itertools.product(range(nx), range(ny), range(nz)):
        t = tileset[a[x, y, z]]
        for d, (axis, sign) in enumerate(DIRECTIONS):
            q = [x, y, z]
            q[axis] += sign
            if 0 <= q[axis] < grid.dims[axis]:
                if sign > 0 and not face_compatible(t, tileset[a[tuple(q)]], d):
                    problems.append(f"{(x, y, z)} {DIR_NAMES[d]} {tuple(q)}")
            elif boundary_rule == "closed" and face_pattern(t, d).any():
                problems.append(f"{(x, y, z)} opens boundary {DIR_NAMES[d]}")
    return problems


def voxelize(grid: TileGrid, tileset: list[Tile], cell_size: float = 1.0) -> OccupancyGrid:
    nx, ny, nz = grid.dims
    cells = np.stack([t.cells for t in tileset])[grid.assignment]  # (nx, ny, nz, 3, 3, 3)
    occ = cells.transpose(0, 3, 1, 4, 2, 5).reshape(3 * nx, 3 * ny, 3 * nz)
    return OccupancyGrid(occ.copy(), float(cell_size))


def barrier_mesh(env: OccupancyGrid):
    """Boundary surface of the occupied cells, for visual inspection."""
    from .seeds import voxel_surface
    return voxel_surface(env.occupied).scaled(env.cell_size)
