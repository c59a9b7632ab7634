"""Surface-area growth under a tangent-point repulsion barrier with intersection rollback."""

from __future__ import annotations

import csv
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
from numba import njit

from .intersect import find_collisions
from .mesh import (
    MeshEditor,
    TriangleMesh,
    component_count,
    degenerate_faces,
    edges,
    mean_edge_length,
    _unique_pairs,
    merge,
    split_objects,
)
from .wfc import OccupancyGrid

MIN_DIST = 1e-9
MAX_HALVINGS = 8
MAX_FREEZES = 4


@dataclass
class GrowthConfig:
    w_area: float = 1.0
    w_rep: float = 0.05
    w_env: float = 10.0
    step_size: float | None = None  # default 0.2 x mean seed edge length
    max_iterations: int = 200
    remesh_every: int = 5
    edge_min: float | None = None  # default 0.5 x mean seed edge length
    edge_max: float | None = None  # default 2.0 x mean seed edge length
    rng_seed: int = 0
    max_vertices: int = 3000
    jitter: float = 0.05  # initial vertex jitter, as a fraction of edge_min

    def __post_init__(self):
        if min(self.w_area, self.w_rep, self.w_env) < 0:
            raise ValueError("weights must be non-negative")
        if self.w_area == self.w_rep == self.w_env == 0:
            raise ValueError("at least one weight must be positive")
        if self.max_iterations < 0 or self.remesh_every < 1:
            raise ValueError("max_iterations must be >= 0 and remesh_every >= 1")
        if self.edge_min is not None and self.edge_max is not None and not self.edge_min < self.edge_max:
            raise ValueError("edge_min must be smaller than edge_max")

    def resolved(self, mesh: TriangleMesh) -> GrowthConfig:
        """Fill length-scale defaults from the seed's mean edge length."""
        ell = mean_edge_length(mesh)
        return replace(
            self,
            step_size=self.step_size if self.step_size is not None else 0.2 * ell,
            edge_min=self.edge_min if self.edge_min is not None else 0.5 * ell,
            edge_max=self.edge_max if self.edge_max is not None else 2.0 * ell,
        )


@dataclass
class GrowthRecord:
    iteration: int
    area: float
    energy: float
    chi: list[int]
    components: int
    accepted: bool
    vertices: int


@dataclass
class GrowthTrace:
    records: list[GrowthRecord] = field(default_factory=list)

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["iteration", "area", "energy", "chi", "components", "accepted"])
            for r in self.records:
                w.writerow([r.iteration, f"{r.area:.9g}", f"{r.energy:.9g}",
                            ";".join(map(str, r.chi)), r.components, int(r.accepted)])

    def to_dicts(self) -> list[dict]:
        return [asdict(r) for r in self.records]


# ---------------------------------------------------------------------------
# per-vertex geometry with reverse-mode helpers

class _Geometry:
    """Face cross products, vertex areas (1/3 of incident area) and unit normals."""

    def __init__(self, vertices: np.ndarray, triangles: np.ndarray):
        self.x = vertices
        self.t = triangles
        p = vertices[triangles]
        self.e1 = p[:, 1] - p[:, 0]
        self.e2 = p[:, 2] - p[:, 0]
        self.c = np.cross(self.e1, self.e2)
        self.cn = np.linalg.norm(self.c, axis=1)
        self.face_area = 0.5 * self.cn
        n = len(vertices)
        self.A = np.zeros(n)
        np.add.at(self.A, triangles.reshape(-1), np.repeat(self.face_area / 3.0, 3))
        m = np.zeros((n, 3))
        for k in range(3):
            np.add.at(m, triangles[:, k], self.c)
        self.mn = np.linalg.norm(m, axis=1)
        self.normal = m / np.where(self.mn > 0, self.mn, 1.0)[:, None]

    def backprop(self, dA=None, dn=None, dface_area=None) -> np.ndarray:
        """Vertex gradient given upstream gradients w.r.t. A, normals and face areas."""
        dc = np.zeros_like(self.c)
        darea = np.zeros(len(self.t)) if dface_area is None else dface_area.copy()
        if dA is not None:
            darea += dA[self.t].sum(axis=1) / 3.0
        safe = np.where(self.cn > 0, self.cn, 1.0)[:, None]
        dc += darea[:, None] * 0.5 * self.c / safe
        if dn is not None:
            nrm = self.normal
            proj = dn - nrm * np.einsum("ij,ij->i", nrm, dn)[:, None]
            dm = proj / np.where(self.mn > 0, self.mn, 1.0)[:, None]
            dc += dm[self.t].sum(axis=1)
        g = np.zeros_like(self.x)
        g1 = np.cross(self.e2, dc)
        g2 = np.cross(dc, self.e1)
        np.add.at(g, self.t[:, 1], g1)
        np.add.at(g, self.t[:, 2], g2)
        np.add.at(g, self.t[:, 0], -(g1 + g2))
        return g


@njit(cache=True)
def _tp_kernel(x, A, n, want_grad):
    # each unordered pair once; the two ordered terms share the distance
    N = x.shape[0]
    E = 0.0
    gx = np.zeros((N, 3))
    gA = np.zeros(N)
    gn = np.zeros((N, 3))
    floor = MIN_DIST * MIN_DIST
    for i in range(N):
        for j in range(i + 1, N):
            d0 = x[i, 0] - x[j, 0]
            d1 = x[i, 1] - x[j, 1]
            d2 = x[i, 2] - x[j, 2]
            r2 = d0 * d0 + d1 * d1 + d2 * d2
            clamped = r2 < floor
            if clamped:
                r2 = floor
            inv6 = 1.0 / (r2 * r2 * r2)
            ni = n[i, 0] * d0 + n[i, 1] * d1 + n[i, 2] * d2
            nj = n[j, 0] * d0 + n[j, 1] * d1 + n[j, 2] * d2
            bi = ni * ni * inv6
            bj = nj * nj * inv6
            AA = A[i] * A[j]
            E += AA * (bi + bj)
            if want_grad:
                ci = AA * 2.0 * ni * inv6
                cj = AA * 2.0 * nj * inv6
                c2 = 0.0 if clamped else AA * 6.0 * (bi + bj) / r2
                v0 = ci * n[i, 0] + cj * n[j, 0] - c2 * d0
                v1 = ci * n[i, 1] + cj * n[j, 1] - c2 * d1
                v2 = ci * n[i, 2] + cj * n[j, 2] - c2 * d2
                gx[i, 0] += v0
                gx[i, 1] += v1
                gx[i, 2] += v2
                gx[j, 0] -= v0
                gx[j, 1] -= v1
                gx[j, 2] -= v2
                gn[i, 0] += ci * d0
                gn[i, 1] += ci * d1
                gn[i, 2] += ci * d2
                gn[j, 0] += cj * d0
                gn[j, 1] += cj * d1
                gn[j, 2] += cj * d2
                gA[i] += (bi + bj) * A[j]
                gA[j] += (bi + bj) * A[i]
    return E, gx, gA, gn


def _tp_pairs(geo: _Geometry, want_grad: bool):
    """Energy and its partial derivatives w.r.t. positions, vertex areas and normals."""
    x = np.ascontiguousarray(geo.x, dtype=np.float64)
    E, gx, gA, gn = _tp_kernel(x, geo.A, np.ascontiguousarray(geo.normal), want_grad)
    if not want_grad:
        return E, None, None, None
    return E, gx, gA, gn


def tangent_point_energy(mesh: TriangleMesh) -> float:
    """Sum over ordered vertex pairs of A_i A_j (n_i . (x_i - x_j))^2 / |x_i - x_j|^6."""
    if mesh.n_faces == 0:
        return 0.0
    return _tp_pairs(_Geometry(mesh.vertices, mesh.triangles), False)[0]


def tangent_point_gradient(mesh: TriangleMesh) -> tuple[float, np.ndarray]:
    geo = _Geometry(mesh.vertices, mesh.triangles)
    E, gx, gA, gn = _tp_pairs(geo, True)
    return E, gx + geo.backprop(dA=gA, dn=gn)


# ---------------------------------------------------------------------------
# environment penetration

class EnvField:
    """Penetration depth of points into the blocked region.

    Blocked means an occupied cell or anywhere outside the grid. The depth is
    the Euclidean distance to the nearest free cell, searched within two cells
    of the point; deeper points fall back to the axis-aligned escape distance.
    The field is continuous, which the step-halving line search relies on.
    """

    _OFFS = np.array([(i, j, k) for i in range(-2, 3) for j in range(-2, 3) for k in range(-2, 3)])

    def __init__(self, env: OccupancyGrid):
        self.env = env
        occ = env.occupied
        self.runs = np.zeros(occ.shape + (6,))
        # runs[..., 2k] : occupied cells from this cell (inclusive) towards +axis k
        for axis in range(3):
            for sign, slot in ((1, 2 * axis), (-1, 2 * axis + 1)):
                r = np.zeros(occ.shape)
                a = np.moveaxis(occ, axis, 0)
                rr = np.moveaxis(r, axis, 0)
                order = range(a.shape[0] - 1, -1, -1) if sign > 0 else range(a.shape[0])
                prev = np.full(a.shape[1:], np.inf)  # beyond the grid counts as blocked
                for i in order:
                    rr[i] = np.where(a[i], 1 + prev, 0)
                    prev = rr[i]
                self.runs[..., slot] = r

    def _axis_escape(self, x: np.ndarray, ci: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        cs = self.env.cell_size
        runs = self.runs[ci[:, 0], ci[:, 1], ci[:, 2]]
        frac = np.clip(x / cs - ci, 0.0, 1.0)
        dist = np.empty((len(x), 6))
        dist[:, 0::2] = runs[:, 0::2] - frac
        dist[:, 1::2] = runs[:, 1::2] - 1 + frac
        k = np.argmin(dist, axis=1)
        g = np.zeros((len(k), 3))
        g[np.arange(len(k)), k // 2] = np.where(k % 2 == 0, -1.0, 1.0)
        return dist[np.arange(len(k)), k] * cs, g

    def depth(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        env = self.env
        cs = env.cell_size
        dims = np.array(env.dims)
        x = np.asarray(x, dtype=np.float64)
        depth = np.zeros(len(x))
        grad = np.zeros((len(x), 3))
        inside = np.all((x >= 0) & (x <= env.extent), axis=1)
        idx = np.clip(np.floor(x / cs).astype(np.int64), 0, dims - 1)
        blocked = ~inside | env.occupied[idx[:, 0], idx[:, 1], idx[:, 2]]
        if not blocked.any():
            return depth, grad
        xb, ib = x[blocked], idx[blocked]
        cand = ib[:, None, :] + self._OFFS[None]
        ok = np.all((cand >= 0) & (cand < dims), axis=2)
        cc = np.where(ok[..., None], cand, 0)
        ok &= ~env.occupied[cc[..., 0], cc[..., 1], cc[..., 2]]
        lo = cc * cs
        near = np.clip(xb[:, None, :], lo, lo + cs)
        dist = np.where(ok, np.linalg.norm(xb[:, None, :] - near, axis=2), np.inf)
        j = np.argmin(dist, axis=1)
        rows = np.arange(len(j))
        d = dist[rows, j]
        g = xb - near[rows, j]
        g /= np.where(d > 0, d, 1.0)[:, None]
        far = ~np.isfinite(d)
        if far.any():
            # nothing free nearby: escape along an axis, plus the way back into the grid
            clamped = np.clip(xb[far], 0.0, env.extent)
            fd, fg = self._axis_escape(clamped, ib[far])
            out = xb[far] - clamped
            od = np.linalg.norm(out, axis=1)
            d[far] = fd + od
            g[far] = np.where(od[:, None] > 0, out / np.where(od > 0, od, 1.0)[:, None], fg)
        depth[blocked] = d
        grad[blocked] = g
        return depth, grad


# ---------------------------------------------------------------------------
# objective

def objective(mesh: TriangleMesh, cfg: GrowthConfig, env_field: EnvField | None = None,
              want_grad: bool = True):
    """F = w_rep * E_tp - w_area * Area + w_env * sum_i A_i depth_i^2, and its gradient."""
    geo = _Geometry(mesh.vertices, mesh.triangles)
    area = float(geo.face_area.sum())
    F = -cfg.w_area * area
    E = 0.0
    gx = np.zeros_like(mesh.vertices)
    gA = np.zeros(mesh.n_vertices)
    gn = None
    dface = np.full(mesh.n_faces, -float(cfg.w_area))
    if cfg.w_rep > 0:
        E, ex, eA, en = _tp_pairs(geo, want_grad)
        F += cfg.w_rep * E
        if want_grad:
            gx += cfg.w_rep * ex
            gA += cfg.w_rep * eA
            gn = cfg.w_rep * en
    if cfg.w_env > 0 and env_field is not None:
        depth, dgrad = env_field.depth(mesh.vertices)
        F += cfg.w_env * float((geo.A * depth * depth).sum())
        if want_grad:
            gx += cfg.w_env * (2.0 * geo.A * depth)[:, None] * dgrad
            gA += cfg.w_env * depth * depth
    if not want_grad:
        return F, E, area, None
    g = gx + geo.backprop(dA=gA, dn=gn, dface_area=dface)
    return F, E, area, g


def growth_gradient(mesh: TriangleMesh, env: OccupancyGrid | None, cfg: GrowthConfig) -> np.ndarray:
    return objective(mesh, cfg, EnvField(env) if env is not None else None)[3]


# ---------------------------------------------------------------------------
# topology bookkeeping

def object_chis(mesh: TriangleMesh) -> list[int]:
    oid = mesh.object_id if mesh.object_id is not None else np.zeros(mesh.n_faces, int)
    out = []
    e = np.sort(mesh.triangles[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2), axis=1)
    eo = np.repeat(oid, 3)
    for o in np.unique(oid):
        f = mesh.triangles[oid == o]
        v = len(np.unique(f))
        ne = len(_unique_pairs(e[eo == o])[0])
        out.append(int(v - ne + len(f)))
    return out


def _is_clean(mesh: TriangleMesh) -> bool:
    return len(degenerate_faces(mesh)) == 0 and not find_collisions(mesh)


def remesh(mesh: TriangleMesh, edge_min: float, edge_max: float, max_vertices: int) -> TriangleMesh:
    """One pass of long-edge splits then short-edge collapses.

    Each batch is dropped if it leaves an intersection, fold or degenerate
    triangle behind.
    """
    ed = MeshEditor(mesh)
    e = edges(mesh)
    length = np.linalg.norm(mesh.vertices[e[:, 0]] - mesh.vertices[e[:, 1]], axis=1)
    n_alive = mesh.n_vertices
    for k in np.argsort(-length, kind="stable"):
        if length[k] <= edge_max or n_alive >= max_vertices:
            break
        a, b = int(e[k, 0]), int(e[k, 1])
        if len(ed.edge_faces(a, b)) == 2:
            ed.split(a, b)
            n_alive += 1
    split_mesh = ed.to_mesh()
    if split_mesh.n_vertices != mesh.n_vertices and not _is_clean(split_mesh):
        split_mesh = mesh

    ed = MeshEditor(split_mesh)
    e = edges(split_mesh)
    x = split_mesh.vertices
    length = np.linalg.norm(x[e[:, 0]] - x[e[:, 1]], axis=1)
    changed = False
    for k in np.argsort(length, kind="stable"):
        if length[k] >= edge_min:
            break
        a, b = int(e[k, 0]), int(e[k, 1])
        if not (ed.alive[a] and ed.alive[b]) or len(ed.edge_faces(a, b)) != 2:
            continue
        pa, pb = np.array(ed.verts[a]), np.array(ed.verts[b])
        if np.linalg.norm(pa - pb) >= edge_min:
            continue
        mid = 0.5 * (pa + pb)
        if any(np.linalg.norm(np.array(ed.verts[v]) - mid) > edge_max for v in ed.link(a) | ed.link(b)):
            continue
        changed |= ed.collapse(a, b, mid)
    if changed:
        collapsed = ed.to_mesh()
        if _is_clean(collapsed):
            return collapsed
    return split_mesh


# ---------------------------------------------------------------------------
# growth loop

def _jitter(mesh: TriangleMesh, cfg: GrowthConfig, rng) -> TriangleMesh:
    amp = cfg.jitter * cfg.edge_min
    noise = rng.standard_normal(mesh.vertices.shape) * amp
    for _ in range(MAX_HALVINGS + 1):
        trial = TriangleMesh(mesh.vertices + noise, mesh.triangles, mesh.object_id)
        if _is_clean(trial):
            return trial
        noise *= 0.5
    return mesh


def _freeze_ring(mesh: TriangleMesh, faces, free: np.ndarray, e: np.ndarray) -> None:
    hit = np.zeros(len(free), dtype=bool)
    hit[mesh.triangles[np.asarray(faces, dtype=np.int64).reshape(-1)].reshape(-1)] = True
    ring = hit.copy()
    ring[e[:, 0]] |= hit[e[:, 1]]
    ring[e[:, 1]] |= hit[e[:, 0]]
    free &= ~ring


def _descent_step(scene: TriangleMesh, g: np.ndarray, F0: float, cfg: GrowthConfig,
                  env_field: EnvField | None) -> TriangleMesh | None:
    """Normalized descent step with halving; None when every attempt fails.

    A trial that lowers F but collides is retried (up to MAX_FREEZES times per
    iteration) with the vertices around the colliding triangles held still, so
    one near contact does not stall growth everywhere else.
    """
    norms = np.linalg.norm(g, axis=1)
    if len(g) == 0 or norms.max() <= 0:
        return None
    direction = -g / norms.max()
    free = np.ones(len(g), dtype=bool)
    e = None
    step = cfg.step_size
    halvings = freezes = 0
    while True:
        trial = TriangleMesh(scene.vertices + step * direction * free[:, None], scene.triangles, scene.object_id)
        if len(degenerate_faces(trial)) == 0 and objective(trial, cfg, env_field, want_grad=False)[0] <= F0 + 1e-9:
            hits = find_collisions(trial)
            if not hits:
                return trial
            if freezes < MAX_FREEZES:
                e = edges(scene) if e is None else e
                _freeze_ring(scene, hits, free, e)
                freezes += 1
                if free.any():
                    continue
        if halvings == MAX_HALVINGS:
            return None
        step *= 0.5
        halvings += 1


def grow(meshes: list[TriangleMesh], env: OccupancyGrid | None, cfg: GrowthConfig,
         stages: list[int] | None = None, callback=None):
    """Grow the union of ``meshes`` for ``cfg.max_iterations`` iterations.

    Each iteration takes a normalized descent step (largest vertex move =
    step size) and halves it up to 8 times until the step lowers the
    objective, keeps every triangle non-degenerate and leaves the union free
    of intersections; otherwise the iteration is recorded as rejected.
    Returns (meshes, trace), or (meshes, trace, snapshots) when ``stages``
    is given, snapshots[i] being the per-object meshes after stages[i]
    iterations.
    """
    meshes = list(meshes)
    stages = sorted(stages) if stages is not None else None
    if stages and stages[-1] > cfg.max_iterations:
        raise ValueError("stage beyond max_iterations")
    trace = GrowthTrace()
    snapshots: list[list[TriangleMesh]] = []

    def finish(scene):
        parts = split_objects(scene)
        for p in parts:
            p.object_id = None
        return parts

    if cfg.max_iterations == 0 or not meshes:
        out = [m.copy() for m in meshes]
        if stages is not None:
            return out, trace, [[m.copy() for m in meshes] for _ in stages]
        return out, trace

    scene = merge(meshes)
    cfg = cfg.resolved(scene)
    env_field = EnvField(env) if env is not None else None
    rng = np.random.default_rng(cfg.rng_seed)
    stage_iter = iter(stages or [])
    next_stage = next(stage_iter, None)
    while next_stage == 0:
        snapshots.append([m.copy() for m in meshes])
        next_stage = next(stage_iter, None)
    if cfg.jitter > 0:
        scene = _jitter(scene, cfg, rng)

    accepted_count = 0
    F0, E0, area0, g = objective(scene, cfg, env_field)
    for it in range(1, cfg.max_iterations + 1):
        trial = _descent_step(scene, g, F0, cfg, env_field)
        accepted = trial is not None
        if accepted:
            scene = trial
        if accepted:
            accepted_count += 1
            if accepted_count % cfg.remesh_every == 0:
                scene = remesh(scene, cfg.edge_min, cfg.edge_max, cfg.max_vertices)
            F0, E0, area0, g = objective(scene, cfg, env_field)
        rec = GrowthRecord(it, area0, E0, object_chis(scene), component_count(scene), accepted, scene.n_vertices)
        trace.records.append(rec)
        if callback is not None:
            callback(it, scene, rec)
        while next_stage == it:
            snapshots.append(finish(scene))
            next_stage = next(stage_iter, None)

    out = finish(scene)
    if stages is not None:
        return out, trace, snapshots
    return out, trace


def snapshot_stages(meshes, env, cfg: GrowthConfig, stages: list[int]):
    """Grow once and return the per-object meshes after each stage's iteration count."""
    stages = sorted(stages)
    run_cfg = replace(cfg, max_iterations=max(stages[-1], 0)) if stages else cfg
    out, trace, snaps = grow(meshes, env, run_cfg, stages=stages)
    return snaps, trace
