"""Indexed triangle meshes: validation, topology-safe local edits, geometry and I/O."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components as _cc

DEGENERATE_AREA_SQ = 1e-12


class MeshError(ValueError):
    """Structural problem with a mesh (bad indices, malformed file)."""


class UnsupportedEditError(MeshError):
    """A local edit was requested where it is not defined (e.g. a boundary edge)."""


@dataclass
class TriangleMesh:
    vertices: np.ndarray
    triangles: np.ndarray
    object_id: np.ndarray | None = None

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        self.triangles = np.asarray(self.triangles, dtype=np.int64).reshape(-1, 3)
        if self.object_id is not None:
            self.object_id = np.asarray(self.object_id, dtype=np.int64).reshape(-1)
            if len(self.object_id) != len(self.triangles):
                raise MeshError("object_id must have one entry per triangle")

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_faces(self) -> int:
        return len(self.triangles)

    def copy(self) -> TriangleMesh:
        oid = None if self.object_id is None else self.object_id.copy()
        return TriangleMesh(self.vertices.copy(), self.triangles.copy(), oid)

    def scaled(self, s: float) -> TriangleMesh:
        return TriangleMesh(self.vertices * s, self.triangles.copy(), self.object_id)

    def translated(self, t) -> TriangleMesh:
        return TriangleMesh(self.vertices + np.asarray(t, float), self.triangles.copy(), self.object_id)

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def check_indices(self):
        if self.n_faces and (self.triangles.min() < 0 or self.triangles.max() >= self.n_vertices):
            raise MeshError(
                f"triangle references vertex outside [0, {self.n_vertices})"
            )


@dataclass
class MeshDiagnostics:
    vertex_count: int
    edge_count: int
    face_count: int
    euler_characteristic: int
    component_count: int
    is_closed: bool
    is_oriented: bool
    is_orientable: bool
    degenerate_faces: list[int] = field(default_factory=list)
    self_intersections: list[tuple[int, int]] = field(default_factory=list)


def merge(meshes, object_ids=None) -> TriangleMesh:
    """Concatenate meshes into one, tagging triangles with per-mesh object ids."""
    meshes = list(meshes)
    if object_ids is None:
        object_ids = range(len(meshes))
    verts, tris, oids = [], [], []
    offset = 0
    for m, oid in zip(meshes, object_ids):
        verts.append(m.vertices)
        tris.append(m.triangles + offset)
        oids.append(np.full(m.n_faces, oid, dtype=np.int64))
        offset += m.n_vertices
    if not meshes:
        return TriangleMesh(np.zeros((0, 3)), np.zeros((0, 3), int), np.zeros(0, int))
    return TriangleMesh(np.vstack(verts), np.vstack(tris), np.concatenate(oids))


def split_objects(mesh: TriangleMesh) -> list[TriangleMesh]:
    """Split a merged mesh back into per-object meshes, ordered by object id."""
    if mesh.object_id is None:
        return [mesh]
    return [submesh(mesh, np.flatnonzero(mesh.object_id == oid))
            for oid in np.unique(mesh.object_id)]


def submesh(mesh: TriangleMesh, face_index) -> TriangleMesh:
    face_index = np.asarray(face_index, dtype=np.int64)
    tris = mesh.triangles[face_index]
    used, inverse = np.unique(tris, return_inverse=True)
    oid = None if mesh.object_id is None else mesh.object_id[face_index]
    return TriangleMesh(mesh.vertices[used], inverse.reshape(-1, 3), oid)


# ---------------------------------------------------------------------------
# combinatorics

def halfedges(triangles: np.ndarray) -> np.ndarray:
    """Directed edges (a->b, b->c, c->a), three per triangle in triangle order."""
    return triangles[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2)


def edges(mesh: TriangleMesh) -> np.ndarray:
    """Undirected edges as sorted vertex pairs in lexicographic order."""
    if mesh.n_faces == 0:
        return np.zeros((0, 2), dtype=np.int64)
    return _unique_pairs(np.sort(halfedges(mesh.triangles), axis=1))[0]


def _unique_pairs(pairs):
    """Row-unique of an int pair array in lexicographic order, via scalar keys."""
    base = int(pairs.max()) + 1
    key = pairs[:, 0].astype(np.int64) * base + pairs[:, 1]
    uk, inverse, counts = np.unique(key, return_inverse=True, return_counts=True)
    return np.stack([uk // base, uk % base], axis=1), inverse.reshape(-1), counts


def _edge_incidence(triangles):
    he = halfedges(triangles)
    uniq, inverse, counts = _unique_pairs(np.sort(he, axis=1))
    return he, uniq, inverse, counts


def euler_characteristic(mesh: TriangleMesh) -> int:
    mesh.check_indices()
    return int(mesh.n_vertices - len(edges(mesh)) + mesh.n_faces)


def face_adjacency(mesh: TriangleMesh) -> np.ndarray:
    """Pairs of triangle indices sharing an edge."""
    if mesh.n_faces == 0:
        return np.zeros((0, 2), dtype=np.int64)
    _, _, inverse, counts = _edge_incidence(mesh.triangles)
    face = np.repeat(np.arange(mesh.n_faces), 3)
    order = np.argsort(inverse, kind="stable")
    inv_sorted, face_sorted = inverse[order], face[order]
    starts = np.r_[0, np.cumsum(counts)[:-1]]
    two = starts[counts == 2]
    pairs = [np.stack([face_sorted[two], face_sorted[two + 1]], axis=1)]
    for s, c in zip(starts[counts > 2], counts[counts > 2]):
        fs = face_sorted[s:s + c]
        pairs.append(np.array([(fs[i], fs[j]) for i in range(c) for j in range(i + 1, c)]))
    return np.concatenate(pairs).astype(np.int64).reshape(-1, 2)


def _face_labels(mesh: TriangleMesh) -> tuple[int, np.ndarray]:
    adj = face_adjacency(mesh)
    n = mesh.n_faces
    g = coo_matrix((np.ones(len(adj)), (adj[:, 0], adj[:, 1])), shape=(n, n))
    return _cc(g, directed=False)


def connected_components(mesh: TriangleMesh) -> list[TriangleMesh]:
    """Edge-connected pieces, ordered by their smallest original triangle index."""
    if mesh.n_faces == 0:
        return []
    _, labels = _face_labels(mesh)
    first = {}
    for f, lab in enumerate(labels):
        first.setdefault(lab, f)
    order = sorted(first, key=first.get)
    return [submesh(mesh, np.flatnonzero(labels == lab)) for lab in order]


def component_count(mesh: TriangleMesh) -> int:
    if mesh.n_faces == 0:
        return 0
    return int(_face_labels(mesh)[0])


# ---------------------------------------------------------------------------
# geometry

def face_cross(mesh: TriangleMesh) -> np.ndarray:
    v = mesh.vertices[mesh.triangles]
    return np.cross(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0])


def face_areas(mesh: TriangleMesh) -> np.ndarray:
    return 0.5 * np.linalg.norm(face_cross(mesh), axis=1)


def surface_area(mesh: TriangleMesh) -> float:
    if mesh.n_faces == 0:
        return 0.0
    return float(face_areas(mesh).sum())


def enclosed_volume(mesh: TriangleMesh) -> float:
    """Signed volume via the divergence theorem (positive for outward winding)."""
    if mesh.n_faces == 0:
        return 0.0
    v = mesh.vertices[mesh.triangles]
    return float(np.einsum("ij,ij->i", v[:, 0], np.cross(v[:, 1], v[:, 2])).sum() / 6.0)


def degenerate_faces(mesh: TriangleMesh, tol: float = DEGENERATE_AREA_SQ) -> np.ndarray:
    a = face_areas(mesh)
    return np.flatnonzero(a * a < tol)


def vertex_neighbors(mesh: TriangleMesh) -> list[set[int]]:
    nbrs = [set() for _ in range(mesh.n_vertices)]
    for a, b in edges(mesh):
        nbrs[a].add(int(b))
        nbrs[b].add(int(a))
    return nbrs


def mean_edge_length(mesh: TriangleMesh) -> float:
    e = edges(mesh)
    if len(e) == 0:
        return 0.0
    return float(np.linalg.norm(mesh.vertices[e[:, 0]] - mesh.vertices[e[:, 1]], axis=1).mean())


# ---------------------------------------------------------------------------
# validation

def _orientation_checks(mesh: TriangleMesh) -> tuple[bool, bool, bool]:
    """(closed, consistently wound, orientable)."""
    if mesh.n_faces == 0:
        return True, True, True
    he, uniq, inverse, counts = _edge_incidence(mesh.triangles)
    closed = bool(np.all(counts == 2))
    # a manifold edge is consistently wound iff its two half-edges point opposite ways
    forward = he[:, 0] < he[:, 1]
    fwd_count = np.bincount(inverse, weights=forward, minlength=len(uniq))
    manifold = counts == 2
    oriented = bool(np.all(fwd_count[manifold] == 1))

    # propagate flip states across the dual graph to see if some winding works
    face = np.repeat(np.arange(mesh.n_faces), 3)
    order = np.argsort(inverse, kind="stable")
    inv_s = inverse[order]
    starts = np.flatnonzero(np.r_[True, inv_s[1:] != inv_s[:-1]])
    nb: list[list[tuple[int, bool]]] = [[] for _ in range(mesh.n_faces)]
    for s in starts:
        if counts[inv_s[s]] != 2:
            continue
        h1, h2 = order[s], order[s + 1]
        f1, f2 = face[h1], face[h2]
        same_dir = bool(he[h1, 0] == he[h2, 0])
        nb[f1].append((f2, same_dir))
        nb[f2].append((f1, same_dir))
    flip = np.full(mesh.n_faces, -1, dtype=np.int8)
    orientable = True
    for seed in range(mesh.n_faces):
        if flip[seed] >= 0:
            continue
        flip[seed] = 0
        stack = [seed]
        while stack:
            f = stack.pop()
            for g, same in nb[f]:
                want = flip[f] ^ int(same)
                if flip[g] < 0:
                    flip[g] = want
                    stack.append(g)
                elif flip[g] != want:
                    orientable = False
    return closed, oriented, orientable


def validate_manifold(mesh: TriangleMesh, check_intersections: bool = True) -> MeshDiagnostics:
    """Fill every diagnostic field. Reports problems rather than raising."""
    try:
        mesh.check_indices()
    except MeshError:
        return MeshDiagnostics(mesh.n_vertices, 0, mesh.n_faces, 0, 0, False, False, False)
    closed, oriented, orientable = _orientation_checks(mesh)
    v, e, f = mesh.n_vertices, len(edges(mesh)), mesh.n_faces
    hits: list[tuple[int, int]] = []
    if check_intersections and f:
        from .intersect import detect_self_intersections
        hits = detect_self_intersections(mesh)
    return MeshDiagnostics(
        vertex_count=v,
        edge_count=e,
        face_count=f,
        euler_characteristic=v - e + f,
        component_count=max(component_count(mesh), 1) if f else 0,
        is_closed=closed,
        is_oriented=oriented,
        is_orientable=orientable,
        degenerate_faces=degenerate_faces(mesh).tolist() if f else [],
        self_intersections=hits,
    )


def validate_closed(mesh: TriangleMesh) -> bool:
    return _orientation_checks(mesh)[0]


def validate_oriented(mesh: TriangleMesh) -> bool:
    return _orientation_checks(mesh)[1]


# ---------------------------------------------------------------------------
# local edits

class MeshEditor:
    """Mutable working copy for batches of splits and collapses.

    Vertices removed by collapses are left in place and dropped by ``to_mesh``.
    """

    def __init__(self, mesh: TriangleMesh):
        self.verts = [tuple(map(float, p)) for p in mesh.vertices]
        self.faces: list[list[int] | None] = [list(map(int, t)) for t in mesh.triangles]
        oid = mesh.object_id if mesh.object_id is not None else np.zeros(mesh.n_faces, int)
        self.oid = [int(o) for o in oid]
        self.has_oid = mesh.object_id is not None
        self.vfaces: list[set[int]] = [set() for _ in self.verts]
        for fi, t in enumerate(self.faces):
            for v in t:
                self.vfaces[v].add(fi)
        self.alive = [True] * len(self.verts)

    def edge_faces(self, a: int, b: int) -> list[int]:
        return sorted(self.vfaces[a] & self.vfaces[b])

    def link(self, v: int) -> set[int]:
        out = set()
        for f in self.vfaces[v]:
            out.update(self.faces[f])
        out.discard(v)
        return out

    def has_edge(self, a: int, b: int) -> bool:
        return bool(self.vfaces[a] & self.vfaces[b])

    def _set_face(self, fi: int, tri: list[int]):
        old = self.faces[fi]
        if old is not None:
            for v in old:
                self.vfaces[v].discard(fi)
        self.faces[fi] = tri
        if tri is not None:
            for v in tri:
                self.vfaces[v].add(fi)

    def _add_face(self, tri: list[int], oid: int) -> int:
        self.faces.append(None)
        self.oid.append(oid)
        fi = len(self.faces) - 1
        self._set_face(fi, tri)
        return fi

    def split(self, a: int, b: int) -> int:
        fs = self.edge_faces(a, b)
        if len(fs) != 2:
            raise UnsupportedEditError(f"edge ({a}, {b}) has {len(fs)} incident triangles, need 2")
        pa, pb = np.array(self.verts[a]), np.array(self.verts[b])
        m = len(self.verts)
        self.verts.append(tuple(0.5 * (pa + pb)))
        self.vfaces.append(set())
        self.alive.append(True)
        for fi in fs:
            t = self.faces[fi]
            # rotate so the triangle reads (u, w, c) with {u, w} = {a, b}
            k = next(i for i in range(3) if t[i] not in (a, b))
            c, u, w = t[k], t[(k + 1) % 3], t[(k + 2) % 3]
            self._set_face(fi, [u, m, c])
            self._add_face([m, w, c], self.oid[fi])
        return m

    def can_collapse(self, a: int, b: int) -> bool:
        fs = self.edge_faces(a, b)
        if len(fs) != 2:
            return False
        opp = set()
        for fi in fs:
            opp.update(v for v in self.faces[fi] if v not in (a, b))
        if len(opp) != 2:
            return False
        if self.link(a) & self.link(b) != opp:
            return False
        c, d = sorted(opp)
        # edge cd in both links means triangles acd and bcd exist (tetrahedron-like pinch)
        acd = self.vfaces[a] & self.vfaces[c] & self.vfaces[d]
        bcd = self.vfaces[b] & self.vfaces[c] & self.vfaces[d]
        return not (acd and bcd)

    def collapse(self, a: int, b: int, position=None, check_geometry: bool = True) -> bool:
        """Merge b into a. Returns False (and leaves the mesh untouched) when rejected."""
        if not self.can_collapse(a, b):
            return False
        fs = set(self.edge_faces(a, b))
        if position is None:
            position = 0.5 * (np.array(self.verts[a]) + np.array(self.verts[b]))
        position = np.asarray(position, float)
        moved = [fi for fi in (self.vfaces[a] | self.vfaces[b]) if fi not in fs]
        if check_geometry:
            for fi in moved:
                t = self.faces[fi]
                old = np.array([self.verts[v] for v in t])
                new = np.array([position if v in (a, b) else self.verts[v] for v in t])
                n_old = np.cross(old[1] - old[0], old[2] - old[0])
                n_new = np.cross(new[1] - new[0], new[2] - new[0])
                if 0.25 * n_new @ n_new < DEGENERATE_AREA_SQ or n_old @ n_new <= 0:
                    return False
        for fi in fs:
            self._set_face(fi, None)
        for fi in list(self.vfaces[b]):
            self._set_face(fi, [a if v == b else v for v in self.faces[fi]])
        self.verts[a] = tuple(position)
        self.alive[b] = False
        return True

    def to_mesh(self) -> TriangleMesh:
        keep = [i for i, f in enumerate(self.faces) if f is not None]
        tris = np.array([self.faces[i] for i in keep], dtype=np.int64).reshape(-1, 3)
        alive = np.array(self.alive, dtype=bool)
        remap = np.cumsum(alive) - 1
        verts = np.array(self.verts, dtype=np.float64).reshape(-1, 3)[alive]
        oid = np.array([self.oid[i] for i in keep], dtype=np.int64) if self.has_oid else None
        return TriangleMesh(verts, remap[tris] if len(tris) else tris, oid)


def edge_split(mesh: TriangleMesh, edge) -> TriangleMesh:
    """Insert a vertex at the midpoint of an interior edge (V+1, E+3, F+2)."""
    a, b = map(int, edge)
    ed = MeshEditor(mesh)
    ed.split(a, b)
    return ed.to_mesh()


def edge_collapse(mesh: TriangleMesh, edge) -> TriangleMesh | None:
    """Collapse an edge to its midpoint, or return None if the edit is unsafe.

    Unsafe means the link condition fails, or a surviving triangle would
    degenerate or flip. The kept vertex takes the smaller index's slot.
    """
    a, b = sorted(map(int, edge))
    ed = MeshEditor(mesh)
    if not ed.collapse(a, b):
        return None
    return ed.to_mesh()


# ---------------------------------------------------------------------------
# I/O

def write_off(mesh: TriangleMesh, path):
    lines = ["OFF", f"{mesh.n_vertices} {mesh.n_faces} 0"]
    # shortest round-trip repr, so a reloaded mesh has bit-identical geometry
    lines += [" ".join(repr(c) for c in p) for p in mesh.vertices.tolist()]
    lines += [f"3 {a} {b} {c}" for a, b, c in mesh.triangles]
    Path(path).write_text("\n".join(lines) + "\n")


def read_off(path) -> TriangleMesh:
    text = "\n".join(line.split("#", 1)[0] for line in Path(path).read_text().splitlines())
    tok = text.split()
    if not tok or tok[0] != "OFF":
        raise MeshError(f"{path}: missing OFF header")
    try:
        nv, nf = int(tok[1]), int(tok[2])
        pos = 4
        verts = np.array(tok[pos:pos + 3 * nv], dtype=np.float64).reshape(nv, 3)
        pos += 3 * nv
        faces = []
        for _ in range(nf):
            k = int(tok[pos])
            if k != 3:
                raise MeshError(f"{path}: only triangular faces are supported")
            faces.append([int(t) for t in tok[pos + 1:pos + 4]])
            pos += 4
    except (IndexError, ValueError) as exc:
        raise MeshError(f"{path}: truncated or malformed OFF body") from exc
    mesh = TriangleMesh(verts, np.array(faces, dtype=np.int64).reshape(-1, 3))
    mesh.check_indices()
    return mesh


def write_obj(mesh: TriangleMesh, path):
    lines = [f"v {p[0]!r} {p[1]!r} {p[2]!r}" for p in mesh.vertices.tolist()]
    oid = mesh.object_id if mesh.object_id is not None else np.zeros(mesh.n_faces, int)
    for o in np.unique(oid):
        lines.append(f"g object_{o}")
        lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in mesh.triangles[oid == o]]
    Path(path).write_text("\n".join(lines) + "\n")


def read_obj(path) -> TriangleMesh:
    verts, faces, oids = [], [], []
    current = 0
    has_groups = False
    for line in Path(path).read_text().splitlines():
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "v":
            verts.append(list(map(float, parts[1:4])))
        elif parts[0] == "g" and len(parts) > 1 and parts[1].startswith("object_"):
            current = int(parts[1][len("object_"):])
            has_groups = True
        elif parts[0] == "f":
            idx = [int(p.split("/")[0]) for p in parts[1:]]
            if len(idx) != 3:
                raise MeshError(f"{path}: only triangular faces are supported")
            faces.append([i - 1 if i > 0 else len(verts) + i for i in idx])
            oids.append(current)
    mesh = TriangleMesh(np.array(verts).reshape(-1, 3), np.array(faces, dtype=np.int64).reshape(-1, 3),
                        np.array(oids) if has_groups else None)
    mesh.check_indices()
    return mesh
