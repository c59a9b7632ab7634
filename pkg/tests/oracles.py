"""Independent reference computations and frozen values for the test suite.

Every function here is written from first principles and shares no code with
the package, so agreement between the two is evidence rather than tautology.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

# ---------------------------------------------------------------------------
# frozen values, each derived by hand (derivation in the comment)

# 8 points on the unit circle: a loop appears when neighbouring points join
# (chord 2 sin(pi/8)) and is filled once chords skipping three points appear
# (2 sin(3 pi/8)); with up to two-step chords the complex is still a circle.
CIRCLE8_BIRTH = 2 * math.sin(math.pi / 8)  # 0.7653668647
CIRCLE8_DEATH = 2 * math.sin(3 * math.pi / 8)  # 1.8477590650

# gt = [0,0,1,1], pred = [0,1,1,1]: class 0 has tp 1, union {0,1} -> 1/2;
# class 1 has tp 2, union {1,2,3} -> 2/3; 3 of 4 points right.
HAND_IOU = (50.0, 200.0 / 3.0)
HAND_OA = 75.0
HAND_ACC = (50.0, 100.0)

# Splitting one edge of the 3x3 torus (V, E, F) = (9, 27, 18) adds one vertex,
# three edges and two faces.
TORUS9_SPLIT = (10, 30, 20)

# straight-x tile: centre row along x.
STRAIGHT_X_CELLS = {(0, 1, 1), (1, 1, 1), (2, 1, 1)}

# Closed-boundary tiling of 2x1x1 slots from {straight-x, empty}: a straight-x
# in either slot opens its outer face, so only empty/empty survives.
WFC_2x1x1 = ("empty", "empty")

# Betti triple of a closed orientable genus-g surface.
def table_betti(g: int) -> tuple[int, int, int, int]:
    return 1, 2 * g, 1, 2 - 2 * g


# ---------------------------------------------------------------------------
# combinatorics

def euler_by_sets(triangles) -> int:
    verts, edge_set = set(), set()
    for a, b, c in np.asarray(triangles).tolist():
        verts.update((a, b, c))
        edge_set.update({frozenset((a, b)), frozenset((b, c)), frozenset((c, a))})
    return len(verts) - len(edge_set) + len(triangles)


class UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, i: int) -> int:
        while self.parent[i] != i:
            self.parent[i] = self.parent[self.parent[i]]
            i = self.parent[i]
        return i

    def union(self, a: int, b: int):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[max(ra, rb)] = min(ra, rb)

    def count(self) -> int:
        return len({self.find(i) for i in range(len(self.parent))})


def triangle_components(triangles) -> int:
    tris = np.asarray(triangles).tolist()
    uf = UnionFind(len(tris))
    owner = {}
    for k, (a, b, c) in enumerate(tris):
        for e in (frozenset((a, b)), frozenset((b, c)), frozenset((c, a))):
            if e in owner:
                uf.union(owner[e], k)
            owner[e] = k
    return uf.count() if tris else 0


def distance_graph_components(points, r: float) -> int:
    pts = np.asarray(points, float)
    uf = UnionFind(len(pts))
    for i, j in itertools.combinations(range(len(pts)), 2):
        if np.linalg.norm(pts[i] - pts[j]) <= r:
            uf.union(i, j)
    return uf.count()


# ---------------------------------------------------------------------------
# Rips complex by enumeration and homology by dense Z/2 rank

def rips_simplices(points, r: float, max_dim: int = 2):
    pts = np.asarray(points, float)
    n = len(pts)
    close = lambda i, j: np.linalg.norm(pts[i] - pts[j]) <= r  # noqa: E731
    out = [(i,) for i in range(n)]
    for d in range(1, max_dim + 1):
        for s in itertools.combinations(range(n), d + 1):
            if all(close(i, j) for i, j in itertools.combinations(s, 2)):
                out.append(s)
    return out


def gf2_rank(mat: np.ndarray) -> int:
    m = (np.asarray(mat) % 2).astype(np.uint8)
    rank, rows, cols = 0, m.shape[0], m.shape[1]
    for c in range(cols):
        pivot = next((r for r in range(rank, rows) if m[r, c]), None)
        if pivot is None:
            continue
        m[[rank, pivot]] = m[[pivot, rank]]
        for r in range(rows):
            if r != rank and m[r, c]:
                m[r] ^= m[rank]
        rank += 1
    return rank


def rips_betti(points, r: float) -> tuple[int, int]:
    """(b0, b1) of the Rips complex at radius r by ranks of boundary matrices."""
    simp = rips_simplices(points, r, 2)
    by_dim = {d: [s for s in simp if len(s) == d + 1] for d in range(3)}
    idx = {d: {s: k for k, s in enumerate(by_dim[d])} for d in range(3)}

    def boundary(d):
        m = np.zeros((len(by_dim[d - 1]), len(by_dim[d])), dtype=np.uint8)
        for k, s in enumerate(by_dim[d]):
            for face in itertools.combinations(s, d):
                m[idx[d - 1][face], k] = 1
        return m

    r1 = gf2_rank(boundary(1)) if by_dim[1] else 0
    r2 = gf2_rank(boundary(2)) if by_dim[2] else 0
    return len(by_dim[0]) - r1, len(by_dim[1]) - r1 - r2


# ---------------------------------------------------------------------------
# geometry

def segment_hits_triangle(p, q, a, b, c, eps=1e-12, slack=1e-9) -> bool:
    """Moller-Trumbore on a closed segment; non-coplanar configurations only.

    ``slack`` widens the closed ranges so exact boundary contacts survive rounding.
    """
    d = q - p
    e1, e2 = b - a, c - a
    h = np.cross(d, e2)
    det = float(np.dot(e1, h))
    if abs(det) < eps:
        return False
    f = 1.0 / det
    s = p - a
    u = f * float(np.dot(s, h))
    if u < -slack or u > 1 + slack:
        return False
    qv = np.cross(s, e1)
    v = f * float(np.dot(d, qv))
    if v < -slack or u + v > 1 + slack:
        return False
    t = f * float(np.dot(e2, qv))
    return -slack <= t <= 1.0 + slack


def triangles_meet(P, Q) -> bool:
    """Two non-coplanar triangles meet iff an edge of one crosses the other."""
    for A, B in ((P, Q), (Q, P)):
        for i in range(3):
            if segment_hits_triangle(A[i], A[(i + 1) % 3], *B):
                return True
    return False


def brute_intersections(vertices, triangles, oracle=triangles_meet) -> set[tuple[int, int]]:
    V, T = np.asarray(vertices, float), np.asarray(triangles)
    lo, hi = V[T].min(axis=1) - 1e-9, V[T].max(axis=1) + 1e-9
    out = set()
    for i, j in itertools.combinations(range(len(T)), 2):
        if np.any(lo[i] > hi[j]) or np.any(lo[j] > hi[i]):
            continue  # disjoint boxes cannot meet
        if set(T[i].tolist()) & set(T[j].tolist()):
            continue
        if oracle(V[T[i]], V[T[j]]):
            out.add((i, j))
    return out


def triangle_area(a, b, c) -> float:
    return 0.5 * float(np.linalg.norm(np.cross(b - a, c - a)))


# ---------------------------------------------------------------------------
# WFC audit on the voxel grid

def voxel_seams_ok(occ: np.ndarray, closed: bool = True) -> bool:
    """Layers on both sides of every tile seam agree; the outer shell is empty."""
    occ = np.asarray(occ, bool)
    for axis in range(3):
        a = np.moveaxis(occ, axis, 0)
        n = a.shape[0] // 3
        for i in range(n - 1):
            if not np.array_equal(a[3 * i + 2], a[3 * i + 3]):
                return False
        if closed and (a[0].any() or a[-1].any()):
            return False
    return True


# ---------------------------------------------------------------------------
# segmentation scores by set counting

def set_iou(gt, pred, cls) -> float | None:
    A = {i for i, g in enumerate(gt) if g == cls}
    B = {i for i, p in enumerate(pred) if p == cls}
    if not A | B:
        return None
    return 100.0 * len(A & B) / len(A | B)
