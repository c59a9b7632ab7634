"""Triangle-triangle intersection tests and an AABB hierarchy for mesh self-intersection."""

from __future__ import annotations

import numpy as np
from numba import njit

from .mesh import TriangleMesh

EPS = 1e-9
LEAF_SIZE = 4


def _unit(v):
    n = np.linalg.norm(v, axis=-1, keepdims=True)
    return v / np.where(n > 0, n, 1.0)


def _orient2d(a, b, c):
    return (b[..., 0] - a[..., 0]) * (c[..., 1] - a[..., 1]) - (b[..., 1] - a[..., 1]) * (c[..., 0] - a[..., 0])


def _segments_meet_2d(a, b, c, d, eps):
    o1, o2 = _orient2d(a, b, c), _orient2d(a, b, d)
    o3, o4 = _orient2d(c, d, a), _orient2d(c, d, b)
    o1, o2, o3, o4 = (np.where(np.abs(o) < eps, 0.0, o) for o in (o1, o2, o3, o4))
    crossing = (o1 * o2 <= 0) & (o3 * o4 <= 0)
    collinear = (o1 == 0) & (o2 == 0) & (o3 == 0) & (o4 == 0)
    lo1, hi1 = np.minimum(a, b), np.maximum(a, b)
    lo2, hi2 = np.minimum(c, d), np.maximum(c, d)
    boxes = np.all((lo1 <= hi2 + eps) & (lo2 <= hi1 + eps), axis=-1)
    return np.where(collinear, boxes, crossing)


def _point_in_tri_2d(p, t, eps):
    s0 = _orient2d(t[:, 0], t[:, 1], p)
    s1 = _orient2d(t[:, 1], t[:, 2], p)
    s2 = _orient2d(t[:, 2], t[:, 0], p)
    return ((s0 >= -eps) & (s1 >= -eps) & (s2 >= -eps)) | ((s0 <= eps) & (s1 <= eps) & (s2 <= eps))


def _coplanar(P, Q, normal, eps):
    axis = np.argmax(np.abs(normal), axis=1)
    keep = np.array([[1, 2], [0, 2], [0, 1]])[axis]
    rows = np.arange(len(P))[:, None, None]
    p2 = P[rows, np.arange(3)[None, :, None], keep[:, None, :]]
    q2 = Q[rows, np.arange(3)[None, :, None], keep[:, None, :]]
    hit = _point_in_tri_2d(p2[:, 0], q2, eps) | _point_in_tri_2d(q2[:, 0], p2, eps)
    for i in range(3):
        for j in range(3):
            hit |= _segments_meet_2d(p2[:, i], p2[:, (i + 1) % 3], q2[:, j], q2[:, (j + 1) % 3], eps)
    return hit


def _interval(proj, dist):
    """Extent along the intersection line of one triangle's crossing with the other's plane."""
    lo = np.full(len(proj), np.inf)
    hi = np.full(len(proj), -np.inf)
    for k in range(3):
        on = dist[:, k] == 0
        lo = np.where(on, np.minimum(lo, proj[:, k]), lo)
        hi = np.where(on, np.maximum(hi, proj[:, k]), hi)
        l = (k + 1) % 3
        cross = dist[:, k] * dist[:, l] < 0
        denom = np.where(cross, dist[:, k] - dist[:, l], 1.0)
        t = proj[:, k] + (proj[:, l] - proj[:, k]) * dist[:, k] / denom
        lo = np.where(cross, np.minimum(lo, t), lo)
        hi = np.where(cross, np.maximum(hi, t), hi)
    return lo, hi


def tri_tri_intersect(P: np.ndarray, Q: np.ndarray, eps: float = EPS) -> np.ndarray:
    """Vectorized closed-triangle intersection test.

    ``P`` and ``Q`` are (n, 3, 3) vertex arrays; returns a boolean per pair.
    Plane-side rejection and interval overlap along the line where the two
    planes meet, with a 2D fallback for (near-)coplanar pairs.
    """
    P = np.asarray(P, dtype=np.float64).reshape(-1, 3, 3)
    Q = np.asarray(Q, dtype=np.float64).reshape(-1, 3, 3)
    cP = np.cross(P[:, 1] - P[:, 0], P[:, 2] - P[:, 0])
    cQ = np.cross(Q[:, 1] - Q[:, 0], Q[:, 2] - Q[:, 0])
    nP, nQ = _unit(cP), _unit(cQ)

    dp = np.einsum("nkj,nj->nk", P - Q[:, :1], nQ)
    dq = np.einsum("nkj,nj->nk", Q - P[:, :1], nP)
    dp = np.where(np.abs(dp) < eps, 0.0, dp)
    dq = np.where(np.abs(dq) < eps, 0.0, dq)
    separated = (np.all(dp > 0, axis=1) | np.all(dp < 0, axis=1)
                 | np.all(dq > 0, axis=1) | np.all(dq < 0, axis=1))

    line = np.cross(nP, nQ)
    coplanar = np.all(dp == 0, axis=1) | (np.linalg.norm(line, axis=1) < 1e-12)
    result = np.zeros(len(P), dtype=bool)

    gen = ~separated & ~coplanar
    if gen.any():
        d = line[gen]
        pp = np.einsum("nkj,nj->nk", P[gen], d)
        qq = np.einsum("nkj,nj->nk", Q[gen], d)
        lo1, hi1 = _interval(pp, dp[gen])
        lo2, hi2 = _interval(qq, dq[gen])
        result[gen] = np.maximum(lo1, lo2) <= np.minimum(hi1, hi2) + eps

    cop = ~separated & coplanar
    if cop.any():
        # project along the better-conditioned normal so argument order does not matter
        flip = np.linalg.norm(cQ, axis=1) > np.linalg.norm(cP, axis=1)
        ref = np.where(flip[:, None], cQ, cP)
        result[cop] = _coplanar(P[cop], Q[cop], ref[cop], eps)
    return result


def seg_tri_intersect(p: np.ndarray, q: np.ndarray, T: np.ndarray, eps: float = EPS) -> np.ndarray:
    """Vectorized closed segment / closed triangle test; p, q are (n, 3), T is (n, 3, 3)."""
    p = np.asarray(p, float).reshape(-1, 3)
    q = np.asarray(q, float).reshape(-1, 3)
    T = np.asarray(T, float).reshape(-1, 3, 3)
    n = _unit(np.cross(T[:, 1] - T[:, 0], T[:, 2] - T[:, 0]))
    dp = np.einsum("ij,ij->i", p - T[:, 0], n)
    dq = np.einsum("ij,ij->i", q - T[:, 0], n)
    dp = np.where(np.abs(dp) < eps, 0.0, dp)
    dq = np.where(np.abs(dq) < eps, 0.0, dq)
    out = np.zeros(len(p), dtype=bool)

    crossing = (dp * dq < 0) | ((dp == 0) ^ (dq == 0))
    if crossing.any():
        a, b = dp[crossing], dq[crossing]
        t = np.where(a == b, 0.0, a / np.where(a == b, 1.0, a - b))
        x = p[crossing] + t[:, None] * (q[crossing] - p[crossing])
        tri = T[crossing]
        nn = n[crossing]
        inside = np.ones(len(x), dtype=bool)
        for k in range(3):
            e = tri[:, (k + 1) % 3] - tri[:, k]
            side = np.einsum("ij,ij->i", np.cross(e, x - tri[:, k]), nn)
            inside &= side >= -eps * np.linalg.norm(e, axis=1)
        out[crossing] = inside

    flat = (dp == 0) & (dq == 0)
    if flat.any():
        axis = np.argmax(np.abs(n[flat]), axis=1)
        keep = np.array([[1, 2], [0, 2], [0, 1]])[axis]
        r = np.arange(flat.sum())
        p2 = p[flat][r[:, None], keep]
        q2 = q[flat][r[:, None], keep]
        t2 = T[flat][r[:, None, None], np.arange(3)[None, :, None], keep[:, None, :]]
        hit = _point_in_tri_2d(p2, t2, eps) | _point_in_tri_2d(q2, t2, eps)
        for k in range(3):
            hit |= _segments_meet_2d(p2, q2, t2[:, k], t2[:, (k + 1) % 3], eps)
        out[flat] = hit
    return out


# ---------------------------------------------------------------------------
# compiled per-pair kernels used by the tree traversal; they mirror the
# vectorized tests above, which serve as the brute-force reference

@njit(cache=True, inline="always")
def _sub(a, b):
    return (a[0] - b[0], a[1] - b[1], a[2] - b[2])


@njit(cache=True, inline="always")
def _dot(a, b):
    return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]


@njit(cache=True, inline="always")
def _cross(a, b):
    return (a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0])


@njit(cache=True, inline="always")
def _unit3(v):
    n = np.sqrt(_dot(v, v))
    if n > 0:
        return (v[0] / n, v[1] / n, v[2] / n)
    return v


@njit(cache=True, inline="always")
def _snap(v, eps):
    return 0.0 if abs(v) < eps else v


@njit(cache=True, inline="always")
def _o2(a, b, c):
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


@njit(cache=True)
def _flat(p, ref):
    # drop the coordinate along which ``ref`` is largest
    ax0, ax1, ax2 = abs(ref[0]), abs(ref[1]), abs(ref[2])
    if ax0 >= ax1 and ax0 >= ax2:
        return (p[1], p[2])
    if ax1 >= ax2:
        return (p[0], p[2])
    return (p[0], p[1])


@njit(cache=True)
def _seg_seg_2d(a, b, c, d, eps):
    o1 = _snap(_o2(a, b, c), eps)
    o2 = _snap(_o2(a, b, d), eps)
    o3 = _snap(_o2(c, d, a), eps)
    o4 = _snap(_o2(c, d, b), eps)
    if o1 == 0 and o2 == 0 and o3 == 0 and o4 == 0:
        for k in range(2):
            if min(a[k], b[k]) > max(c[k], d[k]) + eps or min(c[k], d[k]) > max(a[k], b[k]) + eps:
                return False
        return True
    return o1 * o2 <= 0 and o3 * o4 <= 0


@njit(cache=True)
def _in_tri_2d(p, t0, t1, t2, eps):
    s0 = _o2(t0, t1, p)
    s1 = _o2(t1, t2, p)
    s2 = _o2(t2, t0, p)
    return (s0 >= -eps and s1 >= -eps and s2 >= -eps) or (s0 <= eps and s1 <= eps and s2 <= eps)


@njit(cache=True)
def _line_interval(p0, p1, p2, d0, d1, d2):
    proj = (p0, p1, p2)
    dist = (d0, d1, d2)
    lo, hi = np.inf, -np.inf
    for k in range(3):
        if dist[k] == 0:
            lo = min(lo, proj[k])
            hi = max(hi, proj[k])
        l = (k + 1) % 3
        if dist[k] * dist[l] < 0:
            t = proj[k] + (proj[l] - proj[k]) * dist[k] / (dist[k] - dist[l])
            lo = min(lo, t)
            hi = max(hi, t)
    return lo, hi


@njit(cache=True)
def _same_sign(a, b, c):
    return (a > 0 and b > 0 and c > 0) or (a < 0 and b < 0 and c < 0)


@njit(cache=True)
def _tri_tri_1(p0, p1, p2, q0, q1, q2, eps):
    cP = _cross(_sub(p1, p0), _sub(p2, p0))
    cQ = _cross(_sub(q1, q0), _sub(q2, q0))
    nP = _unit3(cP)
    nQ = _unit3(cQ)
    a0 = _snap(_dot(_sub(p0, q0), nQ), eps)
    a1 = _snap(_dot(_sub(p1, q0), nQ), eps)
    a2 = _snap(_dot(_sub(p2, q0), nQ), eps)
    b0 = _snap(_dot(_sub(q0, p0), nP), eps)
    b1 = _snap(_dot(_sub(q1, p0), nP), eps)
    b2 = _snap(_dot(_sub(q2, p0), nP), eps)
    if _same_sign(a0, a1, a2) or _same_sign(b0, b1, b2):
        return False
    line = _cross(nP, nQ)
    if not ((a0 == 0 and a1 == 0 and a2 == 0) or np.sqrt(_dot(line, line)) < 1e-12):
        lo1, hi1 = _line_interval(_dot(p0, line), _dot(p1, line), _dot(p2, line), a0, a1, a2)
        lo2, hi2 = _line_interval(_dot(q0, line), _dot(q1, line), _dot(q2, line), b0, b1, b2)
        return max(lo1, lo2) <= min(hi1, hi2) + eps
    ref = cQ if _dot(cQ, cQ) > _dot(cP, cP) else cP
    P = (_flat(p0, ref), _flat(p1, ref), _flat(p2, ref))
    Q = (_flat(q0, ref), _flat(q1, ref), _flat(q2, ref))
    if _in_tri_2d(P[0], Q[0], Q[1], Q[2], eps) or _in_tri_2d(Q[0], P[0], P[1], P[2], eps):
        return True
    for i in range(3):
        for j in range(3):
            if _seg_seg_2d(P[i], P[(i + 1) % 3], Q[j], Q[(j + 1) % 3], eps):
                return True
    return False


@njit(cache=True)
def _seg_tri_1(p, q, t0, t1, t2, eps):
    n = _unit3(_cross(_sub(t1, t0), _sub(t2, t0)))
    a = _snap(_dot(_sub(p, t0), n), eps)
    b = _snap(_dot(_sub(q, t0), n), eps)
    if a * b < 0 or ((a == 0) != (b == 0)):
        t = 0.0 if a == b else a / (a - b)
        x = (p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1]), p[2] + t * (q[2] - p[2]))
        T = (t0, t1, t2)
        for k in range(3):
            e = _sub(T[(k + 1) % 3], T[k])
            if _dot(_cross(e, _sub(x, T[k])), n) < -eps * np.sqrt(_dot(e, e)):
                return False
        return True
    if a == 0 and b == 0:
        s0, s1 = _flat(p, n), _flat(q, n)
        T2 = (_flat(t0, n), _flat(t1, n), _flat(t2, n))
        if _in_tri_2d(s0, T2[0], T2[1], T2[2], eps) or _in_tri_2d(s1, T2[0], T2[1], T2[2], eps):
            return True
        for k in range(3):
            if _seg_seg_2d(s0, s1, T2[k], T2[(k + 1) % 3], eps):
                return True
    return False


@njit(cache=True, inline="always")
def _vtx(V, k):
    return (V[k, 0], V[k, 1], V[k, 2])


@njit(cache=True)
def _pair_hit(V, T, i, j, mode, eps):
    """mode bit 1: vertex-disjoint intersection, bit 2: fold past one shared vertex."""
    shared = 0
    si = sj = 0
    for a in range(3):
        for b in range(3):
            if T[i, a] == T[j, b]:
                shared += 1
                si, sj = a, b
    if shared == 0 and mode & 1:
        return _tri_tri_1(_vtx(V, T[i, 0]), _vtx(V, T[i, 1]), _vtx(V, T[i, 2]),
                          _vtx(V, T[j, 0]), _vtx(V, T[j, 1]), _vtx(V, T[j, 2]), eps)
    if shared == 1 and mode & 2:
        P = (_vtx(V, T[i, 0]), _vtx(V, T[i, 1]), _vtx(V, T[i, 2]))
        Q = (_vtx(V, T[j, 0]), _vtx(V, T[j, 1]), _vtx(V, T[j, 2]))
        if _seg_tri_1(P[(si + 1) % 3], P[(si + 2) % 3], Q[0], Q[1], Q[2], eps):
            return True
        return _seg_tri_1(Q[(sj + 1) % 3], Q[(sj + 2) % 3], P[0], P[1], P[2], eps)
    return False


@njit(cache=True)
def _traverse(V, T, lo, hi, node_lo, node_hi, members, n_leaves, mode, eps):
    out = []
    stack = [(1, 1)]
    k = members.shape[1]
    while len(stack) > 0:
        a, b = stack.pop()
        sep = False
        for ax in range(3):
            if node_lo[a, ax] > node_hi[b, ax] or node_lo[b, ax] > node_hi[a, ax]:
                sep = True
                break
        if sep:
            continue
        if a >= n_leaves:
            la, lb = a - n_leaves, b - n_leaves
            for x in range(k):
                i = members[la, x]
                if i < 0:
                    continue
                for y in range(x + 1 if la == lb else 0, k):
                    j = members[lb, y]
                    if j < 0:
                        continue
                    ok = True
                    for ax in range(3):
                        if lo[i, ax] > hi[j, ax] + eps or lo[j, ax] > hi[i, ax] + eps:
                            ok = False
                            break
                    if ok and _pair_hit(V, T, min(i, j), max(i, j), mode, eps):
                        out.append((min(i, j), max(i, j)))
        elif a == b:
            stack.append((2 * a, 2 * a + 1))
            stack.append((2 * a + 1, 2 * a + 1))
            stack.append((2 * a, 2 * a))
        else:
            stack.append((2 * a + 1, 2 * b + 1))
            stack.append((2 * a + 1, 2 * b))
            stack.append((2 * a, 2 * b + 1))
            stack.append((2 * a, 2 * b))
    res = np.empty((len(out), 2), dtype=np.int64)
    for r in range(len(out)):
        res[r, 0] = out[r][0]
        res[r, 1] = out[r][1]
    return res


# ---------------------------------------------------------------------------
# bounding volume hierarchy

def _morton_codes(points: np.ndarray, bits: int = 10) -> np.ndarray:
    lo = points.min(axis=0)
    span = np.maximum(points.max(axis=0) - lo, 1e-300)
    q = np.clip(((points - lo) / span * ((1 << bits) - 1)).astype(np.int64), 0, (1 << bits) - 1)
    code = np.zeros(len(points), dtype=np.int64)
    for b in range(bits):
        for axis in range(3):
            code |= ((q[:, axis] >> b) & 1) << (3 * b + axis)
    return code


class AABBTree:
    """Bounding-volume hierarchy over triangle boxes.

    Primitives are ordered along a Morton curve and bucketed into leaves of
    ``leaf_size``; internal boxes are merged bottom-up into a complete binary
    tree stored heap-style (root 1, children 2k and 2k+1), so every leaf sits
    at the same depth.
    """

    def __init__(self, lo: np.ndarray, hi: np.ndarray, leaf_size: int = LEAF_SIZE):
        self.leaf_size = leaf_size
        n = len(lo)
        self.order = np.argsort(_morton_codes(0.5 * (lo + hi)), kind="stable") if n else np.zeros(0, int)
        n_leaves = max(1, -(-n // leaf_size))
        self.n_leaves = 1 << int(np.ceil(np.log2(n_leaves)))
        padded = np.full(self.n_leaves * leaf_size, -1, dtype=np.int64)
        padded[:n] = self.order
        self.members = padded.reshape(self.n_leaves, leaf_size)

        size = 2 * self.n_leaves
        self.lo = np.full((size, 3), np.inf)
        self.hi = np.full((size, 3), -np.inf)
        valid = self.members >= 0
        safe = np.where(valid, self.members, 0)
        leaf_lo = np.where(valid[..., None], lo[safe] if n else 0.0, np.inf).min(axis=1)
        leaf_hi = np.where(valid[..., None], hi[safe] if n else 0.0, -np.inf).max(axis=1)
        self.lo[self.n_leaves:] = leaf_lo
        self.hi[self.n_leaves:] = leaf_hi
        level = self.n_leaves
        while level > 1:
            parents = np.arange(level // 2, level)
            self.lo[parents] = np.minimum(self.lo[2 * parents], self.lo[2 * parents + 1])
            self.hi[parents] = np.maximum(self.hi[2 * parents], self.hi[2 * parents + 1])
            level //= 2

    def self_overlapping_leaves(self) -> np.ndarray:
        """Leaf pairs (a <= b, as leaf slots) whose boxes overlap."""
        pairs = np.array([[1, 1]], dtype=np.int64)
        while True:
            a, b = pairs[:, 0], pairs[:, 1]
            ok = np.all((self.lo[a] <= self.hi[b]) & (self.lo[b] <= self.hi[a]), axis=1)
            pairs = pairs[ok]
            if len(pairs) == 0 or pairs[0, 0] >= self.n_leaves:
                return pairs - self.n_leaves
            a, b = pairs[:, 0], pairs[:, 1]
            same = a == b
            A = a[same]
            a, b = a[~same], b[~same]
            pairs = np.concatenate([
                np.stack([2 * A, 2 * A], 1), np.stack([2 * A + 1, 2 * A + 1], 1),
                np.stack([2 * A, 2 * A + 1], 1),
                np.stack([2 * a, 2 * b], 1), np.stack([2 * a, 2 * b + 1], 1),
                np.stack([2 * a + 1, 2 * b], 1), np.stack([2 * a + 1, 2 * b + 1], 1),
            ])

    def candidate_pairs(self) -> np.ndarray:
        """Unique primitive pairs (i < j) from overlapping leaves."""
        leaves = self.self_overlapping_leaves()
        k = self.leaf_size
        ma = self.members[leaves[:, 0]][:, :, None]
        mb = self.members[leaves[:, 1]][:, None, :]
        shape = (len(leaves), k, k)
        i = np.broadcast_to(ma, shape)
        j = np.broadcast_to(mb, shape)
        same_leaf = (leaves[:, 0] == leaves[:, 1])[:, None, None]
        upper = np.triu(np.ones((k, k), dtype=bool), 1)[None]
        ok = (i >= 0) & (j >= 0) & (~same_leaf | upper)
        i, j = i[ok], j[ok]
        return np.stack([np.minimum(i, j), np.maximum(i, j)], axis=1)


def _triangle_boxes(mesh: TriangleMesh):
    v = mesh.vertices[mesh.triangles]
    return v.min(axis=1), v.max(axis=1)


def _box_filter(pairs: np.ndarray, lo, hi, eps) -> np.ndarray:
    i, j = pairs[:, 0], pairs[:, 1]
    return pairs[np.all((lo[i] <= hi[j] + eps) & (lo[j] <= hi[i] + eps), axis=1)]


def _shared_counts(mesh: TriangleMesh, pairs: np.ndarray) -> np.ndarray:
    ti, tj = mesh.triangles[pairs[:, 0]], mesh.triangles[pairs[:, 1]]
    return (ti[:, :, None] == tj[:, None, :]).sum(axis=(1, 2))


def _disjoint_hits(mesh: TriangleMesh, pairs: np.ndarray, eps) -> np.ndarray:
    """Subset of vertex-disjoint candidate pairs whose triangles meet."""
    if len(pairs) == 0:
        return pairs
    v = mesh.vertices
    hit = tri_tri_intersect(v[mesh.triangles[pairs[:, 0]]], v[mesh.triangles[pairs[:, 1]]], eps)
    return pairs[hit]


def _fold_hits(mesh: TriangleMesh, pairs: np.ndarray, eps) -> np.ndarray:
    """Subset of one-shared-vertex pairs that overlap beyond the shared vertex.

    Two such triangles (a, b, c) and (a, d, e) overlap beyond ``a`` exactly
    when edge bc meets the second triangle or edge de meets the first.
    """
    if len(pairs) == 0:
        return pairs
    ti, tj = mesh.triangles[pairs[:, 0]], mesh.triangles[pairs[:, 1]]
    eq = ti[:, :, None] == tj[:, None, :]
    r = np.arange(len(pairs))
    ki = np.argmax(eq.any(axis=2), axis=1)
    kj = np.argmax(eq.any(axis=1), axis=1)
    v = mesh.vertices
    Pi, Pj = v[ti], v[tj]
    hit = seg_tri_intersect(Pi[r, (ki + 1) % 3], Pi[r, (ki + 2) % 3], Pj, eps)
    hit |= seg_tri_intersect(Pj[r, (kj + 1) % 3], Pj[r, (kj + 2) % 3], Pi, eps)
    return pairs[hit]


def _tree_hits(mesh: TriangleMesh, mode: int, eps) -> np.ndarray:
    lo, hi = _triangle_boxes(mesh)
    # inflate by eps so touching boxes are never pruned
    tree = AABBTree(lo - eps, hi + eps)
    return _traverse(np.ascontiguousarray(mesh.vertices, dtype=np.float64),
                     np.ascontiguousarray(mesh.triangles, dtype=np.int64),
                     lo, hi, tree.lo, tree.hi, tree.members, tree.n_leaves, mode, eps)


def _as_sorted_list(hits: np.ndarray) -> list[tuple[int, int]]:
    if len(hits) == 0:
        return []
    hits = hits[np.lexsort((hits[:, 1], hits[:, 0]))]
    return [(int(a), int(b)) for a, b in hits]


def detect_self_intersections(mesh: TriangleMesh, eps: float = EPS, method: str = "bvh") -> list[tuple[int, int]]:
    """Sorted pairs (i < j) of vertex-disjoint triangles whose closed triangles meet.

    ``method="brute"`` tests every pair with the vectorized routines and
    exists as a cross-check.
    """
    if mesh.n_faces < 2:
        return []
    if method == "bvh":
        hits = _tree_hits(mesh, 1, eps)
    elif method == "brute":
        lo, hi = _triangle_boxes(mesh)
        n = mesh.n_faces
        found = []
        for s in range(0, n, 256):
            i = np.arange(s, min(s + 256, n))
            ii, jj = np.meshgrid(i, np.arange(n), indexing="ij")
            m = jj > ii
            pairs = _box_filter(np.stack([ii[m], jj[m]], axis=1), lo, hi, eps)
            found.append(_disjoint_hits(mesh, pairs[_shared_counts(mesh, pairs) == 0], eps))
        hits = np.concatenate(found)
    else:
        raise ValueError(f"unknown method {method!r}")
    return _as_sorted_list(hits)


def has_self_intersection(mesh: TriangleMesh, eps: float = EPS) -> bool:
    return bool(detect_self_intersections(mesh, eps))


def detect_vertex_folds(mesh: TriangleMesh, eps: float = EPS, method: str = "bvh") -> list[tuple[int, int]]:
    """Pairs of triangles sharing exactly one vertex whose intersection extends past it."""
    if mesh.n_faces < 2:
        return []
    if method == "bvh":
        return _as_sorted_list(_tree_hits(mesh, 2, eps))
    if method != "brute":
        raise ValueError(f"unknown method {method!r}")
    lo, hi = _triangle_boxes(mesh)
    i, j = np.triu_indices(mesh.n_faces, 1)
    pairs = _box_filter(np.stack([i, j], axis=1), lo, hi, eps)
    return _as_sorted_list(_fold_hits(mesh, pairs[_shared_counts(mesh, pairs) == 1], eps))


def find_collisions(mesh: TriangleMesh, eps: float = EPS) -> list[tuple[int, int]]:
    """Self-intersections plus vertex folds: everything a valid embedding must not have."""
    if mesh.n_faces < 2:
        return []
    return _as_sorted_list(_tree_hits(mesh, 3, eps))
