"""Small Vietoris-Rips filtrations and Z/2 persistence for dimensions 0 and 1."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import pdist, squareform

MAX_POINTS = 400


class RipsSizeError(ValueError):
    pass


@dataclass
class Filtration:
    simplices: list[tuple[tuple[int, ...], float]]
    n_points: int
    max_radius: float

    def __len__(self) -> int:
        return len(self.simplices)


@dataclass
class Barcode:
    intervals: dict[int, list[tuple[float, float]]] = field(default_factory=lambda: {0: [], 1: []})

    def rows(self) -> list[tuple[int, float, float]]:
        return [(d, b, e) for d in sorted(self.intervals) for b, e in self.intervals[d]]

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["dim", "birth", "death"])
            for d, b, e in self.rows():
                w.writerow([d, f"{b:.9g}", "inf" if np.isinf(e) else f"{e:.9g}"])


def build_rips(points, max_radius: float, max_dim: int = 2, max_points: int = MAX_POINTS) -> Filtration:
    """Every simplex up to ``max_dim`` whose diameter is at most ``max_radius``.

    Sorted by (birth, dimension, vertex tuple), so faces always precede cofaces.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    n = len(pts)
    if n > max_points:
        raise RipsSizeError(f"{n} points exceeds the limit of {max_points}; subsample the cloud "
                            "or raise max_points knowing simplex counts grow cubically")
    if not 0 <= max_dim <= 2:
        raise ValueError("max_dim must be 0, 1 or 2")
    D = squareform(pdist(pts)) if n > 1 else np.zeros((n, n))
    simplices: list[tuple[tuple[int, ...], float]] = [((i,), 0.0) for i in range(n)]
    if max_dim >= 1:
        ii, jj = np.nonzero(np.triu(D <= max_radius, 1))
        simplices += [((int(i), int(j)), float(D[i, j])) for i, j in zip(ii, jj)]
        if max_dim >= 2:
            close = D <= max_radius
            for i, j in zip(ii, jj):
                ks = np.flatnonzero(close[i, j + 1:] & close[j, j + 1:]) + j + 1
                for k in ks:
                    simplices.append(((int(i), int(j), int(k)), float(max(D[i, j], D[i, k], D[j, k]))))
    simplices.sort(key=lambda s: (s[1], len(s[0]), s[0]))
    return Filtration(simplices, n, float(max_radius))


def boundary_columns(filt: Filtration) -> list[set[int]]:
    index = {s: k for k, (s, _) in enumerate(filt.simplices)}
    cols = []
    for s, _ in filt.simplices:
        if len(s) == 1:
            cols.append(set())
        else:
            cols.append({index[s[:m] + s[m + 1:]] for m in range(len(s))})
    return cols


def persistence(filt: Filtration) -> Barcode:
    """Standard column reduction over Z/2; zero-length intervals are dropped.

    Classes still alive at the end get death = inf (up to the filtration's
    maximum radius). Only dimensions below the top simplex dimension are
    reported, so with triangles present that is dims 0 and 1.
    """
    cols = boundary_columns(filt)
    births = [r for _, r in filt.simplices]
    dims = [len(s) - 1 for s, _ in filt.simplices]
    top = max(dims) if dims else 0
    low_of: dict[int, int] = {}
    paired: set[int] = set()
    bars: dict[int, list[tuple[float, float]]] = {0: [], 1: []}
    for j, col in enumerate(cols):
        while col:
            low = max(col)
            k = low_of.get(low)
            if k is None:
                break
            col ^= cols[k]
        if col:
            low = max(col)
            low_of[low] = j
            paired.update((low, j))
            if births[j] > births[low] and dims[low] in bars:
                bars[dims[low]].append((births[low], births[j]))
    for k, d in enumerate(dims):
        if k not in paired and d in bars and (d < top or top == 0):
            bars[d].append((births[k], np.inf))
    for d in bars:
        bars[d].sort()
    return Barcode(bars)


def betti_at(barcode: Barcode, radius: float) -> tuple[int, int]:
    return tuple(sum(1 for b, e in barcode.intervals.get(d, []) if b <= radius < e) for d in (0, 1))


def betti_curve(barcode: Barcode, radii) -> np.ndarray:
    return np.array([betti_at(barcode, r) for r in radii], dtype=np.int64).reshape(-1, 2)


def write_betti_curve_csv(radii, curve: np.ndarray, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["radius", "b0", "b1"])
        for r, (b0, b1) in zip(radii, curve):
            w.writerow([f"{r:.9g}", int(b0), int(b1)])


# ---------------------------------------------------------------------------
# ambiguity demonstrator

def thick_plate_voxels(genus: int) -> np.ndarray:
    """(4g+2) x 6 x 2 solid with g square 2x2 holes and 2-cell bars.

    Boundary lattice points of such a solid, at Rips radius in [sqrt 2, sqrt 3),
    span every unit square of the surface but no hole or bar cross-section,
    so the complex has one component and the surface's 2g independent loops.
    """
    if genus == 0:
        return np.ones((2, 2, 2), dtype=bool)
    occ = np.ones((4 * genus + 2, 6, 2), dtype=bool)
    for i in range(genus):
        occ[2 + 4 * i:4 + 4 * i, 2:4, :] = False
    return occ


def lattice_points(occ: np.ndarray, origin=(0.0, 0.0, 0.0), hollow: bool = True) -> np.ndarray:
    """Corner points of occupied unit cells; ``hollow`` keeps only boundary corners."""
    occ = np.asarray(occ, dtype=bool)
    touch = np.zeros(tuple(s + 1 for s in occ.shape), dtype=np.int64)
    for dx in (0, 1):
        for dy in (0, 1):
            for dz in (0, 1):
                touch[dx:dx + occ.shape[0], dy:dy + occ.shape[1], dz:dz + occ.shape[2]] += occ
    keep = (touch > 0) & (touch < 8) if hollow else touch > 0
    return np.argwhere(keep).astype(np.float64) + np.asarray(origin, float)


def scene_lattice_cloud(genera, spacing: float = 4.0) -> np.ndarray:
    """Thick-plate lattice clouds for each genus, laid out along y with a gap."""
    parts, y = [], 0.0
    for g in genera:
        occ = thick_plate_voxels(g)
        parts.append(lattice_points(occ, (0.0, y, 0.0)))
        y += occ.shape[1] + spacing
    return np.concatenate(parts)


def sweep(points, radii, max_points: int = MAX_POINTS) -> np.ndarray:
    radii = np.asarray(radii, dtype=np.float64)
    bc = persistence(build_rips(points, float(radii.max()), 2, max_points))
    return betti_curve(bc, radii)


def stable_plateau(radii, curve_a: np.ndarray, curve_b: np.ndarray):
    """Longest run of consecutive radii where both curves agree and show a loop.

    Returns (r_start, r_end, (b0, b1)) or None.
    """
    radii = np.asarray(radii)
    agree = np.all(curve_a == curve_b, axis=1) & (curve_a[:, 1] > 0)
    best, start = None, None
    for k in range(len(radii) + 1):
        if k < len(radii) and agree[k] and (start is None or np.array_equal(curve_a[k], curve_a[start])):
            start = k if start is None else start
            continue
        if start is not None:
            if best is None or k - start > best[1] - best[0]:
                best = (start, k)
            start = k if k < len(radii) and agree[k] else None
    if best is None:
        return None
    s, e = best
    return float(radii[s]), float(radii[e - 1]), tuple(int(v) for v in curve_a[s])
