"""Area-weighted point sampling of labeled scenes and global cloud augmentation."""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .mesh import TriangleMesh, face_areas

CSV_HEADER = "x,y,z,genus,object_id"


class SamplingError(ValueError):
    pass


@dataclass
class LabeledCloud:
    points: np.ndarray  # (N, 3)
    genus_label: np.ndarray  # (N,)
    object_id: np.ndarray  # (N,)
    rng_seed: int = 0

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=np.float64).reshape(-1, 3)
        self.genus_label = np.asarray(self.genus_label, dtype=np.int64).reshape(-1)
        self.object_id = np.asarray(self.object_id, dtype=np.int64).reshape(-1)
        if not len(self.points) == len(self.genus_label) == len(self.object_id):
            raise SamplingError("points and labels must have the same length")

    @property
    def n(self) -> int:
        return len(self.points)

    def with_points(self, points: np.ndarray) -> LabeledCloud:
        return replace(self, points=points)

    def write_csv(self, path):
        rows = np.column_stack([self.points, self.genus_label, self.object_id])
        with open(path, "w", newline="") as fh:
            fh.write(CSV_HEADER + "\n")
            for x, y, z, g, o in rows.tolist():
                fh.write(f"{x:.9g},{y:.9g},{z:.9g},{int(g)},{int(o)}\n")

    @classmethod
    def read_csv(cls, path, rng_seed: int = 0) -> LabeledCloud:
        with open(path) as fh:
            header = fh.readline().strip()
            if header != CSV_HEADER:
                raise SamplingError(f"{path}: expected header {CSV_HEADER!r}, got {header!r}")
            data = np.loadtxt(fh, delimiter=",", ndmin=2)
        if data.size == 0:
            data = np.zeros((0, 5))
        return cls(data[:, :3], data[:, 3].astype(np.int64), data[:, 4].astype(np.int64), rng_seed)


def read_points_csv(path) -> np.ndarray:
    """Coordinates only; accepts any CSV whose first three columns are x, y, z."""
    with open(path) as fh:
        first = fh.readline()
        try:
            [float(v) for v in first.split(",")[:3]]
            skip = 0
        except ValueError:
            skip = 1
    return np.loadtxt(path, delimiter=",", skiprows=skip, usecols=(0, 1, 2), ndmin=2)


def write_predictions(labels, path):
    Path(path).write_text("".join(f"{int(v)}\n" for v in np.asarray(labels).reshape(-1)))


def read_predictions(path) -> np.ndarray:
    text = Path(path).read_text().split()
    return np.array([int(t) for t in text], dtype=np.int64)


# ---------------------------------------------------------------------------
# sampling

def sample_cloud(meshes: list[TriangleMesh], genera, n: int = 4096, rng_seed: int = 0) -> LabeledCloud:
    """Draw ``n`` points uniformly by area over the union of all triangles.

    Object ids are positions in ``meshes``; each point carries its object's genus.
    """
    genera = list(genera)
    if len(genera) != len(meshes):
        raise SamplingError("one genus per mesh is required")
    if n < 1:
        raise SamplingError("n must be positive")
    if not meshes or all(m.n_faces == 0 for m in meshes):
        raise SamplingError("empty scene")
    tris = np.concatenate([m.vertices[m.triangles] for m in meshes])
    oid = np.concatenate([np.full(m.n_faces, k, dtype=np.int64) for k, m in enumerate(meshes)])
    area = np.concatenate([face_areas(m) for m in meshes])
    total = area.sum()
    if not total > 0:
        raise SamplingError("scene has zero surface area")
    rng = np.random.default_rng(rng_seed)
    cdf = np.cumsum(area) / total
    face = np.minimum(np.searchsorted(cdf, rng.random(n), side="right"), len(cdf) - 1)
    r1, r2 = rng.random(n), rng.random(n)
    s = np.sqrt(r1)
    bary = np.column_stack([1.0 - s, s * (1.0 - r2), s * r2])
    pts = np.einsum("nk,nkj->nj", bary, tris[face])
    ids = oid[face]
    return LabeledCloud(pts, np.asarray(genera, dtype=np.int64)[ids], ids, int(rng_seed))


# ---------------------------------------------------------------------------
# augmentation

@dataclass
class AugmentConfig:
    mirror_prob: float = 0.5
    rotation_range: float = 2 * np.pi  # angles uniform in [0, rotation_range) per axis
    scale_range: tuple[float, float] = (0.5, 1.5)
    shift_range: float = 25.0  # uniform in [-shift_range, shift_range] per axis
    jitter_sigma: float = 0.025
    rng_seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.mirror_prob <= 1.0:
            raise ValueError("mirror_prob must lie in [0, 1]")
        lo, hi = self.scale_range
        if lo > hi or lo <= 0:
            raise ValueError("scale_range must be positive and ordered")
        if self.shift_range < 0 or self.jitter_sigma < 0 or self.rotation_range < 0:
            raise ValueError("ranges must be non-negative")

    @classmethod
    def identity(cls, rng_seed: int = 0) -> AugmentConfig:
        return cls(0.0, 0.0, (1.0, 1.0), 0.0, 0.0, rng_seed)


def rotation_matrix(ax: float, ay: float, az: float) -> np.ndarray:
    """Rotation about x, then y, then z."""
    cx, sx, cy, sy, cz, sz = np.cos(ax), np.sin(ax), np.cos(ay), np.sin(ay), np.cos(az), np.sin(az)
    rx = np.array([[1, 0, 0], [0, cx, -sx], [0, sx, cx]])
    ry = np.array([[cy, 0, sy], [0, 1, 0], [-sy, 0, cy]])
    rz = np.array([[cz, -sz, 0], [sz, cz, 0], [0, 0, 1]])
    return rz @ ry @ rx


def augment(cloud: LabeledCloud, cfg: AugmentConfig, steps=("mirror", "rotate", "scale", "shift", "jitter")) -> LabeledCloud:
    """Mirror, rotate, scale, shift and jitter, in that order, applied to the whole cloud.

    Every random draw is made regardless of ``steps`` so a step subset sees the
    same transform parameters as the full chain.
    """
    rng = np.random.default_rng(cfg.rng_seed)
    mirror = np.where(rng.random(3) < cfg.mirror_prob, -1.0, 1.0)
    angles = rng.random(3) * cfg.rotation_range
    scale = rng.uniform(cfg.scale_range[0], cfg.scale_range[1], 3)
    shift = rng.uniform(-cfg.shift_range, cfg.shift_range, 3)
    noise = rng.standard_normal(cloud.points.shape) * cfg.jitter_sigma

    p = cloud.points.copy()
    if "mirror" in steps:
        p = p * mirror
    if "rotate" in steps:
        p = p @ rotation_matrix(*angles).T
    if "scale" in steps:
        p = p * scale
    if "shift" in steps:
        p = p + shift
    if "jitter" in steps:
        p = p + noise
    return replace(cloud, points=p, genus_label=cloud.genus_label.copy(), object_id=cloud.object_id.copy())
