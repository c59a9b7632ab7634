"""Dataset planning, per-scene generation, manifest writing, verification and evaluation."""

from __future__ import annotations

import json
import logging
import warnings
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .growth import GrowthConfig, grow
from .intersect import detect_self_intersections
from .mesh import TriangleMesh, connected_components, merge, read_off, write_off
from .metrics import accumulate, aggregate
from .sampling import LabeledCloud, read_predictions, sample_cloud
from .seeds import PlacementError, SeedSpec, place_seeds
from .topology import InconsistencyError, TopologyError, scene_summary
from .wfc import GenerationError, collapse, default_tileset, voxelize

log = logging.getLogger(__name__)

SPLITS = ("train", "val", "test")
MANIFEST = "manifest.json"


class ConfigError(ValueError):
    pass


class SceneFailure(RuntimeError):
    pass


@dataclass
class DatasetConfig:
    train: int = 5725
    val: int = 1610
    test: int = 965
    objects_per_scene: tuple[int, int] = (1, 3)
    genus_range: tuple[int, int] = (0, 3)
    points_per_cloud: int = 4096
    env_dims: tuple[int, int, int] = (6, 6, 6)
    cell_size: float = 1.0
    seed_scale: float = 4.0  # longest seed side, in cells
    stages: tuple[int, ...] = (20, 40, 80, 160)  # growth iterations a scene may be taken at
    growth: dict = field(default_factory=dict)  # GrowthConfig overrides
    linked_fraction: float = 0.15
    master_seed: int = 0
    normalization: float = 100.0
    max_retries: int = 3
    workers: int = 1

    def __post_init__(self):
        self.objects_per_scene = tuple(int(v) for v in self.objects_per_scene)
        self.genus_range = tuple(int(v) for v in self.genus_range)
        self.env_dims = tuple(int(v) for v in self.env_dims)
        self.stages = tuple(int(v) for v in self.stages)
        lo, hi = self.objects_per_scene
        if min(self.train, self.val, self.test) < 1:
            raise ConfigError("every split needs at least one scene")
        if not 1 <= lo <= hi <= 3:
            raise ConfigError("objects_per_scene must lie within [1, 3]")
        if not 0 <= self.genus_range[0] <= self.genus_range[1]:
            raise ConfigError("genus_range must be non-negative and ordered")
        if self.points_per_cloud < 1 or self.normalization <= 0 or self.cell_size <= 0:
            raise ConfigError("points_per_cloud, normalization and cell_size must be positive")
        if not self.stages or min(self.stages) < 0:
            raise ConfigError("stages must be a non-empty list of non-negative iteration counts")
        if not 0 <= self.linked_fraction <= 1:
            raise ConfigError("linked_fraction must lie in [0, 1]")
        known = {f.name for f in fields(GrowthConfig)} - {"max_iterations", "rng_seed"}
        unknown = set(self.growth) - known
        if unknown:
            raise ConfigError(f"unknown growth keys: {sorted(unknown)}")
        try:
            self.growth_config(0, 0)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def split_counts(self) -> dict[str, int]:
        return {"train": self.train, "val": self.val, "test": self.test}

    def growth_config(self, iterations: int, rng_seed: int) -> GrowthConfig:
        return GrowthConfig(**self.growth, max_iterations=iterations, rng_seed=rng_seed)

    def to_dict(self) -> dict:
        d = asdict(self)
        for k in ("objects_per_scene", "genus_range", "env_dims", "stages"):
            d[k] = list(d[k])
        return d

    @classmethod
    def from_dict(cls, data: dict) -> DatasetConfig:
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_json(cls, path) -> DatasetConfig:
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(data)


# ---------------------------------------------------------------------------
# planning

@dataclass
class ScenePlan:
    scene_id: int
    split: str
    genera: list[int]
    linked: list[int] | None  # indices of the linked pair within the scene
    stage: int


def scene_seeds(master_seed: int, scene_id: int, attempt: int = 0) -> dict[str, int]:
    """Independent 63-bit sub-seeds for one scene attempt, derived from the master seed."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=(int(scene_id), int(attempt)))
    env, place, growth, sample = (int(v) >> 1 for v in ss.generate_state(4, np.uint64))
    return {"env": env, "placement": place, "growth": growth, "sampling": sample}


def plan_dataset(cfg: DatasetConfig) -> list[ScenePlan]:
    """Scene plans with balanced object counts per split and balanced genera overall."""
    rng = np.random.default_rng(np.random.SeedSequence(int(cfg.master_seed), spawn_key=(2**31,)))
    lo, hi = cfg.objects_per_scene
    choices = list(range(lo, hi + 1))
    n_objects: list[tuple[str, int]] = []
    for split in SPLITS:
        n = cfg.split_counts()[split]
        counts = np.array([choices[k % len(choices)] for k in range(n)])
        n_objects += [(split, int(c)) for c in rng.permutation(counts)]

    g0, g1 = cfg.genus_range
    total = sum(c for _, c in n_objects)
    genus_pool = rng.permutation(np.array([g0 + k % (g1 - g0 + 1) for k in range(total)]))

    plans, pos = [], 0
    for sid, (split, c) in enumerate(n_objects):
        genera = sorted(int(g) for g in genus_pool[pos:pos + c])
        pos += c
        stage = int(cfg.stages[int(rng.integers(len(cfg.stages)))])
        plans.append(ScenePlan(sid, split, genera, None, stage))

    multi = [p for p in plans if len(p.genera) >= 2]
    eligible = [p for p in multi if sum(g >= 1 for g in p.genera) >= 2]
    want = int(round(cfg.linked_fraction * len(multi)))
    if want > len(eligible):
        warnings.warn(f"only {len(eligible)} multi-object scenes can hold a linked pair; wanted {want}")
        want = len(eligible)
    for k in sorted(rng.choice(len(eligible), size=want, replace=False).tolist()) if want else []:
        p = eligible[k]
        idx = [i for i, g in enumerate(p.genera) if g >= 1][:2]
        p.linked = idx

    hist = plan_histograms(plans)
    problems = balance_problems(hist, cfg)
    if problems:
        warnings.warn("plan is not balanced: " + "; ".join(problems) + f" (achieved {hist})")
    return plans


def plan_histograms(plans: list[ScenePlan]) -> dict:
    per_split = {s: Counter(len(p.genera) for p in plans if p.split == s) for s in SPLITS}
    genus = Counter(g for p in plans for g in p.genera)
    return {"objects": {s: dict(sorted(c.items())) for s, c in per_split.items()},
            "genus": dict(sorted(genus.items()))}


def balance_problems(hist: dict, cfg: DatasetConfig) -> list[str]:
    out = []
    lo, hi = cfg.objects_per_scene
    for split in SPLITS:
        n = cfg.split_counts()[split]
        k = hi - lo + 1
        for c in range(lo, hi + 1):
            got = hist["objects"][split].get(c, 0)
            if abs(got - n / k) > 1:
                out.append(f"{split}: {got} scenes with {c} objects vs {n / k:.1f}")
    g0, g1 = cfg.genus_range
    total = sum(hist["genus"].values())
    for g in range(g0, g1 + 1):
        got = hist["genus"].get(g, 0)
        if abs(got - total / (g1 - g0 + 1)) > 1:
            out.append(f"genus {g}: {got} objects vs {total / (g1 - g0 + 1):.1f}")
    return out


# ---------------------------------------------------------------------------
# one scene

def _specs(plan: ScenePlan, scale: float) -> list[SeedSpec]:
    specs = [SeedSpec(g, scale=scale) for g in plan.genera]
    if plan.linked:
        a, b = plan.linked
        specs[a].linked_to, specs[b].linked_to = b, a
    return specs


def normalize(points: np.ndarray, target: float) -> tuple[float, np.ndarray]:
    """Scale and offset mapping the points' bounding box into [0, target]^3.

    The largest side spans the whole cube; the others are centred.
    """
    lo, hi = points.min(axis=0), points.max(axis=0)
    ext = hi - lo
    s = target / float(ext.max())
    offset = -lo * s + (target - ext * s) / 2.0
    return s, offset


def build_scene(plan: ScenePlan, cfg: DatasetConfig, seeds: dict[str, int]):
    """Environment, placement, growth, sampling and normalization for one attempt."""
    tiles = default_tileset()
    env = voxelize(collapse(cfg.env_dims, tiles, seeds["env"]), tiles, cfg.cell_size)
    meshes = place_seeds(_specs(plan, cfg.seed_scale), env, seeds["placement"])
    grown, trace = grow(meshes, env, cfg.growth_config(plan.stage, seeds["growth"]))
    cloud = sample_cloud(grown, plan.genera, cfg.points_per_cloud, seeds["sampling"])
    s, offset = normalize(cloud.points, cfg.normalization)
    cloud = cloud.with_points(np.clip(cloud.points * s + offset, 0.0, cfg.normalization))
    grown = [TriangleMesh(m.vertices * s + offset, m.triangles) for m in grown]
    return grown, cloud, trace


def verify_meshes(meshes: list[TriangleMesh], genera: list[int]) -> tuple[bool, str, dict | None]:
    """Oracle check of stored objects against their planned genera."""
    try:
        summary = scene_summary(meshes)
    except (TopologyError, InconsistencyError) as exc:
        return False, str(exc), None
    if summary.genera != list(genera):
        return False, f"genera {summary.genera} != planned {list(genera)}", summary.to_dict()
    hits = detect_self_intersections(merge(meshes))
    if hits:
        return False, f"{len(hits)} intersecting triangle pairs", summary.to_dict()
    return True, "ok", summary.to_dict()


def load_scene_meshes(path) -> list[TriangleMesh]:
    """Objects of a stored scene: its connected components in file order."""
    return connected_components(read_off(path))


def _partner(plan: ScenePlan, i: int) -> int | None:
    if not plan.linked or i not in plan.linked:
        return None
    a, b = plan.linked
    return b if i == a else a


def generate_scene(plan: ScenePlan, cfg: DatasetConfig, out: Path) -> dict:
    """Generate, store and verify one scene, regenerating with advanced seeds on failure."""
    rel_mesh = f"{plan.split}/scene_{plan.scene_id:05d}.off"
    rel_cloud = f"{plan.split}/scene_{plan.scene_id:05d}.csv"
    entry = {
        "scene_id": plan.scene_id, "split": plan.split, "growth_stage": plan.stage,
        "objects": [{"genus": g, "linked_to": _partner(plan, i)} for i, g in enumerate(plan.genera)],
        "files": {"mesh": rel_mesh, "cloud": rel_cloud},
    }
    errors = []
    for attempt in range(cfg.max_retries + 1):
        seeds = scene_seeds(cfg.master_seed, plan.scene_id, attempt)
        try:
            meshes, cloud, trace = build_scene(plan, cfg, seeds)
        except (GenerationError, PlacementError) as exc:
            errors.append(f"attempt {attempt}: {exc}")
            continue
        write_off(merge(meshes), out / rel_mesh)
        cloud.write_csv(out / rel_cloud)
        ok, msg, summary = verify_meshes(load_scene_meshes(out / rel_mesh), plan.genera)
        if ok:
            labels = LabeledCloud.read_csv(out / rel_cloud).genus_label
            if len(labels) != cfg.points_per_cloud or not set(labels.tolist()) <= set(plan.genera):
                ok, msg = False, "cloud rows or labels do not match the plan"
        if ok:
            entry.update(status="ok", attempt=attempt, seeds=seeds, topology=summary,
                         accepted_iterations=sum(r.accepted for r in trace.records))
            return entry
        errors.append(f"attempt {attempt}: {msg}")
    for rel in (rel_mesh, rel_cloud):
        (out / rel).unlink(missing_ok=True)
    entry.update(status="failed", errors=errors)
    return entry


def _scene_job(args):
    plan, cfg, out = args
    return generate_scene(plan, cfg, Path(out))


def run_pipeline(cfg: DatasetConfig, out, progress=None) -> dict:
    """Generate the whole dataset into ``out`` and write its manifest."""
    out = Path(out)
    for split in SPLITS:
        (out / split).mkdir(parents=True, exist_ok=True)
    plans = plan_dataset(cfg)
    jobs = [(p, cfg, str(out)) for p in plans]
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            entries = list(pool.map(_scene_job, jobs))
    else:
        entries = []
        for job in jobs:
            entries.append(_scene_job(job))
            if progress is not None:
                progress(entries[-1])
    entries.sort(key=lambda e: e["scene_id"])
    counts = {s: sum(1 for e in entries if e["split"] == s and e["status"] == "ok") for s in SPLITS}
    failed = [e["scene_id"] for e in entries if e["status"] != "ok"]
    manifest = {
        "config": cfg.to_dict(),
        "histograms": plan_histograms(plans),
        "summary": {"scenes": counts, "failed": failed},
        "scenes": entries,
    }
    (out / MANIFEST).write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")
    return manifest


# ---------------------------------------------------------------------------
# checking a stored dataset

def load_manifest(path) -> tuple[dict, Path]:
    path = Path(path)
    if path.is_dir():
        path = path / MANIFEST
    return json.loads(path.read_text()), path.parent


def verify_dataset(manifest_path) -> list[dict]:
    """Recompute every stored scene's topology from disk and compare with the manifest."""
    manifest, root = load_manifest(manifest_path)
    results = []
    for e in manifest["scenes"]:
        genera = [o["genus"] for o in e["objects"]]
        res = {"scene_id": e["scene_id"], "split": e["split"], "genera": genera}
        if e["status"] != "ok":
            res.update(ok=False, message="scene failed during generation")
            results.append(res)
            continue
        ok, msg, summary = verify_meshes(load_scene_meshes(root / e["files"]["mesh"]), genera)
        if ok and summary != e["topology"]:
            ok, msg = False, "topology differs from the manifest record"
        if ok:
            cloud = LabeledCloud.read_csv(root / e["files"]["cloud"])
            if cloud.n != manifest["config"]["points_per_cloud"]:
                ok, msg = False, f"cloud has {cloud.n} rows"
            elif not set(cloud.genus_label.tolist()) <= set(genera):
                ok, msg = False, "cloud labels outside the manifest genera"
            elif any(genera[o] != g for o, g in zip(cloud.object_id.tolist(), cloud.genus_label.tolist())):
                ok, msg = False, "cloud label disagrees with its object's genus"
        res.update(ok=ok, message=msg, betti=(summary or {}).get("scene_betti"), chi=(summary or {}).get("scene_chi"))
        results.append(res)
    return results


def _prediction_file(pred_dir: Path, entry: dict) -> Path:
    name = Path(entry["files"]["cloud"]).stem + ".txt"
    for cand in (pred_dir / entry["split"] / name, pred_dir / name):
        if cand.exists():
            return cand
    raise FileNotFoundError(f"no prediction file for scene {entry['scene_id']} under {pred_dir}")


def evaluate_dataset(manifest_path, pred_dir, macro: bool = False, miou_over: str = "gt", n_classes: int = 4):
    """Score row-aligned prediction files (``scene_<id>.txt``) against stored clouds."""
    manifest, root = load_manifest(manifest_path)
    pred_dir = Path(pred_dir)
    mats = []
    for e in manifest["scenes"]:
        if e["status"] != "ok":
            continue
        cloud = LabeledCloud.read_csv(root / e["files"]["cloud"])
        pred = read_predictions(_prediction_file(pred_dir, e))
        mats.append(accumulate(cloud.genus_label, pred, n_classes))
    return aggregate(mats, macro=macro, miou_over=miou_over)
