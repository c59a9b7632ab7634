"""Command-line entry points: ``toposynth <subcommand> ...``.

Exit codes: 0 success, 1 partial failure (some scenes or checks failed),
2 bad configuration or usage.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import metrics, rips
from .growth import grow
from .mesh import TriangleMesh, connected_components, merge, read_obj, read_off, write_obj, write_off
from .pipeline import (ConfigError, DatasetConfig, evaluate_dataset, run_pipeline,
                       verify_dataset)
from .sampling import AugmentConfig, LabeledCloud, augment, read_points_csv, sample_cloud
from .seeds import PlacementError, PreconditionError, SeedSpec, make_linked_pair, make_seed, place_seeds
from .topology import TopologyError, scene_summary
from .wfc import GenerationError, TileGrid, barrier_mesh, collapse, default_tileset, voxelize

log = logging.getLogger("toposynth")

EXIT_OK, EXIT_PARTIAL, EXIT_CONFIG = 0, 1, 2


def _load_config(args) -> DatasetConfig:
    cfg = DatasetConfig.from_json(args.config) if args.config else DatasetConfig()
    if args.seed is not None:
        cfg.master_seed = int(args.seed)
    return cfg


def _read_mesh(path) -> TriangleMesh:
    path = Path(path)
    return read_obj(path) if path.suffix.lower() == ".obj" else read_off(path)


def _write_mesh(mesh: TriangleMesh, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    (write_obj if path.suffix.lower() == ".obj" else write_off)(mesh, path)


def _out_dir(args, default: str) -> Path:
    out = Path(args.out or default)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_env(path, cfg: DatasetConfig):
    grid = TileGrid.from_json(json.loads(Path(path).read_text()))
    return voxelize(grid, default_tileset(), cfg.cell_size)


# ---------------------------------------------------------------------------
# subcommands

def cmd_gen_env(args, cfg: DatasetConfig) -> int:
    dims = tuple(args.dims) if args.dims else cfg.env_dims
    seed = cfg.master_seed
    tiles = default_tileset(include_caps=args.caps)
    grid = collapse(dims, tiles, seed, boundary_rule=args.boundary)
    out = _out_dir(args, ".")
    grid.save(out / "env.json")
    env = voxelize(grid, tiles, cfg.cell_size)
    if args.barrier:
        write_off(barrier_mesh(env), out / "barrier.off")
    print(f"env {dims} seed {seed}: {int(env.occupied.sum())} of {env.occupied.size} cells occupied -> {out / 'env.json'}")
    return EXIT_OK


def cmd_gen_seeds(args, cfg: DatasetConfig) -> int:
    out = _out_dir(args, ".")
    if args.linked:
        a, b = args.linked
        meshes = list(make_linked_pair(a, b))
        paths = [out / f"linked_{a}_{b}.off"]
        _write_mesh(merge(meshes), paths[0])
    else:
        meshes = [make_seed(g) for g in args.genus]
        paths = [out / f"seed_g{g}.off" for g in args.genus]
        for m, p in zip(meshes, paths):
            _write_mesh(m, p)
    s = scene_summary(meshes)
    for c in s.components:
        print(f"genus {c.genus}  chi {c.chi}  V {c.vertices}  E {c.edges}  F {c.faces}")
    print(f"betti {tuple(s.scene_betti)} -> {', '.join(str(p) for p in paths)}")
    return EXIT_OK


def _side_by_side(meshes: list[TriangleMesh], gap: float = 2.0) -> list[TriangleMesh]:
    out, x = [], 0.0
    for m in meshes:
        lo, hi = m.bounds()
        out.append(m.translated((x - lo[0], -lo[1], -lo[2])))
        x += float(hi[0] - lo[0]) + gap
    return out


def cmd_grow(args, cfg: DatasetConfig) -> int:
    env = _load_env(args.env, cfg) if args.env else None
    seed = cfg.master_seed
    if args.mesh:
        meshes = connected_components(_read_mesh(args.mesh))
    elif env is not None:
        specs = [SeedSpec(g, scale=cfg.seed_scale) for g in args.genus]
        if args.linked:
            specs[0].linked_to, specs[1].linked_to = 1, 0
        meshes = place_seeds(specs, env, seed)
    elif args.linked:
        pair = list(make_linked_pair(*args.genus[:2]))
        meshes = pair + _side_by_side([make_seed(g) for g in args.genus[2:]]) if len(args.genus) > 2 else pair
    else:
        meshes = _side_by_side([make_seed(g) for g in args.genus])
    before = scene_summary(meshes)
    grown, trace = grow(meshes, env, cfg.growth_config(args.iterations, seed))
    after = scene_summary(grown)
    out = _out_dir(args, ".")
    _write_mesh(merge(grown), out / "grown.off")
    trace.write_csv(out / "trace.csv")
    acc = sum(r.accepted for r in trace.records)
    area = trace.records[-1].area if trace.records else 0.0
    print(f"{acc}/{len(trace.records)} iterations accepted; genera {before.genera} -> {after.genera}; area {area:.4g}")
    return EXIT_OK if before.genera == after.genera else EXIT_PARTIAL


def cmd_sample(args, cfg: DatasetConfig) -> int:
    meshes = connected_components(_read_mesh(args.mesh))
    genera = args.genera if args.genera else scene_summary(meshes).genera
    n = args.n or cfg.points_per_cloud
    seed = cfg.master_seed
    cloud = sample_cloud(meshes, genera, n, seed)
    out = Path(args.out or "cloud.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    cloud.write_csv(out)
    print(f"{cloud.n} points, genera {list(genera)} -> {out}")
    return EXIT_OK


def cmd_augment(args, cfg: DatasetConfig) -> int:
    cloud = LabeledCloud.read_csv(args.cloud)
    seed = cfg.master_seed
    acfg = AugmentConfig(
        mirror_prob=args.mirror_prob, rotation_range=args.rotation_range,
        scale_range=tuple(args.scale_range), shift_range=args.shift_range,
        jitter_sigma=args.jitter_sigma, rng_seed=seed,
    )
    res = augment(cloud, acfg)
    out = Path(args.out or "augmented.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    res.write_csv(out)
    print(f"{res.n} points -> {out}")
    return EXIT_OK


def cmd_dataset(args, cfg: DatasetConfig) -> int:
    if args.workers:
        cfg.workers = args.workers
    out = _out_dir(args, "data")

    def progress(e):
        log.info("scene %05d %-5s %s", e["scene_id"], e["split"], e["status"])

    manifest = run_pipeline(cfg, out, progress=progress)
    summ = manifest["summary"]
    print(" ".join(f"{s}={n}" for s, n in summ["scenes"].items()) + f" failed={len(summ['failed'])}")
    return EXIT_PARTIAL if summ["failed"] else EXIT_OK


def cmd_verify(args, cfg: DatasetConfig) -> int:
    results = verify_dataset(args.manifest)
    for r in results:
        tag = "PASS" if r["ok"] else "FAIL"
        print(f"{tag} scene {r['scene_id']:05d} {r['split']:<5} genera {r['genera']} "
              f"betti {r.get('betti')} chi {r.get('chi')} {'' if r['ok'] else r['message']}".rstrip())
    n_fail = sum(not r["ok"] for r in results)
    print(json.dumps({"scenes": len(results), "passed": len(results) - n_fail, "failed": n_fail}))
    if args.out:
        Path(args.out).write_text(json.dumps(results, indent=1) + "\n")
    return EXIT_PARTIAL if n_fail else EXIT_OK


def cmd_eval(args, cfg: DatasetConfig) -> int:
    rep = evaluate_dataset(args.manifest, args.pred, macro=args.macro, miou_over=args.miou_over)
    text = {"text": metrics.report_text, "json": metrics.report_json, "csv": metrics.report_csv}[args.format](rep)
    if args.out:
        Path(args.out).write_text(text)
    print(text, end="" if text.endswith("\n") else "\n")
    return EXIT_OK


def cmd_rips(args, cfg: DatasetConfig) -> int:
    out = _out_dir(args, ".")
    radii = np.linspace(args.r_min, args.r_max, args.steps)
    if args.demo:
        a = rips.scene_lattice_cloud([1, 2])
        b = rips.scene_lattice_cloud([0, 3])
        ca, cb = rips.sweep(a, radii), rips.sweep(b, radii)
        rips.write_betti_curve_csv(radii, ca, out / "betti_g1_g2.csv")
        rips.write_betti_curve_csv(radii, cb, out / "betti_g0_g3.csv")
        plateau = rips.stable_plateau(radii, ca, cb)
        print(f"clouds of {len(a)} and {len(b)} points; shared plateau {plateau}")
        return EXIT_OK if plateau is not None else EXIT_PARTIAL
    if not args.cloud:
        raise ConfigError("rips needs --cloud or --demo")
    pts = read_points_csv(args.cloud)
    if args.subsample and len(pts) > args.subsample:
        seed = cfg.master_seed
        pts = pts[np.sort(np.random.default_rng(seed).choice(len(pts), args.subsample, replace=False))]
    bc = rips.persistence(rips.build_rips(pts, args.r_max, 2, args.max_points))
    bc.write_csv(out / "barcode.csv")
    rips.write_betti_curve_csv(radii, rips.betti_curve(bc, radii), out / "betti_curve.csv")
    print(f"{len(pts)} points: {len(bc.intervals[0])} dim-0 and {len(bc.intervals[1])} dim-1 bars -> {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, help="master seed (overrides the config file)")
    common.add_argument("--config", help="JSON file with DatasetConfig keys")
    common.add_argument("--out", help="output directory or file")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="toposynth", description="Synthetic genus-labelled scene generator and checks.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("gen-env", parents=[common], help="solve a tile maze environment")
    s.add_argument("--dims", type=int, nargs=3)
    s.add_argument("--boundary", choices=("closed", "open"), default="closed")
    s.add_argument("--caps", action="store_true", help="add dead-end cap tiles")
    s.add_argument("--barrier", action="store_true", help="also export the barrier surface as OFF")
    s.set_defaults(func=cmd_gen_env)

    s = sub.add_parser("gen-seeds", parents=[common], help="build genus-g seed meshes")
    s.add_argument("--genus", type=int, nargs="+", default=[0, 1, 2, 3])
    s.add_argument("--linked", type=int, nargs=2, metavar=("GA", "GB"))
    s.set_defaults(func=cmd_gen_seeds)

    s = sub.add_parser("grow", parents=[common], help="grow seeds or a stored mesh")
    s.add_argument("--mesh", help="OFF/OBJ input; each connected component is one object")
    s.add_argument("--genus", type=int, nargs="+", default=[1])
    s.add_argument("--linked", action="store_true", help="link the first two seeds")
    s.add_argument("--env", help="environment JSON from gen-env")
    s.add_argument("--iterations", type=int, default=200)
    s.set_defaults(func=cmd_grow)

    s = sub.add_parser("sample", parents=[common], help="sample a labelled point cloud")
    s.add_argument("--mesh", required=True)
    s.add_argument("--genera", type=int, nargs="+", help="per-object genus (default: computed)")
    s.add_argument("-n", type=int, help="point count (default: points_per_cloud)")
    s.set_defaults(func=cmd_sample)

    d = AugmentConfig()
    s = sub.add_parser("augment", parents=[common], help="augment a labelled cloud")
    s.add_argument("--cloud", required=True)
    s.add_argument("--mirror-prob", type=float, default=d.mirror_prob)
    s.add_argument("--rotation-range", type=float, default=d.rotation_range)
    s.add_argument("--scale-range", type=float, nargs=2, default=list(d.scale_range))
    s.add_argument("--shift-range", type=float, default=d.shift_range)
    s.add_argument("--jitter-sigma", type=float, default=d.jitter_sigma)
    s.set_defaults(func=cmd_augment)

    s = sub.add_parser("dataset", parents=[common], help="generate a full dataset with manifest")
    s.add_argument("--workers", type=int)
    s.set_defaults(func=cmd_dataset)

    s = sub.add_parser("verify", parents=[common], help="re-check every stored scene")
    s.add_argument("--manifest", required=True)
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("eval", parents=[common], help="score per-point predictions")
    s.add_argument("--manifest", required=True)
    s.add_argument("--pred", required=True, help="directory of scene_<id>.txt files")
    s.add_argument("--macro", action="store_true", help="average per scene instead of pooling")
    s.add_argument("--miou-over", choices=("gt", "union"), default="gt")
    s.add_argument("--format", choices=("text", "json", "csv"), default="text")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("rips", parents=[common], help="Rips persistence of a small cloud")
    s.add_argument("--cloud", help="CSV whose first three columns are x, y, z")
    s.add_argument("--demo", action="store_true", help="run the shared-Betti demonstration")
    s.add_argument("--subsample", type=int, help="random subset size")
    s.add_argument("--max-points", type=int, default=rips.MAX_POINTS)
    s.add_argument("--r-min", type=float, default=0.0)
    s.add_argument("--r-max", type=float, default=2.5)
    s.add_argument("--steps", type=int, default=51)
    s.set_defaults(func=cmd_rips)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = _load_config(args)
        return args.func(args, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (GenerationError, PlacementError, metrics.MetricsInputError, FileNotFoundError) as exc:
        print(f"failed: {exc}", file=sys.stderr)
        return EXIT_PARTIAL
    except (PreconditionError, TopologyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

if __name__ == "__main__":
    sys.exit(main())
