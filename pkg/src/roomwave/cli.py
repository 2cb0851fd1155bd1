"""Command line front end: gen / perturb / trace / encode / baseline / eval / export."""

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .evaluate import (
    EvalConfig,
    curve_eval,
    make_splits,
    resolve_predictor,
    rmse_db,
    sensitivity_sweep,
    write_report,
)
from .generate import GenConfig, generate_scene
from .io import (
    build_manifest,
    load_manifest,
    load_radio_map,
    save_manifest,
    save_radio_map,
    verify_manifest,
    write_tensor,
)
from .perturb import PerturbConfig, perturb_copies
from .rasterize import EncodeConfig, draw_observations, encode_sample
from .rng import stream
from .scene import ObservationSet, RadioMap, Transmitter, load_scene, save_scene
from .trace import TraceConfig, trace_paths, trace_radio_map


def _load_json(path):
    return json.loads(Path(path).read_text())


def _scene_files(directory):
    files = sorted(Path(directory).glob("*.json"))
    return [f for f in files if not f.name.endswith("manifest.json")
            and not f.name.endswith("warnings.json")]


# ---- subcommands -------------------------------------------------------------------

def cmd_gen(args) -> int:
    cfg = GenConfig.from_dict(_load_json(args.config)) if args.config else GenConfig()
    if args.seed is not None:
        cfg.rng_seed = args.seed
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ids = []
    for i in range(args.count):
        scene = generate_scene(cfg, i)
        save_scene(scene, out / f"{scene.id}.json")
        ids.append(scene.id)
    (out / "gen_manifest.json").write_text(
        json.dumps({"config": cfg.to_dict(), "scenes": ids}, indent=1))
    print(f"wrote {len(ids)} scenes to {out}")
    return 0


def cmd_perturb(args) -> int:
    cfg = PerturbConfig(rng_seed=args.seed, mean_offset_m=args.mean_offset,
                        perturb_targets=frozenset(args.targets.split(",")),
                        copies_per_scene=args.copies)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    warnings, n = [], 0
    for f in _scene_files(args.in_dir):
        scene = load_scene(f)
        for copy in perturb_copies(scene, cfg, warnings):
            save_scene(copy, out / f"{copy.id}.json")
            n += 1
    if warnings:
        with open(out / "perturb_warnings.jsonl", "w") as fh:
            for w in warnings:
                fh.write(json.dumps(w) + "\n")
    print(f"wrote {n} perturbed copies to {out} "
          f"({len(warnings)} fallback warnings)")
    return 0


def cmd_trace(args) -> int:
    cfg = TraceConfig(**_load_json(args.config)) if args.config else TraceConfig()
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    n = 0
    for f in _scene_files(args.scenes):
        scene = load_scene(f)
        if "__c" in scene.id and not args.include_copies:
            continue
        for t, tx in enumerate(scene.transmitters):
            rm = trace_radio_map(scene, tx, cfg)
            rm.map_id = f"{scene.id}__tx{t}"
            save_radio_map(out / f"{rm.map_id}.rmtf", rm,
                           meta={"base_scene_id": scene.id, "tx_index": t,
                                 "tx_position": [float(v) for v in tx.position],
                                 "noise_floor_db": cfg.noise_floor_db,
                                 "frequency_hz": cfg.frequency_hz})
            if args.dump_paths:
                _dump_paths(scene, tx, rm, cfg, out / f"{rm.map_id}.paths.jsonl")
            n += 1
    print(f"wrote {n} radio maps to {out}")
    return 0


def _dump_paths(scene, tx, rm, cfg, path) -> None:
    centers = rm.pixel_centers()
    with open(path, "w") as fh:
        for r, c in np.argwhere(rm.valid_mask):
            rx = np.array([centers[r, c, 0], centers[r, c, 1], cfg.rx_height_m])
            paths = trace_paths(scene, tx, rx, cfg)
            fh.write(json.dumps({
                "row": int(r), "col": int(c), "n_paths": len(paths),
                "paths": [{"length_m": p.total_length_m,
                           "gain_db": 10 * np.log10(max(p.power_gain, 1e-30)),
                           "interactions": p.interactions} for p in paths],
            }) + "\n")


def cmd_encode(args) -> int:
    cfg = EncodeConfig.from_dict(_load_json(args.config)) if args.config \
        else EncodeConfig()
    scene = load_scene(args.scene)
    if args.obs:
        d = _load_json(args.obs)
        obs = ObservationSet(rows=np.asarray(d["rows"], dtype=int),
                             cols=np.asarray(d["cols"], dtype=int),
                             values_db=np.asarray(d["values_db"], dtype=float),
                             source_map_id=d.get("source_map_id", ""))
    else:
        obs = ObservationSet([], [], [], "")
    enc = encode_sample(scene, scene.transmitters[args.tx_index], obs, cfg)
    stacked = enc.stacked()
    write_tensor(args.out, stacked.shape, stacked)
    Path(args.out).with_suffix(".channels.json").write_text(
        json.dumps(enc.channel_names(cfg, scene.room_height)))
    print(f"wrote {stacked.shape} encoding to {args.out}")
    return 0


def cmd_baseline(args) -> int:
    fractions = [float(f) for f in args.fractions.split(",")]
    predictor = resolve_predictor(args.method)
    maps = sorted(Path(args.maps).glob("*.rmtf"))
    if not maps:
        print(f"no .rmtf maps under {args.maps}", file=sys.stderr)
        return 2

    rows = []
    for fraction in fractions:
        errs, failures = [], 0
        for map_path in maps:
            gt = load_radio_map(map_path)
            scene, tx_index = _scene_for_map(map_path)
            for k in range(args.seeds):
                rng = stream(args.seed, "obs", gt.map_id, k)
                obs = draw_observations(gt, fraction, rng)
                try:
                    pred = predictor(scene, tx_index, obs)
                    errs.append(rmse_db(pred, gt))
                except (ValueError, RuntimeError, np.linalg.LinAlgError):
                    failures += 1
        e = np.asarray(errs)
        rows.append({"method": args.method, "fraction": fraction,
                     "mean_rmse_db": float(np.mean(e)) if e.size else None,
                     "std_rmse_db": float(np.std(e)) if e.size else None,
                     "n": int(e.size), "failures": failures})
    report = {"experiment": "baseline", "maps": len(maps),
              "seeds": args.seeds, "rows": rows}
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    Path(args.out).write_text(json.dumps(report, indent=1))
    for row in rows:
        print(f"{args.method} @ {row['fraction']:.2%}: "
              f"mean {row['mean_rmse_db']} dB over {row['n']} runs "
              f"({row['failures']} failures)")
    return 0


def _scene_for_map(map_path):
    """Baseline predictors need geometry + Tx; both live in the map sidecar.

    A sibling scene JSON (dataset layout) is preferred; otherwise a minimal
    wall-less scene is reconstructed from the map's own extent and the stored
    Tx position, which is all FSPL and the interpolators look at.
    """
    from .scene import Scene

    side = _load_json(Path(map_path).with_suffix(".json"))
    base = side.get("base_scene_id")
    if base:
        for candidate in (Path(map_path).parent.parent / "scenes" / f"{base}.json",
                          Path(map_path).parent / f"{base}.json"):
            if candidate.exists():
                return load_scene(candidate), side.get("tx_index", 0)
    if "tx_position" not in side:
        raise ValueError(f"{map_path}: sidecar lacks tx_position and no scene "
                         "JSON found")
    rm = load_radio_map(map_path)
    rows, cols = np.nonzero(rm.valid_mask)
    c = rm.pixel_centers()
    half = rm.pixel_size / 2
    bounds = (c[0, cols.min(), 0] - half, c[rows.min(), 0, 1] - half,
              c[0, cols.max(), 0] + half, c[rows.max(), 0, 1] + half)
    tx = Transmitter(position=np.asarray(side["tx_position"], dtype=float),
                     frequency_hz=side.get("frequency_hz", 5.92e9))
    return Scene(id=base or rm.map_id, bounds=bounds, room_height=3.0,
                 walls=[], furniture=[], transmitters=[tx]), 0


def cmd_eval(args) -> int:
    manifest = load_manifest(args.dataset)
    cfg = EvalConfig.from_dict(_load_json(args.config)) if args.config \
        else EvalConfig()
    if not manifest.splits:
        manifest.splits = make_splits(manifest, cfg.rng_seed)
        save_manifest(manifest)
        print("attached fresh 80/10/10 splits to manifest")
    try:
        predictor = resolve_predictor(args.predictor)
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    runner = sensitivity_sweep if args.mode == "sweep" else curve_eval
    report = runner(predictor, manifest, cfg)
    report["predictor"] = args.predictor
    write_report(report, args.out)
    for row in report["rows"]:
        cell = " ".join(f"{k}={row[k]}" for k in row
                        if k not in ("mean_rmse_db", "std_rmse_db", "n"))
        print(f"{cell}: mean {row['mean_rmse_db']} dB (n={row['n']})")
    print(f"report written to {args.out}")
    return 0


def cmd_export(args) -> int:
    root = Path(args.dataset)
    manifest = build_manifest(root)
    existing = root / "manifest.json"
    if existing.exists():
        manifest.splits = json.loads(existing.read_text()).get("splits", {})
    save_manifest(manifest)
    print(f"manifest: {len(manifest.samples)} samples")
    if args.check:
        violations = verify_manifest(manifest)
        for v in violations:
            print(f"violation: {v}")
        print(f"check: {len(violations)} violations")
        return 1 if violations else 0
    return 0


# ---- parser ------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="roomwave",
        description="indoor radio-map dataset synthesis and evaluation")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate procedural scenes")
    g.add_argument("--config", help="GenConfig JSON")
    g.add_argument("--count", type=int, required=True)
    g.add_argument("--out-dir", required=True)
    g.add_argument("--seed", type=int, default=None)
    g.set_defaults(func=cmd_gen)

    q = sub.add_parser("perturb", help="write noisy copies of scenes")
    q.add_argument("--in-dir", required=True)
    q.add_argument("--mean-offset", type=float, default=0.5)
    q.add_argument("--targets", default="tx,objects,materials")
    q.add_argument("--copies", type=int, default=10)
    q.add_argument("--out-dir", required=True)
    q.add_argument("--seed", type=int, default=0)
    q.set_defaults(func=cmd_perturb)

    t = sub.add_parser("trace", help="trace ground-truth radio maps")
    t.add_argument("--scenes", required=True)
    t.add_argument("--config", help="TraceConfig JSON")
    t.add_argument("--out-dir", required=True)
    t.add_argument("--dump-paths", action="store_true",
                   help="write per-pixel path lists as JSON lines")
    t.add_argument("--include-copies", action="store_true",
                   help="also trace perturbed copies (ground truth normally "
                        "comes from clean scenes)")
    t.set_defaults(func=cmd_trace)

    e = sub.add_parser("encode", help="rasterize one scene into input tensors")
    e.add_argument("--scene", required=True)
    e.add_argument("--tx-index", type=int, default=0)
    e.add_argument("--config", help="EncodeConfig JSON")
    e.add_argument("--obs", help="observation JSON {rows, cols, values_db}")
    e.add_argument("--out", required=True)
    e.set_defaults(func=cmd_encode)

    b = sub.add_parser("baseline", help="run interpolation baselines on maps")
    b.add_argument("--method", choices=("fspl", "grbf", "tps"), required=True)
    b.add_argument("--maps", required=True)
    b.add_argument("--fractions", default="0.01,0.02,0.04,0.08")
    b.add_argument("--seeds", type=int, default=3,
                   help="observation draws per map per fraction")
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--out", required=True)
    b.set_defaults(func=cmd_baseline)

    v = sub.add_parser("eval", help="full evaluation harness over a dataset")
    v.add_argument("--predictor", required=True,
                   help="fspl | grbf | tps | cnn:PATH | noenv-cnn:PATH")
    v.add_argument("--dataset", required=True)
    v.add_argument("--config", help="EvalConfig JSON")
    v.add_argument("--mode", choices=("curve", "sweep"), default="curve")
    v.add_argument("--out", required=True)
    v.set_defaults(func=cmd_eval)

    x = sub.add_parser("export", help="rebuild and optionally verify a manifest")
    x.add_argument("--dataset", required=True)
    x.add_argument("--check", action="store_true")
    x.set_defaults(func=cmd_export)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
