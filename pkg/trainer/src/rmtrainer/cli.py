"""rmtrainer command line: train on a dataset directory, predict one sample."""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .data import draw_observation_pixels, paint_observations
from .predict import load_checkpoint, predict_db, prepare_input
from .tensorio import load_channels, load_encoding, load_manifest, load_map, save_map
from .train import TrainConfig, train


def cmd_train(args) -> int:
    cfg = TrainConfig.from_dict(json.loads(Path(args.config).read_text())) \
        if args.config else TrainConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    summary = train(args.dataset, cfg, args.out)
    print(f"best val loss {summary['best_val_loss']:.5f} at epoch "
          f"{summary['best_epoch']} ({summary['epochs_run']} run); "
          f"checkpoint {summary['checkpoint']}")
    return 0


def cmd_predict(args) -> int:
    manifest = load_manifest(args.dataset)
    root = manifest["root"]
    rec = next((r for r in manifest["samples"]
                if Path(r["encoding_path"]).stem == args.sample), None)
    if rec is None:
        print(f"no sample {args.sample!r} in manifest", file=sys.stderr)
        return 2
    model, ckpt = load_checkpoint(args.ckpt)

    x = load_encoding(root, rec).astype(np.float32)
    names = load_channels(root, rec)
    values, valid = load_map(root, rec)
    rows, cols = np.array([], dtype=int), np.array([], dtype=int)
    if args.fraction > 0.0:
        rng = np.random.default_rng(args.obs_seed)
        rows, cols = draw_observation_pixels(valid, args.fraction, rng)
        paint_observations(x, rows, cols, values[rows, cols])
    x = prepare_input(x, names, ckpt, drop_env=args.drop_env,
                      obs=(rows, cols, values[rows, cols]))
    pred = predict_db(model, x, valid)

    side = json.loads((Path(root) / rec["map_path"])
                      .with_suffix(".json").read_text())
    side.update({"map_id": f"{args.sample}__pred",
                 "predicted_from": args.sample,
                 "obs_fraction": args.fraction})
    save_map(args.out, pred, meta=side)
    err = float(np.sqrt(np.mean((pred[valid] - values[valid]) ** 2)))
    print(f"wrote {args.out}; RMSE vs ground truth {err:.2f} dB "
          f"at {args.fraction:.0%} observations")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="rmtrainer", description="train/apply radio-map CNN predictors")
    sub = parser.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("train", help="train on a dataset directory")
    p.add_argument("--dataset", required=True)
    p.add_argument("--config", help="TrainConfig JSON")
    p.add_argument("--out", required=True, help="checkpoint directory")
    p.add_argument("--seed", type=int)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("predict", help="predict one dataset sample")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--sample", required=True,
                   help="encoding stem, e.g. scene_00003__tx1__clean")
    p.add_argument("--dataset", required=True)
    p.add_argument("--fraction", type=float, default=0.0,
                   help="observation fraction drawn from the clean map")
    p.add_argument("--obs-seed", type=int, default=0)
    p.add_argument("--drop-env", action="store_true",
                   help="zero the environment channels")
    p.add_argument("--out", required=True, help="output .rmtf path")
    p.set_defaults(fn=cmd_predict)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
