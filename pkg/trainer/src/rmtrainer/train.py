"""Training loop: masked MSE on unit-scaled maps, SNDA or clean inputs.

One model is trained across the whole observation-fraction range; the
fraction is redrawn uniformly per sample per epoch. Validation uses fixed
seeded draws so its loss is comparable across epochs; the best-validation
state is what gets checkpointed.
"""

import copy
import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import torch

from .data import TrainingSet
from .model import RadioMapNet, masked_mse
from .tensorio import load_manifest


@dataclass
class TrainConfig:
    encoding: str = "binary"            # must match the dataset's encode config
    use_snda: bool = True
    obs_fraction_range: tuple = (0.0, 0.2)
    learning_rate: float = 1e-4
    max_epochs: int = 200
    batch_size: int = 16
    base_width: int = 16
    augment: bool = True
    early_stop_patience: int = 20
    lr_patience: int = 8
    lr_factor: float = 0.5
    min_lr: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        lo, hi = self.obs_fraction_range
        if not (0.0 <= lo <= hi <= 0.2):
            raise ValueError("obs_fraction_range must be within [0, 0.2]")
        self.obs_fraction_range = (float(lo), float(hi))
        if self.max_epochs < 1 or self.batch_size < 1:
            raise ValueError("max_epochs and batch_size must be >= 1")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        kw = dict(d)
        if "obs_fraction_range" in kw:
            kw["obs_fraction_range"] = tuple(kw["obs_fraction_range"])
        return cls(**kw)


def _batches(dataset, config, rng, train_mode):
    idx = rng.permutation(len(dataset)) if train_mode \
        else np.arange(len(dataset))
    for start in range(0, len(idx), config.batch_size):
        chunk = idx[start:start + config.batch_size]
        xs, ys, ms = zip(*(dataset.fetch(
            i, rng, config.obs_fraction_range,
            augment_flag=train_mode and config.augment) for i in chunk))
        yield (torch.from_numpy(np.stack(xs)),
               torch.from_numpy(np.stack(ys)),
               torch.from_numpy(np.stack(ms)))


def _run_epoch(model, dataset, config, rng, optimizer=None):
    training = optimizer is not None
    model.train(training)
    total, n_px = 0.0, 0
    with torch.set_grad_enabled(training):
        for x, y, m in _batches(dataset, config, rng, training):
            loss = masked_mse(model(x), y, m)
            if training:
                optimizer.zero_grad()
                loss.backward()
                optimizer.step()
            total += float(loss.detach()) * int(m.sum())
            n_px += int(m.sum())
    return total / n_px


def train(dataset_root, config: TrainConfig, out_dir) -> dict:
    """Fit on the train split, select on val, write checkpoint + logs."""
    manifest = load_manifest(dataset_root)
    ds_encoding = manifest["configs"]["encode"]["encoding"]
    if ds_encoding != config.encoding:
        raise ValueError(f"dataset encodes {ds_encoding!r} but config wants "
                         f"{config.encoding!r}")

    torch.manual_seed(config.seed)
    train_set = TrainingSet(dataset_root, "train", config.use_snda,
                            manifest=manifest)
    val_set = TrainingSet(dataset_root, "val", config.use_snda,
                          n_env=train_set.n_env, manifest=manifest)
    model = RadioMapNet(train_set.in_channels, train_set.resolution,
                        config.base_width)
    print(f"model: {model.param_count} parameters, "
          f"{train_set.in_channels} in channels at {train_set.resolution}px; "
          f"{len(train_set)} train / {len(val_set)} val samples")

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "pairing.jsonl", "w") as f:
        for row in train_set.pairing:
            f.write(json.dumps(row) + "\n")

    optimizer = torch.optim.Adam(model.parameters(), lr=config.learning_rate)
    scheduler = torch.optim.lr_scheduler.ReduceLROnPlateau(
        optimizer, factor=config.lr_factor, patience=config.lr_patience,
        min_lr=config.min_lr)

    best_val, best_state, best_epoch = float("inf"), None, -1
    log = []
    for epoch in range(config.max_epochs):
        train_loss = _run_epoch(model, train_set, config,
                                np.random.default_rng([config.seed, epoch]),
                                optimizer)
        # fixed validation draws: same observations every epoch
        val_loss = _run_epoch(model, val_set, config,
                              np.random.default_rng([config.seed, 10 ** 6]))
        scheduler.step(val_loss)
        if val_loss < best_val:
            best_val, best_epoch = val_loss, epoch
            best_state = copy.deepcopy(model.state_dict())
        log.append({"epoch": epoch, "train_loss": train_loss,
                    "val_loss": val_loss,
                    "lr": optimizer.param_groups[0]["lr"],
                    "best": epoch == best_epoch})
        if epoch - best_epoch >= config.early_stop_patience:
            break

    with open(out / "train_log.jsonl", "w") as f:
        for row in log:
            f.write(json.dumps(row) + "\n")
    checkpoint = {
        "state_dict": best_state,
        "config": config.to_dict(),
        "encode": manifest["configs"]["encode"],
        "in_channels": train_set.in_channels,
        "n_env": train_set.n_env,
        "tail_channels": list(train_set.tail_channels),
        "resolution": train_set.resolution,
        "param_count": model.param_count,
        "best_val_loss": best_val,
        "best_epoch": best_epoch,
    }
    torch.save(checkpoint, out / "model.pt")
    return {"checkpoint": str(out / "model.pt"), "epochs_run": len(log),
            "best_epoch": best_epoch, "best_val_loss": best_val,
            "param_count": model.param_count}
