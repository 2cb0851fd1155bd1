"""Checkpoint loading and inference back to dB maps.

Raw network outputs are unit-scaled; predictions are mapped back through the
inverse of the dataset scaling (which also clamps them to the path-loss
range) and invalid pixels are set to the out-of-room sentinel.
"""

import numpy as np
import torch

from .data import (env_channel_count, los_blockage, normalize_channels,
                   observation_fill, observation_mask, pad_env)
from .model import RadioMapNet
from .tensorio import OUT_OF_ROOM_SENTINEL, scale_to_unit, unscale_from_unit


def load_checkpoint(path) -> tuple:
    """(model in eval mode, checkpoint metadata)."""
    ckpt = torch.load(path, map_location="cpu", weights_only=False)
    model = RadioMapNet(ckpt["in_channels"], ckpt["resolution"],
                        ckpt["config"]["base_width"])
    model.load_state_dict(ckpt["state_dict"])
    model.eval()
    return model, ckpt


def prepare_input(x, names, ckpt, drop_env=False, obs=None) -> np.ndarray:
    """Normalize, pad and order a raw encoding for a given checkpoint.

    obs is the (rows, cols, values_db) triple the stored observation channel
    was painted from; the derived channels (mask, IDW fill, nearest-obs
    distance, LOS blockage) are computed here, and an omitted obs means an
    empty observation set. drop_env zeroes the environment block before the
    blockage ray-march, presenting the model a geometry-free view; for a
    model trained on the no_env encoding this is a no-op since the block is
    empty.
    """
    x = np.array(x, dtype=np.float32)
    if x.shape[0] != len(names):
        raise ValueError(f"{x.shape[0]} channels vs {len(names)} names")
    if x.shape[-1] != ckpt["resolution"]:
        raise ValueError(f"encoding at {x.shape[-1]}px, checkpoint expects "
                         f"{ckpt['resolution']}px")
    n_env = env_channel_count(names)
    if names[n_env:] != list(ckpt["tail_channels"]):
        raise ValueError(f"tail channels {names[n_env:]} do not match "
                         f"checkpoint {ckpt['tail_channels']}")
    normalize_channels(x, names)
    if drop_env:
        x[:n_env] = 0.0
    blockage = los_blockage(x, list(names))
    x = pad_env(x, n_env, ckpt["n_env"])
    rows, cols, values_db = obs if obs is not None else ([], [], [])
    resolution = x.shape[-1]
    fill, dist = observation_fill(rows, cols, scale_to_unit(values_db),
                                  resolution)
    x = np.concatenate([x, observation_mask(rows, cols, resolution)[None],
                        fill[None], dist[None], blockage[None]])
    if x.shape[0] != ckpt["in_channels"]:
        raise ValueError(f"{x.shape[0]} channels after padding, checkpoint "
                         f"expects {ckpt['in_channels']}")
    return x


def predict_unit(model, x) -> np.ndarray:
    """(32, 32) raw sigmoid output for one prepared encoding."""
    with torch.no_grad():
        out = model(torch.from_numpy(np.ascontiguousarray(x))[None])
    return out[0].numpy().astype(float)


def predict_db(model, x, valid_mask) -> np.ndarray:
    """(32, 32) path loss in dB, sentinel outside the valid mask."""
    db = unscale_from_unit(predict_unit(model, x))
    return np.where(valid_mask, db, OUT_OF_ROOM_SENTINEL)
