"""In-memory training set over a dataset directory.

Samples pair a stored environment encoding (C, R, R) with the clean traced
map of the same room and transmitter, in [0, 1] scale. Under SNDA the inputs
come from the perturbed copies (copy_index >= 0) while targets stay clean;
otherwise only clean encodings are used.

Environment channel counts vary with room height (one occupancy slice per
height bin), so the env block is zero-padded on the right to a fixed count
shared by the whole set; tail channels (tx, distance, observations) keep
their order. The stored observation channel is all zeros and is painted per
draw: each observed map pixel fills its (R/32)^2 block with the unit-scaled
path loss, the same convention the encoder uses.

Four derived channels are appended after the stored layout. A 0/1
observation mask painted from the drawn pixel list: scaled path loss uses
0.0 both for "unobserved" and "observed at the noise floor", and the mask
breaks that tie. A dense inverse-distance-weighted fill of the observed
values, which hands the net a crude interpolant to correct instead of
asking convolutions to learn long-range interpolation from sparse pixels.
The distance to the nearest observation, so the net can gate how far to
trust the fill. And a line-of-sight blockage map ray-marched through the
occupancy slices near receiver height, which spells out the causal
obstruction-implies-shadow structure that small training sets never teach
convolutions on their own.
"""

import numpy as np

from .tensorio import (
    MAP_SIZE,
    load_channels,
    load_encoding,
    load_manifest,
    load_map,
    scale_to_unit,
)

MAP_EXTENT_M = 9.6
TAIL_CHANNELS = ("tx_onehot", "distance_2d_m", "observations")


def env_channel_count(names) -> int:
    """Channels before the tx marker are environment slices."""
    return names.index("tx_onehot")


def normalize_channels(x, names) -> np.ndarray:
    # only the distance map is far from O(1); keep everything else raw
    if "distance_2d_m" in names:
        x[names.index("distance_2d_m")] /= MAP_EXTENT_M
    return x


def pad_env(x, n_env_have, n_env_want) -> np.ndarray:
    """Zero-pad or truncate the env block to a fixed channel count."""
    if n_env_have == n_env_want:
        return x
    tail = x[n_env_have:]
    env = x[:min(n_env_have, n_env_want)]
    pad = np.zeros((n_env_want - env.shape[0], *x.shape[1:]), dtype=x.dtype)
    return np.concatenate([env, pad, tail], axis=0)


def paint_observations(x, rows, cols, values_db) -> None:
    """Fill observed pixels' blocks in the last channel, in place."""
    block = x.shape[-1] // MAP_SIZE
    obs = x[-1]
    obs[:] = 0.0
    scaled = scale_to_unit(values_db)
    for r, c, v in zip(rows, cols, np.atleast_1d(scaled)):
        obs[r * block:(r + 1) * block, c * block:(c + 1) * block] = v


def observation_fill(rows, cols, values_unit, resolution) -> tuple:
    """Dense IDW interpolant of the observed values + nearest-obs distance.

    Returns (fill, dist), both (R, R) float32; fill is an inverse-square
    Shepard blend over the observed pixels' block centers, dist is the
    distance to the nearest observation as a fraction of the map extent.
    With no observations the fill is zero and the distance saturates at 1.
    """
    if len(rows) == 0:
        return (np.zeros((resolution, resolution), dtype=np.float32),
                np.ones((resolution, resolution), dtype=np.float32))
    block = resolution // MAP_SIZE
    pr = (np.asarray(rows, dtype=float) + 0.5) * block
    pc = (np.asarray(cols, dtype=float) + 0.5) * block
    g = np.arange(resolution, dtype=float) + 0.5
    d2 = ((g[None, :, None] - pr[:, None, None]) ** 2
          + (g[None, None, :] - pc[:, None, None]) ** 2)
    d2 = np.maximum(d2, 0.25)       # quarter-pixel floor keeps weights finite
    w = 1.0 / d2
    v = np.asarray(values_unit, dtype=float)
    fill = (w * v[:, None, None]).sum(axis=0) / w.sum(axis=0)
    dist = np.minimum(np.sqrt(d2.min(axis=0)) / resolution, 1.0)
    return fill.astype(np.float32), dist.astype(np.float32)


def observation_mask(rows, cols, resolution) -> np.ndarray:
    """(R, R) 0/1 mask with the observed pixels' blocks set."""
    block = resolution // MAP_SIZE
    mask = np.zeros((resolution, resolution), dtype=np.float32)
    for r, c in zip(rows, cols):
        mask[r * block:(r + 1) * block, c * block:(c + 1) * block] = 1.0
    return mask


def slice_heights(names) -> list:
    """Heights in meters parsed from the env channels' "...@1.25m" suffixes."""
    return [float(n.split("@", 1)[1].rstrip("m"))
            for n in names[:env_channel_count(names)]]


def los_blockage(x, names) -> np.ndarray:
    """(R, R) fraction of the straight path to the Tx crossing occupied cells.

    Occupancy is any nonzero env value in the slices within 0.5 m of the
    1.0 m receiver height (nearest slice as a fallback); the Tx pixel comes
    from the one-hot channel. Rays are sampled once per pixel step with
    nearest-neighbor lookup. Zeros when there are no env slices or no Tx.
    """
    resolution = x.shape[-1]
    heights = slice_heights(names)
    sel = [i for i, h in enumerate(heights) if abs(h - 1.0) <= 0.5]
    if not sel and heights:
        sel = [min(range(len(heights)), key=lambda i: abs(heights[i] - 1.0))]
    tx = x[list(names).index("tx_onehot")]
    if not sel or not tx.any():
        return np.zeros((resolution, resolution), dtype=np.float32)
    occ = (x[sel] != 0).any(axis=0)
    tr, tc = np.unravel_index(int(np.argmax(tx)), tx.shape)
    g = np.arange(resolution, dtype=float) + 0.5
    pr = np.repeat(g, resolution)
    pc = np.tile(g, resolution)
    t = np.arange(1, resolution, dtype=float)[None, :] / resolution
    # sample coordinates stay inside [0, R), so truncation is a floor
    sr = (pr[:, None] + (tr + 0.5 - pr[:, None]) * t).astype(np.intp)
    sc = (pc[:, None] + (tc + 0.5 - pc[:, None]) * t).astype(np.intp)
    return occ[sr, sc].mean(axis=1).reshape(
        resolution, resolution).astype(np.float32)


def draw_observation_pixels(valid_mask, fraction, rng) -> tuple:
    """(rows, cols) of a permutation prefix over valid pixels."""
    rows, cols = np.nonzero(valid_mask)
    count = int(round(fraction * rows.size))
    order = rng.permutation(rows.size)[:count]
    return rows[order], cols[order]


def augment(x, y, mask, rng) -> tuple:
    """Random 90-degree rotation + flip, identical on inputs and target."""
    k = int(rng.integers(4))
    if k:
        x = np.rot90(x, k, axes=(1, 2))
        y = np.rot90(y, k)
        mask = np.rot90(mask, k)
    if rng.integers(2):
        x = x[:, ::-1]
        y = y[::-1]
        mask = mask[::-1]
    return np.ascontiguousarray(x), np.ascontiguousarray(y), \
        np.ascontiguousarray(mask)


class TrainingSet:
    """Cached (encoding, target, mask) triples for one split."""

    def __init__(self, root, split, use_snda, n_env=None, manifest=None):
        manifest = manifest or load_manifest(root)
        if not manifest.get("splits"):
            raise ValueError("manifest has no splits")
        if split not in manifest["splits"]:
            raise ValueError(f"unknown split {split!r}")
        bases = set(manifest["splits"][split])
        want = (lambda c: c >= 0) if use_snda else (lambda c: c == -1)
        records = sorted(
            (r for r in manifest["samples"]
             if r["base_scene_id"] in bases and want(r["copy_index"])),
            key=lambda r: (r["base_scene_id"], r["tx_index"], r["copy_index"]))
        if not records:
            raise ValueError(f"no {'noisy' if use_snda else 'clean'} samples "
                             f"in split {split!r}")

        self.root = manifest["root"]
        self.split = split
        self.use_snda = use_snda
        self.inputs, self.targets, self.masks = [], [], []
        self.blockage, self.pairing = [], []
        env_counts = []
        tail = None
        for rec in records:
            names = load_channels(self.root, rec)
            x = load_encoding(self.root, rec).astype(np.float32)
            if x.shape[0] != len(names):
                raise ValueError(f"{rec['encoding_path']}: {x.shape[0]} "
                                 f"channels vs {len(names)} names")
            n_rec = env_channel_count(names)
            if tail is None:
                tail = tuple(names[n_rec:])
            elif tuple(names[n_rec:]) != tail:
                raise ValueError(f"{rec['encoding_path']}: tail channels "
                                 f"{names[n_rec:]} != {list(tail)}")
            normalize_channels(x, names)
            values, valid = load_map(self.root, rec)
            env_counts.append(n_rec)
            self.inputs.append((x, n_rec))
            # observation-independent, so computed once per sample
            self.blockage.append(los_blockage(x, names))
            self.targets.append(scale_to_unit(values).astype(np.float32))
            self.masks.append(valid)
            self.pairing.append({
                "input": rec["encoding_path"], "target": rec["map_path"],
                "copy_index": rec["copy_index"]})

        self.n_env = max(env_counts) if n_env is None else n_env
        self.tail_channels = tail
        self.resolution = self.inputs[0][0].shape[-1]
        # stored layout + derived obs mask, IDW fill, nearest-obs
        # distance, LOS blockage
        self.in_channels = self.n_env + len(tail) + 4

    def __len__(self):
        return len(self.inputs)

    def fetch(self, idx, rng, obs_fraction_range, augment_flag=True) -> tuple:
        """One (x, y, mask) draw: pad, paint observations, maybe augment."""
        x, n_env = self.inputs[idx]
        x = pad_env(x.copy(), n_env, self.n_env)
        y, m = self.targets[idx], self.masks[idx]
        lo, hi = obs_fraction_range
        fraction = float(rng.uniform(lo, hi))
        rows, cols = draw_observation_pixels(m, fraction, rng)
        # paint from the target, which is already unit-scaled
        block = self.resolution // MAP_SIZE
        for r, c in zip(rows, cols):
            x[-1, r * block:(r + 1) * block, c * block:(c + 1) * block] = y[r, c]
        fill, dist = observation_fill(rows, cols, y[rows, cols],
                                      self.resolution)
        x = np.concatenate(
            [x, observation_mask(rows, cols, self.resolution)[None],
             fill[None], dist[None], self.blockage[idx][None]], axis=0)
        if augment_flag:
            return augment(x, y, m, rng)
        return x, y.copy(), m.copy()
