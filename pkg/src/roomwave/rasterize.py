"""Environment encodings: stacked 256x256 rasters at three detail levels.

A pixel is occupied on a slice iff its center lies inside some object
footprint whose [z_min, z_max) half-open span contains the slice height.
Slice heights sit at midpoints of slice_step bins (0.05, 0.15, ... below the
room height), so a slab thinner than one step that straddles no midpoint is
invisible - documented aliasing, not a bug. Tx and observation rasters come
from the 32x32 map grid by 8x8 block upsampling: the Tx marks the block
center pixel with its height in meters, observations fill their whole block
with the unit-scaled path loss.
"""

from dataclasses import dataclass, asdict

import numpy as np

from .scene import (
    MAP_EXTENT_M,
    MAP_PIXEL_M,
    MAP_SIZE,
    MATERIAL_CLASS_IDS,
    ObservationSet,
    RadioMap,
    Scene,
    Transmitter,
    empty_map_for_scene,
    scale_to_unit,
)

ENCODINGS = ("binary", "classes", "material_properties", "no_env")

SIGMA_FLOOR_S_PER_M = 1e-6      # inside log10 for conductivity channels


@dataclass
class EncodeConfig:
    encoding: str = "classes"
    xy_resolution: int = 256
    slice_step_m: float = 0.10
    include_distance_map: bool = True

    def __post_init__(self):
        if self.encoding not in ENCODINGS:
            raise ValueError(f"unknown encoding {self.encoding!r}")
        if self.xy_resolution <= 0 or self.xy_resolution % MAP_SIZE:
            raise ValueError("xy_resolution must be a positive multiple of 32")
        if self.slice_step_m <= 0:
            raise ValueError("slice_step_m must be positive")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(**d)

    def slice_heights(self, room_height: float) -> np.ndarray:
        """Bin midpoints step/2, 3*step/2, ... strictly below room height."""
        n = int(np.ceil(room_height / self.slice_step_m - 0.5))
        return self.slice_step_m * (0.5 + np.arange(max(n, 0)))


@dataclass
class EncodedInput:
    env_channels: np.ndarray    # (n_slices[, 3], R, R); empty for no_env
    tx_onehot: np.ndarray       # (R, R), tx pixel = tx height in m
    distance_map: np.ndarray    # (R, R) meters, or None
    obs_map: np.ndarray         # (R, R), observed blocks = scaled path loss

    def stacked(self) -> np.ndarray:
        """(C, R, R) f32 concatenation in channel-manifest order."""
        r = self.tx_onehot.shape[0]
        env = self.env_channels.reshape(-1, r, r)
        extra = [self.tx_onehot[None], self.obs_map[None]]
        if self.distance_map is not None:
            extra.insert(1, self.distance_map[None])
        return np.concatenate([env] + extra, axis=0).astype(np.float32)

    def channel_names(self, config: "EncodeConfig", room_height: float) -> list:
        names = []
        if config.encoding == "material_properties":
            for h in config.slice_heights(room_height):
                names += [f"eps_r@{h:.2f}m", f"log10_sigma@{h:.2f}m",
                          f"thickness@{h:.2f}m"]
        elif config.encoding != "no_env":
            names += [f"{config.encoding}@{h:.2f}m"
                      for h in config.slice_heights(room_height)]
        names.append("tx_onehot")
        if self.distance_map is not None:
            names.append("distance_2d_m")
        names.append("observations")
        return names


def grid_centers(resolution: int) -> np.ndarray:
    """(R, R, 2) x-y pixel centers over the map frame; row = y, col = x."""
    px = MAP_EXTENT_M / resolution
    idx = px / 2 + px * np.arange(resolution)
    return np.stack(np.meshgrid(idx, idx, indexing="xy"), axis=-1)


def _occupancy(scene: Scene, resolution: int) -> tuple:
    """Per-object boolean masks (one (R,R) each) plus the object list."""
    from .geometry import points_in_polygon

    pts = grid_centers(resolution).reshape(-1, 2)
    objs = scene.objects
    masks = [points_in_polygon(pts, o.footprint).reshape(resolution, resolution)
             for o in objs]
    return masks, objs


def rasterize_slices(scene: Scene, config: EncodeConfig) -> np.ndarray:
    """(n_slices, R, R) env channels; material_properties gives (n, 3, R, R)."""
    r = config.xy_resolution
    heights = config.slice_heights(scene.room_height)
    if config.encoding == "no_env":
        return np.zeros((0, r, r))
    masks, objs = _occupancy(scene, r)

    if config.encoding == "material_properties":
        out = np.zeros((len(heights), 3, r, r))
    else:
        out = np.zeros((len(heights), r, r))
    for si, h in enumerate(heights):
        for m, o in zip(masks, objs):
            if not (o.z_min <= h < o.z_max):
                continue
            if config.encoding == "binary":
                out[si][m] = 1.0
            elif config.encoding == "classes":
                out[si][m] = MATERIAL_CLASS_IDS[o.material.category]
            else:
                out[si, 0][m] = o.material.rel_permittivity
                out[si, 1][m] = np.log10(o.material.conductivity
                                         + SIGMA_FLOOR_S_PER_M)
                out[si, 2][m] = o.material.thickness
    return out


def tx_map_pixel(tx: Transmitter) -> tuple:
    """(row, col) of the 32x32 map pixel containing the Tx."""
    c = int(tx.position[0] // MAP_PIXEL_M)
    r = int(tx.position[1] // MAP_PIXEL_M)
    return (min(max(r, 0), MAP_SIZE - 1), min(max(c, 0), MAP_SIZE - 1))


def encode_sample(scene: Scene, tx: Transmitter, obs: ObservationSet,
                  config: EncodeConfig) -> EncodedInput:
    r = config.xy_resolution
    block = r // MAP_SIZE

    env = rasterize_slices(scene, config)

    tr, tc = tx_map_pixel(tx)
    tx_onehot = np.zeros((r, r))
    # block-center pixel of the Tx's map pixel carries the Tx height
    tx_onehot[tr * block + block // 2, tc * block + block // 2] = tx.position[2]

    distance = None
    if config.include_distance_map:
        centers = grid_centers(r)
        anchor = centers[tr * block + block // 2, tc * block + block // 2]
        distance = np.hypot(centers[..., 0] - anchor[0],
                            centers[..., 1] - anchor[1])

    valid = empty_map_for_scene(scene).valid_mask
    obs_map = np.zeros((r, r))
    for row, col, val in zip(obs.rows, obs.cols, obs.values_db):
        if not valid[row, col]:
            raise ValueError(f"observation at ({row}, {col}) is not a valid "
                             "pixel of the source map")
        obs_map[row * block:(row + 1) * block,
                col * block:(col + 1) * block] = scale_to_unit(val)
    return EncodedInput(env_channels=env, tx_onehot=tx_onehot,
                        distance_map=distance, obs_map=obs_map)


def draw_observations(radio_map: RadioMap, fraction: float,
                      rng_stream) -> ObservationSet:
    """Uniform draw without replacement over valid pixels.

    A full permutation is drawn and a prefix kept, so draws from one stream
    at increasing fractions are nested.
    """
    if not 0.0 <= fraction <= 1.0:
        raise ValueError("fraction must be in [0, 1]")
    rows, cols = np.nonzero(radio_map.valid_mask)
    if rows.size == 0:
        raise ValueError("map has no valid pixels")
    count = int(round(fraction * rows.size))
    order = rng_stream.permutation(rows.size)[:count]
    return ObservationSet(rows=rows[order], cols=cols[order],
                          values_db=radio_map.values[rows[order], cols[order]],
                          source_map_id=radio_map.map_id)
