"""Scene data model: materials, extruded solids, transmitters, radio maps.

A scene is a single rectangular room living inside a fixed 9.6 m x 9.6 m map
frame (32 px x 0.30 m). Walls form a ring of rectangular slabs (openings are
gaps or glass segments in the ring); furniture are extruded simple polygons.
All instances are treated as immutable after construction: perturbation and
generation return new objects rather than editing in place.

Units: meters, radians, dB (path loss is negative at 0 dBm transmit power).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .geometry import ensure_ccw, is_simple_polygon, point_in_polygon

# ---- fixed map frame -------------------------------------------------------

MAP_SIZE = 32                   # radio map is MAP_SIZE x MAP_SIZE pixels
MAP_PIXEL_M = 0.30              # Rx grid step
MAP_EXTENT_M = MAP_SIZE * MAP_PIXEL_M   # 9.6 m frame, rooms placed inside
RX_HEIGHT_M = 1.0
NOISE_FLOOR_DB = -71.0
PL_LO_DB = -71.0                # dataset scaling range for [0,1] mapping
PL_HI_DB = -12.0
OUT_OF_ROOM_SENTINEL = 0.0

MATERIAL_CLASSES = ("free_space", "wood", "metal", "glass", "concrete_drywall")
MATERIAL_CLASS_IDS = {name: i for i, name in enumerate(MATERIAL_CLASSES)}

OBJECT_KINDS = ("wall", "table", "chair", "radiator", "lamp", "cabinet",
                "whiteboard", "other")

# Default per-class electromagnetic parameter ranges (rel. permittivity,
# conductivity S/m). Documented defaults, tunable via GenConfig.
MATERIAL_RANGES = {
    "wood":             {"rel_permittivity": (1.9, 3.0), "conductivity": (0.01, 0.2)},
    "metal":            {"rel_permittivity": (1.0, 1.0), "conductivity": (1e7, 1e7)},
    "glass":            {"rel_permittivity": (5.5, 7.0), "conductivity": (1e-4, 1e-2)},
    "concrete_drywall": {"rel_permittivity": (2.0, 6.0), "conductivity": (0.01, 0.2)},
}

THICKNESS_RANGE_M = (0.001, 1.0)

_EPS = 1e-9


# ---- core records ----------------------------------------------------------

@dataclass(slots=True)
class Material:
    """Homogeneous slab material attached to a solid object."""
    name: str
    category: str               # one of MATERIAL_CLASSES, never free_space on solids
    rel_permittivity: float
    conductivity: float         # S/m
    thickness: float            # slab thickness in meters (penetration model)

    def to_dict(self) -> dict:
        return {"name": self.name, "class": self.category,
                "rel_permittivity": self.rel_permittivity,
                "conductivity": self.conductivity,
                "thickness": self.thickness}

    @staticmethod
    def from_dict(d: dict) -> "Material":
        return Material(d["name"], d["class"], float(d["rel_permittivity"]),
                        float(d["conductivity"]), float(d["thickness"]))


@dataclass(slots=True)
class SceneObject:
    """Simple polygon footprint extruded from z_min to z_max."""
    id: int
    footprint: np.ndarray       # (n, 2) CCW vertices, meters
    z_min: float
    z_max: float
    material: Material
    kind: str                   # one of OBJECT_KINDS

    def __post_init__(self):
        self.footprint = ensure_ccw(np.asarray(self.footprint, dtype=float))

    def to_dict(self) -> dict:
        return {"id": self.id, "footprint": self.footprint.tolist(),
                "z_min": self.z_min, "z_max": self.z_max,
                "material": self.material.to_dict(), "kind": self.kind}

    @staticmethod
    def from_dict(d: dict) -> "SceneObject":
        return SceneObject(int(d["id"]), np.asarray(d["footprint"], dtype=float),
                           float(d["z_min"]), float(d["z_max"]),
                           Material.from_dict(d["material"]), d["kind"])


@dataclass(slots=True)
class Transmitter:
    """Isotropic point source."""
    position: np.ndarray        # (3,) meters
    power_dbm: float = 0.0
    frequency_hz: float = 5.92e9

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float)

    def to_dict(self) -> dict:
        return {"position": self.position.tolist(),
                "power_dbm": self.power_dbm, "frequency_hz": self.frequency_hz}

    @staticmethod
    def from_dict(d: dict) -> "Transmitter":
        return Transmitter(np.asarray(d["position"], dtype=float),
                           float(d.get("power_dbm", 0.0)),
                           float(d.get("frequency_hz", 5.92e9)))


@dataclass(slots=True)
class Scene:
    """One furnished room with its transmitters, inside the fixed map frame."""
    id: str
    bounds: tuple               # (xmin, ymin, xmax, ymax) outer wall extent
    room_height: float
    walls: list                 # SceneObject(kind=wall)
    furniture: list             # SceneObject
    transmitters: list          # Transmitter
    rng_seed: int = 0

    @property
    def objects(self) -> list:
        """All solid objects, walls first."""
        return list(self.walls) + list(self.furniture)

    def interior_bounds(self) -> tuple:
        """Inner rectangle enclosed by the perimeter wall ring.

        A wall slab counts toward a side of the room when it hugs that side of
        `bounds` with its long axis along it; interior partitions (if any) are
        obstacles, not boundary. Empty wall list means the whole bounds are
        interior (free-space scenes).
        """
        xmin, ymin, xmax, ymax = self.bounds
        ix0, iy0, ix1, iy1 = xmin, ymin, xmax, ymax
        for w in self.walls:
            fx = w.footprint[:, 0]
            fy = w.footprint[:, 1]
            dx, dy = fx.max() - fx.min(), fy.max() - fy.min()
            if dy > dx:     # vertical slab: left or right side
                if fx.min() <= xmin + _EPS:
                    ix0 = max(ix0, fx.max())
                if fx.max() >= xmax - _EPS:
                    ix1 = min(ix1, fx.min())
            else:           # horizontal slab: bottom or top side
                if fy.min() <= ymin + _EPS:
                    iy0 = max(iy0, fy.max())
                if fy.max() >= ymax - _EPS:
                    iy1 = min(iy1, fy.min())
        return (ix0, iy0, ix1, iy1)

    def interior_polygon(self) -> np.ndarray:
        ix0, iy0, ix1, iy1 = self.interior_bounds()
        return np.array([[ix0, iy0], [ix1, iy0], [ix1, iy1], [ix0, iy1]])

    def to_dict(self) -> dict:
        return {"id": self.id, "bounds": list(self.bounds),
                "room_height": self.room_height,
                "walls": [w.to_dict() for w in self.walls],
                "furniture": [f.to_dict() for f in self.furniture],
                "transmitters": [t.to_dict() for t in self.transmitters],
                "rng_seed": int(self.rng_seed)}

    @staticmethod
    def from_dict(d: dict) -> "Scene":
        return Scene(id=d["id"], bounds=tuple(float(v) for v in d["bounds"]),
                     room_height=float(d["room_height"]),
                     walls=[SceneObject.from_dict(w) for w in d["walls"]],
                     furniture=[SceneObject.from_dict(f) for f in d["furniture"]],
                     transmitters=[Transmitter.from_dict(t) for t in d["transmitters"]],
                     rng_seed=int(d["rng_seed"]))


def save_scene(scene: Scene, path) -> None:
    with open(path, "w") as fh:
        json.dump(scene.to_dict(), fh, indent=1)


def load_scene(path) -> Scene:
    with open(path) as fh:
        return Scene.from_dict(json.load(fh))


# ---- radio map grid --------------------------------------------------------

@dataclass(slots=True)
class RadioMap:
    """32x32 path-loss grid; values[r, c] sits at (origin + (c, r) * pixel_size)."""
    values: np.ndarray          # (32, 32) dB; OUT_OF_ROOM_SENTINEL where invalid
    valid_mask: np.ndarray      # (32, 32) bool
    origin: np.ndarray          # (2,) x-y of pixel (0, 0) center
    pixel_size: float = MAP_PIXEL_M
    rx_height: float = RX_HEIGHT_M
    map_id: str = ""            # referenced by ObservationSet.source_map_id

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.valid_mask = np.asarray(self.valid_mask, dtype=bool)
        self.origin = np.asarray(self.origin, dtype=float)

    def pixel_centers(self) -> np.ndarray:
        """(32, 32, 2) x-y centers of every pixel."""
        n = self.values.shape[0]
        idx = np.arange(n) * self.pixel_size
        xs = self.origin[0] + idx
        ys = self.origin[1] + idx
        return np.stack(np.meshgrid(xs, ys, indexing="xy"), axis=-1)


def frame_map_origin() -> np.ndarray:
    """Pixel (0,0) center of the fixed 9.6 m map frame anchored at (0, 0)."""
    return np.array([MAP_PIXEL_M / 2, MAP_PIXEL_M / 2])


def empty_map_for_scene(scene: Scene, rx_height: float = RX_HEIGHT_M,
                        map_id: str = "", pixel_size: float = MAP_PIXEL_M) -> RadioMap:
    """Sentinel-filled map over the frame with validity = pixel center in room interior."""
    rm = RadioMap(values=np.full((MAP_SIZE, MAP_SIZE), OUT_OF_ROOM_SENTINEL),
                  valid_mask=np.zeros((MAP_SIZE, MAP_SIZE), dtype=bool),
                  origin=np.array([pixel_size / 2, pixel_size / 2]),
                  pixel_size=pixel_size, rx_height=rx_height, map_id=map_id)
    ix0, iy0, ix1, iy1 = scene.interior_bounds()
    c = rm.pixel_centers()
    rm.valid_mask[:] = ((c[..., 0] > ix0 + _EPS) & (c[..., 0] < ix1 - _EPS)
                        & (c[..., 1] > iy0 + _EPS) & (c[..., 1] < iy1 - _EPS))
    return rm


@dataclass(slots=True)
class ObservationSet:
    """Sparse ground-truth path-loss samples drawn from one map."""
    rows: np.ndarray            # (k,) int pixel rows
    cols: np.ndarray            # (k,) int pixel cols
    values_db: np.ndarray       # (k,) observed path loss
    source_map_id: str = ""

    def __post_init__(self):
        self.rows = np.asarray(self.rows, dtype=int)
        self.cols = np.asarray(self.cols, dtype=int)
        self.values_db = np.asarray(self.values_db, dtype=float)

    def __len__(self) -> int:
        return len(self.rows)

    def positions(self, geom: RadioMap) -> np.ndarray:
        """(k, 2) x-y centers of the observed pixels on the given grid."""
        x = geom.origin[0] + self.cols * geom.pixel_size
        y = geom.origin[1] + self.rows * geom.pixel_size
        return np.stack([x, y], axis=1)


# ---- validation ------------------------------------------------------------

def _z_overlap(a: SceneObject, b: SceneObject) -> bool:
    return min(a.z_max, b.z_max) - max(a.z_min, b.z_min) > _EPS


def _footprint_overlap_area(a: SceneObject, b: SceneObject) -> float:
    # shapely handles non-convex footprints exactly; touching edges give area 0
    from shapely.geometry import Polygon
    pa, pb = Polygon(a.footprint), Polygon(b.footprint)
    if not pa.intersects(pb):
        return 0.0
    return pa.intersection(pb).area


def validate_scene(scene: Scene) -> list:
    """Check every scene invariant; returns human-readable violation strings.

    Empty list means the scene is consistent. Violations are data, not
    exceptions: generators and perturbers use this as their postcondition
    oracle.
    """
    v = []
    xmin, ymin, xmax, ymax = scene.bounds
    if not (xmax > xmin and ymax > ymin):
        v.append("bounds: empty rectangle")
    if xmin < -_EPS or ymin < -_EPS or xmax > MAP_EXTENT_M + _EPS or ymax > MAP_EXTENT_M + _EPS:
        v.append(f"bounds: room {scene.bounds} exceeds the "
                 f"{MAP_EXTENT_M} m map frame")
    if scene.room_height <= 0:
        v.append("room_height: must be positive")

    for obj in scene.objects:
        tag = f"object {obj.id} ({obj.kind})"
        if obj.kind not in OBJECT_KINDS:
            v.append(f"{tag}: unknown kind")
        if not is_simple_polygon(obj.footprint):
            v.append(f"{tag}: footprint not a simple polygon with positive area")
        if not (0.0 <= obj.z_min < obj.z_max <= scene.room_height + _EPS):
            v.append(f"{tag}: z-range [{obj.z_min}, {obj.z_max}] outside "
                     f"[0, {scene.room_height}]")
        m = obj.material
        if m.category == "free_space" or m.category not in MATERIAL_CLASSES:
            v.append(f"{tag}: material class '{m.category}' not allowed on solids")
        if m.rel_permittivity < 1.0:
            v.append(f"{tag}: rel_permittivity {m.rel_permittivity} < 1")
        if m.conductivity < 0.0:
            v.append(f"{tag}: negative conductivity")
        if not (THICKNESS_RANGE_M[0] <= m.thickness <= THICKNESS_RANGE_M[1]):
            v.append(f"{tag}: thickness {m.thickness} outside {THICKNESS_RANGE_M}")

    # pairwise overlap: positive footprint area at overlapping z-ranges
    objs = scene.objects
    for i in range(len(objs)):
        for j in range(i + 1, len(objs)):
            a, b = objs[i], objs[j]
            if not _z_overlap(a, b):
                continue
            ba = a.footprint
            bb = b.footprint
            if (ba[:, 0].max() <= bb[:, 0].min() + _EPS
                    or bb[:, 0].max() <= ba[:, 0].min() + _EPS
                    or ba[:, 1].max() <= bb[:, 1].min() + _EPS
                    or bb[:, 1].max() <= ba[:, 1].min() + _EPS):
                continue
            if _footprint_overlap_area(a, b) > 1e-9:
                v.append(f"objects {a.id} and {b.id}: footprints overlap "
                         f"with positive area at overlapping heights")

    ix0, iy0, ix1, iy1 = scene.interior_bounds()
    for f in scene.furniture:
        fp = f.footprint
        if (fp[:, 0].min() < ix0 - _EPS or fp[:, 0].max() > ix1 + _EPS
                or fp[:, 1].min() < iy0 - _EPS or fp[:, 1].max() > iy1 + _EPS):
            v.append(f"object {f.id} ({f.kind}): footprint protrudes outside "
                     f"the wall interior")

    for k, tx in enumerate(scene.transmitters):
        x, y, z = tx.position
        if not (ix0 + _EPS < x < ix1 - _EPS and iy0 + _EPS < y < iy1 - _EPS):
            v.append(f"transmitter {k}: position outside room interior")
        if not (0.0 < z < scene.room_height):
            v.append(f"transmitter {k}: height {z} outside (0, {scene.room_height})")
        for obj in scene.objects:
            if obj.z_min < z < obj.z_max and point_in_polygon((x, y), obj.footprint):
                v.append(f"transmitter {k}: inside object {obj.id} ({obj.kind})")
        if tx.frequency_hz <= 0:
            v.append(f"transmitter {k}: non-positive frequency")
    return v


# ---- path-loss scaling -----------------------------------------------------

def scale_to_unit(pl_db, lo: float = PL_LO_DB, hi: float = PL_HI_DB):
    """Affine map [lo, hi] dB -> [0, 1]; inputs clamped to the range first."""
    if lo >= hi:
        raise ValueError(f"invalid scaling range: lo={lo} >= hi={hi}")
    x = np.clip(np.asarray(pl_db, dtype=float), lo, hi)
    out = (x - lo) / (hi - lo)
    return float(out) if np.isscalar(pl_db) else out


def unscale_from_unit(u, lo: float = PL_LO_DB, hi: float = PL_HI_DB):
    """Inverse of scale_to_unit on [lo, hi]."""
    if lo >= hi:
        raise ValueError(f"invalid scaling range: lo={lo} >= hi={hi}")
    x = np.asarray(u, dtype=float) * (hi - lo) + lo
    return float(x) if np.isscalar(u) else x


__all__ = [
    "MAP_SIZE", "MAP_PIXEL_M", "MAP_EXTENT_M", "RX_HEIGHT_M",
    "NOISE_FLOOR_DB", "PL_LO_DB", "PL_HI_DB", "OUT_OF_ROOM_SENTINEL",
    "MATERIAL_CLASSES", "MATERIAL_CLASS_IDS", "MATERIAL_RANGES", "OBJECT_KINDS",
    "Material", "SceneObject", "Transmitter", "Scene", "RadioMap",
    "ObservationSet", "save_scene", "load_scene", "frame_map_origin",
    "empty_map_for_scene", "validate_scene", "scale_to_unit", "unscale_from_unit",
]
