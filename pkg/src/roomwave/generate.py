"""Procedural generation of randomized furnished rooms with Tx placements.

Rooms are rectangular wall rings placed at a seeded offset inside the fixed
9.6 m map frame. Furniture is placed by rejection sampling (per-object retry
budget, then whole-scene restarts); chairs may snap to tables, radiators and
whiteboards mount on walls, lamps hang from the ceiling. Every emitted scene
passes validate_scene. Generation is a pure function of (config, index).
"""

from dataclasses import dataclass, field, asdict

import numpy as np

from .geometry import (
    convex_polygons_overlap,
    point_in_polygon,
    point_polygon_distance,
    rect_footprint,
)
from .rng import derive_seed, stream
from .scene import (
    MAP_EXTENT_M,
    MATERIAL_RANGES,
    Material,
    Scene,
    SceneObject,
    Transmitter,
    validate_scene,
)


class GenerationError(RuntimeError):
    """Placement retry budgets exhausted; .kind names the failing object."""

    def __init__(self, kind, message):
        super().__init__(message)
        self.kind = kind


# footprint dims in meters: (width_range, depth_range, height_range),
# mount: floor | wall | ceiling; z_base lifts the slab off the floor (table
# tops ride above chair seats so chairs tuck under without collision);
# weight: sampling probability mass
DEFAULT_CATALOG = {
    "table":      {"width": (0.8, 2.0), "depth": (0.6, 1.2), "height": (0.05, 0.10),
                   "z_base": (0.62, 0.68),
                   "materials": ("wood",), "mount": "floor", "weight": 0.24},
    "chair":      {"width": (0.40, 0.55), "depth": (0.40, 0.55), "height": (0.40, 0.48),
                   "materials": ("wood", "metal"), "mount": "floor", "weight": 0.22},
    "cabinet":    {"width": (0.6, 1.2), "depth": (0.3, 0.6), "height": (1.2, 2.1),
                   "materials": ("wood", "metal"), "mount": "floor", "weight": 0.22},
    "radiator":   {"width": (0.6, 1.6), "depth": (0.06, 0.12), "height": (0.4, 0.9),
                   "materials": ("metal",), "mount": "wall", "weight": 0.06},
    "lamp":       {"width": (0.15, 0.40), "depth": (0.15, 0.40), "height": (0.04, 0.25),
                   "materials": ("metal", "glass"), "mount": "ceiling", "weight": 0.20},
    "whiteboard": {"width": (1.0, 2.0), "depth": (0.02, 0.05), "height": (0.9, 1.2),
                   "materials": ("wood", "metal"), "mount": "wall", "weight": 0.06},
}

_WALL_GAP_M = 0.02          # standoff between wall face and mounted furniture
_CHAIR_GAP_M = 0.05
_DOOR_WIDTH_M = 0.9
_PANEL_THICKNESS_M = (0.01, 0.05)


@dataclass
class GenConfig:
    rng_seed: int = 0
    room_width_range: tuple = (4.0, 9.6)
    room_depth_range: tuple = (4.0, 9.6)
    room_height_range: tuple = (2.5, 3.2)
    wall_thickness_range: tuple = (0.1, 0.3)
    furniture_count_range: tuple = (3, 12)
    tx_per_scene: int = 5
    tx_height_range: tuple = (1.0, 2.2)
    tx_margin_m: float = 0.1
    object_retry_budget: int = 200
    scene_retry_budget: int = 20
    door_probability: float = 0.7
    window_probability: float = 0.5
    object_catalog: dict = field(default_factory=lambda: {
        k: dict(v) for k, v in DEFAULT_CATALOG.items()})
    material_ranges: dict = field(default_factory=lambda: {
        k: {p: tuple(r) for p, r in v.items()} for k, v in MATERIAL_RANGES.items()})

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        kw = dict(d)
        for key in ("room_width_range", "room_depth_range", "room_height_range",
                    "wall_thickness_range", "furniture_count_range",
                    "tx_height_range"):
            if key in kw:
                kw[key] = tuple(kw[key])
        return cls(**kw)


class _Retry(Exception):
    def __init__(self, kind):
        self.kind = kind


def _sample_material(rng, cls, thickness, ranges):
    lo_e, hi_e = ranges[cls]["rel_permittivity"]
    lo_s, hi_s = ranges[cls]["conductivity"]
    return Material(name=cls, category=cls,
                    rel_permittivity=float(rng.uniform(lo_e, hi_e)),
                    conductivity=float(rng.uniform(lo_s, hi_s)),
                    thickness=float(thickness))


def _wall_ring(rng, bounds, h, t, cfg):
    """Perimeter slabs; one wall may get a door gap, one a glass panel."""
    x0, y0, x1, y1 = bounds
    mat = _sample_material(rng, "concrete_drywall", t, cfg.material_ranges)
    # side -> (axis-aligned slab rect, long axis)
    sides = {
        "s": (x0, y0, x1, y0 + t, "x"),
        "n": (x0, y1 - t, x1, y1, "x"),
        "w": (x0, y0 + t, x0 + t, y1 - t, "y"),
        "e": (x1 - t, y0 + t, x1, y1 - t, "y"),
    }
    door_side = rng.choice(list(sides)) if rng.uniform() < cfg.door_probability else None
    win_side = rng.choice(list(sides)) if rng.uniform() < cfg.window_probability else None
    if win_side == door_side:
        win_side = None

    objs = []
    next_id = 0

    def rect_obj(a0, b0, a1, b1, material):
        nonlocal next_id
        fp = np.array([[a0, b0], [a1, b0], [a1, b1], [a0, b1]], dtype=float)
        objs.append(SceneObject(next_id, fp, 0.0, h, material, "wall"))
        next_id += 1

    for side, (a0, b0, a1, b1, axis) in sides.items():
        lo, hi = (a0, a1) if axis == "x" else (b0, b1)
        spans = [(lo, hi)]
        cut = None
        if side == door_side and hi - lo > _DOOR_WIDTH_M + 1.0:
            c = rng.uniform(lo + 0.5 + _DOOR_WIDTH_M / 2, hi - 0.5 - _DOOR_WIDTH_M / 2)
            cut = (c - _DOOR_WIDTH_M / 2, c + _DOOR_WIDTH_M / 2, None)
        elif side == win_side and hi - lo > 3.0:
            w = rng.uniform(1.0, 2.0)
            c = rng.uniform(lo + 0.5 + w / 2, hi - 0.5 - w / 2)
            glass = _sample_material(
                rng, "glass", rng.uniform(*_PANEL_THICKNESS_M), cfg.material_ranges)
            cut = (c - w / 2, c + w / 2, glass)
        if cut is not None:
            g0, g1, fill = cut
            spans = [(lo, g0), (g1, hi)]
            if fill is not None:
                spans.insert(1, None)  # placeholder keeps seam order stable
                if axis == "x":
                    rect_obj(g0, b0, g1, b1, fill)
                else:
                    rect_obj(a0, g0, a1, g1, fill)
                spans.remove(None)
        for s0, s1 in spans:
            if s1 - s0 < 1e-6:
                continue
            if axis == "x":
                rect_obj(s0, b0, s1, b1, mat)
            else:
                rect_obj(a0, s0, a1, s1, mat)
    return objs, next_id


def _fits(fp, z0, z1, interior, placed):
    x0, y0, x1, y1 = interior
    if (fp[:, 0] < x0 - 1e-9).any() or (fp[:, 0] > x1 + 1e-9).any() \
            or (fp[:, 1] < y0 - 1e-9).any() or (fp[:, 1] > y1 + 1e-9).any():
        return False
    for other in placed:
        if z1 <= other.z_min + 1e-9 or z0 >= other.z_max - 1e-9:
            continue
        if convex_polygons_overlap(fp, other.footprint):
            return False
    return True


def _place_one(rng, kind, spec, interior, room_h, placed, cfg, next_id):
    """One furniture piece (plus snapped chairs for tables). Returns objects."""
    ix0, iy0, ix1, iy1 = interior
    hint = spec.get("mount", "floor")
    for _ in range(cfg.object_retry_budget):
        w = rng.uniform(*spec["width"])
        d = rng.uniform(*spec["depth"])
        hgt = rng.uniform(*spec["height"])
        mat_cls = spec["materials"][rng.integers(0, len(spec["materials"]))]
        mat = _sample_material(rng, mat_cls, rng.uniform(*_PANEL_THICKNESS_M),
                               cfg.material_ranges)

        if hint == "wall":
            side = ("s", "n", "w", "e")[rng.integers(0, 4)]
            off = _WALL_GAP_M + d / 2
            if side in ("s", "n"):
                if ix1 - ix0 < w + 0.2:
                    continue
                cx = rng.uniform(ix0 + w / 2 + 0.05, ix1 - w / 2 - 0.05)
                cy = iy0 + off if side == "s" else iy1 - off
                ang = 0.0
            else:
                if iy1 - iy0 < w + 0.2:
                    continue
                cy = rng.uniform(iy0 + w / 2 + 0.05, iy1 - w / 2 - 0.05)
                cx = ix0 + off if side == "w" else ix1 - off
                ang = np.pi / 2
            if kind == "whiteboard":
                z0 = rng.uniform(0.8, 1.0)
            elif kind == "radiator":
                z0 = rng.uniform(0.08, 0.15)
            else:
                z0 = 0.0
            z1 = min(z0 + hgt, room_h - 0.01)
        elif hint == "ceiling":
            cx = rng.uniform(ix0 + w / 2 + 0.05, ix1 - w / 2 - 0.05)
            cy = rng.uniform(iy0 + d / 2 + 0.05, iy1 - d / 2 - 0.05)
            ang = rng.uniform(0, np.pi)
            z1 = room_h - 0.01
            z0 = z1 - hgt
        else:
            half = np.hypot(w, d) / 2
            if ix1 - ix0 < 2 * half + 0.1 or iy1 - iy0 < 2 * half + 0.1:
                continue
            cx = rng.uniform(ix0 + half + 0.05, ix1 - half - 0.05)
            cy = rng.uniform(iy0 + half + 0.05, iy1 - half - 0.05)
            ang = rng.uniform(0, np.pi)
            z0 = rng.uniform(*spec["z_base"]) if "z_base" in spec else 0.0
            z1 = z0 + hgt

        fp = rect_footprint(cx, cy, w, d, ang)
        if not _fits(fp, z0, z1, interior, placed):
            continue
        out = [SceneObject(next_id, fp, z0, z1, mat, kind)]

        if kind == "table" and rng.uniform() < 0.7:
            n_chairs = rng.integers(1, 4)
            ch = cfg.object_catalog.get("chair")
            if ch is not None:
                sides = rng.permutation(4)[:n_chairs]
                rot = np.array([[np.cos(ang), -np.sin(ang)],
                                [np.sin(ang), np.cos(ang)]])
                for s in sides:
                    cw = rng.uniform(*ch["width"])
                    cd = rng.uniform(*ch["depth"])
                    chh = rng.uniform(*ch["height"])
                    nvec = rot @ [(0, -1), (1, 0), (0, 1), (-1, 0)][s]
                    dist = (d if s in (0, 2) else w) / 2 + _CHAIR_GAP_M + cd / 2
                    cc = np.array([cx, cy]) + nvec * dist
                    cfp = rect_footprint(cc[0], cc[1], cw, cd, ang + (s % 2) * np.pi / 2)
                    cmat = _sample_material(
                        rng, ch["materials"][rng.integers(0, len(ch["materials"]))],
                        rng.uniform(*_PANEL_THICKNESS_M), cfg.material_ranges)
                    if _fits(cfp, 0.0, chh, interior, placed + out):
                        out.append(SceneObject(next_id + len(out), cfp, 0.0, chh,
                                               cmat, "chair"))
        return out
    raise _Retry(kind)


def _surface_distance(p, obj):
    dxy = point_polygon_distance(p[:2], obj.footprint)
    dz = max(obj.z_min - p[2], p[2] - obj.z_max, 0.0)
    if point_in_polygon(p[:2], obj.footprint):
        return 0.0 if dz == 0.0 else float(dz)
    return float(np.hypot(dxy, dz))


def _place_transmitters(rng, interior, room_h, objects, cfg):
    ix0, iy0, ix1, iy1 = interior
    m = cfg.tx_margin_m
    txs = []
    for _ in range(cfg.tx_per_scene):
        for _ in range(cfg.object_retry_budget):
            x = rng.uniform(ix0 + m, ix1 - m)
            y = rng.uniform(iy0 + m, iy1 - m)
            z = min(rng.uniform(*cfg.tx_height_range), room_h - m)
            p = np.array([x, y, z])
            if all(_surface_distance(p, o) >= m for o in objects):
                txs.append(Transmitter(p))
                break
        else:
            raise _Retry("transmitter")
    return txs


def _build_scene(rng, cfg, index, attempt):
    w = rng.uniform(*cfg.room_width_range)
    d = rng.uniform(*cfg.room_depth_range)
    h = rng.uniform(*cfg.room_height_range)
    t = rng.uniform(*cfg.wall_thickness_range)
    x0 = rng.uniform(0.0, MAP_EXTENT_M - w)
    y0 = rng.uniform(0.0, MAP_EXTENT_M - d)
    bounds = (float(x0), float(y0), float(x0 + w), float(y0 + d))
    interior = (x0 + t, y0 + t, x0 + w - t, y0 + d - t)

    walls, next_id = _wall_ring(rng, bounds, h, t, cfg)

    kinds = list(cfg.object_catalog)
    weights = np.array([cfg.object_catalog[k].get("weight", 1.0) for k in kinds])
    weights = weights / weights.sum()
    n_target = int(rng.integers(cfg.furniture_count_range[0],
                                cfg.furniture_count_range[1] + 1))
    furniture = []
    while len(furniture) < n_target:
        kind = kinds[rng.choice(len(kinds), p=weights)]
        got = _place_one(rng, kind, cfg.object_catalog[kind], interior, h,
                         walls + furniture, cfg, next_id)
        room = n_target - len(furniture)
        furniture.extend(got[:room])
        next_id += len(got[:room])

    txs = _place_transmitters(rng, interior, h, walls + furniture, cfg)
    scene = Scene(id=f"scene_{index:05d}", bounds=bounds, room_height=float(h),
                  walls=walls, furniture=furniture, transmitters=txs,
                  rng_seed=derive_seed(cfg.rng_seed, "scene", index))
    if validate_scene(scene):
        raise _Retry("scene")  # should not happen; restart rather than emit
    return scene


def generate_scene(config: GenConfig, index: int) -> Scene:
    """Deterministic scene for (config, index); same inputs, same bits."""
    last_kind = "scene"
    for attempt in range(config.scene_retry_budget):
        rng = stream(config.rng_seed, "scene", index, attempt)
        try:
            return _build_scene(rng, config, index, attempt)
        except _Retry as r:
            last_kind = r.kind
    raise GenerationError(
        last_kind,
        f"scene {index}: placement budget exhausted "
        f"({config.scene_retry_budget} restarts); last failing kind: {last_kind}")


def generate_dataset(config: GenConfig, n_scenes: int) -> list:
    if n_scenes < 1:
        raise ValueError("n_scenes must be >= 1")
    return [generate_scene(config, i) for i in range(n_scenes)]
