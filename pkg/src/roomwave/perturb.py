"""SNDA engine: structured noisy copies of scenes.

Planar offsets have uniform direction and Rayleigh magnitude with scale
sigma = mean_offset_m / sqrt(pi/2), so the mean magnitude equals the
configured average offset. Walls are never translated; Tx offsets keep z
fixed. Material parameters are perturbed multiplicatively in log domain and
clamped to their class ranges. Infeasible offsets fall back to the largest
feasible magnitude along the drawn direction (never fail), emitting a warning
record. Deterministic in (scene, config, copy_index); each perturbation
target consumes an independent RNG substream, so enabling one target never
changes another's draws.
"""

from dataclasses import dataclass, field, asdict, replace

import numpy as np

from .geometry import (
    convex_polygons_overlap,
    point_in_polygon,
    point_polygon_distance,
)
from .rng import derive_seed, stream
from .scene import MATERIAL_RANGES, Scene, SceneObject, Transmitter, validate_scene

RAYLEIGH_SCALE_FACTOR = 1.0 / np.sqrt(np.pi / 2.0)

_CLEARANCE_M = 1e-3         # tx standoff from surfaces after perturbation
_FALLBACK_STEPS = 64
_FALLBACK_REFINE = 24


@dataclass
class PerturbConfig:
    rng_seed: int = 0
    mean_offset_m: float = 0.5
    perturb_targets: frozenset = frozenset({"tx", "objects", "materials"})
    copies_per_scene: int = 10
    material_rel_sigma: float = 0.2

    def __post_init__(self):
        self.perturb_targets = frozenset(self.perturb_targets)
        bad = self.perturb_targets - {"tx", "objects", "materials"}
        if bad:
            raise ValueError(f"unknown perturb targets: {sorted(bad)}")
        if self.mean_offset_m < 0:
            raise ValueError("mean_offset_m must be >= 0")
        if self.copies_per_scene < 1:
            raise ValueError("copies_per_scene must be >= 1")

    def to_dict(self):
        d = asdict(self)
        d["perturb_targets"] = sorted(self.perturb_targets)
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


def draw_offsets(rng, n, mean_offset_m):
    """n planar offsets: uniform direction, Rayleigh magnitude (mean = target)."""
    mag = rng.rayleigh(scale=mean_offset_m * RAYLEIGH_SCALE_FACTOR, size=n)
    ang = rng.uniform(0.0, 2.0 * np.pi, size=n)
    return np.stack([mag * np.cos(ang), mag * np.sin(ang)], axis=1), mag


def _object_fits(fp, z0, z1, interior, others):
    x0, y0, x1, y1 = interior
    if (fp[:, 0] < x0 - 1e-9).any() or (fp[:, 0] > x1 + 1e-9).any() \
            or (fp[:, 1] < y0 - 1e-9).any() or (fp[:, 1] > y1 + 1e-9).any():
        return False
    for o in others:
        if z1 <= o.z_min + 1e-9 or z0 >= o.z_max - 1e-9:
            continue
        if convex_polygons_overlap(fp, o.footprint):
            return False
    return True


def _point_clear_of(p_xy, z, fp, z0, z1, clearance):
    if z < z0 - clearance or z > z1 + clearance:
        return True
    if point_in_polygon(p_xy, fp):
        return False
    return point_polygon_distance(p_xy, fp) >= clearance


def _tx_fits(p_xy, z, interior, objects):
    x0, y0, x1, y1 = interior
    c = _CLEARANCE_M
    if not (x0 + c <= p_xy[0] <= x1 - c and y0 + c <= p_xy[1] <= y1 - c):
        return False
    return all(_point_clear_of(p_xy, z, o.footprint, o.z_min, o.z_max, c)
               for o in objects)


def _largest_feasible(base_apply, feasible, offset):
    """Max scale f in [0,1] with feasible(base + f*offset); f=0 always holds."""
    lo, hi = 0.0, None
    for f in np.linspace(1.0, 0.0, _FALLBACK_STEPS + 1)[1:]:
        if feasible(base_apply(f * offset)):
            lo = f
            hi = f + 1.0 / _FALLBACK_STEPS
            break
    if hi is None:
        return 0.0
    for _ in range(_FALLBACK_REFINE):
        mid = 0.5 * (lo + hi)
        if feasible(base_apply(mid * offset)):
            lo = mid
        else:
            hi = mid
    return lo


def perturb_materials(scene: Scene, config: PerturbConfig, rng_stream) -> Scene:
    """Log-normal multiplicative noise on permittivity and conductivity,
    clamped to the class range; geometry and thickness untouched."""
    sig = config.material_rel_sigma

    def shake(obj):
        rng_e, rng_s = rng_stream.normal(0.0, 1.0, 2)
        r = MATERIAL_RANGES[obj.material.category]
        er = obj.material.rel_permittivity * np.exp(sig * rng_e)
        sg = obj.material.conductivity * np.exp(sig * rng_s)
        er = float(np.clip(er, *r["rel_permittivity"]))
        sg = float(np.clip(sg, *r["conductivity"]))
        mat = replace(obj.material, rel_permittivity=er, conductivity=sg)
        return SceneObject(obj.id, obj.footprint.copy(), obj.z_min, obj.z_max,
                           mat, obj.kind)

    return Scene(id=scene.id, bounds=scene.bounds, room_height=scene.room_height,
                 walls=[shake(o) for o in scene.walls],
                 furniture=[shake(o) for o in scene.furniture],
                 transmitters=list(scene.transmitters), rng_seed=scene.rng_seed)


def perturb_scene(scene: Scene, config: PerturbConfig, copy_index: int,
                  warnings=None) -> Scene:
    """One noisy copy. warnings, if given, collects fallback records."""
    # zero severity is the identity: nothing moves, nothing is resampled
    if config.mean_offset_m == 0.0:
        return scene
    interior = scene.interior_bounds()
    walls = list(scene.walls)
    furniture = list(scene.furniture)
    txs = list(scene.transmitters)

    def warn(kind, oid, requested, applied):
        if warnings is not None:
            warnings.append({"scene": scene.id, "copy": int(copy_index),
                             "target": kind, "id": oid,
                             "requested_m": float(requested),
                             "applied_m": float(applied)})

    # Tx moves first (against the original layout); objects then move around
    # the settled Tx positions. Zero offset is feasible at every step, so the
    # fallback scan never strands a target inside a solid.
    if "tx" in config.perturb_targets and config.mean_offset_m > 0:
        rng = stream(config.rng_seed, "perturb", scene.id, copy_index, "tx")
        offsets, mags = draw_offsets(rng, len(txs), config.mean_offset_m)
        solids = walls + furniture
        for i, tx in enumerate(txs):
            p0 = tx.position[:2].copy()
            z = float(tx.position[2])

            def apply(v, p0=p0):
                return p0 + v

            def ok(p, z=z):
                return _tx_fits(p, z, interior, solids)

            if ok(apply(offsets[i])):
                f = 1.0
            else:
                f = _largest_feasible(apply, ok, offsets[i])
                warn("tx", i, mags[i], f * mags[i])
            pos = np.array([*(p0 + f * offsets[i]), z])
            txs[i] = Transmitter(pos, tx.power_dbm, tx.frequency_hz)

    if "objects" in config.perturb_targets and config.mean_offset_m > 0:
        rng = stream(config.rng_seed, "perturb", scene.id, copy_index, "objects")
        offsets, mags = draw_offsets(rng, len(furniture), config.mean_offset_m)
        for i, obj in enumerate(furniture):
            others = walls + furniture[:i] + furniture[i + 1:]
            fp0 = obj.footprint

            def apply(v, fp0=fp0):
                return fp0 + v

            def ok(fp, obj=obj, others=others):
                if not _object_fits(fp, obj.z_min, obj.z_max, interior, others):
                    return False
                return all(_point_clear_of(tx.position[:2], tx.position[2], fp,
                                           obj.z_min, obj.z_max, _CLEARANCE_M)
                           for tx in txs)

            if ok(apply(offsets[i])):
                f = 1.0
            else:
                f = _largest_feasible(apply, ok, offsets[i])
                warn("objects", obj.id, mags[i], f * mags[i])
            furniture[i] = SceneObject(obj.id, fp0 + f * offsets[i], obj.z_min,
                                       obj.z_max, obj.material, obj.kind)

    out = Scene(id=f"{scene.id}__c{copy_index:02d}", bounds=scene.bounds,
                room_height=scene.room_height, walls=walls, furniture=furniture,
                transmitters=txs,
                rng_seed=derive_seed(config.rng_seed, "perturb", scene.id,
                                     copy_index))
    if "materials" in config.perturb_targets and config.material_rel_sigma > 0:
        rng = stream(config.rng_seed, "perturb", scene.id, copy_index, "materials")
        out = perturb_materials(out, config, rng)
    return out


def perturb_copies(scene: Scene, config: PerturbConfig, warnings=None) -> list:
    return [perturb_scene(scene, config, k, warnings)
            for k in range(config.copies_per_scene)]


def offset_statistics(scenes_before, scenes_after) -> dict:
    """Planar displacement report for paired scene lists.

    Pairs furniture by object id and transmitters by index; walls must be
    unmoved and are excluded from the offset statistics.
    """
    tx_d, obj_d = [], []
    for before, after in zip(scenes_before, scenes_after, strict=True):
        if len(before.transmitters) != len(after.transmitters):
            raise ValueError(f"{before.id}: transmitter count mismatch")
        ids_b = [o.id for o in before.furniture]
        ids_a = [o.id for o in after.furniture]
        if ids_b != ids_a:
            raise ValueError(f"{before.id}: furniture id mismatch")
        for tb, ta in zip(before.transmitters, after.transmitters):
            tx_d.append(float(np.hypot(*(ta.position[:2] - tb.position[:2]))))
        for ob, oa in zip(before.furniture, after.furniture):
            obj_d.append(float(np.hypot(*(oa.footprint[0] - ob.footprint[0]))))

    def summarize(d):
        if not d:
            return {"count": 0, "mean_m": 0.0, "max_m": 0.0,
                    "hist_counts": [], "hist_edges": []}
        a = np.asarray(d)
        counts, edges = np.histogram(a, bins=20, range=(0.0, max(a.max(), 1e-9)))
        return {"count": int(a.size), "mean_m": float(a.mean()),
                "max_m": float(a.max()), "hist_counts": counts.tolist(),
                "hist_edges": edges.tolist()}

    return {"tx": summarize(tx_d), "objects": summarize(obj_d)}
