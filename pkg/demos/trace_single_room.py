"""Generate one furnished room and trace its path-loss map.

Walks the core pipeline on a single scene: procedural layout, a path-level
trace between two points, then the full 32x32 map. Writes room_map.png next
to this script if matplotlib is installed.
"""

import time

import numpy as np

from roomwave import NOISE_FLOOR_DB
from roomwave.generate import GenConfig, generate_scene
from roomwave.trace import TraceConfig, path_loss, trace_paths, trace_radio_map

SEED = 7

# ---- build a scene -----------------------------------------------------------

cfg = GenConfig(rng_seed=SEED, tx_per_scene=1)
scene = generate_scene(cfg, index=0)

x0, y0, x1, y1 = scene.bounds
print(f"scene {scene.id}: {x1 - x0:.1f} x {y1 - y0:.1f} m, "
      f"height {scene.room_height:.2f} m")
print(f"  {len(scene.walls)} wall segments, {len(scene.furniture)} objects")
for o in scene.furniture:
    print(f"  {o.id:>12}  {o.kind:<10} {o.material.category:<16} "
          f"er={o.material.rel_permittivity:.1f}")

tx = scene.transmitters[0]
print(f"  tx at ({tx.position[0]:.2f}, {tx.position[1]:.2f}, "
      f"{tx.position[2]:.2f})")

# ---- one receiver, path by path ------------------------------------------------

# a fixed receiver inside the room, at handset height
rx = np.array([x0 + 0.25 * (x1 - x0), y0 + 0.3 * (y1 - y0), 1.0])
paths = trace_paths(scene, tx, rx, TraceConfig())
paths.sort(key=lambda p: -p.power_gain)

print(f"\n{len(paths)} paths to rx ({rx[0]:.2f}, {rx[1]:.2f}):")
print("  refl  trans  diff   length    gain_db")
for p in paths[:8]:
    print(f"  {p.n_reflections:4d}  {p.n_transmissions:5d}  "
          f"{p.n_diffractions:4d}  {p.total_length_m:7.2f} m  "
          f"{10 * np.log10(p.power_gain):8.2f}")
if len(paths) > 8:
    print(f"  ... {len(paths) - 8} weaker paths")
print(f"combined path loss: {path_loss(paths):.2f} dB")

# ---- full map -------------------------------------------------------------------

t0 = time.perf_counter()
rm = trace_radio_map(scene, tx, TraceConfig())
print(f"\nmap traced in {time.perf_counter() - t0:.2f} s")

inside = rm.values[rm.valid_mask]
print(f"valid pixels: {inside.size}/{rm.values.size}")
print(f"path loss range: [{inside.min():.1f}, {inside.max():.1f}] dB "
      f"(floor {NOISE_FLOOR_DB:.0f})")
print(f"at noise floor: {(inside <= NOISE_FLOOR_DB + 0.5).mean():.1%}")

try:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    print("matplotlib not installed, skipping plot")
else:
    fig, ax = plt.subplots(figsize=(5, 5))
    shown = np.where(rm.valid_mask, rm.values, np.nan)
    im = ax.imshow(shown, origin="lower", cmap="viridis",
                   extent=(rm.origin[0] - rm.pixel_size / 2,
                           rm.origin[0] + rm.pixel_size * 31.5,
                           rm.origin[1] - rm.pixel_size / 2,
                           rm.origin[1] + rm.pixel_size * 31.5))
    for o in scene.walls + scene.furniture:
        fp = np.vstack([o.footprint, o.footprint[:1]])
        ax.plot(fp[:, 0], fp[:, 1], "w-", lw=0.8)
    ax.plot(tx.position[0], tx.position[1], "r*", ms=12)
    ax.plot(rx[0], rx[1], "wx", ms=8)
    ax.set_title(f"{scene.id} path loss (dB)")
    fig.colorbar(im, ax=ax, shrink=0.85)
    out = __file__.replace(".py", "").rsplit("/", 1)[0] + "/room_map.png"
    fig.savefig(out, dpi=120, bbox_inches="tight")
    print(f"wrote {out}")
