"""Build a small dataset and compare the interpolation baselines.

Ten rooms, two transmitters each, a couple of noisy copies: enough for the
80/10/10 split machinery and a stable RMSE-vs-observations curve, while
staying around a minute of wall time. Reports land in
<dataset>/reports/<method>/report.json + rows.csv.
"""

import tempfile
import time
from pathlib import Path

from roomwave.evaluate import (EvalConfig, curve_eval, make_splits,
                               resolve_predictor, write_report)
from roomwave.generate import GenConfig
from roomwave.io import build_dataset, save_manifest
from roomwave.perturb import PerturbConfig
from roomwave.rasterize import EncodeConfig

ROOT = Path(tempfile.gettempdir()) / "roomwave_demo_ds"
METHODS = ["fspl", "tps", "grbf"]
FRACTIONS = (0.01, 0.02, 0.04, 0.08)

# ---- dataset -------------------------------------------------------------------

t0 = time.perf_counter()
manifest = build_dataset(
    ROOT,
    GenConfig(rng_seed=21, tx_per_scene=2, furniture_count_range=(3, 8)),
    PerturbConfig(rng_seed=22, mean_offset_m=0.5, copies_per_scene=2),
    encode_config=EncodeConfig(xy_resolution=64),
    n_scenes=10,
    progress=lambda i, n: print(f"  scene {i}/{n}", end="\r"),
)
print(f"built {len(manifest.samples)} samples under {ROOT} "
      f"in {time.perf_counter() - t0:.1f} s")

manifest.splits = make_splits(manifest, seed=0)
save_manifest(manifest)
print(f"splits: { {k: len(v) for k, v in manifest.splits.items()} }")

# ---- curves --------------------------------------------------------------------

# test split is tiny here, so average over more draws than usual
cfg = EvalConfig(fractions=FRACTIONS, draws_per_sample=20, split="test")

rows_by_method = {}
for method in METHODS:
    t0 = time.perf_counter()
    report = curve_eval(resolve_predictor(method), manifest, cfg)
    report["predictor"] = method
    write_report(report, ROOT / "reports" / method)
    rows_by_method[method] = report["rows"]
    print(f"{method}: {time.perf_counter() - t0:.1f} s")

print("\nmean RMSE (dB) on the test split, clean geometry:")
header = "fraction  " + "".join(f"{m:>8}" for m in METHODS)
print(header)
for i, f in enumerate(FRACTIONS):
    cells = "".join(f"{rows_by_method[m][i]['mean_rmse_db']:8.2f}"
                    for m in METHODS)
    print(f"  {f:5.0%}  {cells}")
fails = {m: sum(r["failures"] for r in rows_by_method[m]) for m in METHODS}
print(f"failed draws (counted, excluded from means): {fails}")

try:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    print("matplotlib not installed, skipping plot")
else:
    fig, ax = plt.subplots(figsize=(6, 4))
    for method in METHODS:
        rows = rows_by_method[method]
        ax.errorbar([r["fraction"] for r in rows],
                    [r["mean_rmse_db"] for r in rows],
                    yerr=[r["std_rmse_db"] for r in rows],
                    marker="o", capsize=3, label=method)
    ax.set_xlabel("observed pixel fraction")
    ax.set_ylabel("RMSE (dB)")
    ax.set_xscale("log")
    ax.legend()
    out_png = Path(__file__).with_name("baseline_curves.png")
    fig.savefig(out_png, dpi=120, bbox_inches="tight")
    print(f"wrote {out_png}")
