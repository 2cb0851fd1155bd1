"""Experiment orchestration: RMSE curves, sensitivity sweeps, region protocol.

A predictor is any callable `(scene, tx_index, observations) -> RadioMap`.
Observation draws are seeded per (sample id, draw index), never per predictor,
so competing methods always see byte-identical observation sets. Aggregation
uses numpy reductions (pairwise summation) over deterministically ordered
sample lists, so reports are reproducible bit for bit.
"""

import csv
import json
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from .baselines import (
    ConditioningError,
    RbfConfig,
    fit_fspl_offset,
    fspl_predict,
    grbf_predict,
    rbf_fit_predict,
)
from .io import DatasetManifest, load_sample_map, load_sample_scene
from .perturb import PerturbConfig, perturb_scene
from .rasterize import draw_observations
from .rng import stream
from .scene import ObservationSet, RadioMap, empty_map_for_scene

SPLITS = ("train", "val", "test")
_SPLIT_FRACTIONS = {"val": 0.1, "test": 0.1}    # train takes the rest

#: exception types counted as recoverable predictor failures
_PREDICTOR_ERRORS = (ValueError, ConditioningError, np.linalg.LinAlgError)


@dataclass
class EvalConfig:
    fractions: tuple = (0.0, 0.01, 0.02, 0.04, 0.08, 0.16)
    draws_per_sample: int = 10
    split: str = "test"
    input_condition: str = "clean"      # scene handed to the predictor
    severity_grid: tuple = (0.25, 0.5, 1.0)
    targets_grid: tuple = (("tx",), ("objects",), ("tx", "objects"))
    noisy_copy_index: int = 0
    rng_seed: int = 0

    def __post_init__(self):
        self.fractions = tuple(float(f) for f in self.fractions)
        if any(f < 0.0 or f > 0.2 for f in self.fractions):
            raise ValueError("fractions must lie in [0, 0.2]")
        if self.draws_per_sample < 1:
            raise ValueError("draws_per_sample must be >= 1")
        if self.split not in SPLITS:
            raise ValueError(f"split must be one of {SPLITS}")
        if self.input_condition not in ("clean", "noisy"):
            raise ValueError("input_condition must be 'clean' or 'noisy'")
        self.severity_grid = tuple(float(s) for s in self.severity_grid)
        self.targets_grid = tuple(tuple(t) for t in self.targets_grid)

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


# ---- metric ----------------------------------------------------------------------

def rmse_db(pred: RadioMap, gt: RadioMap) -> float:
    """Root mean squared dB error over the ground truth's valid pixels."""
    mask = gt.valid_mask
    if not mask.any():
        raise ValueError("ground truth has no valid pixels")
    d = pred.values[mask] - gt.values[mask]
    return float(np.sqrt(np.mean(d * d)))


# ---- splits ----------------------------------------------------------------------

def make_splits(manifest: DatasetManifest, seed: int) -> dict:
    """80/10/10 split over base scene ids; all samples of a base stay together."""
    bases = sorted({r["base_scene_id"] for r in manifest.samples})
    if len(bases) < 10:
        raise ValueError(f"need at least 10 base scenes to split, got {len(bases)}")
    order = stream(seed, "splits").permutation(len(bases))
    shuffled = [bases[i] for i in order]
    n = len(bases)
    n_val = int(round(n * _SPLIT_FRACTIONS["val"]))
    n_test = int(round(n * _SPLIT_FRACTIONS["test"]))
    return {"test": sorted(shuffled[:n_test]),
            "val": sorted(shuffled[n_test:n_test + n_val]),
            "train": sorted(shuffled[n_test + n_val:])}


def select_records(manifest: DatasetManifest, config: EvalConfig) -> list:
    """Eval records for the configured split and input condition.

    Returned records always reference the clean ground-truth map; under the
    noisy condition the scene handed to predictors is the stored copy with
    config.noisy_copy_index.
    """
    if not manifest.splits:
        raise ValueError("manifest has no splits; run make_splits first")
    bases = set(manifest.splits[config.split])
    want_copy = -1 if config.input_condition == "clean" else config.noisy_copy_index
    records = [r for r in manifest.samples
               if r["base_scene_id"] in bases and r["copy_index"] == want_copy]
    if not records:
        raise ValueError(f"no {config.input_condition} samples in split "
                         f"'{config.split}'")
    return sorted(records, key=lambda r: (r["base_scene_id"], r["tx_index"]))


# ---- baseline predictor adapters --------------------------------------------------

def make_fspl_predictor():
    """Distance-law curve with fitted constant; zero offset when unobserved."""
    def predict(scene, tx_index, obs):
        tx = scene.transmitters[tx_index]
        geometry = empty_map_for_scene(scene)
        a = fit_fspl_offset(obs, tx, geometry) if len(obs.rows) else 0.0
        return fspl_predict(tx, geometry, a)
    return predict


def make_rbf_predictor(kernel: str, config: RbfConfig = None):
    """gaussian = FSPL-detrended kernel interpolation; tps = plain system."""
    cfg = config or RbfConfig(kernel=kernel)
    def predict(scene, tx_index, obs):
        geometry = empty_map_for_scene(scene)
        if cfg.kernel == "gaussian":
            return grbf_predict(obs, scene.transmitters[tx_index], geometry, cfg)
        return rbf_fit_predict(obs, cfg, geometry)
    return predict


def resolve_predictor(name: str):
    """CLI predictor registry; cnn:PATH defers to the trainer package."""
    if name == "fspl":
        return make_fspl_predictor()
    if name == "grbf":
        return make_rbf_predictor("gaussian")
    if name == "tps":
        return make_rbf_predictor("thin_plate_spline")
    if name.startswith(("cnn:", "noenv-cnn:")):
        kind, _, path = name.partition(":")
        try:
            from rmtrainer.adapter import load_predictor
        except ImportError as exc:
            raise RuntimeError(
                "CNN predictors need the rmtrainer package installed") from exc
        return load_predictor(path, drop_env=(kind == "noenv-cnn"))
    raise ValueError(f"unknown predictor '{name}'")


# ---- observation-fraction curves ---------------------------------------------------

def _observation_stream(config, base, tx_index, draw):
    return stream(config.rng_seed, "obs", f"{base}__tx{tx_index}", draw)


def _summary_row(errors, n_failed):
    e = np.asarray(errors, dtype=float)
    return {"mean_rmse_db": float(np.mean(e)) if e.size else float("nan"),
            "std_rmse_db": float(np.std(e)) if e.size else float("nan"),
            "n": int(e.size), "failures": int(n_failed)}


def curve_eval(predictor, manifest: DatasetManifest, config: EvalConfig) -> dict:
    """Mean/std RMSE per observation fraction over split x draws_per_sample."""
    records = select_records(manifest, config)
    errors = {f: [] for f in config.fractions}
    failures = {f: 0 for f in config.fractions}
    for rec in records:
        gt = load_sample_map(manifest, rec)
        scene = load_sample_scene(manifest, rec)
        for draw in range(config.draws_per_sample):
            for fraction in config.fractions:
                rng = _observation_stream(config, rec["base_scene_id"],
                                          rec["tx_index"], draw)
                obs = draw_observations(gt, fraction, rng)
                try:
                    pred = predictor(scene, rec["tx_index"], obs)
                    errors[fraction].append(rmse_db(pred, gt))
                except _PREDICTOR_ERRORS:
                    failures[fraction] += 1
    rows = [{"fraction": f, **_summary_row(errors[f], failures[f])}
            for f in config.fractions]
    return {"experiment": "curve", "config": config.to_dict(), "rows": rows}


# ---- severity sweep ----------------------------------------------------------------

def sensitivity_sweep(predictor, manifest: DatasetManifest,
                      config: EvalConfig) -> dict:
    """RMSE per (targets, severity, fraction) cell, noisy scene vs clean truth.

    Perturbed scenes are regenerated from the dataset's perturbation seed, so
    a cell matching the stored copies reproduces them bit for bit and severity
    zero degenerates to the clean curve.
    """
    if "perturb" not in manifest.configs:
        raise ValueError("manifest lacks perturbation metadata for pairing")
    base_cfg = manifest.configs["perturb"]
    clean_cfg = EvalConfig(**{**config.to_dict(), "input_condition": "clean"})
    records = select_records(manifest, clean_cfg)

    rows = []
    for targets in config.targets_grid:
        for severity in config.severity_grid:
            pcfg = PerturbConfig(
                rng_seed=base_cfg["rng_seed"], mean_offset_m=severity,
                perturb_targets=frozenset(targets),
                copies_per_scene=config.noisy_copy_index + 1,
                material_rel_sigma=base_cfg["material_rel_sigma"])
            errors = {f: [] for f in config.fractions}
            failures = {f: 0 for f in config.fractions}
            for rec in records:
                gt = load_sample_map(manifest, rec)
                noisy = perturb_scene(load_sample_scene(manifest, rec), pcfg,
                                      config.noisy_copy_index)
                for draw in range(config.draws_per_sample):
                    for fraction in config.fractions:
                        rng = _observation_stream(config, rec["base_scene_id"],
                                                  rec["tx_index"], draw)
                        obs = draw_observations(gt, fraction, rng)
                        try:
                            pred = predictor(noisy, rec["tx_index"], obs)
                            errors[fraction].append(rmse_db(pred, gt))
                        except _PREDICTOR_ERRORS:
                            failures[fraction] += 1
            for f in config.fractions:
                rows.append({"targets": "+".join(targets), "severity": severity,
                             "fraction": f,
                             **_summary_row(errors[f], failures[f])})
    return {"experiment": "sensitivity", "config": config.to_dict(), "rows": rows}


# ---- region protocol ---------------------------------------------------------------

def region_protocol_eval(predictor, scene, tx_index, gt: RadioMap,
                         regions: dict, n_draws: int = 500, rng_seed: int = 0,
                         target_labels=None) -> dict:
    """One observation pixel per region per draw; RMSE over target regions.

    `regions` maps label -> (rows, cols) pixel index arrays. Target regions
    (default: all) contribute their undrawn pixels to the error support.
    """
    if not regions:
        raise ValueError("no regions given")
    pix = {}
    for label in sorted(regions):
        rows = np.asarray(regions[label][0], dtype=int)
        cols = np.asarray(regions[label][1], dtype=int)
        if rows.size == 0:
            raise ValueError(f"region '{label}' is empty")
        if not gt.valid_mask[rows, cols].all():
            raise ValueError(f"region '{label}' contains invalid pixels")
        pix[label] = (rows, cols)
    targets = sorted(pix) if target_labels is None else sorted(target_labels)
    if not set(targets) <= set(pix):
        raise ValueError("target_labels must name given regions")

    errors, n_failed = [], 0
    for draw in range(n_draws):
        rng = stream(rng_seed, "region_draw", draw)
        chosen = {label: int(rng.integers(pix[label][0].size))
                  for label in sorted(pix)}
        obs_r = np.array([pix[l][0][chosen[l]] for l in sorted(pix)])
        obs_c = np.array([pix[l][1][chosen[l]] for l in sorted(pix)])
        obs = ObservationSet(rows=obs_r, cols=obs_c,
                             values_db=gt.values[obs_r, obs_c],
                             source_map_id=gt.map_id)
        mask = np.zeros_like(gt.valid_mask)
        for label in targets:
            mask[pix[label]] = True
        mask[obs_r, obs_c] = False
        if not mask.any():
            raise ValueError("no target pixels remain after removing "
                             "observations")
        try:
            pred = predictor(scene, tx_index, obs)
        except _PREDICTOR_ERRORS:
            n_failed += 1
            continue
        d = pred.values[mask] - gt.values[mask]
        errors.append(float(np.sqrt(np.mean(d * d))))
    return {"experiment": "region_protocol", "n_draws": n_draws,
            **_summary_row(errors, n_failed)}


# ---- report emission ---------------------------------------------------------------

def write_report(report: dict, out_dir) -> None:
    """report.json plus a flat rows.csv for plotting scripts."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(json.dumps(report, indent=1))
    rows = report.get("rows", [])
    if rows:
        with open(out / "rows.csv", "w", newline="") as f:
            writer = csv.DictWriter(f, fieldnames=list(rows[0]))
            writer.writeheader()
            writer.writerows(rows)
