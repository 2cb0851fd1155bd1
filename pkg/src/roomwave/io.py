"""Dataset persistence: RMTF tensor files, directory layout, manifests.

RMTF layout (little-endian throughout):
    bytes 0-3   magic b"RMTF"
    u16         version (1)
    u16         dtype code (1 = float32)
    u16         rank
    u32 * rank  dims
    payload     row-major float32

Directory layout under a dataset root: scenes/ (JSON), maps/ (RMTF + meta
JSON), encodings/ (RMTF + channel-name JSON), configs.json, manifest.json.
Clean samples carry copy_index -1; noisy copies 0..copies-1 and share the
clean map of their (base scene, tx) pair.
"""

import json
import struct
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from .generate import generate_scene
from .perturb import perturb_copies
from .rasterize import EncodeConfig, encode_sample
from .scene import MAP_PIXEL_M, ObservationSet, RadioMap, Scene, load_scene, save_scene
from .trace import TraceConfig, trace_radio_map

MAGIC = b"RMTF"
VERSION = 1
_DTYPE_F32 = 1
_HEADER = struct.Struct("<4sHHH")


class TensorFormatError(ValueError):
    pass


def write_tensor(path, dims, values) -> None:
    dims = tuple(int(d) for d in dims)
    if any(d < 0 or d > 0xFFFFFFFF for d in dims):
        raise TensorFormatError(f"dimension out of u32 range: {dims}")
    arr = np.ascontiguousarray(values, dtype="<f4")
    if arr.size != int(np.prod(dims, dtype=object)):
        raise TensorFormatError(f"value count {arr.size} != prod{dims}")
    with open(path, "wb") as f:
        f.write(_HEADER.pack(MAGIC, VERSION, _DTYPE_F32, len(dims)))
        f.write(struct.pack(f"<{len(dims)}I", *dims))
        f.write(arr.tobytes(order="C"))


def read_tensor(path) -> np.ndarray:
    with open(path, "rb") as f:
        head = f.read(_HEADER.size)
        if len(head) < _HEADER.size:
            raise TensorFormatError(f"{path}: truncated header")
        magic, version, dtype, rank = _HEADER.unpack(head)
        if magic != MAGIC:
            raise TensorFormatError(f"{path}: bad magic {magic!r}")
        if version != VERSION:
            raise TensorFormatError(f"{path}: unsupported version {version}")
        if dtype != _DTYPE_F32:
            raise TensorFormatError(f"{path}: unsupported dtype code {dtype}")
        dim_bytes = f.read(4 * rank)
        if len(dim_bytes) < 4 * rank:
            raise TensorFormatError(f"{path}: truncated dims")
        dims = struct.unpack(f"<{rank}I", dim_bytes)
        payload = f.read()
    want = int(np.prod(dims, dtype=object)) * 4
    if len(payload) != want:
        raise TensorFormatError(
            f"{path}: payload {len(payload)} bytes, expected {want}")
    return np.frombuffer(payload, dtype="<f4").reshape(dims).copy()


# ---- radio maps ------------------------------------------------------------------

def save_radio_map(path, rm: RadioMap, meta: dict = None) -> None:
    """Tensor + sidecar JSON; validity is recoverable as values != 0."""
    write_tensor(path, rm.values.shape, rm.values)
    side = {"map_id": rm.map_id, "origin": list(map(float, rm.origin)),
            "pixel_size_m": float(rm.pixel_size),
            "rx_height_m": float(rm.rx_height)}
    side.update(meta or {})
    Path(path).with_suffix(".json").write_text(json.dumps(side, indent=1))


def load_radio_map(path) -> RadioMap:
    values = read_tensor(path).astype(float)
    side = json.loads(Path(path).with_suffix(".json").read_text())
    return RadioMap(values=values, valid_mask=values != 0.0,
                    origin=np.asarray(side["origin"], dtype=float),
                    pixel_size=side.get("pixel_size_m", MAP_PIXEL_M),
                    rx_height=side.get("rx_height_m", 1.0),
                    map_id=side.get("map_id", Path(path).stem))


# ---- manifest --------------------------------------------------------------------

@dataclass
class DatasetManifest:
    dataset_id: str
    root: str
    configs: dict
    samples: list                      # records, see sample_key
    splits: dict = field(default_factory=dict)   # split -> [base ids]

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


def sample_key(rec) -> tuple:
    return (rec["base_scene_id"], rec["tx_index"], rec["copy_index"])


def _scene_stem(base, copy_index):
    return base if copy_index < 0 else f"{base}__c{copy_index:02d}"


def _enc_stem(base, tx_index, copy_index):
    tag = "clean" if copy_index < 0 else f"c{copy_index:02d}"
    return f"{base}__tx{tx_index}__{tag}"


def build_manifest(root) -> DatasetManifest:
    """Scan a dataset directory into a manifest (splits left empty)."""
    root = Path(root)
    configs = json.loads((root / "configs.json").read_text())
    n_copies = configs["perturb"]["copies_per_scene"]
    severity = configs["perturb"]["mean_offset_m"]
    targets = sorted(configs["perturb"]["perturb_targets"])

    bases = sorted(p.stem for p in (root / "scenes").glob("*.json")
                   if "__c" not in p.stem)
    samples = []
    for base in bases:
        n_tx = len(load_scene(root / "scenes" / f"{base}.json").transmitters)
        for t in range(n_tx):
            map_path = f"maps/{base}__tx{t}.rmtf"
            for copy in [-1] + list(range(n_copies)):
                samples.append({
                    "base_scene_id": base,
                    "tx_index": t,
                    "copy_index": copy,
                    "severity": 0.0 if copy < 0 else severity,
                    "perturb_targets": [] if copy < 0 else targets,
                    "scene_path": f"scenes/{_scene_stem(base, copy)}.json",
                    "map_path": map_path,
                    "encoding_path": f"encodings/{_enc_stem(base, t, copy)}.rmtf",
                })
    return DatasetManifest(dataset_id=configs.get("dataset_id", root.name),
                           root=str(root), configs=configs, samples=samples)


def verify_manifest(manifest: DatasetManifest) -> list:
    """Dangling references, duplicate keys, pairing and split violations."""
    root = Path(manifest.root)
    violations = []

    seen = set()
    for rec in manifest.samples:
        k = sample_key(rec)
        if k in seen:
            violations.append(f"duplicate sample key {k}")
        seen.add(k)

    missing = set()
    for rec in manifest.samples:
        for key in ("scene_path", "map_path", "encoding_path"):
            if not (root / rec[key]).exists():
                missing.add(rec[key])
        enc_channels = Path(rec["encoding_path"]).with_suffix(".channels.json")
        if not (root / enc_channels).exists():
            missing.add(str(enc_channels))
    violations += [f"missing file {m}" for m in sorted(missing)]

    # every noisy sample must share the clean map of its (base, tx)
    clean_map = {(r["base_scene_id"], r["tx_index"]): r["map_path"]
                 for r in manifest.samples if r["copy_index"] < 0}
    for rec in manifest.samples:
        pair = (rec["base_scene_id"], rec["tx_index"])
        if pair not in clean_map:
            violations.append(f"no clean sample for {pair}")
        elif rec["map_path"] != clean_map[pair]:
            violations.append(
                f"sample {sample_key(rec)} not paired with clean map")

    if manifest.splits:
        assigned = {}
        for split, bases in manifest.splits.items():
            for b in bases:
                if b in assigned:
                    violations.append(f"base {b} in splits "
                                      f"{assigned[b]} and {split}")
                assigned[b] = split
        all_bases = {r["base_scene_id"] for r in manifest.samples}
        for b in sorted(all_bases - set(assigned)):
            violations.append(f"base {b} missing from splits")
    return violations


def save_manifest(manifest: DatasetManifest) -> None:
    path = Path(manifest.root) / "manifest.json"
    path.write_text(json.dumps(manifest.to_dict(), indent=1))


def load_manifest(root) -> DatasetManifest:
    d = json.loads((Path(root) / "manifest.json").read_text())
    d["root"] = str(root)   # tolerate relocated datasets
    return DatasetManifest.from_dict(d)


# ---- dataset build ----------------------------------------------------------------

def build_dataset(root, gen_config, perturb_config, trace_config=None,
                  encode_config=None, n_scenes=20, dataset_id=None,
                  progress=None) -> DatasetManifest:
    """gen -> perturb -> trace -> encode -> manifest, under one root.

    Encodings are written with an all-zero observation channel; consumers
    fill it per draw. Noisy samples are encoded from their perturbed scene
    (including the perturbed Tx) but always paired with the clean map.
    """
    trace_config = trace_config or TraceConfig()
    encode_config = encode_config or EncodeConfig()
    root = Path(root)
    for sub in ("scenes", "maps", "encodings"):
        (root / sub).mkdir(parents=True, exist_ok=True)

    warnings = []
    for i in range(n_scenes):
        scene = generate_scene(gen_config, i)
        save_scene(scene, root / "scenes" / f"{scene.id}.json")
        copies = perturb_copies(scene, perturb_config, warnings)
        for k, copy in enumerate(copies):
            save_scene(copy, root / "scenes" / f"{_scene_stem(scene.id, k)}.json")

        for t, tx in enumerate(scene.transmitters):
            rm = trace_radio_map(scene, tx, trace_config)
            rm.map_id = f"{scene.id}__tx{t}"
            save_radio_map(root / "maps" / f"{rm.map_id}.rmtf", rm,
                           meta={"base_scene_id": scene.id, "tx_index": t,
                                 "tx_position": [float(v) for v in tx.position],
                                 "noise_floor_db": trace_config.noise_floor_db,
                                 "frequency_hz": trace_config.frequency_hz})
            no_obs = ObservationSet([], [], [], rm.map_id)
            for copy_idx, sc in [(-1, scene)] + list(enumerate(copies)):
                enc = encode_sample(sc, sc.transmitters[t], no_obs, encode_config)
                stem = _enc_stem(scene.id, t, copy_idx)
                stacked = enc.stacked()
                write_tensor(root / "encodings" / f"{stem}.rmtf",
                             stacked.shape, stacked)
                names = enc.channel_names(encode_config, sc.room_height)
                (root / "encodings" / f"{stem}.channels.json").write_text(
                    json.dumps(names))
        if progress:
            progress(i + 1, n_scenes)

    configs = {"dataset_id": dataset_id or root.name,
               "gen": gen_config.to_dict(),
               "perturb": perturb_config.to_dict(),
               "trace": asdict(trace_config),
               "encode": encode_config.to_dict()}
    (root / "configs.json").write_text(json.dumps(configs, indent=1))
    if warnings:
        with open(root / "perturb_warnings.jsonl", "w") as f:
            for w in warnings:
                f.write(json.dumps(w) + "\n")

    manifest = build_manifest(root)
    save_manifest(manifest)
    return manifest


# ---- sample access ----------------------------------------------------------------

def load_sample_scene(manifest: DatasetManifest, rec) -> Scene:
    return load_scene(Path(manifest.root) / rec["scene_path"])


def load_sample_map(manifest: DatasetManifest, rec) -> RadioMap:
    return load_radio_map(Path(manifest.root) / rec["map_path"])


def load_sample_encoding(manifest: DatasetManifest, rec) -> tuple:
    """(tensor (C, R, R), channel names)."""
    path = Path(manifest.root) / rec["encoding_path"]
    names = json.loads(path.with_suffix(".channels.json").read_text())
    return read_tensor(path), names
