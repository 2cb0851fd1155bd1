"""Reading the dataset toolkit's on-disk formats.

RMTF (little-endian): b"RMTF", u16 version (1), u16 dtype code (1 = f32),
u16 rank, rank x u32 dims, then the row-major float32 payload. Radio maps
are rank-2 tensors with a JSON sidecar; pixels outside the room hold the
sentinel 0.0, so validity is values != 0.
"""

import json
import struct
from pathlib import Path

import numpy as np

MAGIC = b"RMTF"
VERSION = 1
_DTYPE_F32 = 1
_HEADER = struct.Struct("<4sHHH")

# fixed map conventions of the dataset toolkit
MAP_SIZE = 32
PL_LO_DB = -71.0
PL_HI_DB = -12.0
OUT_OF_ROOM_SENTINEL = 0.0


class TensorFormatError(ValueError):
    pass


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


def write_tensor(path, values) -> None:
    arr = np.ascontiguousarray(values, dtype="<f4")
    if any(d > 0xFFFFFFFF for d in arr.shape):
        raise TensorFormatError(f"dimension out of u32 range: {arr.shape}")
    with open(path, "wb") as f:
        f.write(_HEADER.pack(MAGIC, VERSION, _DTYPE_F32, arr.ndim))
        f.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
        f.write(arr.tobytes(order="C"))


# ---- scaling ----------------------------------------------------------------------

def scale_to_unit(pl_db):
    """Affine [PL_LO, PL_HI] dB -> [0, 1], clamped; matches the toolkit."""
    x = np.clip(np.asarray(pl_db, dtype=float), PL_LO_DB, PL_HI_DB)
    return (x - PL_LO_DB) / (PL_HI_DB - PL_LO_DB)


def unscale_from_unit(u):
    return np.asarray(u, dtype=float) * (PL_HI_DB - PL_LO_DB) + PL_LO_DB


# ---- dataset directory -------------------------------------------------------------

def load_manifest(root) -> dict:
    root = Path(root)
    d = json.loads((root / "manifest.json").read_text())
    d["root"] = str(root)
    return d


def load_channels(root, rec) -> list:
    p = Path(root) / Path(rec["encoding_path"]).with_suffix(".channels.json")
    return json.loads(p.read_text())


def load_encoding(root, rec) -> np.ndarray:
    return read_tensor(Path(root) / rec["encoding_path"])


def load_map(root, rec) -> tuple:
    """(values_db (32, 32), valid mask) for the record's clean map."""
    values = read_tensor(Path(root) / rec["map_path"]).astype(float)
    if values.shape != (MAP_SIZE, MAP_SIZE):
        raise TensorFormatError(f"{rec['map_path']}: map shape {values.shape}")
    return values, values != OUT_OF_ROOM_SENTINEL


def save_map(path, values_db, meta: dict = None) -> None:
    """Rank-2 tensor + sidecar, same convention as the toolkit's maps/."""
    write_tensor(path, values_db)
    side = {"pixel_size_m": 0.3, "rx_height_m": 1.0}
    side.update(meta or {})
    Path(path).with_suffix(".json").write_text(json.dumps(side, indent=1))
