"""File formats: PNG images, the CFT1 binary tensor container, model
checkpoints, the text grid serialization, corpus manifests, and run
configuration files. Every writer is byte-deterministic given its inputs.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np
from PIL import Image

from .quantizer import ChromaGrid

TENSOR_MAGIC = b"CFT1"
CHECKPOINT_MAGIC = b"CKP1"
MAX_TENSOR_DIMS = 4

# run configuration: key -> (parser, default)
RUN_CONFIG_SCHEMA = {
    "seed": (int, 0),
    "input_size": (int, 32),
    "epochs": (int, 16),
    "lr": (float, 2e-4),
    "lambda_c": (float, 1.0),
    "lambda_s": (float, 100.0),
    "sigma_s": (float, 3.0),
    "sigma_r": (float, 15.0),
    "decode_mode": (str, "annealed"),
    "temperature": (float, 0.38),
    "k_neighbors": (int, 5),
    "encode_sigma": (float, 5.0),
    "mix_lambda": (float, 0.5),
}


# ---------------------------------------------------------------------- images

def read_png(path) -> np.ndarray:
    """8-bit PNG -> uint8 array: (H, W) for grayscale, (H, W, 3) otherwise."""
    with Image.open(path) as im:
        if im.mode == "L":
            return np.asarray(im, dtype=np.uint8)
        return np.asarray(im.convert("RGB"), dtype=np.uint8)


def write_png(path, img: np.ndarray) -> None:
    img = np.asarray(img)
    if img.dtype != np.uint8 or img.ndim not in (2, 3):
        raise ValueError(f"expected uint8 (H, W) or (H, W, 3), got {img.dtype} {img.shape}")
    if img.ndim == 3 and img.shape[2] != 3:
        raise ValueError(f"color images must have 3 channels, got {img.shape}")
    Image.fromarray(img, mode="L" if img.ndim == 2 else "RGB").save(path, format="PNG")


# --------------------------------------------------------------------- tensors

def tensor_bytes(arr: np.ndarray) -> bytes:
    """Serialize an array: magic, u32 LE rank, u32 LE dims, f32 LE payload."""
    arr = np.asarray(arr)
    if arr.ndim < 1 or arr.ndim > MAX_TENSOR_DIMS:
        raise ValueError(f"tensor rank must be 1..{MAX_TENSOR_DIMS}, got {arr.ndim}")
    header = TENSOR_MAGIC + struct.pack("<I", arr.ndim)
    header += struct.pack(f"<{arr.ndim}I", *arr.shape)
    return header + np.ascontiguousarray(arr, dtype="<f4").tobytes()


def _tensor_from(buf: bytes, offset: int = 0) -> tuple[np.ndarray, int]:
    if buf[offset : offset + 4] != TENSOR_MAGIC:
        raise ValueError("not a CFT1 tensor (bad magic)")
    offset += 4
    (ndim,) = struct.unpack_from("<I", buf, offset)
    offset += 4
    if ndim < 1 or ndim > MAX_TENSOR_DIMS:
        raise ValueError(f"tensor rank {ndim} outside 1..{MAX_TENSOR_DIMS}")
    dims = struct.unpack_from(f"<{ndim}I", buf, offset)
    offset += 4 * ndim
    count = int(np.prod(dims))
    payload = np.frombuffer(buf, dtype="<f4", count=count, offset=offset)
    offset += 4 * count
    return payload.astype(np.float64).reshape(dims), offset


def write_tensor(path, arr: np.ndarray) -> None:
    Path(path).write_bytes(tensor_bytes(arr))


def read_tensor(path) -> np.ndarray:
    buf = Path(path).read_bytes()
    arr, end = _tensor_from(buf)
    if end != len(buf):
        raise ValueError(f"trailing bytes after tensor payload in {path}")
    return arr


# ----------------------------------------------------------------- checkpoints

def save_checkpoint(path, config: dict, tensors: dict[str, np.ndarray]) -> None:
    """Model container: a key = value text block plus named CFT1 tensors."""
    text = "".join(f"{k} = {v}\n" for k, v in config.items()).encode()
    blob = CHECKPOINT_MAGIC + struct.pack("<I", len(text)) + text
    blob += struct.pack("<I", len(tensors))
    for name in sorted(tensors):
        encoded = name.encode()
        blob += struct.pack("<I", len(encoded)) + encoded + tensor_bytes(tensors[name])
    Path(path).write_bytes(blob)


def load_checkpoint(path) -> tuple[dict[str, str], dict[str, np.ndarray]]:
    buf = Path(path).read_bytes()
    if buf[:4] != CHECKPOINT_MAGIC:
        raise ValueError(f"{path} is not a checkpoint (bad magic)")
    offset = 4
    (text_len,) = struct.unpack_from("<I", buf, offset)
    offset += 4
    config: dict[str, str] = {}
    for line in buf[offset : offset + text_len].decode().splitlines():
        if line.strip():
            key, _, value = line.partition("=")
            config[key.strip()] = value.strip()
    offset += text_len
    (n_tensors,) = struct.unpack_from("<I", buf, offset)
    offset += 4
    tensors: dict[str, np.ndarray] = {}
    for _ in range(n_tensors):
        (name_len,) = struct.unpack_from("<I", buf, offset)
        offset += 4
        name = buf[offset : offset + name_len].decode()
        offset += name_len
        tensors[name], offset = _tensor_from(buf, offset)
    return config, tensors


# ------------------------------------------------------------------- grid text

def write_grid_text(path, grid: ChromaGrid) -> None:
    """Header line "grid_step q", then one "a b" line per bin center."""
    lines = [f"{grid.grid_step:g} {grid.q}"]
    lines += [f"{a:g} {b:g}" for a, b in grid.bin_centers]
    Path(path).write_text("\n".join(lines) + "\n")


def read_grid_text(path) -> ChromaGrid:
    lines = Path(path).read_text().splitlines()
    step_s, q_s = lines[0].split()
    q = int(q_s)
    centers = np.array([[float(v) for v in line.split()] for line in lines[1 : 1 + q]])
    if len(centers) != q:
        raise ValueError(f"grid file promises {q} centers, found {len(centers)}")
    return ChromaGrid(centers, float(step_s))


# ------------------------------------------------------------------- manifests

def write_manifest(path, meta: dict, pairs: list[tuple[str, str]]) -> None:
    header = "# " + " ".join(f"{k}={v}" for k, v in meta.items())
    lines = [header] + [f"{rgb} {label}" for rgb, label in pairs]
    Path(path).write_text("\n".join(lines) + "\n")


def read_manifest(path) -> tuple[dict[str, str], list[tuple[str, str]]]:
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].startswith("# "):
        raise ValueError(f"{path} is missing the manifest header")
    meta = dict(item.split("=", 1) for item in lines[0][2:].split())
    pairs = []
    for line in lines[1:]:
        if line.strip():
            rgb, label = line.split()
            pairs.append((rgb, label))
    return meta, pairs


# ----------------------------------------------------------------- run configs

def parse_run_config(text: str) -> dict:
    """Parse key = value lines; unknown keys are rejected, missing keys take
    their defaults."""
    values = {k: default for k, (_, default) in RUN_CONFIG_SCHEMA.items()}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key or not value:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        if key not in RUN_CONFIG_SCHEMA:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        parser = RUN_CONFIG_SCHEMA[key][0]
        try:
            values[key] = parser(value)
        except ValueError as exc:
            raise ValueError(f"line {lineno}: bad value for {key!r}: {value!r}") from exc
    if values["decode_mode"] not in ("mode", "mean", "annealed"):
        raise ValueError(f"decode_mode must be mode|mean|annealed, got {values['decode_mode']!r}")
    return values


def read_run_config(path) -> dict:
    return parse_run_config(Path(path).read_text())


def format_run_config(values: dict) -> str:
    return "".join(f"{k} = {values[k]}\n" for k in RUN_CONFIG_SCHEMA if k in values)
