"""Input validation helpers shared across the package.

Each check raises ValueError with a short diagnostic; they exist so the
public entry points fail loudly on malformed arrays instead of producing
silently wrong numbers.
"""

from __future__ import annotations

import numpy as np


def check_rgb_image(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"expected an RGB image of shape (H, W, 3), got {img.shape}")
    if img.dtype != np.uint8:
        raise ValueError(f"expected uint8 RGB data, got dtype {img.dtype}")
    return img


def check_lab_image(img: np.ndarray) -> np.ndarray:
    img = np.asarray(img)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"expected a Lab image of shape (H, W, 3), got {img.shape}")
    if not np.all(np.isfinite(img)):
        raise ValueError("Lab image contains non-finite values")
    return img


def check_plane(plane: np.ndarray, name: str = "plane") -> np.ndarray:
    plane = np.asarray(plane, dtype=np.float64)
    if plane.ndim != 2:
        raise ValueError(f"expected a 2-d {name}, got shape {plane.shape}")
    if not np.all(np.isfinite(plane)):
        raise ValueError(f"{name} contains non-finite values")
    return plane


def check_chroma_planes(chroma: np.ndarray) -> np.ndarray:
    chroma = np.asarray(chroma, dtype=np.float64)
    if chroma.ndim != 3 or chroma.shape[2] < 1:
        raise ValueError(
            f"expected chroma planes of shape (H, W, C), got {chroma.shape}"
        )
    if not np.all(np.isfinite(chroma)):
        raise ValueError("chroma planes contain non-finite values")
    return chroma


def check_distribution_map(
    dist: np.ndarray, n_bins: int | None = None, atol: float = 1e-4
) -> np.ndarray:
    """Validate a per-pixel probability map of shape (..., Q)."""
    dist = np.asarray(dist, dtype=np.float64)
    if dist.ndim < 1:
        raise ValueError("distribution map must have a trailing bin axis")
    if n_bins is not None and dist.shape[-1] != n_bins:
        raise ValueError(
            f"distribution has {dist.shape[-1]} bins, expected {n_bins}"
        )
    if np.any(dist < -atol) or np.any(dist > 1.0 + atol):
        raise ValueError("distribution values outside [0, 1]")
    sums = dist.sum(axis=-1)
    if not np.allclose(sums, 1.0, atol=atol, rtol=0.0):
        worst = float(np.abs(sums - 1.0).max())
        raise ValueError(f"distribution rows not normalized (max |sum-1| = {worst:g})")
    return dist


def check_label_map(labels: np.ndarray, n_classes: int) -> np.ndarray:
    labels = np.asarray(labels)
    if labels.ndim != 2:
        raise ValueError(f"expected a 2-d label map, got shape {labels.shape}")
    if not np.issubdtype(labels.dtype, np.integer):
        raise ValueError(f"label map must be integer typed, got {labels.dtype}")
    if labels.size and (labels.min() < 0 or labels.max() >= n_classes):
        raise ValueError(
            f"labels must lie in [0, {n_classes}), got range "
            f"[{labels.min()}, {labels.max()}]"
        )
    return labels


def check_logits_map(logits: np.ndarray) -> np.ndarray:
    logits = np.asarray(logits, dtype=np.float64)
    if logits.ndim != 3:
        raise ValueError(f"expected logits of shape (H, W, C), got {logits.shape}")
    if not np.all(np.isfinite(logits)):
        raise ValueError("logits contain non-finite values")
    return logits


def check_same_shape(a: np.ndarray, b: np.ndarray, what: str = "inputs") -> None:
    if np.shape(a) != np.shape(b):
        raise ValueError(f"{what} have mismatched shapes {np.shape(a)} vs {np.shape(b)}")
