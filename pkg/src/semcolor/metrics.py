"""Quantitative measures: PSNR between 8-bit images and mean IoU between
label maps."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .validation import check_label_map, check_same_shape


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    """Peak signal-to-noise ratio in dB over all channels and pixels.

    Identical images return math.inf (the saturated flag) rather than a
    finite number from an epsilon.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    check_same_shape(a, b, "images")
    mse = float(((a.astype(np.float64) - b.astype(np.float64)) ** 2).mean())
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(255.0**2 / mse)


@dataclass(frozen=True)
class IoUReport:
    """Per-class intersection over union; classes absent from both maps are
    NaN and excluded from the mean."""

    per_class_iou: np.ndarray
    mean_iou: float


def mean_iou(pred: np.ndarray, gt: np.ndarray, n_classes: int) -> IoUReport:
    if n_classes < 1:
        raise ValueError("n_classes must be at least 1")
    pred = check_label_map(pred, n_classes)
    gt = check_label_map(gt, n_classes)
    check_same_shape(pred, gt, "label maps")
    per_class = np.full(n_classes, np.nan)
    for c in range(n_classes):
        p = pred == c
        g = gt == c
        union = int((p | g).sum())
        if union:
            per_class[c] = (p & g).sum() / union
    present = ~np.isnan(per_class)
    if not present.any():
        raise ValueError("no class present in either label map")
    return IoUReport(per_class, float(per_class[present].mean()))
