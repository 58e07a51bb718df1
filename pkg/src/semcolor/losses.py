"""Training objectives: rebalanced colorization CE, weighted segmentation CE,
and their weighted combination. Every loss returns its analytic gradient
with respect to the pre-softmax logits.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .quantizer import RebalanceWeights
from .validation import check_label_map, check_logits_map, check_same_shape


@dataclass(frozen=True)
class LossWeights:
    """Scalar weights balancing the colorization and segmentation losses."""

    lambda_c: float = 1.0
    lambda_s: float = 100.0

    def __post_init__(self):
        if self.lambda_c < 0 or self.lambda_s < 0:
            raise ValueError("loss weights must be non-negative")
        if self.lambda_c == 0 and self.lambda_s == 0:
            raise ValueError("at least one loss weight must be positive")


def _pixel_weights(target: np.ndarray, weights) -> np.ndarray:
    """Per-pixel rebalance factor: weight of the target's argmax bin."""
    if weights is None:
        return np.ones(target.shape[:-1])
    w = weights.w if isinstance(weights, RebalanceWeights) else np.asarray(weights)
    if w.shape != (target.shape[-1],):
        raise ValueError(
            f"weight vector of length {w.shape} does not match {target.shape[-1]} bins"
        )
    return w[np.argmax(target, axis=-1)]


def colorization_loss(
    pred: np.ndarray, target: np.ndarray, weights=None
) -> tuple[float, np.ndarray]:
    """Class-rebalanced multinomial cross entropy over color bins.

    pred and target are (..., Q) distribution maps; pred must come from a
    softmax, and the returned gradient is taken with respect to the logits
    behind it. weights is a RebalanceWeights (or bare vector) looked up at
    the argmax bin of each target row; None means unit weights. Zero-target
    bins contribute exactly zero, with no clipping constant; a zero pred at
    a positive target yields an infinite loss.
    """
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    check_same_shape(pred, target, "pred and target distributions")
    v = _pixel_weights(target, weights)
    with np.errstate(divide="ignore"):
        logp = np.log(np.where(target > 0, pred, 1.0))
    loss = -float((v * np.where(target > 0, target * logp, 0.0).sum(axis=-1)).sum())
    grad = v[..., None] * (pred - target)
    return loss, grad


def colorization_loss_from_logits(
    logits: np.ndarray, target: np.ndarray, weights=None
) -> tuple[float, np.ndarray]:
    """Same objective evaluated from raw logits via log-sum-exp.

    Numerically safe route used during training: the log probabilities are
    formed as logits - logsumexp(logits), so no probability is ever zero.
    """
    logits = np.asarray(logits, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    check_same_shape(logits, target, "logits and target distributions")
    v = _pixel_weights(target, weights)
    shift = logits - logits.max(axis=-1, keepdims=True)
    lse = np.log(np.exp(shift).sum(axis=-1, keepdims=True))
    logp = shift - lse
    loss = -float((v * (target * logp).sum(axis=-1)).sum())
    grad = v[..., None] * (np.exp(logp) - target)
    return loss, grad


def segmentation_loss(
    logits: np.ndarray, labels: np.ndarray, weights: np.ndarray | None = None
) -> tuple[float, np.ndarray]:
    """Weighted softmax cross entropy for per-pixel class labels.

    logits is (H, W, C), labels (H, W) integer class indices, weights a
    strictly positive per-class vector (None for unit weights). Stable via
    max-shift; returns (loss, gradient wrt logits).
    """
    logits = check_logits_map(logits)
    n_classes = logits.shape[-1]
    labels = check_label_map(labels, n_classes)
    check_same_shape(logits[..., 0], labels, "logits and labels")
    if weights is None:
        v = np.ones(labels.shape)
    else:
        weights = np.asarray(weights, dtype=np.float64)
        if weights.shape != (n_classes,) or np.any(weights <= 0):
            raise ValueError(
                f"class weights must be a positive vector of length {n_classes}"
            )
        v = weights[labels]

    shift = logits - logits.max(axis=-1, keepdims=True)
    logp = shift - np.log(np.exp(shift).sum(axis=-1, keepdims=True))
    picked = np.take_along_axis(logp, labels[..., None], axis=-1)[..., 0]
    loss = -float((v * picked).sum())

    onehot = np.zeros_like(logits)
    np.put_along_axis(onehot, labels[..., None], 1.0, axis=-1)
    grad = v[..., None] * (np.exp(logp) - onehot)
    return loss, grad


def total_loss(lc: float, ls: float, lw: LossWeights) -> float:
    """Weighted combination of the two objectives."""
    if not (np.isfinite(lc) and np.isfinite(ls)):
        raise ValueError("loss terms must be finite")
    return lw.lambda_c * lc + lw.lambda_s * ls
