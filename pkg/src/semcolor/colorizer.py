"""End-to-end colorizer estimator: fit on a labeled Lab corpus, predict RGB
colorizations of grayscale inputs.

fit wires the whole training pipeline: build the chroma bin grid, estimate
the color prior and rebalance weights, soft-encode per-sample color targets
at the color-head resolution, and run joint SGD over the colorization and
segmentation objectives. predict runs the trained network and carries the
decoded low-resolution chroma to full resolution, by default through the
joint bilateral upsampler guided by the input lightness.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator

from .bilateral import BilateralParams
from .color import gray_to_lightness, lab_to_rgb
from .losses import LossWeights
from .metrics import IoUReport, mean_iou
from .network import ToyNet, ToyNetConfig, TrainingExample
from .quantizer import ChromaQuantizer, rebalance_weights
from .synth import SynthSample


def block_mean(plane: np.ndarray, factor: int) -> np.ndarray:
    """Average non-overlapping factor x factor blocks of (H, W, C) data."""
    h, w = plane.shape[:2]
    if h % factor or w % factor:
        raise ValueError(f"{plane.shape[:2]} not divisible by block factor {factor}")
    view = plane.reshape(h // factor, factor, w // factor, factor, -1)
    out = view.mean(axis=(1, 3))
    return out[..., 0] if plane.ndim == 2 else out


class SemanticColorizer(BaseEstimator):
    """Two-branch colorization network with semantic supervision.

    Parameters mirror the training pipeline: network widths and seed,
    SGD schedule, loss balance, quantizer settings, and the inference-time
    decode and upsampling behavior.
    """

    def __init__(
        self,
        input_size: int = 32,
        trunk_channels: tuple[int, ...] = (8, 16, 16, 32),
        head_channels: tuple[int, ...] = (32, 32, 32),
        n_classes: int = 4,
        color_head_stride: int = 4,
        seg_deconv_channels: int = 4,
        epochs: int = 16,
        lr: float = 2e-4,
        lambda_c: float = 1.0,
        lambda_s: float = 100.0,
        grid_step: float = 10.0,
        gamut_samples: int = 18,
        k_neighbors: int = 5,
        encode_sigma: float = 5.0,
        mix_lambda: float = 0.5,
        decode_mode: str = "annealed",
        temperature: float = 0.38,
        sigma_s: float = 3.0,
        sigma_r: float = 15.0,
        use_jbu: bool = True,
        seed: int = 0,
    ):
        self.input_size = input_size
        self.trunk_channels = trunk_channels
        self.head_channels = head_channels
        self.n_classes = n_classes
        self.color_head_stride = color_head_stride
        self.seg_deconv_channels = seg_deconv_channels
        self.epochs = epochs
        self.lr = lr
        self.lambda_c = lambda_c
        self.lambda_s = lambda_s
        self.grid_step = grid_step
        self.gamut_samples = gamut_samples
        self.k_neighbors = k_neighbors
        self.encode_sigma = encode_sigma
        self.mix_lambda = mix_lambda
        self.decode_mode = decode_mode
        self.temperature = temperature
        self.sigma_s = sigma_s
        self.sigma_r = sigma_r
        self.use_jbu = use_jbu
        self.seed = seed

    # ------------------------------------------------------------------- fit

    def _as_sample(self, item) -> SynthSample:
        if isinstance(item, SynthSample):
            return item
        lab, labels = item
        return SynthSample(np.asarray(lab, dtype=np.float64), np.asarray(labels))

    def prepare_examples(self, samples) -> list[TrainingExample]:
        """Turn (lab, labels) samples into network-ready training examples:
        lightness plane, soft color target at the color-head resolution,
        and the label map."""
        self._require_fitted_quantizer()
        out = []
        for item in samples:
            s = self._as_sample(item)
            if s.lab.shape[:2] != (self.input_size, self.input_size):
                raise ValueError(
                    f"sample resolution {s.lab.shape[:2]} does not match "
                    f"input_size {self.input_size}"
                )
            ab_low = block_mean(s.lab[..., 1:], self.color_head_stride)
            target = self.quantizer_.transform(ab_low)
            out.append(TrainingExample(s.lab[..., 0], target, s.labels))
        return out

    def fit(self, X, y=None, holdout=None):
        """X is a sequence of SynthSample or (lab, labels) pairs at the
        configured input size; holdout, if given, is scored after training
        and stored on the report."""
        samples = [self._as_sample(item) for item in X]
        if not samples:
            raise ValueError("fit requires at least one sample")

        self.quantizer_ = ChromaQuantizer(
            grid_step=self.grid_step,
            gamut_samples=self.gamut_samples,
            k_neighbors=self.k_neighbors,
            encode_sigma=self.encode_sigma,
            mix_lambda=self.mix_lambda,
            decode_mode=self.decode_mode,
            temperature=self.temperature,
        ).fit([s.lab for s in samples])

        config = ToyNetConfig(
            input_size=self.input_size,
            trunk_channels=tuple(self.trunk_channels),
            head_channels=tuple(self.head_channels),
            n_classes=self.n_classes,
            q=self.quantizer_.grid_.q,
            seed=self.seed,
            color_head_stride=self.color_head_stride,
            seg_deconv_channels=self.seg_deconv_channels,
        )
        self.net_ = ToyNet.build(config)

        # object-category rarity weights for the segmentation loss, built
        # the same way as the color rebalance weights
        freq = np.bincount(
            np.concatenate([s.labels.ravel() for s in samples]),
            minlength=self.n_classes,
        ).astype(np.float64)
        freq /= freq.sum()
        self.seg_class_weights_ = rebalance_weights(freq, self.mix_lambda).w

        # the loss formulas sum over pixels; fold the per-branch pixel
        # counts into the lambdas so the configured lambda_s:lambda_c ratio
        # weighs mean losses (color head and seg head run at different
        # resolutions, and the published ratio assumes comparable scales)
        n_color_px = config.color_resolution**2
        n_seg_px = config.input_size**2
        loss_weights = LossWeights(
            self.lambda_c / n_color_px, self.lambda_s / n_seg_px
        )

        train_examples = self.prepare_examples(samples)
        holdout_examples = self.prepare_examples(holdout) if holdout else None
        self.report_ = self.net_.train(
            train_examples,
            epochs=self.epochs,
            lr=self.lr,
            loss_weights=loss_weights,
            rebalance=self.quantizer_.weights_,
            seg_weights=self.seg_class_weights_,
            holdout=holdout_examples,
        )
        return self

    # --------------------------------------------------------------- predict

    def _lightness_of(self, image: np.ndarray) -> np.ndarray:
        image = np.asarray(image)
        if image.ndim != 2:
            raise ValueError(f"expected a 2-d grayscale image, got {image.shape}")
        if image.dtype == np.uint8:
            return gray_to_lightness(image)
        return image.astype(np.float64)

    def predict(self, image: np.ndarray) -> np.ndarray:
        """Colorize a grayscale image (uint8 gray levels or float Lab
        lightness); returns an RGB uint8 image of the same resolution."""
        self._require_fitted()
        lab = self.net_.infer_color(
            self._lightness_of(image),
            self.quantizer_.grid_,
            decode_mode=self.decode_mode,
            temperature=self.temperature,
            params=BilateralParams(self.sigma_s, self.sigma_r),
            use_jbu=self.use_jbu,
        )
        return lab_to_rgb(lab)

    def predict_labels(self, image: np.ndarray) -> np.ndarray:
        """Segmentation head output: per-pixel argmax class at input size."""
        self._require_fitted()
        _, seg = self.net_.forward(self._lightness_of(image))
        return seg.argmax(axis=-1)

    # ------------------------------------------------------------ evaluation

    def holdout_color_ce(self, samples) -> float:
        """Mean per-pixel colorization cross entropy on held-out samples."""
        self._require_fitted()
        return self.net_.holdout_color_ce(self.prepare_examples(samples))

    def holdout_miou(self, samples) -> IoUReport:
        """Pooled mean IoU of the segmentation head over held-out samples."""
        self._require_fitted()
        preds, gts = [], []
        for item in samples:
            s = self._as_sample(item)
            preds.append(self.predict_labels(s.lab[..., 0]))
            gts.append(s.labels)
        return mean_iou(np.concatenate(preds), np.concatenate(gts), self.n_classes)

    def _require_fitted_quantizer(self):
        if not hasattr(self, "quantizer_"):
            raise RuntimeError("SemanticColorizer is not fitted; call fit first")

    def _require_fitted(self):
        self._require_fitted_quantizer()
        if not hasattr(self, "net_"):
            raise RuntimeError("SemanticColorizer is not fitted; call fit first")
