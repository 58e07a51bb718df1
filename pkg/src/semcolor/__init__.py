"""Semantic-guided image colorization toolkit.

A desk-scale colorization pipeline: CIE Lab color handling, chroma
quantization with soft encoding and rarity rebalancing, joint multi-task
training of a two-branch network (colorization + semantic segmentation),
and joint bilateral upsampling for sharp-edged full-resolution color.
"""

from .bilateral import (
    BilateralParams,
    bilinear_resize,
    joint_bilateral_filter,
    joint_bilateral_upsample,
)
from .color import (
    gray_to_lightness,
    lab_to_rgb,
    merge_channels,
    rgb_to_lab,
    split_channels,
)
from .colorizer import SemanticColorizer
from .losses import (
    LossWeights,
    colorization_loss,
    segmentation_loss,
    total_loss,
)
from .metrics import IoUReport, mean_iou, psnr
from .network import ToyNet, ToyNetConfig, TrainingExample, TrainReport
from .quantizer import (
    ChromaGrid,
    ChromaQuantizer,
    RebalanceWeights,
    build_grid,
    decode,
    empirical_prior,
    encode_soft,
    rebalance_weights,
)
from .synth import SynthSample, SynthSpec, generate

__version__ = "0.1.0"
