"""Wavelet-domain desnowing toolkit.

A small numerical library for removing synthetic snow from images: a dual-tree
complex wavelet transform with perfect reconstruction, patch-extremum channel
operators, a minimal reverse-mode autodiff core, the three-stage restoration
network built on it, a synthetic snow generator, and a training/eval harness.
"""

from .autodiff import (Parameter, Tape, Tensor, adam_step, backward, conv2d,
                       l1_loss)
from .config import RunConfig, default_config, load_config, paper_config
from .metrics import QualityReport, evaluate_pair, psnr, ssim
from .network import (ModelWeights, NetConfig, dynamic_conv_forward,
                      init_weights, model_forward, parameter_count)
from .pngio import decode_png, encode_png
from .priors import (ChannelMap, PatchSpec, ccl_loss, channel_contrast_report,
                     channel_prior_map)
from .synth import SnowParams, synth_snow
from .training import (PAPER_SCHEDULE, PairSample, TrainConfig, TrainLog,
                       compress_schedule, load_pairs, total_loss, train)
from .wavelets import (ComplexSubband, Pyramid, dtcwt_forward, dwt2, idtcwt,
                       idwt2, oriented_grating, shift_invariance_score,
                       subband_energies)
from .weights_io import load_weights, save_weights, weights_from_arrays

__all__ = [
    "Tensor", "Parameter", "Tape", "backward", "adam_step", "conv2d",
    "l1_loss",
    "Pyramid", "ComplexSubband", "dtcwt_forward", "idtcwt", "dwt2", "idwt2",
    "oriented_grating", "shift_invariance_score", "subband_energies",
    "PatchSpec", "ChannelMap", "channel_prior_map", "ccl_loss",
    "channel_contrast_report",
    "QualityReport", "psnr", "ssim", "evaluate_pair",
    "NetConfig", "ModelWeights", "dynamic_conv_forward", "init_weights",
    "model_forward", "parameter_count",
    "decode_png", "encode_png",
    "SnowParams", "synth_snow",
    "TrainConfig", "TrainLog", "PairSample", "PAPER_SCHEDULE",
    "compress_schedule", "total_loss", "train", "load_pairs",
    "RunConfig", "default_config", "paper_config", "load_config",
    "save_weights", "load_weights", "weights_from_arrays",
]
