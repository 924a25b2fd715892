"""Haze transfer network and test-time adaptation.

Images are float64 arrays of shape (H, W, 3) with values in [0, 1]; H and W
must be multiples of 8 (of ``Phatnet.resolution_multiple`` for transfer).
"""

import json

from ._phatnet import (
    CheckpointError,
    ConfigError,
    Dehazer,
    DimensionError,
    DivergenceError,
    FinetuneSet,
    IoError,
    ParameterError,
    PhatError,
    Phatnet,
    __version__,
    adapt,
    build_finetune_set,
    compose_asm,
    psnr,
    read_image,
    ssim,
    write_image,
)
from . import _phatnet


def synth_domain(**spec):
    """Synthetic (clean, hazy) pairs; keyword arguments follow the domain JSON spec."""
    return _phatnet.synth_domain(json.dumps(spec))


def train_phatnet(hazy, clean, **config):
    """Train on paired image lists; keyword arguments follow the training config JSON."""
    return _phatnet.train_phatnet(list(hazy), list(clean), json.dumps(config))


__all__ = [
    "CheckpointError",
    "ConfigError",
    "Dehazer",
    "DimensionError",
    "DivergenceError",
    "FinetuneSet",
    "IoError",
    "ParameterError",
    "PhatError",
    "Phatnet",
    "__version__",
    "adapt",
    "build_finetune_set",
    "compose_asm",
    "psnr",
    "read_image",
    "ssim",
    "synth_domain",
    "train_phatnet",
    "write_image",
]
