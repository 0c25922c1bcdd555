"""Conditional pixel synthesis for multi-resolution image time series.

Given a low-resolution image at a target time and a high-resolution image of
the same location at another time, the generator synthesizes the
high-resolution image at the target time. The package bundles the model,
its adversarial training loop, sliding-window inference, full-reference
image quality metrics, and a deterministic synthetic dataset generator for
small-scale verification.
"""

__version__ = "0.1.0"

from .raster import RasterImage
from .data import (
    DatasetManifest,
    PatchSpec,
    TripletSample,
    assemble_input,
    iterate_triplets,
    load_manifest,
    normalize_time,
    random_patch_crop,
    resample_nearest,
)
from .generator import Generator, GeneratorConfig
from .discriminator import Discriminator

__all__ = [
    "Generator",
    "GeneratorConfig",
    "Discriminator",
    "RasterImage",
    "DatasetManifest",
    "PatchSpec",
    "TripletSample",
    "assemble_input",
    "iterate_triplets",
    "load_manifest",
    "normalize_time",
    "random_patch_crop",
    "resample_nearest",
]
