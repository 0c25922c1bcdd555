"""Raster container and pixel-range conventions.

Files on disk store 8-bit RGB in the unit range [0, 1]; the model works in
the signed range [-1, 1]. Conversion is the linear map 2v - 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from PIL import Image

UNIT = "unit"
SIGNED = "signed"

_RANGE_BOUNDS = {UNIT: (0.0, 1.0), SIGNED: (-1.0, 1.0)}


@dataclass
class RasterImage:
    """A C x H x W array of pixel values with a declared value range."""

    values: np.ndarray
    range_tag: str = UNIT

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float32)
        if self.values.ndim != 3:
            raise ValueError(f"expected a C x H x W array, got shape {self.values.shape}")
        c, h, w = self.values.shape
        if c < 1 or h < 1 or w < 1:
            raise ValueError(f"degenerate raster shape {self.values.shape}")
        if self.range_tag not in _RANGE_BOUNDS:
            raise ValueError(f"unknown range tag {self.range_tag!r}")
        lo, hi = _RANGE_BOUNDS[self.range_tag]
        vmin, vmax = float(self.values.min()), float(self.values.max())
        if vmin < lo - 1e-6 or vmax > hi + 1e-6:
            raise ValueError(
                f"values [{vmin:.4f}, {vmax:.4f}] outside declared {self.range_tag} range"
            )

    @property
    def channels(self) -> int:
        return self.values.shape[0]

    @property
    def height(self) -> int:
        return self.values.shape[1]

    @property
    def width(self) -> int:
        return self.values.shape[2]

    def to_signed(self) -> "RasterImage":
        if self.range_tag == SIGNED:
            return self
        return RasterImage(2.0 * self.values - 1.0, SIGNED)

    def to_unit(self) -> "RasterImage":
        if self.range_tag == UNIT:
            return self
        return RasterImage((self.values + 1.0) / 2.0, UNIT)


def unit_to_signed(values: np.ndarray) -> np.ndarray:
    return 2.0 * np.asarray(values, dtype=np.float32) - 1.0


def signed_to_unit(values: np.ndarray) -> np.ndarray:
    return (np.asarray(values, dtype=np.float32) + 1.0) / 2.0


def load_png(path) -> RasterImage:
    """Read an 8-bit RGB PNG as a unit-range raster."""
    with Image.open(path) as img:
        arr = np.asarray(img.convert("RGB"), dtype=np.float32) / 255.0
    return RasterImage(arr.transpose(2, 0, 1), UNIT)


def save_png(raster: RasterImage, path) -> None:
    """Write a raster as an 8-bit RGB PNG (values quantized to 1/255 steps)."""
    unit = raster.to_unit().values
    if unit.shape[0] != 3:
        raise ValueError(f"PNG output needs 3 channels, got {unit.shape[0]}")
    data = np.round(np.clip(unit, 0.0, 1.0) * 255.0).astype(np.uint8)
    Image.fromarray(data.transpose(1, 2, 0), mode="RGB").save(path)
