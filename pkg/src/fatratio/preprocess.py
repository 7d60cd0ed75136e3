"""HU windowing and artifact cleanup (binary opening), slice by slice."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import InvalidConfigError
from .volume_io import FOREGROUND, BinaryMask, HuVolume


@dataclass(frozen=True)
class ThresholdConfig:
    """Inclusive HU window selecting fat."""

    hu_min: int = -150
    hu_max: int = 0

    def __post_init__(self):
        if self.hu_min > self.hu_max:
            raise InvalidConfigError(f"hu_min {self.hu_min} > hu_max {self.hu_max}")


@dataclass(frozen=True)
class MorphologyConfig:
    """Opening parameters; the structuring element is always the 3x3 square."""

    erosion_iterations: int = 1
    dilation_iterations: int = 1

    def __post_init__(self):
        if self.erosion_iterations < 0 or self.dilation_iterations < 0:
            raise InvalidConfigError("morphology iterations must be >= 0")

    @classmethod
    def disabled(cls) -> "MorphologyConfig":
        return cls(0, 0)


SQUARE_3X3 = np.ones((3, 3), dtype=bool)


def threshold_fat(v: HuVolume, cfg: ThresholdConfig = ThresholdConfig()) -> BinaryMask:
    if cfg.hu_min > cfg.hu_max:
        raise InvalidConfigError(f"hu_min {cfg.hu_min} > hu_max {cfg.hu_max}")
    fat = (v.data >= cfg.hu_min) & (v.data <= cfg.hu_max)
    return BinaryMask(np.where(fat, FOREGROUND, 0).astype(np.uint8), v.spacing_mm)


def open_image(img: np.ndarray, cfg: MorphologyConfig = MorphologyConfig()) -> np.ndarray:
    """Erode then dilate one 2D image; pixels outside the image count as background."""
    fg = np.asarray(img) != 0
    if cfg.erosion_iterations:
        fg = ndimage.binary_erosion(fg, SQUARE_3X3, iterations=cfg.erosion_iterations, border_value=0)
    if cfg.dilation_iterations:
        fg = ndimage.binary_dilation(fg, SQUARE_3X3, iterations=cfg.dilation_iterations, border_value=0)
    return np.where(fg, FOREGROUND, 0).astype(np.uint8)


def open_mask(m: BinaryMask, cfg: MorphologyConfig = MorphologyConfig()) -> BinaryMask:
    if m.data.ndim == 2:
        return BinaryMask(open_image(m.data, cfg), m.spacing_mm)
    out = np.empty_like(m.data)
    for z in range(m.data.shape[2]):
        out[:, :, z] = open_image(m.data[:, :, z], cfg)
    return BinaryMask(out, m.spacing_mm)
