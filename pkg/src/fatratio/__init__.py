"""Visceral-to-subcutaneous fat ratio from CT by polar ray casting."""

__version__ = "0.1.0"

from .fatseg import (  # noqa: E402
    FatMeasurement,
    Label,
    SweepConfig,
    SweepTrace,
    classify_by_ratio,
    compute_subcut_area,
    fat_ratio_2d,
    fat_ratio_3d,
    subcut_mask,
    total_fat_area,
)
from .preprocess import MorphologyConfig, ThresholdConfig, open_mask, threshold_fat  # noqa: E402
from .volume_io import BinaryMask, HuVolume, SliceSelector, extract_slices, load_mask, load_volume, save_volume  # noqa: E402
