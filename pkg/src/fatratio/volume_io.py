"""NIfTI-1 I/O for HU volumes and binary masks, plus axial slice selection.

Arrays are stored in NIfTI order ``(x, y, z)``. The 2D algorithms work on
row-major images indexed ``img[y, x]``; :func:`slice_image` does that
conversion for one axial slice.
"""
from __future__ import annotations

import re
import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import nibabel as nib
import numpy as np

from .errors import (
    InvalidConfigError,
    MalformedHeaderError,
    SliceIndexError,
    TruncatedVolumeError,
    UnsupportedDatatypeError,
)

HU_MIN, HU_MAX = -32768, 32767
FOREGROUND = 255

Spacing = tuple[float, float, float]


def _check_spacing(spacing) -> Spacing:
    sp = tuple(float(s) for s in spacing)
    if len(sp) != 3 or not all(np.isfinite(s) and s > 0 for s in sp):
        raise InvalidConfigError(f"spacing must be three positive finite values, got {spacing!r}")
    return sp  # type: ignore[return-value]


@dataclass(frozen=True)
class HuVolume:
    """Hounsfield-unit samples, ``data[x, y, z]`` as int16, spacing in mm."""

    data: np.ndarray
    spacing_mm: Spacing = (1.0, 1.0, 1.0)

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim == 2:
            data = data[:, :, np.newaxis]
        if data.ndim != 3 or min(data.shape) < 1:
            raise InvalidConfigError(f"volume must be 3D and non-empty, got shape {data.shape}")
        if data.dtype != np.int16:
            if not np.issubdtype(data.dtype, np.integer):
                raise UnsupportedDatatypeError(f"HU data must be integer, got {data.dtype}")
            if data.size and (data.min() < HU_MIN or data.max() > HU_MAX):
                raise UnsupportedDatatypeError("HU values outside the signed 16-bit range")
            data = data.astype(np.int16)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "spacing_mm", _check_spacing(self.spacing_mm))

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.data.shape  # type: ignore[return-value]

    @property
    def nz(self) -> int:
        return self.data.shape[2]


@dataclass(frozen=True)
class BinaryMask:
    """Mask with values in {0, 255}; 2D ``(nx, ny)`` or 3D ``(nx, ny, nz)``."""

    data: np.ndarray
    spacing_mm: Spacing = (1.0, 1.0, 1.0)

    def __post_init__(self):
        data = np.asarray(self.data)
        if data.ndim not in (2, 3):
            raise InvalidConfigError(f"mask must be 2D or 3D, got shape {data.shape}")
        if data.dtype == bool:
            data = np.where(data, FOREGROUND, 0).astype(np.uint8)
        values = np.unique(data)
        if not np.isin(values, (0, FOREGROUND)).all():
            raise UnsupportedDatatypeError(f"mask values must be 0 or 255, found {values[:8].tolist()}")
        object.__setattr__(self, "data", data.astype(np.uint8, copy=False))
        object.__setattr__(self, "spacing_mm", _check_spacing(self.spacing_mm))

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def count(self) -> int:
        return int(np.count_nonzero(self.data))


@dataclass(frozen=True)
class SliceSelector:
    """Which axial slices to process. ``z_end`` is inclusive."""

    mode: str = "all"
    z_start: int = 0
    z_end: int = 0

    @classmethod
    def single(cls, z: int) -> "SliceSelector":
        return cls("single-index", z, z)

    @classmethod
    def range(cls, z_start: int, z_end: int) -> "SliceSelector":
        return cls("index-range", z_start, z_end)

    @classmethod
    def parse(cls, text: str | None) -> "SliceSelector":
        """Parse ``"z"``, ``"z0:z1"`` (inclusive) or ``None``/``"all"``."""
        if text is None or text == "all":
            return cls()
        m = re.fullmatch(r"\s*(\d+)\s*(?::\s*(\d+)\s*)?", text)
        if not m:
            raise InvalidConfigError(f"bad slice selector {text!r}; expected 'z' or 'z0:z1'")
        if m.group(2) is None:
            return cls.single(int(m.group(1)))
        return cls.range(int(m.group(1)), int(m.group(2)))

    def indices(self, nz: int) -> range:
        if self.mode == "all":
            return range(nz)
        if self.mode not in ("single-index", "index-range"):
            raise InvalidConfigError(f"unknown selector mode {self.mode!r}")
        if not 0 <= self.z_start <= self.z_end < nz:
            raise SliceIndexError(f"slices {self.z_start}..{self.z_end} outside [0, {nz})")
        return range(self.z_start, self.z_end + 1)


Volume = Union[HuVolume, BinaryMask]


def _read_array(img) -> np.ndarray:
    try:
        return np.asanyarray(img.dataobj)
    except (EOFError, zlib.error) as exc:
        raise TruncatedVolumeError(f"truncated image data: {exc}") from exc
    except (OSError, ValueError) as exc:
        if "bytes" in str(exc) or "truncat" in str(exc).lower() or "compressed file" in str(exc):
            raise TruncatedVolumeError(f"truncated image data: {exc}") from exc
        raise MalformedHeaderError(str(exc)) from exc


def _open(path) -> tuple[object, np.ndarray, Spacing]:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    try:
        img = nib.load(str(path))
    except (nib.filebasedimages.ImageFileError, EOFError, zlib.error, ValueError, OSError) as exc:
        raise MalformedHeaderError(f"{path}: {exc}") from exc
    if not isinstance(img, nib.Nifti1Image):
        raise MalformedHeaderError(f"{path}: not a NIfTI-1 image")
    data = _read_array(img)
    while data.ndim > 3 and data.shape[-1] == 1:
        data = data[..., 0]
    if data.ndim == 2:
        data = data[:, :, np.newaxis]
    if data.ndim != 3:
        raise UnsupportedDatatypeError(f"{path}: expected a 3D volume, got shape {data.shape}")
    zooms = tuple(float(z) for z in img.header.get_zooms()[:3])
    zooms = zooms + (1.0,) * (3 - len(zooms))
    zooms = tuple(z if np.isfinite(z) and z > 0 else 1.0 for z in zooms)
    return img, data, zooms  # type: ignore[return-value]


def load_volume(path) -> HuVolume:
    """Read a NIfTI-1 file as int16 HU values, applying stored scale/intercept."""
    _, data, spacing = _open(path)
    if data.dtype.kind not in "iuf" or data.dtype.names is not None:
        raise UnsupportedDatatypeError(f"{path}: unsupported datatype {data.dtype}")
    if data.dtype.kind == "f":
        if not np.isfinite(data).all():
            raise UnsupportedDatatypeError(f"{path}: non-finite voxel values")
        data = np.rint(data)
    if data.size and (data.min() < HU_MIN or data.max() > HU_MAX):
        raise UnsupportedDatatypeError(f"{path}: values do not fit signed 16-bit after scaling")
    return HuVolume(data.astype(np.int16), spacing)


def load_mask(path) -> BinaryMask:
    _, data, spacing = _open(path)
    if data.dtype.kind not in "iuf":
        raise UnsupportedDatatypeError(f"{path}: unsupported datatype {data.dtype}")
    return BinaryMask(np.asarray(data), spacing)


def save_volume(v: Volume, path) -> None:
    """Write a volume (int16) or mask (uint8) as NIfTI-1; ``.gz`` compresses."""
    data = v.data
    if data.ndim == 2:
        data = data[:, :, np.newaxis]
    dtype = np.uint8 if isinstance(v, BinaryMask) else np.int16
    img = nib.Nifti1Image(data.astype(dtype), np.diag([*v.spacing_mm, 1.0]))
    img.header.set_data_dtype(dtype)
    img.header.set_zooms(v.spacing_mm)
    img.header.set_xyzt_units("mm")
    nib.save(img, str(path))


def extract_slices(v: Volume, sel: SliceSelector) -> Volume:
    """Sub-volume holding exactly the selected z-slices, in order."""
    idx = sel.indices(v.data.shape[2])
    return type(v)(v.data[:, :, idx.start:idx.stop].copy(), v.spacing_mm)


def slice_image(v: Volume, z: int = 0) -> np.ndarray:
    """Axial slice ``z`` as a row-major image, ``img[y, x]``."""
    data = v.data if v.data.ndim == 3 else v.data[:, :, np.newaxis]
    if not 0 <= z < data.shape[2]:
        raise SliceIndexError(f"slice {z} outside [0, {data.shape[2]})")
    return np.ascontiguousarray(data[:, :, z].T)


def stack_images(images) -> np.ndarray:
    """Inverse of :func:`slice_image` over a sequence of row-major images."""
    return np.stack([np.asarray(im).T for im in images], axis=2)
