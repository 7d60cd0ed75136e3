"""Synthetic CT phantoms with analytic ground truth.

A phantom slice is, from the outside in: air, a skin/body ellipse, an
elliptical subcutaneous fat ring, muscle, and circular visceral fat blobs.
Every pixel takes the tissue of the innermost region containing its center,
so rasterized region counts are exact integers.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .errors import InfeasibleError, InvalidGeometryError
from .volume_io import HuVolume

BLOB_GAP = 2.0  # px between packed blobs and from the ring's inner edge


@dataclass(frozen=True)
class Blob:
    x: float  # offset from the phantom center, px
    y: float
    radius: float


@dataclass(frozen=True)
class ArtifactLine:
    """One-pixel-thick horizontal fat-valued line (scanner table)."""

    row: int
    x_start: int
    x_end: int  # inclusive


@dataclass(frozen=True)
class PhantomSpec:
    width: int = 512
    height: int = 512
    n_slices: int = 1
    ring_inner: tuple[float, float] = (50.0, 50.0)  # semi-axes (a along x, b along y)
    ring_outer: tuple[float, float] = (100.0, 100.0)
    body: Optional[tuple[float, float]] = None  # defaults to ring_outer + 4 px of skin
    blobs: tuple[Blob, ...] = ()
    fat_hu: int = -100
    muscle_hu: int = 40
    air_hu: int = -1000
    skin_hu: int = 20
    noise_sigma: float = 0.0
    seed: int = 0
    artifact_lines: tuple[ArtifactLine, ...] = ()
    center: Optional[tuple[int, int]] = None  # defaults to (width // 2, height // 2)
    spacing_mm: tuple[float, float, float] = (1.0, 1.0, 1.0)

    @property
    def body_axes(self) -> tuple[float, float]:
        if self.body is not None:
            return self.body
        return (self.ring_outer[0] + 4.0, self.ring_outer[1] + 4.0)

    @property
    def center_xy(self) -> tuple[int, int]:
        return self.center if self.center is not None else (self.width // 2, self.height // 2)

    def with_(self, **kw) -> "PhantomSpec":
        d = {f: getattr(self, f) for f in self.__dataclass_fields__}
        d.update(kw)
        return PhantomSpec(**d)


@dataclass
class PhantomTruth:
    analytic_subcut: float
    analytic_visceral: float
    analytic_total: float
    true_ratio: float
    pixels: dict[str, int] = field(default_factory=dict)  # per-region counts, all slices
    raster_ratio: float = 0.0
    geometry: dict = field(default_factory=dict)

    @property
    def fat_pixels(self) -> int:
        return self.pixels["subcut"] + self.pixels["visceral"] + self.pixels.get("artifact", 0)

    def to_dict(self) -> dict:
        return {
            "analytic": {
                "subcut": self.analytic_subcut,
                "visceral": self.analytic_visceral,
                "total": self.analytic_total,
            },
            "true_ratio": self.true_ratio,
            "pixels": dict(self.pixels),
            "fat_pixels": self.fat_pixels,
            "raster_ratio": self.raster_ratio,
            "geometry": self.geometry,
        }


def _ellipse_area(axes) -> float:
    return math.pi * axes[0] * axes[1]


def validate(spec: PhantomSpec) -> None:
    (ia, ib), (oa, ob), (ba, bb) = spec.ring_inner, spec.ring_outer, spec.body_axes
    if spec.width < 1 or spec.height < 1 or spec.n_slices < 1:
        raise InvalidGeometryError("image size and slice count must be positive")
    if not (0 < ia < oa and 0 < ib < ob):
        raise InvalidGeometryError("ring inner semi-axes must be positive and smaller than the outer ones")
    if not (oa <= ba and ob <= bb):
        raise InvalidGeometryError("subcutaneous ring must lie inside the body")
    cx, cy = spec.center_xy
    if not (cx - ba >= 0 and cx + ba < spec.width and cy - bb >= 0 and cy + bb < spec.height):
        raise InvalidGeometryError("body ellipse does not fit in the image")
    lo, hi = -150, 0
    if not lo <= spec.fat_hu <= hi:
        raise InvalidGeometryError("fat_hu must lie in the fat window [-150, 0]")
    for name in ("muscle_hu", "air_hu", "skin_hu"):
        if lo <= getattr(spec, name) <= hi:
            raise InvalidGeometryError(f"{name} must lie outside the fat window [-150, 0]")
    inner_r = min(ia, ib)
    for i, b in enumerate(spec.blobs):
        if b.radius <= 0:
            raise InvalidGeometryError(f"blob {i} radius must be positive")
        if math.hypot(b.x, b.y) + b.radius >= inner_r:
            raise InvalidGeometryError(f"blob {i} is not strictly inside the ring's inner boundary")
        for j, c in enumerate(spec.blobs[:i]):
            if math.hypot(b.x - c.x, b.y - c.y) < b.radius + c.radius:
                raise InvalidGeometryError(f"blobs {j} and {i} overlap")
    for line in spec.artifact_lines:
        if not (0 <= line.row < spec.height and 0 <= line.x_start <= line.x_end < spec.width):
            raise InvalidGeometryError("artifact line outside the image")
        dy = (line.row - cy) / bb
        if abs(dy) <= 1:
            raise InvalidGeometryError("artifact lines must not cross the body")


def render_labels(spec: PhantomSpec) -> np.ndarray:
    """Row-major region map: 0 air, 1 skin, 2 subcut fat, 3 muscle, 4 visceral fat, 5 artifact."""
    validate(spec)
    cx, cy = spec.center_xy
    yy, xx = np.mgrid[0:spec.height, 0:spec.width].astype(float)
    dx, dy = xx - cx, yy - cy

    def inside(axes):
        return (dx / axes[0]) ** 2 + (dy / axes[1]) ** 2 <= 1.0

    labels = np.zeros((spec.height, spec.width), dtype=np.uint8)
    labels[inside(spec.body_axes)] = 1
    labels[inside(spec.ring_outer)] = 2
    ia, ib = spec.ring_inner
    labels[(dx / ia) ** 2 + (dy / ib) ** 2 < 1.0] = 3
    for b in spec.blobs:
        labels[(dx - b.x) ** 2 + (dy - b.y) ** 2 <= b.radius ** 2] = 4
    for line in spec.artifact_lines:
        labels[line.row, line.x_start:line.x_end + 1] = 5
    return labels


REGIONS = {0: "air", 1: "skin", 2: "subcut", 3: "muscle", 4: "visceral", 5: "artifact"}


def generate_phantom(spec: PhantomSpec) -> tuple[HuVolume, PhantomTruth]:
    labels = render_labels(spec)
    hu_of = np.array([spec.air_hu, spec.skin_hu, spec.fat_hu, spec.muscle_hu, spec.fat_hu, spec.fat_hu],
                     dtype=np.int32)
    img = hu_of[labels]
    stack = np.repeat(img.T[:, :, np.newaxis], spec.n_slices, axis=2)
    if spec.noise_sigma > 0:
        rng = np.random.default_rng(spec.seed)
        stack = np.rint(stack + rng.normal(0.0, spec.noise_sigma, stack.shape)).astype(np.int32)
        stack = np.clip(stack, -32768, 32767)
    vol = HuVolume(stack.astype(np.int16), spec.spacing_mm)

    counts = np.bincount(labels.ravel(), minlength=6) * spec.n_slices
    pixels = {name: int(counts[k]) for k, name in REGIONS.items()}
    subcut, visceral, ratio = _analytic(spec)
    n = spec.n_slices
    truth = PhantomTruth(
        analytic_subcut=subcut * n,
        analytic_visceral=visceral * n,
        analytic_total=(subcut + visceral) * n,
        true_ratio=ratio,
        pixels=pixels,
        raster_ratio=pixels["visceral"] / pixels["subcut"],
        geometry=_geometry(spec),
    )
    return vol, truth


def _analytic(spec: PhantomSpec) -> tuple[float, float, float]:
    """Per-slice analytic subcutaneous and visceral areas and their ratio."""
    subcut = _ellipse_area(spec.ring_outer) - _ellipse_area(spec.ring_inner)
    visceral = math.fsum(math.pi * b.radius ** 2 for b in spec.blobs)
    return subcut, visceral, visceral / subcut


def _geometry(spec: PhantomSpec) -> dict:
    d = asdict(spec)
    d["body"] = list(spec.body_axes)
    d["center"] = list(spec.center_xy)
    return d


def spec_from_geometry(d: dict) -> PhantomSpec:
    """Rebuild a spec from the ``geometry`` echo of a truth sidecar."""
    d = dict(d)
    d["blobs"] = tuple(Blob(**b) for b in d.get("blobs", ()))
    d["artifact_lines"] = tuple(ArtifactLine(**a) for a in d.get("artifact_lines", ()))
    for key in ("ring_inner", "ring_outer", "body", "center", "spacing_mm"):
        if d.get(key) is not None:
            d[key] = tuple(d[key])
    return PhantomSpec(**d)


def table_artifacts(spec: PhantomSpec, n_lines: int = 2, gap: int = 6) -> tuple[ArtifactLine, ...]:
    """Horizontal 1-px lines under the body, like a scanner table edge."""
    cx, cy = spec.center_xy
    ba, bb = spec.body_axes
    rows = [int(math.ceil(cy + bb)) + gap * (k + 1) for k in range(n_lines)]
    half = int(ba * 1.2)
    lines = []
    for r in rows:
        if r >= spec.height:
            raise InvalidGeometryError("no room for artifact lines below the body")
        lines.append(ArtifactLine(r, max(cx - half, 0), min(cx + half, spec.width - 1)))
    return tuple(lines)


def _hex_candidates(radius: float, spacing: float) -> list[tuple[float, float]]:
    """Hexagonal lattice points within ``radius`` of the origin, nearest first."""
    pts = []
    n = int(radius / spacing) + 2
    row_h = spacing * math.sqrt(3) / 2
    for j in range(-2 * n, 2 * n + 1):
        for i in range(-n - 1, n + 2):
            x = (i + 0.5 * (j % 2)) * spacing
            y = j * row_h
            if math.hypot(x, y) <= radius:
                pts.append((x, y))
    pts.sort(key=lambda p: (round(math.hypot(*p), 9), math.atan2(p[1], p[0])))
    return pts


def pack_blobs(target_ratio: float, spec: PhantomSpec, max_blobs: int = 400) -> tuple[Blob, ...]:
    """Equal-radius blobs whose analytic area is ``target_ratio`` times the ring area.

    The radius is nudged so the analytic ratio is never below the target
    (floating-point rounding must not flip a ratio sitting on a threshold).
    """
    if not 0 <= target_ratio < 2:
        raise InfeasibleError(f"target ratio must be in [0, 2), got {target_ratio}")
    if target_ratio == 0:
        return ()
    ring = _ellipse_area(spec.ring_outer) - _ellipse_area(spec.ring_inner)
    want = target_ratio * ring
    inner_r = min(spec.ring_inner)
    for n in range(1, max_blobs + 1):
        r = math.sqrt(want / (n * math.pi))
        usable = inner_r - r - BLOB_GAP
        if usable < 0:
            continue
        spots = _hex_candidates(usable, 2 * r + BLOB_GAP)
        if len(spots) < n:
            continue
        # nudge with the same arithmetic the truth uses
        while _analytic(spec.with_(blobs=tuple(Blob(x, y, r) for x, y in spots[:n])))[2] < target_ratio:
            r = math.nextafter(r, math.inf)
        return tuple(Blob(x, y, r) for x, y in spots[:n])
    raise InfeasibleError(f"cannot pack visceral fat for ratio {target_ratio} inside the ring")


def near_threshold_phantom(target_ratio: float, template: PhantomSpec | None = None) -> tuple[HuVolume, PhantomTruth]:
    """Phantom whose analytic ratio is within 1% of ``target_ratio`` (never below it)."""
    if template is None:
        template = PhantomSpec(ring_inner=(150.0, 150.0), ring_outer=(180.0, 180.0))
    blobs = pack_blobs(target_ratio, template)
    vol, truth = generate_phantom(template.with_(blobs=blobs))
    if target_ratio and abs(truth.true_ratio - target_ratio) > 0.01 * target_ratio:
        raise InfeasibleError(f"packed ratio {truth.true_ratio} misses target {target_ratio}")
    return vol, truth
