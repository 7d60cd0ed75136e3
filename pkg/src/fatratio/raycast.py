"""Bresenham rays and the per-ray boundary search.

:func:`line_iter` and :func:`find_last_point` are the scalar reference
versions. :func:`cast_rays` does the same work for a batch of rays that share
a start point using numpy, and is what the sweep uses; the test-suite checks
it hit-for-hit against the scalar pair.

Lines are rasterized by iterating along the major axis from the endpoint with
the smaller major coordinate, so ``line_iter(a, b)`` and ``line_iter(b, a)``
cover the same pixels. Ties go toward that lower endpoint.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np


class PixelPoint(NamedTuple):
    x: int
    y: int


@dataclass(frozen=True)
class RayHit:
    """Boundary points found along one ray.

    ``inner`` is the last background pixel that is later followed by
    foreground, ``outer`` the last foreground pixel. ``inner_next`` and
    ``outer_next`` are the ray points right after each hit; they locate the
    pixel edge between the hit and its neighbour. ``outer_next`` may lie
    outside the image.
    """

    inner: Optional[PixelPoint] = None
    outer: Optional[PixelPoint] = None
    inner_next: Optional[PixelPoint] = None
    outer_next: Optional[PixelPoint] = None

    @property
    def complete(self) -> bool:
        return self.inner is not None and self.outer is not None


def _major_offsets(i, d_major, d_minor):
    # minor-axis offset after i major steps: nearest integer to i*d_minor/d_major,
    # ties rounded down; equals the integer decision-variable recurrence
    return -((d_major - 2 * d_minor * i) // (2 * d_major))


def line_iter(start, end) -> list[PixelPoint]:
    """8-connected integer line from ``start`` to ``end``, both inclusive."""
    x0, y0 = int(start[0]), int(start[1])
    x1, y1 = int(end[0]), int(end[1])
    steep = abs(y1 - y0) >= abs(x1 - x0)
    if steep:
        x0, y0, x1, y1 = y0, x0, y1, x1
    reverse = x0 > x1
    if reverse:
        x0, y0, x1, y1 = x1, y1, x0, y0
    dx, dy = x1 - x0, abs(y1 - y0)
    ystep = 1 if y1 >= y0 else -1
    points = []
    err = 2 * dy - dx
    y = y0
    for x in range(x0, x1 + 1):
        points.append(PixelPoint(y, x) if steep else PixelPoint(x, y))
        if err > 0:
            y += ystep
            err -= 2 * dx
        err += 2 * dy
    if reverse:
        points.reverse()
    return points


def find_last_point(img: np.ndarray, start, end) -> RayHit:
    """Walk the ray over a row-major image ``img[y, x]`` and report its boundary hits."""
    h, w = img.shape[:2]
    points = line_iter(start, end)
    last_black = answer = last_white = None
    answer_i = white_i = -1
    for i, (x, y) in enumerate(points):
        if not (0 <= x < w and 0 <= y < h):
            continue
        v = img[y, x]
        if v == 0:
            last_black = (i, PixelPoint(x, y))
        elif last_black is not None:
            answer_i, answer = last_black
        if v == 255:
            white_i, last_white = i, PixelPoint(x, y)

    def after(i):
        if i + 1 < len(points):
            return points[i + 1]
        if i == 0:
            return points[i]
        # ray ends on the hit: extend by the last step
        p, q = points[i - 1], points[i]
        return PixelPoint(2 * q.x - p.x, 2 * q.y - p.y)

    return RayHit(
        inner=answer,
        outer=last_white,
        inner_next=after(answer_i) if answer is not None else None,
        outer_next=after(white_i) if last_white is not None else None,
    )


@dataclass
class RayBatch:
    """Hits for a batch of rays; index arrays use -1 for "absent"."""

    xs: np.ndarray  # (n_rays, n_steps) ray pixel x, traversal order from start
    ys: np.ndarray
    length: np.ndarray  # number of valid steps per ray
    inner_idx: np.ndarray
    outer_idx: np.ndarray

    def point(self, ray: int, idx: int) -> PixelPoint:
        if 0 <= idx < self.length[ray]:
            return PixelPoint(int(self.xs[ray, idx]), int(self.ys[ray, idx]))
        raise IndexError(idx)

    def next_point(self, ray: int, idx: int) -> PixelPoint:
        """Point after ``idx`` on the ray, extrapolated when the ray ends there."""
        if idx + 1 < self.length[ray]:
            return PixelPoint(int(self.xs[ray, idx + 1]), int(self.ys[ray, idx + 1]))
        if idx == 0:
            return self.point(ray, 0)
        return PixelPoint(
            int(2 * self.xs[ray, idx] - self.xs[ray, idx - 1]),
            int(2 * self.ys[ray, idx] - self.ys[ray, idx - 1]),
        )

    def hit(self, ray: int) -> RayHit:
        a, b = int(self.inner_idx[ray]), int(self.outer_idx[ray])
        return RayHit(
            inner=self.point(ray, a) if a >= 0 else None,
            outer=self.point(ray, b) if b >= 0 else None,
            inner_next=self.next_point(ray, a) if a >= 0 else None,
            outer_next=self.next_point(ray, b) if b >= 0 else None,
        )


def rasterize_rays(start, ends: np.ndarray, max_steps: int | None = None):
    """Bresenham points for rays ``start -> ends[k]`` in traversal order.

    Returns ``(xs, ys, length)``; entries past ``length[k]`` are padding.
    ``max_steps`` truncates every ray, which is harmless once a ray from an
    interior start has left the image (it cannot come back).
    """
    ends = np.asarray(ends, dtype=np.int64).reshape(-1, 2)
    x0, y0 = int(start[0]), int(start[1])
    dx = ends[:, 0] - x0
    dy = ends[:, 1] - y0
    steep = np.abs(dy) >= np.abs(dx)
    d_major = np.where(steep, np.abs(dy), np.abs(dx))
    length = d_major + 1
    n_steps = int(length.max()) if len(length) else 0
    if max_steps is not None:
        n_steps = min(n_steps, max_steps)
        length = np.minimum(length, n_steps)
    # lower-major endpoint of each line and the signed minor delta from it
    major_delta = np.where(steep, dy, dx)
    reverse = major_delta < 0
    minor_delta = np.where(steep, dx, dy)
    minor_sign = np.where(reverse, -np.sign(minor_delta), np.sign(minor_delta))
    d_minor = np.abs(minor_delta)

    j = np.arange(n_steps)[np.newaxis, :]
    full = (d_major + 1)[:, np.newaxis]
    # index along the normalized (low -> high) line
    i = np.where(reverse[:, np.newaxis], full - 1 - j, j)
    safe_major = np.maximum(d_major, 1)[:, np.newaxis]
    off = np.where(d_major[:, np.newaxis] > 0, _major_offsets(i, safe_major, d_minor[:, np.newaxis]), 0)
    # normalized start point: (major, minor) of the lower endpoint
    low_major = np.where(reverse, np.where(steep, ends[:, 1], ends[:, 0]), np.where(steep, y0, x0))
    low_minor = np.where(reverse, np.where(steep, ends[:, 0], ends[:, 1]), np.where(steep, x0, y0))
    major = low_major[:, np.newaxis] + i
    minor = low_minor[:, np.newaxis] + minor_sign[:, np.newaxis] * off
    xs = np.where(steep[:, np.newaxis], minor, major)
    ys = np.where(steep[:, np.newaxis], major, minor)
    return xs, ys, length


def cast_rays(img: np.ndarray, start, ends: np.ndarray, max_steps: int | None = None) -> RayBatch:
    """Vectorized :func:`find_last_point` for rays sharing ``start``."""
    h, w = img.shape[:2]
    xs, ys, length = rasterize_rays(start, ends, max_steps)
    n_rays, n_steps = xs.shape
    valid = np.arange(n_steps)[np.newaxis, :] < length[:, np.newaxis]
    inb = valid & (xs >= 0) & (xs < w) & (ys >= 0) & (ys < h)
    vals = np.full(xs.shape, -1, dtype=np.int16)
    vals[inb] = img[ys[inb], xs[inb]]
    black = vals == 0
    nonzero = vals > 0
    cols = np.arange(n_steps)[np.newaxis, :]
    # index of the last black pixel at or before each step
    last_black_upto = np.maximum.accumulate(np.where(black, cols, -1), axis=1)
    # a nonzero pixel updates the answer to the last black seen before it;
    # the final answer comes from the last such pixel on the ray
    candidates = np.where(nonzero, last_black_upto, -1)
    has_cand = candidates >= 0
    last_cand_col = np.where(has_cand.any(axis=1), n_steps - 1 - np.argmax(has_cand[:, ::-1], axis=1), -1)
    inner_idx = np.where(last_cand_col >= 0, candidates[np.arange(n_rays), np.maximum(last_cand_col, 0)], -1)
    white = vals == 255
    outer_idx = np.where(white.any(axis=1), n_steps - 1 - np.argmax(white[:, ::-1], axis=1), -1)
    return RayBatch(xs, ys, length, inner_idx, outer_idx)
