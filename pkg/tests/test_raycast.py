import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fatratio.raycast import PixelPoint, cast_rays, find_last_point, line_iter, rasterize_rays
from oracles import annulus_image, literal_find_last_point, rounded_line, textbook_bresenham

coord = st.integers(-60, 60)


def test_diagonal():
    assert line_iter((0, 0), (3, 3)) == [(0, 0), (1, 1), (2, 2), (3, 3)]


def test_degenerate():
    assert line_iter((0, 0), (0, 0)) == [(0, 0)]


def test_shallow_example():
    assert line_iter((0, 0), (5, 2)) == [(0, 0), (1, 0), (2, 1), (3, 1), (4, 2), (5, 2)]
    assert textbook_bresenham(0, 0, 5, 2) == [(0, 0), (1, 0), (2, 1), (3, 1), (4, 2), (5, 2)]


def test_points_are_pixelpoints():
    p = line_iter((1, 2), (4, 3))[0]
    assert isinstance(p, PixelPoint) and p.x == 1 and p.y == 2


@settings(max_examples=300, deadline=None)
@given(coord, coord, coord, coord)
def test_line_properties(x0, y0, x1, y1):
    pts = line_iter((x0, y0), (x1, y1))
    assert pts[0] == (x0, y0) and pts[-1] == (x1, y1)
    assert len(pts) == max(abs(x1 - x0), abs(y1 - y0)) + 1
    for (ax, ay), (bx, by) in zip(pts, pts[1:]):
        assert max(abs(ax - bx), abs(ay - by)) == 1
    assert set(pts) == set(line_iter((x1, y1), (x0, y0)))
    assert set(pts) == set(textbook_bresenham(x0, y0, x1, y1))
    assert set(pts) == rounded_line(x0, y0, x1, y1)


def test_empty_row():
    img = np.zeros((1, 10), np.uint8)
    hit = find_last_point(img, (0, 0), (9, 0))
    assert hit.inner is None and hit.outer is None
    assert not hit.complete


def test_row_example():
    img = np.array([[0, 0, 255, 255, 0, 0, 255, 0]], np.uint8)
    hit = find_last_point(img, (0, 0), (7, 0))
    assert hit.inner == (5, 0)
    assert hit.outer == (6, 0)
    assert hit.inner_next == (6, 0) and hit.outer_next == (7, 0)


def test_annulus_horizontal_ray():
    img = annulus_image(512, 50, 100)
    hit = find_last_point(img, (256, 256), (511, 256))
    assert hit.inner == (256 + 49, 256)
    assert hit.outer == (256 + 100, 256)


def test_out_of_bounds_points_skipped():
    img = np.array([[0, 255, 0]], np.uint8)
    hit = find_last_point(img, (-5, 0), (10, 0))
    assert hit.inner == (0, 0) and hit.outer == (1, 0)


def test_next_point_extrapolated_at_ray_end():
    img = np.array([[0, 0, 255]], np.uint8)
    hit = find_last_point(img, (0, 0), (2, 0))
    assert hit.outer == (2, 0) and hit.outer_next == (3, 0)


masks = arrays(np.uint8, st.tuples(st.integers(1, 12), st.integers(1, 12)), elements=st.sampled_from([0, 255]))


@settings(max_examples=200, deadline=None)
@given(masks, st.integers(-3, 14), st.integers(-3, 14), st.integers(-3, 14), st.integers(-3, 14))
def test_find_last_point_matches_literal(img, x0, y0, x1, y1):
    hit = find_last_point(img, (x0, y0), (x1, y1))
    inner, outer = literal_find_last_point(img, textbook_order(x0, y0, x1, y1))
    assert hit.inner == inner
    assert hit.outer == outer
    if hit.inner is not None:
        assert img[hit.inner.y, hit.inner.x] == 0
    if hit.outer is not None:
        assert img[hit.outer.y, hit.outer.x] == 255


def textbook_order(x0, y0, x1, y1):
    pts = textbook_bresenham(x0, y0, x1, y1)
    return pts if pts[0] == (x0, y0) else pts[::-1]


@settings(max_examples=100, deadline=None)
@given(masks, st.data())
def test_cast_rays_matches_scalar(img, data):
    h, w = img.shape
    start = (data.draw(st.integers(0, w - 1)), data.draw(st.integers(0, h - 1)))
    ends = data.draw(st.lists(st.tuples(st.integers(-20, 30), st.integers(-20, 30)), min_size=1, max_size=8))
    batch = cast_rays(img, start, np.array(ends))
    for k, end in enumerate(ends):
        assert batch.hit(k) == find_last_point(img, start, end)


def test_rasterize_matches_line_iter(rng):
    start = (500, 300)
    ends = rng.integers(-2000, 3000, size=(2000, 2))
    xs, ys, length = rasterize_rays(start, ends)
    for k in range(len(ends)):
        n = int(length[k])
        assert list(zip(xs[k, :n].tolist(), ys[k, :n].tolist())) == line_iter(start, ends[k])


def test_rasterize_truncation():
    xs, ys, length = rasterize_rays((0, 0), np.array([[100, 0], [3, 3]]), max_steps=10)
    assert xs.shape == (2, 10)
    assert length.tolist() == [10, 4]


def test_far_ray_hit_same_as_short_ray():
    img = annulus_image(128, 20, 40)
    far = cast_rays(img, (64, 64), np.array([[65536, 0]]), max_steps=130).hit(0)
    near = find_last_point(img, (64, 64), (127, 64))
    assert far.inner == near.inner and far.outer == near.outer
