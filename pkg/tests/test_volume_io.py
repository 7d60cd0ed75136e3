import gzip

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from fatratio.errors import (
    InvalidConfigError,
    MalformedHeaderError,
    SliceIndexError,
    TruncatedVolumeError,
    UnsupportedDatatypeError,
)
from fatratio.volume_io import (
    BinaryMask,
    HuVolume,
    SliceSelector,
    extract_slices,
    load_mask,
    load_volume,
    save_volume,
    slice_image,
    stack_images,
)


@pytest.mark.parametrize("suffix", [".nii", ".nii.gz"])
def test_round_trip_volume(tmp_path, rng, suffix):
    data = rng.integers(-1024, 2000, size=(7, 5, 3)).astype(np.int16)
    v = HuVolume(data, (0.7, 0.8, 2.5))
    path = tmp_path / f"v{suffix}"
    save_volume(v, path)
    back = load_volume(path)
    assert back.data.dtype == np.int16
    np.testing.assert_array_equal(back.data, data)
    assert back.spacing_mm == pytest.approx((0.7, 0.8, 2.5))


@settings(max_examples=25, deadline=None)
@given(arrays(np.int16, st.tuples(st.integers(1, 6), st.integers(1, 6), st.integers(1, 4))))
def test_round_trip_any_int16(tmp_path_factory, data):
    path = tmp_path_factory.mktemp("rt") / "v.nii"
    save_volume(HuVolume(data), path)
    np.testing.assert_array_equal(load_volume(path).data, data)


def test_constant_air_volume(tmp_path):
    path = tmp_path / "air.nii.gz"
    save_volume(HuVolume(np.full((4, 4, 2), -1000, np.int16)), path)
    v = load_volume(path)
    assert v.shape == (4, 4, 2)
    assert (v.data == -1000).all()


def test_mask_values_preserved(tmp_path, rng):
    data = np.where(rng.random((6, 6, 2)) > 0.5, 255, 0).astype(np.uint8)
    path = tmp_path / "m.nii.gz"
    save_volume(BinaryMask(data), path)
    back = load_mask(path)
    assert set(np.unique(back.data)) <= {0, 255}
    np.testing.assert_array_equal(back.data, data)


def test_bool_mask_converted():
    m = BinaryMask(np.array([[True, False]]))
    assert m.data.dtype == np.uint8
    assert m.data.tolist() == [[255, 0]]


def test_mask_rejects_other_values():
    with pytest.raises(UnsupportedDatatypeError):
        BinaryMask(np.array([[0, 7]], dtype=np.uint8))


@pytest.mark.parametrize("suffix", [".nii", ".nii.gz"])
def test_truncated_file(tmp_path, rng, suffix):
    path = tmp_path / f"v{suffix}"
    save_volume(HuVolume(rng.integers(-1000, 1000, (32, 32, 8)).astype(np.int16)), path)
    raw = path.read_bytes()
    if suffix == ".nii.gz":
        full = gzip.decompress(raw)
        raw = gzip.compress(full[: len(full) // 2])
    else:
        raw = raw[: len(raw) // 2]
    path.write_bytes(raw)
    with pytest.raises(MalformedHeaderError):
        load_volume(path)


def test_truncated_is_malformed_subclass():
    assert issubclass(TruncatedVolumeError, MalformedHeaderError)


def test_garbage_header(tmp_path):
    path = tmp_path / "junk.nii"
    path.write_bytes(b"not a nifti file" * 40)
    with pytest.raises(MalformedHeaderError):
        load_volume(path)


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_volume(tmp_path / "nope.nii")


def test_missing_destination_directory(tmp_path):
    with pytest.raises(OSError):
        save_volume(HuVolume(np.zeros((2, 2, 1), np.int16)), tmp_path / "missing" / "v.nii")


def test_float_data_rounded(tmp_path):
    import nibabel as nib

    data = np.array([[[-100.4, 39.6]]], dtype=np.float32)
    nib.save(nib.Nifti1Image(data, np.eye(4)), str(tmp_path / "f.nii"))
    assert load_volume(tmp_path / "f.nii").data.ravel().tolist() == [-100, 40]


def test_out_of_range_float_rejected(tmp_path):
    import nibabel as nib

    nib.save(nib.Nifti1Image(np.array([[[1e6]]], dtype=np.float32), np.eye(4)), str(tmp_path / "f.nii"))
    with pytest.raises(UnsupportedDatatypeError):
        load_volume(tmp_path / "f.nii")


def test_single_slice_selector():
    data = np.arange(3 * 2 * 10, dtype=np.int16).reshape(3, 2, 10)
    out = extract_slices(HuVolume(data), SliceSelector.single(4))
    assert out.shape == (3, 2, 1)
    np.testing.assert_array_equal(out.data[:, :, 0], data[:, :, 4])


def test_range_selector_order():
    data = np.arange(3 * 2 * 10, dtype=np.int16).reshape(3, 2, 10)
    out = extract_slices(HuVolume(data), SliceSelector.range(2, 5))
    assert out.shape == (3, 2, 4)
    np.testing.assert_array_equal(out.data, data[:, :, 2:6])


def test_selector_out_of_range():
    v = HuVolume(np.zeros((2, 2, 10), np.int16))
    with pytest.raises(SliceIndexError):
        extract_slices(v, SliceSelector.range(2, 10))
    with pytest.raises(SliceIndexError):
        extract_slices(v, SliceSelector.single(10))


@pytest.mark.parametrize("text,expected", [(None, "all"), ("3", "single-index"), ("2:5", "index-range")])
def test_selector_parse(text, expected):
    assert SliceSelector.parse(text).mode == expected


@pytest.mark.parametrize("text", ["a", "5:2", "-1", "1:2:3"])
def test_selector_parse_rejects(text):
    with pytest.raises((InvalidConfigError, SliceIndexError)):
        SliceSelector.parse(text).indices(10)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 12), st.data())
def test_ranges_partition_volume(nz, data):
    cuts = sorted(data.draw(st.sets(st.integers(1, nz - 1), max_size=nz - 1))) if nz > 1 else []
    bounds = [0, *cuts, nz]
    vol = HuVolume(np.arange(2 * 2 * nz, dtype=np.int16).reshape(2, 2, nz))
    parts = [extract_slices(vol, SliceSelector.range(a, b - 1)).data for a, b in zip(bounds, bounds[1:])]
    np.testing.assert_array_equal(np.concatenate(parts, axis=2), vol.data)


def test_slice_image_is_row_major():
    data = np.zeros((5, 3, 1), np.int16)
    data[4, 1, 0] = 7  # x=4, y=1
    img = slice_image(HuVolume(data))
    assert img.shape == (3, 5)
    assert img[1, 4] == 7
    np.testing.assert_array_equal(stack_images([img]), data)


def test_2d_input_promoted():
    assert HuVolume(np.zeros((4, 4), np.int16)).shape == (4, 4, 1)


def test_bad_spacing():
    with pytest.raises(InvalidConfigError):
        HuVolume(np.zeros((2, 2, 1), np.int16), (1.0, 0.0, 1.0))
