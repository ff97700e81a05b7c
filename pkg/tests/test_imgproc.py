import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from crackpot import imgproc
from crackpot.errors import InvalidParameterError
from crackpot.imgproc import BoundingBox

import oracles

masks = st.integers(1, 20).flatmap(lambda h: st.integers(1, 20).flatmap(
    lambda w: arrays(bool, (h, w))))


def random_edge_image(rng, size=32):
    # blocky shapes plus noise so every NMS direction and hysteresis path occurs
    img = rng.integers(0, 256, (size // 4, size // 4)).repeat(4, 0).repeat(4, 1).astype(float)
    img += rng.normal(0, rng.uniform(0, 40), img.shape)
    return np.clip(img, 0, 255).astype(np.uint8)


# grayscale

def test_gray_identity_on_single_channel():
    img = np.arange(12, dtype=np.uint8).reshape(3, 4)
    assert np.array_equal(imgproc.to_grayscale(img), img)


def test_gray_black_white():
    img = np.array([[[255, 255, 255], [0, 0, 0]]], dtype=np.uint8)
    assert imgproc.to_grayscale(img).tolist() == [[255, 0]]


def test_gray_weighted_sum():
    img = np.array([[[100, 150, 200]]], dtype=np.uint8)
    assert imgproc.to_grayscale(img)[0, 0] == 141


@given(arrays(np.uint8, (4, 5, 3)))
def test_gray_range_and_bounds(img):
    g = imgproc.to_grayscale(img).astype(int)
    assert g.shape == (4, 5)
    assert np.all(g >= img.min(axis=2).astype(int) - 1) and np.all(g <= img.max(axis=2).astype(int) + 1)


# blur

@pytest.mark.parametrize("value", [0, 37, 255])
def test_blur_preserves_constant(value):
    img = np.full((9, 11), value, dtype=np.uint8)
    assert np.array_equal(imgproc.gaussian_blur(img, 2.0, 3), img)


def test_blur_impulse_centre():
    img = np.zeros((7, 7), dtype=np.uint8)
    img[3, 3] = 255
    g = imgproc.gaussian_kernel(1.0, 2)
    assert imgproc.gaussian_blur(img, 1.0, 2)[3, 3] == np.floor(255 * g[2] ** 2 + 0.5)


def test_blur_kernel_normalised():
    assert imgproc.gaussian_kernel(1.4, 2).sum() == pytest.approx(1.0, abs=1e-15)


def test_blur_larger_sigma_smooths_step_more():
    img = np.zeros((8, 16), dtype=np.uint8)
    img[:, 8:] = 255

    def max_diff(s):
        return np.abs(np.diff(imgproc.gaussian_blur(img, s, 4).astype(int), axis=1)).max()

    assert max_diff(2.0) < max_diff(0.5)


def test_blur_matches_direct_2d_oracle():
    rng = np.random.default_rng(3)
    for _ in range(20):
        img = rng.integers(0, 256, (12, 10)).astype(np.uint8)
        assert np.array_equal(imgproc.gaussian_blur(img, 1.4, 2), oracles.gaussian_blur(img, 1.4, 2))


def test_blur_rejects_bad_sigma():
    with pytest.raises(InvalidParameterError):
        imgproc.gaussian_blur(np.zeros((3, 3), np.uint8), 0.0, 2)


# canny

def test_canny_constant_image_has_no_edges():
    assert not imgproc.canny_edges(np.full((16, 16), 90, np.uint8), 50, 150).any()


def test_canny_step_gives_single_vertical_run():
    img = np.zeros((16, 16), dtype=np.uint8)
    img[:, 8:] = 255
    edges = imgproc.canny_edges(img, 50, 100)
    cols = np.nonzero(edges.any(axis=0))[0]
    assert cols.tolist() == [7]
    assert edges[1:-1, 7].all()
    assert np.array_equal(edges, oracles.canny(img, 50, 100))


def test_canny_unreachable_high_gives_nothing():
    img = np.zeros((16, 16), dtype=np.uint8)
    img[:, 8:] = 255
    assert not imgproc.canny_edges(img, 50, 100_000).any()


def test_canny_rejects_inverted_thresholds():
    with pytest.raises(InvalidParameterError):
        imgproc.canny_edges(np.zeros((8, 8), np.uint8), 100, 100)


def test_canny_border_never_edge():
    rng = np.random.default_rng(11)
    for _ in range(20):
        e = imgproc.canny_edges(rng.integers(0, 256, (20, 20)).astype(np.uint8), 10, 30)
        assert not (e[0].any() or e[-1].any() or e[:, 0].any() or e[:, -1].any())


def test_canny_edges_within_low_magnitude_support():
    rng = np.random.default_rng(12)
    for _ in range(20):
        img = random_edge_image(rng)
        stages = imgproc.canny_stages(img, 40, 120)
        assert not (stages["edges"] & (stages["magnitude"] < 40)).any()


def test_canny_matches_reference_on_random_images():
    rng = np.random.default_rng(2024)
    n = 200
    for i in range(n):
        img = random_edge_image(rng)
        low = float(rng.integers(10, 120))
        high = low + float(rng.integers(1, 200))
        got = imgproc.canny_stages(img, low, high)
        want, st_ = oracles.canny(img, low, high, return_stages=True)
        assert np.array_equal(got["blurred"], st_["blurred"]), i
        assert np.array_equal(got["gx"], st_["gx"]) and np.array_equal(got["gy"], st_["gy"]), i
        # the library only evaluates suppression where magnitude >= low
        kept = st_["suppressed"] * (st_["suppressed"] >= low)
        assert np.array_equal(got["suppressed"], kept), i
        assert np.array_equal(got["edges"], want), i


# dilation

def test_dilate_point_one_iteration():
    m = np.zeros((9, 9), bool)
    m[4, 4] = True
    out = imgproc.dilate(m, 1)
    want = np.zeros((9, 9), bool)
    want[3:6, 3:6] = True
    assert np.array_equal(out, want)


def test_dilate_point_two_iterations():
    m = np.zeros((9, 9), bool)
    m[4, 4] = True
    assert imgproc.dilate(m, 2).sum() == 25
    assert imgproc.dilate(m, 2)[2:7, 2:7].all()


def test_dilate_zero_iterations_and_empty():
    m = np.random.default_rng(0).random((6, 7)) > 0.5
    assert np.array_equal(imgproc.dilate(m, 0), m)
    assert not imgproc.dilate(np.zeros((5, 5), bool), 4).any()


def test_dilate_matches_reference_on_random_masks():
    rng = np.random.default_rng(99)
    for _ in range(200):
        m = rng.random((32, 32)) < rng.uniform(0.005, 0.2)
        k = int(rng.integers(0, 4))
        assert np.array_equal(imgproc.dilate(m, k), oracles.dilate(m, k))


@given(masks, st.integers(0, 4))
def test_dilate_monotone_in_iterations(m, k):
    a = imgproc.dilate(m, k)
    b = imgproc.dilate(m, k + 1)
    assert not (a & ~b).any()
    assert not (m & ~a).any()


# mask_and

@given(masks)
def test_mask_and_identities(m):
    full = np.ones_like(m)
    assert np.array_equal(imgproc.mask_and(full, m), m)
    assert not imgproc.mask_and(~full, m).any()


@given(st.integers(1, 10), st.integers(1, 10), st.data())
def test_mask_and_commutative_associative(h, w, data):
    a, b, c = (data.draw(arrays(bool, (h, w))) for _ in range(3))
    assert np.array_equal(imgproc.mask_and(a, b), imgproc.mask_and(b, a))
    assert np.array_equal(
        imgproc.mask_and(imgproc.mask_and(a, b), c), imgproc.mask_and(a, imgproc.mask_and(b, c))
    )


def test_mask_and_disjoint_and_mismatch():
    a = np.zeros((4, 4), bool)
    b = np.zeros((4, 4), bool)
    a[0, 0] = b[3, 3] = True
    assert not imgproc.mask_and(a, b).any()
    with pytest.raises(InvalidParameterError):
        imgproc.mask_and(a, np.zeros((4, 5), bool))


# boxes

def test_boxes_empty():
    assert imgproc.extract_boxes(np.zeros((10, 10), bool), 1) == []


def test_boxes_two_blobs_sorted():
    m = np.zeros((16, 16), bool)
    m[10:13, 10:13] = True
    m[1:4, 1:4] = True
    assert imgproc.extract_boxes(m, 4) == [BoundingBox(1, 1, 3, 3), BoundingBox(10, 10, 3, 3)]


def test_boxes_diagonal_is_one_component():
    m = np.eye(5, dtype=bool)
    assert imgproc.extract_boxes(m, 1) == [BoundingBox(0, 0, 5, 5)]


def test_boxes_min_area_filters():
    m = np.zeros((10, 10), bool)
    m[0, 0] = True
    m[5:8, 5:8] = True
    assert imgproc.extract_boxes(m, 2) == [BoundingBox(5, 5, 3, 3)]


def test_boxes_match_flood_fill_on_random_masks():
    rng = np.random.default_rng(7)
    for _ in range(200):
        m = rng.random((32, 32)) < rng.uniform(0.05, 0.6)
        min_area = int(rng.integers(1, 12))
        got = imgproc.extract_boxes(m, min_area)
        assert [tuple(b) for b in got] == oracles.boxes(m, min_area)


def test_boxes_cover_every_large_component():
    rng = np.random.default_rng(8)
    for _ in range(50):
        m = rng.random((32, 32)) < 0.3
        got = imgproc.extract_boxes(m, 5)
        comps = [c for c in oracles.components(m) if len(c) >= 5]
        assert len(got) == len(comps)
        for c in comps:
            assert any(all(b.x <= x < b.x + b.w and b.y <= y < b.y + b.h for y, x in c) for b in got)


# crop / resize

def test_crop_identity_when_size_matches():
    img = np.random.default_rng(1).integers(0, 256, (100, 90, 3)).astype(np.uint8)
    patch = imgproc.crop_resize(img, BoundingBox(10, 20, 64, 64), 64)
    assert np.array_equal(patch.pixels, img[20:84, 10:74])
    assert patch.source_box == BoundingBox(10, 20, 64, 64)


@given(st.integers(0, 255), st.integers(1, 30), st.integers(1, 30), st.integers(1, 40))
@settings(max_examples=60)
def test_crop_constant_stays_constant(value, w, h, size):
    img = np.full((h, w), value, np.uint8)
    out = imgproc.crop_resize(img, BoundingBox(0, 0, w, h), size).pixels
    assert out.shape == (size, size) and np.all(out == value)


def test_bilinear_two_by_two_closed_form():
    img = np.array([[0, 100], [100, 200]], dtype=np.uint8)
    out = imgproc.crop_resize(img, BoundingBox(0, 0, 2, 2), 4).pixels
    # corners clamp onto the source pixels; inner samples sit at 0.25 / 0.75
    assert out[0, 0] == 0 and out[0, 3] == 100 and out[3, 0] == 100 and out[3, 3] == 200
    assert out[1, 1] == 50  # 0.75*0.75*0 + 2*0.75*0.25*100 + 0.25*0.25*200 = 50
    assert out[1, 2] == 100 and out[2, 2] == 150
    assert np.array_equal(out, oracles.bilinear(img, 4, 4))


def test_bilinear_matches_oracle_random():
    rng = np.random.default_rng(5)
    for _ in range(30):
        h, w = rng.integers(1, 20, 2)
        oh, ow = rng.integers(1, 25, 2)
        img = rng.integers(0, 256, (h, w, 3)).astype(np.uint8)
        assert np.array_equal(imgproc.resize_bilinear(img, oh, ow), oracles.bilinear(img, oh, ow))


def test_crop_rejects_out_of_bounds():
    with pytest.raises(InvalidParameterError):
        imgproc.crop_resize(np.zeros((10, 10), np.uint8), BoundingBox(5, 5, 6, 2), 8)


def test_box_helpers():
    a = BoundingBox(0, 0, 4, 4)
    assert a.area == 16
    assert a.overlaps(BoundingBox(3, 3, 2, 2)) and not a.overlaps(BoundingBox(4, 0, 2, 2))
    assert a.within(4, 4) and not a.within(3, 4)
