import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from visdiag import rle
from visdiag import _rle_py
from visdiag.exceptions import DimensionMismatchError, RleDecodeError


def grids(h, w):
    return arrays(np.bool_, (h, w))


def test_encode_is_column_major_and_starts_with_background():
    g = np.array([[1, 0, 0], [1, 1, 0]], dtype=bool)
    m = rle.encode(g)
    # column-major pixels: 1,1 | 0,1 | 0,0
    assert m.counts.tolist() == [0, 2, 1, 1, 2]


def test_all_background_and_all_foreground():
    assert rle.encode(np.zeros((3, 4), bool)).counts.tolist() == [12]
    assert rle.encode(np.ones((3, 4), bool)).counts.tolist() == [0, 12]


def test_counts_must_cover_frame():
    with pytest.raises(RleDecodeError):
        rle.RleMask.from_counts(2, 2, [1, 2])
    with pytest.raises(RleDecodeError):
        rle.RleMask.from_counts(2, 2, [5, -1])


def test_canonicalize_folds_interior_zero_runs():
    m = rle.RleMask.from_counts(1, 6, [1, 2, 0, 1, 2])
    assert m.counts.tolist() == [1, 3, 2]
    assert m == rle.encode(np.array([[0, 1, 1, 1, 0, 0]], bool))


def test_masks_are_immutable():
    m = rle.encode(np.ones((2, 2), bool))
    with pytest.raises(AttributeError):
        m.height = 3
    with pytest.raises(ValueError):
        m.counts[0] = 1


def test_dimension_mismatch_is_an_error():
    a = rle.empty(4, 4)
    b = rle.empty(4, 5)
    with pytest.raises(DimensionMismatchError):
        rle.intersect_area(a, b)


def test_exhaustive_2x2_pairs_against_pixels():
    cells = [np.array(bits, bool).reshape(2, 2) for bits in itertools.product([0, 1], repeat=4)]
    for a, b in itertools.product(cells, cells):
        ma, mb = rle.encode(a), rle.encode(b)
        assert rle.intersect_area(ma, mb) == (a & b).sum()
        assert rle.union_area(ma, mb) == (a | b).sum()


@settings(max_examples=200, deadline=None)
@given(grids(7, 5), grids(7, 5))
def test_merge_matches_pixel_counts(a, b):
    ma, mb = rle.encode(a), rle.encode(b)
    assert rle.area(ma) == a.sum()
    assert rle.intersect_area(ma, mb) == (a & b).sum()
    assert rle.union_area(ma, mb) == (a | b).sum()


@settings(max_examples=200, deadline=None)
@given(grids(6, 9))
def test_round_trip(g):
    m = rle.encode(g)
    assert np.array_equal(rle.decode(m), g)
    assert rle.counts_from_string(rle.counts_to_string(m)).tolist() == m.counts.tolist()
    assert rle.from_coco(rle.to_coco(m)) == m
    assert rle.from_coco(rle.to_coco(m, compressed=False)) == m


@settings(max_examples=100, deadline=None)
@given(grids(5, 5), grids(5, 5), grids(5, 5))
def test_inclusion_exclusion_and_bounds(a, b, c):
    ma, mb = rle.encode(a), rle.encode(b)
    i, u = rle.intersect_area(ma, mb), rle.union_area(ma, mb)
    assert i + u == rle.area(ma) + rle.area(mb)
    assert i <= min(rle.area(ma), rle.area(mb))
    assert rle.intersect_area(ma, mb) == rle.intersect_area(mb, ma)


def test_string_codec_matches_pycocotools():
    mask_util = pytest.importorskip("pycocotools.mask")
    rng = np.random.default_rng(3)
    for _ in range(100):
        h, w = int(rng.integers(1, 40)), int(rng.integers(1, 40))
        g = rng.random((h, w)) < rng.uniform(0.05, 0.95)
        ref = mask_util.encode(np.asfortranarray(g.astype(np.uint8)))
        ours = rle.to_coco(rle.encode(g))
        assert ours["counts"] == ref["counts"].decode()
        assert ours["size"] == list(ref["size"])
        assert rle.from_coco({"size": ref["size"], "counts": ref["counts"]}) == rle.encode(g)


def test_bad_compressed_string_is_rejected():
    with pytest.raises(RleDecodeError):
        rle.from_coco({"size": [2, 2], "counts": "zzzz"})


def test_fallback_backend_agrees_with_compiled():
    rng = np.random.default_rng(11)
    for _ in range(50):
        a = rng.random((12, 9)) < 0.4
        b = rng.random((12, 9)) < 0.6
        ca = np.ascontiguousarray(rle.encode(a).counts)
        cb = np.ascontiguousarray(rle.encode(b).counts)
        assert _rle_py.intersect_area(ca, cb) == rle.intersect_area(rle.encode(a), rle.encode(b))
        assert _rle_py.union_area(ca, cb) == rle.union_area(rle.encode(a), rle.encode(b))
        assert _rle_py.counts_to_string(ca) == rle.counts_to_string(rle.encode(a))
        assert _rle_py.runs_from_flat(a.ravel(order="F")).tolist() == ca.tolist()


def test_encode_long_runs_cross_word_boundaries():
    # runs of every length around the 8-pixel word size the compiled path skips by
    for n in range(1, 40):
        for start in range(0, 10):
            flat = np.zeros(64, bool)
            flat[start : start + n] = True
            g = flat.reshape(8, 8, order="F")
            assert np.array_equal(rle.decode(rle.encode(g)), g)


def test_frame_stats_treats_none_as_empty():
    a = [rle.encode(np.ones((2, 2), bool)), None, None]
    b = [None, rle.encode(np.ones((2, 2), bool)), None]
    inter, union = rle.frame_stats(a, b)
    assert inter.tolist() == [0, 0, 0]
    assert union.tolist() == [4, 4, 0]
