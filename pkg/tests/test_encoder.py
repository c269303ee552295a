import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spvlad.codebook import Codebook
from spvlad.datamodel import ImageRecord, PyramidSpec, RegionDescriptor
from spvlad.encoder import (
    CellId,
    assign_cell,
    augment,
    augmented_descriptors,
    concat_global,
    encode_augmented,
    encode_pyramid,
    normalize_intra,
    normalize_ssr,
    pyramid_raw,
    vlad_raw,
)
from spvlad.pca import PcaModel, fit_pca
from conftest import random_record


def brute_vlad(centroids, descriptors):
    """Per-descriptor residual accumulator with an explicit nearest scan."""
    K, d = centroids.shape
    out = [[0.0] * d for _ in range(K)]
    for x in descriptors:
        best, best_d = 0, math.inf
        for k in range(K):
            dist = sum((x[j] - centroids[k][j]) ** 2 for j in range(d))
            if dist < best_d:
                best, best_d = k, dist
        for j in range(d):
            out[best][j] += x[j] - centroids[best][j]
    return np.array(out).ravel()


def brute_cell(level, W, H, cx, cy):
    if level == 1:
        return 0
    if level == 2:
        return (0 if cy < H / 2 else 2) + (0 if cx < W / 2 else 1)
    for i in range(3):
        if cx < (i + 1) * W / 3:
            return i
    return 2


def identity_pca(dim):
    return PcaModel(np.zeros(dim), np.eye(dim))


def box(x, y, w, h, feats=(0.0,)):
    return RegionDescriptor(x, y, w, h, np.asarray(feats, dtype=float))


# -- vlad_raw ---------------------------------------------------------------

def test_vlad_zero_residual():
    cb = Codebook([[1.0, 2.0], [3.0, 4.0]])
    np.testing.assert_array_equal(vlad_raw(cb, [[3.0, 4.0]]), np.zeros(4))


def test_vlad_empty_input():
    cb = Codebook(np.ones((3, 5)))
    np.testing.assert_array_equal(vlad_raw(cb, np.zeros((0, 5))), np.zeros(15))
    np.testing.assert_array_equal(vlad_raw(cb, []), np.zeros(15))


def test_vlad_small_case_vs_oracle():
    cb = Codebook([[0.0, 0.0], [4.0, 4.0]])
    X = np.array([[1.0, -1.0], [5.0, 3.5], [0.5, 0.25]])
    expected = brute_vlad(cb.centroids, X)
    np.testing.assert_allclose(vlad_raw(cb, X), expected, atol=1e-12, rtol=0)
    np.testing.assert_allclose(expected, [1.5, -0.75, 1.0, -0.5])


def test_vlad_dimension_mismatch():
    with pytest.raises(ValueError):
        vlad_raw(Codebook(np.zeros((2, 3))), np.zeros((4, 2)))


def test_vlad_permutation_invariant_exactly(rng):
    cb = Codebook(rng.standard_normal((4, 6)))
    X = rng.standard_normal((50, 6)) * 1e3
    a = vlad_raw(cb, X)
    b = vlad_raw(cb, X[rng.permutation(50)])
    assert a.tobytes() == b.tobytes()


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31))
def test_vlad_additive(seed):
    rng = np.random.default_rng(seed)
    cb = Codebook(rng.standard_normal((3, 4)))
    A, B = rng.standard_normal((rng.integers(0, 20), 4)), rng.standard_normal((rng.integers(0, 20), 4))
    joint = vlad_raw(cb, np.vstack([A, B]))
    np.testing.assert_allclose(joint, vlad_raw(cb, A) + vlad_raw(cb, B), atol=1e-9)


# -- normalization -----------------------------------------------------------

@pytest.mark.parametrize("v, expected", [
    ([0.0, 0.0], [0.0, 0.0]),
    ([1.0, -1.0], [0.70710678, -0.70710678]),
    ([4.0, -1.0], [0.89442719, -0.44721360]),
])
def test_ssr_examples(v, expected):
    np.testing.assert_allclose(normalize_ssr(v), expected, atol=1e-8)


@given(st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=1, max_size=30))
def test_ssr_odd_and_unit(values):
    v = np.array(values)
    out = normalize_ssr(v)
    assert np.array_equal(normalize_ssr(-v), -out)
    n = np.linalg.norm(out)
    assert n == 0 or abs(n - 1) < 1e-12


def test_intra_normalization_blocks():
    v = np.array([3.0, 4.0, 0.0, 0.0, 0.0, 2.0])
    out = normalize_intra(v, 3)
    # blocks (0.6, 0.8), (0, 0), (0, 1), then global norm sqrt(2)
    np.testing.assert_allclose(out, np.array([0.6, 0.8, 0, 0, 0, 1.0]) / math.sqrt(2))


# -- cells -------------------------------------------------------------------

@pytest.mark.parametrize("level, W, H, center, index", [
    (2, 100, 100, (10, 10), 0),
    (2, 100, 100, (50, 50), 3),
    (2, 100, 100, (60, 10), 1),
    (2, 100, 100, (10, 60), 2),
    (3, 90, 50, (60, 10), 2),
    (3, 90, 50, (29.9, 10), 0),
    (3, 90, 50, (30, 10), 1),
    (3, 90, 50, (90, 10), 2),
])
def test_assign_cell(level, W, H, center, index):
    cx, cy = center
    r = box(cx - 1, cy - 1, 2, 2)
    assert assign_cell(level, W, H, r) == CellId(level, index)


@settings(max_examples=200)
@given(st.integers(1, 3), st.floats(1, 2000), st.floats(1, 2000), st.floats(0, 1), st.floats(0, 1))
def test_cell_rule_matches_oracle(level, W, H, fx, fy):
    from spvlad.encoder import cell_indices
    cx, cy = fx * W, fy * H
    assert cell_indices(level, W, H, [(cx, cy)])[0] == brute_cell(level, W, H, cx, cy)


def test_cell_id_range():
    with pytest.raises(ValueError):
        CellId(3, 3)
    assert CellId(2, 1).name == "top-right"


# -- pyramid -----------------------------------------------------------------

def _model_for(rng, dim=6, d=4, k=3):
    X = rng.standard_normal((200, dim))
    pca = fit_pca(X, d)
    cb = Codebook(rng.standard_normal((k, d)))
    return pca, cb


@pytest.mark.parametrize("d, k, level, total", [
    (256, 4, 1, 1024), (256, 4, 2, 5120), (256, 4, 3, 8192),
    (256, 8, 1, 2048), (256, 8, 2, 10240), (256, 8, 3, 16384),
])
def test_pyramid_dimensions(rng, d, k, level, total):
    pca = PcaModel(np.zeros(d), np.eye(d))
    cb = Codebook(rng.standard_normal((k, d)))
    rec = random_record(rng, n_regions=10, dim=d)
    enc = encode_pyramid(pca, cb, rec, PyramidSpec(level))
    assert enc.vector.size == total


def test_pyramid_matches_brute_force(rng):
    pca, cb = _model_for(rng)
    rec = random_record(rng, n_regions=30, dim=6)
    enc = encode_pyramid(pca, cb, rec, PyramidSpec(3))
    Z = (rec.features() - pca.mean) @ pca.basis.T
    expected = []
    for level, n_cells in ((1, 1), (2, 4), (3, 3)):
        for i in range(n_cells):
            members = [
                z for z, r in zip(Z, rec.regions)
                if brute_cell(level, rec.width, rec.height, r.x + r.w / 2, r.y + r.h / 2) == i
            ]
            raw = brute_vlad(cb.centroids, members)
            s = np.sign(raw) * np.sqrt(np.abs(raw))
            expected.append(s / np.linalg.norm(s) if np.linalg.norm(s) > 0 else s)
    np.testing.assert_allclose(enc.vector, np.concatenate(expected), atol=1e-12)
    assert sum(enc.cell_counts[1:5]) == sum(enc.cell_counts[5:8]) == enc.cell_counts[0] == 30


def test_pyramid_partition_additive(rng):
    pca, cb = _model_for(rng)
    for _ in range(10):
        rec = random_record(rng, dim=6)
        cells = pyramid_raw(pca, cb, rec, PyramidSpec(3))
        whole = cells[0][1]
        np.testing.assert_allclose(sum(raw for _, raw, _ in cells[1:5]), whole, atol=1e-9)
        np.testing.assert_allclose(sum(raw for _, raw, _ in cells[5:8]), whole, atol=1e-9)


def test_pyramid_cell_norms(rng):
    pca, cb = _model_for(rng)
    rec = random_record(rng, n_regions=3, dim=6)
    for mode in ("ssr", "intra"):
        enc = encode_pyramid(pca, cb, rec, PyramidSpec(3), mode=mode)
        for n in enc.cell_norms():
            assert n == 0 or abs(n - 1) < 1e-12


def test_pyramid_permutation_invariant(rng):
    pca, cb = _model_for(rng)
    rec = random_record(rng, n_regions=25, dim=6)
    shuffled = ImageRecord(rec.id, rec.width, rec.height,
                           [rec.regions[i] for i in rng.permutation(25)])
    a = encode_pyramid(pca, cb, rec, PyramidSpec(3))
    b = encode_pyramid(pca, cb, shuffled, PyramidSpec(3))
    assert a.vector.tobytes() == b.vector.tobytes()


def test_pyramid_dimension_errors(rng):
    pca, cb = _model_for(rng)
    with pytest.raises(ValueError):
        encode_pyramid(pca, cb, random_record(rng, dim=5), PyramidSpec(2))
    with pytest.raises(ValueError):
        encode_pyramid(pca, Codebook(np.zeros((2, 3))), random_record(rng, dim=6), PyramidSpec(2))


# -- augmentation ------------------------------------------------------------

def test_augment_full_frame_is_zero(rng):
    for W, H in ((640, 480), (1, 1), (333, 77)):
        a = augment(box(0, 0, W, H), np.ones(4), W, H)
        assert (a.rel_x, a.rel_y, a.log_scale) == (0.0, 0.0, 0.0)


def test_augment_hand_case():
    a = augment(box(0, 50, 50, 50), [1.0, 2.0], 100, 100)
    assert a.rel_x == pytest.approx(-0.25, abs=1e-12)
    assert a.rel_y == pytest.approx(0.25, abs=1e-12)
    assert a.log_scale == pytest.approx(-0.6931472, abs=1e-7)
    np.testing.assert_allclose(a.vector(), [1.0, 2.0, -0.25, 0.25, -math.log(2)], atol=1e-12)


def test_augment_lengths():
    assert len(augment(box(0, 0, 10, 10), np.zeros(256), 20, 20)) == 259


def test_augmented_rows_match_scalar(rng):
    pca, _ = _model_for(rng)
    rec = random_record(rng, n_regions=12, dim=6)
    rows = augmented_descriptors(pca, rec)
    Z = pca.project(rec.features())
    for row, r, z in zip(rows, rec.regions, Z):
        np.testing.assert_allclose(row, augment(r, z, rec.width, rec.height).vector(), atol=1e-12)


def test_encode_augmented_dimension(rng):
    pca = PcaModel(np.zeros(256), np.eye(256))
    cb = Codebook(rng.standard_normal((4, 259)))
    enc = encode_augmented(pca, cb, random_record(rng, n_regions=5, dim=256))
    assert enc.vector.size == 1036
    with pytest.raises(ValueError):
        encode_augmented(pca, Codebook(np.zeros((4, 256))), random_record(rng, dim=256))


def test_encode_augmented_zero_residual():
    pca = identity_pca(2)
    cb = Codebook([[1.0, 2.0, 0.0, 0.0, 0.0], [9.0, 9.0, 0.0, 0.0, 0.0]])
    rec = ImageRecord("x", 64, 48, [box(0, 0, 64, 48, [1.0, 2.0])])
    np.testing.assert_array_equal(encode_augmented(pca, cb, rec).vector, np.zeros(10))


def test_encode_augmented_reduces_to_level_one(rng):
    d, k = 4, 3
    pca = PcaModel(np.zeros(6), rng.standard_normal((d, 6)))
    base = rng.standard_normal((k, d))
    cb_aug = Codebook(np.hstack([base, np.zeros((k, 3))]))
    feats = rng.standard_normal((10, 6))
    rec = ImageRecord.from_arrays("f", 200, 100, np.tile([0, 0, 200, 100], (10, 1)), feats)
    aug = encode_augmented(pca, cb_aug, rec).vector.reshape(k, d + 3)
    plain = encode_pyramid(pca, Codebook(base), rec, PyramidSpec(1)).vector.reshape(k, d)
    np.testing.assert_array_equal(aug[:, d:], 0)
    np.testing.assert_allclose(aug[:, :d], plain, atol=1e-12)


# -- global concatenation -----------------------------------------------------

def test_concat_global(rng):
    pca = PcaModel(np.zeros(256), np.eye(256))
    cb = Codebook(rng.standard_normal((4, 256)))
    enc = encode_pyramid(pca, cb, random_record(rng, n_regions=8, dim=256), PyramidSpec(2))
    g = rng.standard_normal(4096)
    out = concat_global(enc, g)
    assert out.size == 9216
    np.testing.assert_array_equal(out[:4096], g)
    np.testing.assert_array_equal(out[4096:], enc.vector)
    np.testing.assert_array_equal(concat_global(enc, []), enc.vector)
    assert concat_global(np.zeros(10240), np.zeros(4096)).size == 14336
