import itertools
import json

import numpy as np
import pytest

from spvlad.datamodel import PyramidSpec, validate_image
from spvlad.encoder import assign_cell, encode_pyramid
from spvlad.synthbench import (
    BenchConfig,
    gen_scene,
    generate_scenes,
    make_classes,
    nn_classify,
    run_benchmark,
)


def brute_loo(X, y):
    correct = 0
    for i in range(len(X)):
        best, best_d = None, np.inf
        for j in range(len(X)):
            if j == i:
                continue
            d = sum((a - b) ** 2 for a, b in zip(X[i], X[j]))
            if d < best_d:
                best, best_d = j, d
        correct += y[best] == y[i]
    return correct / len(X)


@pytest.fixture
def classes():
    return make_classes(4, 16, seed=3)


def test_zero_noise_descriptors_exact(classes):
    rec = gen_scene(classes[1], 0.0, 20, seed=5)
    feats = rec.features()
    np.testing.assert_array_equal(feats[0], classes[1].main_prototype)
    np.testing.assert_array_equal(feats[1:], np.tile(classes[1].secondary_prototype, (19, 1)))


def test_scene_deterministic(classes):
    a, b = gen_scene(classes[2], 0.3, seed=9), gen_scene(classes[2], 0.3, seed=9)
    assert a.boxes().tobytes() == b.boxes().tobytes()
    assert a.features().tobytes() == b.features().tobytes()


@pytest.mark.parametrize("placement", range(4))
def test_secondary_regions_in_their_cell(classes, placement):
    for seed in range(20):
        rec = gen_scene(classes[placement], 0.1, seed=seed)
        assert validate_image(rec, 16) == []
        for r in rec.regions[1:]:
            assert assign_cell(2, rec.width, rec.height, r).index == placement


def test_classes_share_prototypes(classes):
    for a, b in itertools.combinations(classes, 2):
        assert np.array_equal(a.main_prototype, b.main_prototype)
        assert np.array_equal(a.secondary_prototype, b.secondary_prototype)
        assert a.placement != b.placement


def test_nn_identical_same_label():
    assert nn_classify([[1.0, 2.0], [1.0, 2.0]], [0, 0]) == 1.0


def test_nn_identical_different_label():
    assert nn_classify([[1.0, 2.0], [1.0, 2.0]], [0, 1]) == 0.0


def test_nn_matches_oracle():
    X = np.array([[0.0, 0.0], [1.0, 0.0], [5.0, 5.0], [5.0, 4.2]])
    y = [0, 1, 1, 0]
    assert nn_classify(X, y) == brute_loo(X, y) == 0.0
    y = [0, 0, 1, 1]
    assert nn_classify(X, y) == brute_loo(X, y) == 1.0


def test_nn_random_vs_oracle(rng):
    X = rng.standard_normal((30, 3))
    y = rng.integers(0, 3, 30)
    assert nn_classify(X, y) == pytest.approx(brute_loo(X, y))


def test_nn_needs_two():
    with pytest.raises(ValueError):
        nn_classify([[0.0]], [0])


def test_zero_noise_level2_perfect():
    report = run_benchmark(BenchConfig(noise=0.0, n_scenes=40), seed=0)
    assert report.accuracy["level2"] == 1.0


def test_zero_noise_level1_blind_to_placement():
    config = BenchConfig(noise=0.0, n_scenes=8)
    scenes, labels = generate_scenes(config, seed=1)
    from spvlad.codebook import train_codebook
    from spvlad.pca import fit_pca, project
    feats = np.vstack([s.features() for s in scenes])
    pca = fit_pca(feats, 4)
    cb = train_codebook(project(pca, feats), 2, seed=0)
    l1 = [encode_pyramid(pca, cb, s, PyramidSpec(1)).vector for s in scenes]
    l2 = [encode_pyramid(pca, cb, s, PyramidSpec(2)).vector for s in scenes]
    for i, j in itertools.combinations(range(len(scenes)), 2):
        assert np.max(np.abs(l1[i] - l1[j])) <= 1e-9
        if labels[i] != labels[j]:
            assert np.max(np.abs(l2[i] - l2[j])) > 1e-3


def test_report_deterministic():
    config = BenchConfig(n_scenes=24)
    a = run_benchmark(config, seed=4).to_json()
    b = run_benchmark(config, seed=4, threads=3).to_json()
    assert a == b
    parsed = json.loads(a)
    assert parsed["seed"] == 4 and parsed["n_scenes"] == 24
    assert all(0 <= v <= 1 for v in parsed["accuracy"].values())


def test_large_scale_preset():
    assert BenchConfig.large_scale().regions_per_image == 385
