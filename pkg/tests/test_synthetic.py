"""Synthetic store generator: determinism, geometry, degradation knobs."""

from __future__ import annotations

import numpy as np
import pytest

from selfseed import (
    DimensionTooSmall,
    SynthConfig,
    generate,
    zero_shot_predict,
)


def test_generate_is_deterministic_per_seed():
    cfg = SynthConfig(num_classes=3, images_per_class=8, clip_dim=6,
                      feature_dim=4, rng_seed=5)
    a = generate(cfg)
    b = generate(cfg)
    assert np.array_equal(a.image_clip, b.image_clip)
    assert np.array_equal(a.text_clip, b.text_clip)
    assert np.array_equal(a.features, b.features)
    other = generate(SynthConfig(num_classes=3, images_per_class=8, clip_dim=6,
                                 feature_dim=4, rng_seed=6))
    assert not np.array_equal(a.image_clip, other.image_clip)


def test_generate_shape_and_labels():
    store = generate(SynthConfig(num_classes=2, images_per_class=10,
                                 clip_dim=4, feature_dim=3))
    assert store.num_images == 20
    assert store.num_classes == 2
    assert store.clip_dim == 4
    assert store.feature_dim == 3
    # class-major layout: first block label 0, second block label 1
    assert np.array_equal(store.ground_truth, np.repeat([0, 1], 10))
    assert len(store.class_names) == 2
    assert len(set(store.image_ids)) == 20
    assert store.meta["generator"] == "synthetic"
    assert store.meta["config"]["images_per_class"] == 10


def test_clip_rows_are_unit_norm():
    store = generate(SynthConfig(num_classes=3, images_per_class=5,
                                 clip_dim=8, feature_dim=4, noise_sigma=2.0))
    for matrix in (store.image_clip, store.text_clip):
        norms = np.linalg.norm(matrix.astype(np.float64), axis=1)
        np.testing.assert_allclose(norms, 1.0, atol=1e-5)


def test_unbiased_text_anchors_are_orthonormal():
    store = generate(SynthConfig(num_classes=4, images_per_class=2,
                                 clip_dim=16, feature_dim=8))
    gram = store.text_clip.astype(np.float64) @ store.text_clip.astype(np.float64).T
    np.testing.assert_allclose(gram, np.eye(4), atol=1e-6)


def test_separation_scales_feature_anchors():
    quiet = SynthConfig(num_classes=2, images_per_class=200, clip_dim=4,
                        feature_dim=4, separation=3.0, noise_sigma=0.01)
    store = generate(quiet)
    norms = np.linalg.norm(store.features.astype(np.float64), axis=1)
    np.testing.assert_allclose(norms.mean(), 3.0, atol=0.01)


def test_noise_sigma_is_rms_norm():
    """separation 0 leaves pure noise whose mean norm is noise_sigma."""
    cfg = SynthConfig(num_classes=2, images_per_class=500, clip_dim=4,
                      feature_dim=16, separation=0.0, noise_sigma=0.8)
    store = generate(cfg)
    norms = np.linalg.norm(store.features.astype(np.float64), axis=1)
    assert norms.mean() == pytest.approx(0.8, rel=0.05)


def test_low_noise_store_is_zero_shot_perfect():
    store = generate(SynthConfig(num_classes=4, images_per_class=10,
                                 clip_dim=8, feature_dim=4, noise_sigma=0.01))
    assert np.array_equal(zero_shot_predict(store), store.ground_truth)


def test_zero_shot_accuracy_degrades_with_noise():
    """Mean zero-shot accuracy over 20 seeds never rises with noise_sigma."""
    means = []
    for sigma in (0.25, 0.75, 1.5, 3.0):
        values = []
        for seed in range(20):
            store = generate(SynthConfig(num_classes=6, images_per_class=30,
                                         clip_dim=16, feature_dim=8,
                                         noise_sigma=sigma, rng_seed=seed))
            values.append(float(np.mean(
                zero_shot_predict(store) == store.ground_truth
            )))
        means.append(float(np.mean(values)))
    assert all(means[i + 1] <= means[i] for i in range(len(means) - 1))
    assert means[0] > 0.99
    assert means[-1] < 0.7


def test_label_bias_perturbs_requested_fraction():
    base = SynthConfig(num_classes=10, images_per_class=1, clip_dim=16,
                       feature_dim=16, rng_seed=3)
    clean = generate(base)
    for bias, expected in ((0.0, 0), (0.3, 3), (1.0, 10)):
        cfg = SynthConfig(num_classes=10, images_per_class=1, clip_dim=16,
                          feature_dim=16, label_bias=bias, rng_seed=3)
        store = generate(cfg)
        # biased rows move by the blend coefficient, untouched rows only by
        # renormalization rounding, so a loose gate separates them cleanly
        changed = sum(
            0 if np.allclose(store.text_clip[i], clean.text_clip[i], atol=1e-4)
            else 1
            for i in range(10)
        )
        assert changed == expected


def test_label_bias_degrades_default_selection():
    """Polluted text anchors pull wrong images into the candidate pool."""
    from selfseed import selection_accuracy

    clean_scores, biased_scores = [], []
    for seed in range(5):
        clean = generate(SynthConfig(rng_seed=seed))
        biased = generate(SynthConfig(label_bias=0.3, rng_seed=seed))
        clean_scores.append(
            selection_accuracy(clean, [5], "default").cells[0].mean_accuracy
        )
        biased_scores.append(
            selection_accuracy(biased, [5], "default").cells[0].mean_accuracy
        )
    assert np.mean(biased_scores) < np.mean(clean_scores)


def test_dimension_too_small_both_spaces():
    with pytest.raises(DimensionTooSmall):
        generate(SynthConfig(num_classes=8, clip_dim=4, feature_dim=16))
    with pytest.raises(DimensionTooSmall):
        generate(SynthConfig(num_classes=8, clip_dim=16, feature_dim=4))


@pytest.mark.parametrize("kwargs", [
    {"num_classes": 1},
    {"images_per_class": 0},
    {"clip_dim": 1},
    {"separation": -0.5},
    {"noise_sigma": 0.0},
    {"label_bias": 1.5},
    {"label_bias": -0.1},
    {"bias_strength": 0.0},
])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        SynthConfig(**kwargs)


def test_generated_store_round_trips(tmp_path):
    from selfseed import load_store, write_store

    store = generate(SynthConfig(num_classes=4, images_per_class=50,
                                 clip_dim=8, feature_dim=4, rng_seed=1))
    write_store(store, tmp_path / "s")
    loaded = load_store(tmp_path / "s")
    assert np.array_equal(loaded.image_clip, store.image_clip)
    assert np.array_equal(loaded.features, store.features)
    assert np.array_equal(loaded.ground_truth, store.ground_truth)
