"""Shared fixtures: random stores and the hand-built stopping scenarios."""

from __future__ import annotations

import numpy as np
import pytest

from selfseed import EmbeddingStore, Ranking

E0 = [1.0, 0.0]
E1 = [0.0, 1.0]


def random_store(
    seed: int,
    m: int = 12,
    n: int = 3,
    clip_dim: int = 6,
    feature_dim: int = 4,
    with_truth: bool = False,
) -> EmbeddingStore:
    """Gaussian store with unit-norm clip rows and raw features."""
    rng = np.random.default_rng(seed)
    image = rng.standard_normal((m, clip_dim))
    image /= np.linalg.norm(image, axis=1, keepdims=True)
    text = rng.standard_normal((n, clip_dim))
    text /= np.linalg.norm(text, axis=1, keepdims=True)
    return EmbeddingStore(
        image_clip=image.astype(np.float32),
        text_clip=text.astype(np.float32),
        features=rng.standard_normal((m, feature_dim)).astype(np.float32),
        class_names=[f"c{i}" for i in range(n)],
        image_ids=[f"im{i}" for i in range(m)],
        ground_truth=rng.integers(0, n, size=m) if with_truth else None,
    )


def two_class_store(features: list[list[float]]) -> EmbeddingStore:
    """Alternating-label store over the plane; features given per image."""
    m = len(features)
    labels = [i % 2 for i in range(m)]
    return EmbeddingStore(
        image_clip=np.array([E0 if l == 0 else E1 for l in labels], dtype=np.float32),
        text_clip=np.array([E0, E1], dtype=np.float32),
        features=np.array(features, dtype=np.float32),
        class_names=["a", "b"],
        image_ids=[f"img-{i}" for i in range(m)],
    )


def two_rankings(entries0, entries1) -> list[Ranking]:
    return [Ranking(0, entries0), Ranking(1, entries1)]


@pytest.fixture
def small_store() -> EmbeddingStore:
    return random_store(7, with_truth=True)


# Stopping scenarios. Constants below (loss levels near 0.599 for the seed
# phase) come from running the fixtures once and freezing the observed
# values; the runs are fully deterministic so the freeze is safe.


@pytest.fixture
def duplicate_feature_store() -> EmbeddingStore:
    # three tranches per label, every feature row an exact anchor copy:
    # fine-tuning continues on the seed geometry, so the loss keeps falling
    return two_class_store([E0, E1, E0, E1, E0, E1])


@pytest.fixture
def duplicate_feature_rankings() -> list[Ranking]:
    return two_rankings(
        [(0, 0.99), (2, 0.98), (4, 0.97)],
        [(1, 0.99), (3, 0.98), (5, 0.97)],
    )


@pytest.fixture
def rebound_store() -> EmbeddingStore:
    # tranche 2 holds low-margin mixtures: still predicted correctly, but
    # their loss under the seed-trained parameters exceeds the seed's final
    # loss, which is exactly the rebound condition
    return two_class_store([E0, E1, [0.6, 0.4], [0.4, 0.6]])


@pytest.fixture
def rebound_rankings() -> list[Ranking]:
    return two_rankings([(0, 0.99), (2, 0.98)], [(1, 0.99), (3, 0.98)])


@pytest.fixture
def crosswired_store() -> EmbeddingStore:
    # tranche 2 features belong to the opposite class, so the classifier
    # rejects every candidate and the tuning set comes back empty
    return two_class_store([E0, E1, E1, E0])
