"""Synthetic embedding stores with known geometry and ground truth.

The generator fakes the two encoder outputs the pipeline consumes:

* Retrieval space (``clip_dim``): one orthonormal anchor direction per class
  (QR of a seeded Gaussian matrix, hence ``clip_dim >= num_classes``). Image
  rows are their class anchor plus isotropic noise, re-normalized. Text rows
  are the anchors themselves, except that a ``label_bias`` fraction of them
  is blended toward one wrong class's anchor to emulate semantic confusion
  in the text encoder: those labels retrieve a polluted candidate pool.
* Feature space (``feature_dim``): an independent set of orthonormal anchors
  scaled by ``separation``; rows are anchor plus isotropic noise, kept raw.

``noise_sigma`` is the RMS norm of the noise vector (draws are scaled by
``1/sqrt(dim)``), so the knob means the same thing in both spaces regardless
of their width: noise_sigma 1.0 is noise as long as the anchor itself.

Everything is derived from one seeded generator in a fixed draw order, so a
config maps to exactly one store, bit for bit.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import DimensionTooSmall
from .store import EmbeddingStore
from .validation import check_positive_int


@dataclass
class SynthConfig:
    num_classes: int = 10
    images_per_class: int = 100
    clip_dim: int = 64
    feature_dim: int = 32
    separation: float = 1.0
    noise_sigma: float = 0.35
    label_bias: float = 0.0
    bias_strength: float = 0.95  # blend toward the wrong anchor, < 1 keeps the true class closer
    rng_seed: int = 0

    def __post_init__(self) -> None:
        self.num_classes = check_positive_int(self.num_classes, "num_classes")
        if self.num_classes < 2:
            raise ValueError("num_classes must be >= 2")
        self.images_per_class = check_positive_int(
            self.images_per_class, "images_per_class"
        )
        if self.clip_dim < 2 or self.feature_dim < 2:
            raise ValueError("clip_dim and feature_dim must be >= 2")
        if self.separation < 0:
            raise ValueError("separation must be non-negative")
        if not self.noise_sigma > 0:
            raise ValueError("noise_sigma must be positive")
        if not 0.0 <= self.label_bias <= 1.0:
            raise ValueError("label_bias must lie in [0, 1]")
        if not self.bias_strength > 0:
            raise ValueError("bias_strength must be positive")


def _orthonormal_anchors(rng: np.random.Generator, n: int, dim: int) -> np.ndarray:
    """n orthonormal rows in dim dimensions via QR of a Gaussian draw."""
    q, _ = np.linalg.qr(rng.standard_normal((dim, n)))
    return q.T[:n]


def _unit_rows(matrix: np.ndarray) -> np.ndarray:
    return matrix / np.linalg.norm(matrix, axis=1, keepdims=True)


def generate(config: SynthConfig) -> EmbeddingStore:
    """Build a store from *config*; ground truth is always populated.

    Raises:
        DimensionTooSmall: fewer dimensions than classes in either space
            (the orthogonal anchor construction needs dim >= num_classes).
    """
    n = config.num_classes
    per = config.images_per_class
    if config.clip_dim < n:
        raise DimensionTooSmall(
            f"clip_dim {config.clip_dim} cannot host {n} orthogonal anchors"
        )
    if config.feature_dim < n:
        raise DimensionTooSmall(
            f"feature_dim {config.feature_dim} cannot host {n} orthogonal anchors"
        )

    rng = np.random.default_rng(config.rng_seed)
    m = n * per
    labels = np.repeat(np.arange(n), per)

    clip_anchors = _orthonormal_anchors(rng, n, config.clip_dim)
    text = clip_anchors.copy()
    num_biased = round(config.label_bias * n)
    if num_biased > 0:
        biased = rng.choice(n, size=num_biased, replace=False)
        for label in sorted(int(b) for b in biased):
            # any class but this one; shift the draw past the gap
            wrong = int(rng.integers(n - 1))
            if wrong >= label:
                wrong += 1
            text[label] = clip_anchors[label] + config.bias_strength * clip_anchors[wrong]
        text = _unit_rows(text)

    clip_noise = rng.standard_normal((m, config.clip_dim)) * (
        config.noise_sigma / np.sqrt(config.clip_dim)
    )
    image_clip = _unit_rows(clip_anchors[labels] + clip_noise)

    feature_anchors = _orthonormal_anchors(rng, n, config.feature_dim)
    feature_noise = rng.standard_normal((m, config.feature_dim)) * (
        config.noise_sigma / np.sqrt(config.feature_dim)
    )
    features = config.separation * feature_anchors[labels] + feature_noise

    return EmbeddingStore(
        image_clip=image_clip,
        text_clip=text,
        features=features,
        class_names=[f"class_{i:03d}" for i in range(n)],
        image_ids=[f"synth-{i:05d}" for i in range(m)],
        ground_truth=labels,
        meta={"generator": "synthetic", "config": asdict(config)},
    )
