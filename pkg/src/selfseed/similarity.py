"""Similarity ops: candidate selection and neighborhood-consensus ranking.

Two selection methods share one vocabulary:

* ``default``: for each label, rank all images by cosine against the label's
  text embedding and keep the top ``b_size``.
* ``improved``: take the same top ``b_size`` candidates, then re-rank them by
  a consensus score: the mean cosine between the label text embedding and
  each candidate's k nearest neighbors in image-embedding space (neighbors
  searched over the entire store, candidate itself excluded).

Every ordering in this module is total and deterministic: descending score,
ties broken by ascending image index. Similarities are computed in float64
(one cached upcast per store) so scores are reproducible to well below any
tolerance used by callers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import KTooLarge, LengthMismatch, ZeroNormInput
from .store import EmbeddingStore
from .validation import ZERO_NORM_EPS, check_index, check_positive_int, check_vector

METHODS = ("default", "improved")


@dataclass
class CandidateSet:
    """Top-``b_size`` images for one label, in selection order."""

    label_index: int
    members: list[int]

    def __post_init__(self) -> None:
        self.members = [int(m) for m in self.members]
        if len(set(self.members)) != len(self.members):
            raise ValueError("candidate members must be distinct")

    def __len__(self) -> int:
        return len(self.members)


@dataclass
class Ranking:
    """Ordered (image_index, score) pairs for one label.

    Scores are cosines or means of cosines, so each lies in [-1, 1].
    Ordering is descending score with ties broken by ascending image index.
    """

    label_index: int
    entries: list[tuple[int, float]]

    def __post_init__(self) -> None:
        self.entries = [(int(i), float(s)) for i, s in self.entries]

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def image_indices(self) -> list[int]:
        return [i for i, _ in self.entries]

    @property
    def scores(self) -> list[float]:
        return [s for _, s in self.entries]


def cosine(u, v) -> float:
    """Cosine similarity of two vectors, clamped to [-1, 1].

    Raises:
        LengthMismatch: vectors differ in length.
        ZeroNormInput: either vector has (near-)zero norm.
    """
    a = check_vector(u, "u")
    b = check_vector(v, "v")
    if a.shape[0] != b.shape[0]:
        raise LengthMismatch(
            f"vectors have lengths {a.shape[0]} and {b.shape[0]}"
        )
    na = math.sqrt(float(a @ a))
    nb = math.sqrt(float(b @ b))
    if na < ZERO_NORM_EPS or nb < ZERO_NORM_EPS:
        raise ZeroNormInput("cosine undefined for zero-norm input")
    return float(np.clip(float(a @ b) / (na * nb), -1.0, 1.0))


def _image64(store: EmbeddingStore) -> np.ndarray:
    cached = store.__dict__.get("_image_clip64")
    if cached is None:
        cached = store.image_clip.astype(np.float64)
        cached.setflags(write=False)
        store.__dict__["_image_clip64"] = cached
    return cached


def _text64(store: EmbeddingStore) -> np.ndarray:
    cached = store.__dict__.get("_text_clip64")
    if cached is None:
        cached = store.text_clip.astype(np.float64)
        cached.setflags(write=False)
        store.__dict__["_text_clip64"] = cached
    return cached


def _ordered_desc(scores: np.ndarray) -> np.ndarray:
    """Indices ordering *scores* descending, equal scores by ascending index."""
    return np.argsort(-scores, kind="stable")


def text_image_similarities(store: EmbeddingStore, label_index: int) -> np.ndarray:
    """Cosine of every image against one label's text embedding (length M).

    Store rows are unit-norm, so this is a single matrix-vector product.
    """
    label_index = check_index(label_index, store.num_classes, "label_index")
    return _image64(store) @ _text64(store)[label_index]


def default_candidates(
    store: EmbeddingStore, label_index: int, b_size: int = 100
) -> CandidateSet:
    """Top ``min(b_size, M)`` images for a label by text-image cosine."""
    b_size = check_positive_int(b_size, "b_size")
    sims = text_image_similarities(store, label_index)
    order = _ordered_desc(sims)
    take = min(b_size, store.num_images)
    return CandidateSet(label_index=label_index, members=order[:take].tolist())


def neighbors(store: EmbeddingStore, image_index: int, k: int) -> list[int]:
    """The k nearest images to *image_index* in image-embedding space.

    Searched over the whole store, the query image itself excluded.
    Descending similarity, ties by ascending index.

    Raises:
        KTooLarge: k exceeds M - 1.
    """
    image_index = check_index(image_index, store.num_images, "image_index")
    k = check_positive_int(k, "k")
    if k > store.num_images - 1:
        raise KTooLarge(
            f"k={k} neighbors requested but store has only "
            f"{store.num_images - 1} other images"
        )
    img = _image64(store)
    sims = img @ img[image_index]
    order = _ordered_desc(sims)
    out = [int(i) for i in order if int(i) != image_index]
    return out[:k]


def consensus_score(
    store: EmbeddingStore, image_index: int, label_index: int, k: int
) -> float:
    """Mean cosine between a label's text embedding and the image's k neighbors.

    The neighborhood vote: a candidate is only as good as the company it
    keeps in image space.
    """
    nbrs = neighbors(store, image_index, k)
    sims = text_image_similarities(store, label_index)
    # averaging in index order makes the score a function of the neighbor
    # set alone, so images sharing a neighborhood tie exactly
    return float(np.mean(sims[sorted(nbrs)]))


def build_ranking(
    store: EmbeddingStore, candidate_set: CandidateSet, k: int
) -> Ranking:
    """Re-rank a candidate set by consensus score.

    Entries are a permutation of the candidate members, descending score,
    ties by ascending image index.
    """
    sims = text_image_similarities(store, candidate_set.label_index)
    scored = []
    for idx in candidate_set.members:
        nbrs = neighbors(store, idx, k)
        scored.append((idx, float(np.mean(sims[sorted(nbrs)]))))
    scored.sort(key=lambda pair: (-pair[1], pair[0]))
    return Ranking(label_index=candidate_set.label_index, entries=scored)


def build_rankings(
    store: EmbeddingStore,
    method: str = "improved",
    b_size: int = 100,
    k_neighbors: int = 5,
) -> list[Ranking]:
    """One ranking per label, using the requested selection method.

    ``default`` keeps candidates in text-cosine order (scores are those
    cosines); ``improved`` re-ranks them by consensus score.
    """
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}, got {method!r}")
    rankings = []
    for label in range(store.num_classes):
        cands = default_candidates(store, label, b_size=b_size)
        if method == "default":
            sims = text_image_similarities(store, label)
            entries = [(i, float(sims[i])) for i in cands.members]
            rankings.append(Ranking(label_index=label, entries=entries))
        else:
            rankings.append(build_ranking(store, cands, k_neighbors))
    return rankings


def zero_shot_predict(store: EmbeddingStore) -> np.ndarray:
    """Label of the most similar text embedding per image (ties: lowest index).

    The no-training baseline the pipeline is measured against.
    """
    sims = _image64(store) @ _text64(store).T
    return np.argmax(sims, axis=1)
