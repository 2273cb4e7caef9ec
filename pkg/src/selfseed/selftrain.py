"""Collaborative self-learning loop.

The loop bootstraps a classifier from pseudo-labels the retrieval encoder is
most confident about, then repeatedly asks the classifier to co-sign the next
tranche of candidates:

1. SEED: top k ranking entries per label (conflicts resolved: an image
   claimed by several labels keeps the claim with the highest ranking score,
   ties to the lower label index, and losing labels do not backfill).
   Train from scratch for ``i_epochs``.
2. CYCLE: advance a per-label cursor by k entries, keep only images whose
   current prediction agrees with the ranking label, fine-tune on exactly
   that tranche for ``r_epochs``. Cursor positions are consumed whether or
   not the classifier accepts the images.
3. STOP: MaxCycles and RankingExhausted are checked before each selection;
   a fine-tune whose first-epoch loss fails to improve on the previous
   phase's final-epoch loss is a rebound (parameters roll back to the
   pre-cycle snapshot); a fine-tune ending at or above ``loss_limit`` stops
   the loop with state kept; a tranche the classifier fully rejects stops
   with NoConfidentSamples.

Training phases record the pre-update loss per epoch, so "first-epoch loss"
is the incoming parameters' loss on the new tranche and "final-epoch loss"
is the loss just before the last update.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .classifier import (
    LabeledBatch,
    LinearClassifier,
    TrainConfig,
    init_classifier,
    predict,
    train,
)
from .errors import DimensionMismatch, RankingTooShort, SeedEmpty
from .similarity import Ranking
from .store import EmbeddingStore
from .validation import check_positive_int


class StopReason(str, Enum):
    """Why a self-training run terminated. Exactly one per run."""

    LOSS_REBOUND = "LossRebound"
    LOSS_ABOVE_LIMIT = "LossAboveLimit"
    MAX_CYCLES = "MaxCycles"
    RANKING_EXHAUSTED = "RankingExhausted"
    NO_CONFIDENT_SAMPLES = "NoConfidentSamples"


@dataclass
class CycleConfig:
    """Knobs for one self-training run."""

    k: int = 5
    b_size: int = 100
    i_epochs: int = 100
    r_epochs: int = 20
    learning_rate: float = 0.001
    loss_limit: float = 0.1
    max_cycles: int = 20
    rng_seed: int = 0
    retain_seed: bool = False  # ablation: append the seed set to every tranche

    def __post_init__(self) -> None:
        self.k = check_positive_int(self.k, "k")
        self.b_size = check_positive_int(self.b_size, "b_size")
        self.i_epochs = check_positive_int(self.i_epochs, "i_epochs")
        self.r_epochs = check_positive_int(self.r_epochs, "r_epochs")
        self.max_cycles = check_positive_int(self.max_cycles, "max_cycles")
        if not self.learning_rate > 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if not self.loss_limit > 0:
            raise ValueError(f"loss_limit must be > 0, got {self.loss_limit}")


@dataclass
class PseudoLabeledSet:
    """(image_index, label_index) assignments; each image at most once."""

    assignments: list[tuple[int, int]]

    def __post_init__(self) -> None:
        self.assignments = [(int(i), int(l)) for i, l in self.assignments]
        images = [i for i, _ in self.assignments]
        if len(set(images)) != len(images):
            raise ValueError("an image may carry at most one pseudo-label")

    def __len__(self) -> int:
        return len(self.assignments)

    def to_batch(self, store: EmbeddingStore) -> LabeledBatch:
        idx = [i for i, _ in self.assignments]
        labels = [l for _, l in self.assignments]
        return LabeledBatch(
            features=store.features[idx], labels=np.asarray(labels, dtype=np.int64)
        )


@dataclass
class CycleRecord:
    """Audit record for one training phase (cycle_index 0 is the seed)."""

    cycle_index: int
    consumed_per_label: list[int]
    confident_count: int
    first_epoch_loss: float
    last_epoch_loss: float
    rolled_back: bool = False


@dataclass
class CycleHistory:
    records: list[CycleRecord] = field(default_factory=list)
    stop_reason: StopReason | None = None

    @property
    def num_cycles(self) -> int:
        """Tuning cycles only; the seed phase does not count."""
        return sum(1 for r in self.records if r.cycle_index > 0)


def _by_label(rankings: list[Ranking], num_classes: int) -> list[Ranking]:
    """Order rankings by label and require exactly one per class."""
    seen = {r.label_index: r for r in rankings}
    if len(seen) != len(rankings) or sorted(seen) != list(range(num_classes)):
        raise DimensionMismatch(
            f"rankings must cover labels 0..{num_classes - 1} exactly once"
        )
    return [seen[i] for i in range(num_classes)]


def _resolve_conflicts(
    claims: list[tuple[int, int, float]]
) -> list[tuple[int, int]]:
    """Best claim per image: highest score wins, ties to the lower label."""
    best: dict[int, tuple[float, int]] = {}
    for image, label, score in claims:
        cur = best.get(image)
        if cur is None or score > cur[0] or (score == cur[0] and label < cur[1]):
            best[image] = (score, label)
    return sorted((image, label) for image, (_, label) in best.items())


def assemble_seed(rankings: list[Ranking], k: int) -> PseudoLabeledSet:
    """Top-k entries of every ranking, conflict-resolved, no backfill.

    Raises:
        RankingTooShort: some ranking holds fewer than k entries.
    """
    k = check_positive_int(k, "k")
    claims: list[tuple[int, int, float]] = []
    for ranking in sorted(rankings, key=lambda r: r.label_index):
        if len(ranking) < k:
            raise RankingTooShort(
                f"ranking for label {ranking.label_index} has "
                f"{len(ranking)} entries, need {k}"
            )
        for image, score in ranking.entries[:k]:
            claims.append((image, ranking.label_index, score))
    return PseudoLabeledSet(_resolve_conflicts(claims))


def cycle_select(
    rankings: list[Ranking],
    cursors: list[int],
    k: int,
    clf: LinearClassifier,
    store: EmbeddingStore,
) -> tuple[PseudoLabeledSet, list[int]]:
    """Next tranche: k entries per label past the cursor, classifier-filtered.

    Only images whose current prediction matches the ranking label survive.
    Cursors advance by the number of entries consumed regardless of
    acceptance; exhausted rankings contribute nothing and stay put.
    """
    k = check_positive_int(k, "k")
    if len(cursors) != len(rankings):
        raise DimensionMismatch(
            f"{len(cursors)} cursors for {len(rankings)} rankings"
        )
    store = store.without_ground_truth()
    claims: list[tuple[int, int, float]] = []
    new_cursors = list(int(c) for c in cursors)
    for pos, ranking in enumerate(rankings):
        start = new_cursors[pos]
        chunk = ranking.entries[start : start + k]
        new_cursors[pos] = start + len(chunk)
        if not chunk:
            continue
        feats = store.features[[image for image, _ in chunk]]
        preds = predict(clf, feats)
        for (image, score), pred in zip(chunk, preds):
            if int(pred) == ranking.label_index:
                claims.append((image, ranking.label_index, score))
    return PseudoLabeledSet(_resolve_conflicts(claims)), new_cursors


def train_seed_classifier(
    store: EmbeddingStore, rankings: list[Ranking], config: CycleConfig
) -> tuple[LinearClassifier, PseudoLabeledSet, list[float]]:
    """Assemble the seed set and train a fresh classifier on it.

    Shared by :func:`run_selftraining` and by callers that want the
    seed-only variant for comparison; with equal config the result is
    bit-identical to the loop's own seed phase.
    """
    store = store.without_ground_truth()
    seed = assemble_seed(rankings, config.k)
    clf = init_classifier(store.feature_dim, store.num_classes, config.rng_seed)
    trace = train(
        clf,
        seed.to_batch(store),
        TrainConfig(
            epochs=config.i_epochs,
            learning_rate=config.learning_rate,
            rng_seed=config.rng_seed,
        ),
    )
    return clf, seed, trace


def run_selftraining(
    store: EmbeddingStore, rankings: list[Ranking], config: CycleConfig
) -> tuple[LinearClassifier, CycleHistory]:
    """Seed phase plus fine-tuning cycles until a stop criterion fires.

    Returns the final classifier (pre-cycle parameters when the last cycle
    rebounded) and the full audit history with exactly one stop reason.

    Raises:
        SeedEmpty: every ranking is empty.
        RankingTooShort: some ranking cannot supply the first k entries.
    """
    store = store.without_ground_truth()
    n = store.num_classes
    by_label = _by_label(rankings, n)
    if all(len(r) == 0 for r in by_label):
        raise SeedEmpty("every ranking is empty; nothing to seed from")

    clf, seed, seed_trace = train_seed_classifier(store, by_label, config)
    seed_batch = seed.to_batch(store)
    records = [
        CycleRecord(
            cycle_index=0,
            consumed_per_label=[config.k] * n,
            confident_count=len(seed),
            first_epoch_loss=seed_trace[0],
            last_epoch_loss=seed_trace[-1],
        )
    ]
    cursors = [config.k] * n
    prev_last_loss = seed_trace[-1]
    cycles = 0
    tune_config = TrainConfig(
        epochs=config.r_epochs,
        learning_rate=config.learning_rate,
        rng_seed=config.rng_seed,
    )

    while True:
        if cycles >= config.max_cycles:
            reason = StopReason.MAX_CYCLES
            break
        if all(cursors[i] >= len(by_label[i]) for i in range(n)):
            reason = StopReason.RANKING_EXHAUSTED
            break
        d_tune, new_cursors = cycle_select(by_label, cursors, config.k, clf, store)
        consumed = [new_cursors[i] - cursors[i] for i in range(n)]
        cursors = new_cursors
        if len(d_tune) == 0:
            reason = StopReason.NO_CONFIDENT_SAMPLES
            break

        snapshot = clf.clone()
        tune_batch = d_tune.to_batch(store)
        if config.retain_seed:
            tune_batch = LabeledBatch(
                features=np.concatenate([tune_batch.features, seed_batch.features]),
                labels=np.concatenate([tune_batch.labels, seed_batch.labels]),
            )
        trace = train(clf, tune_batch, tune_config)
        cycles += 1
        record = CycleRecord(
            cycle_index=cycles,
            consumed_per_label=consumed,
            confident_count=len(d_tune),
            first_epoch_loss=trace[0],
            last_epoch_loss=trace[-1],
        )
        if trace[0] >= prev_last_loss:
            record.rolled_back = True
            records.append(record)
            clf = snapshot
            reason = StopReason.LOSS_REBOUND
            break
        records.append(record)
        if trace[-1] >= config.loss_limit:
            reason = StopReason.LOSS_ABOVE_LIMIT
            break
        prev_last_loss = trace[-1]

    return clf, CycleHistory(records=records, stop_reason=reason)


def write_history(
    history: CycleHistory, path: str | os.PathLike, config_echo: dict | None = None
) -> None:
    """Serialize a history as JSON lines: config, one line per phase, stop."""
    lines: list[dict] = []
    if config_echo is not None:
        lines.append({"kind": "config", "config": config_echo})
    for rec in history.records:
        lines.append(
            {
                "kind": "seed" if rec.cycle_index == 0 else "cycle",
                "cycle_index": rec.cycle_index,
                "consumed_per_label": rec.consumed_per_label,
                "confident_count": rec.confident_count,
                "first_epoch_loss": rec.first_epoch_loss,
                "last_epoch_loss": rec.last_epoch_loss,
                "rolled_back": rec.rolled_back,
            }
        )
    lines.append({"kind": "stop", "stop_reason": history.stop_reason.value})
    with open(path, "w", encoding="utf-8") as fh:
        for line in lines:
            fh.write(json.dumps(line))
            fh.write("\n")
