"""Ground-truth evaluation: selection accuracy curves and accuracy reports.

Selection accuracy asks, per label, what fraction of the top-k ranked images
truly belong to that label, then macro-averages over labels. Computing it for
a grid of k values and both selection methods yields the familiar
method-comparison curves. If a ranking has fewer than k entries (tiny store
or aggressive b_size), that label's cell is scored over the entries that
exist; macro-averaging keeps labels comparable in that edge case.

Classification accuracy is the usual overall fraction plus a per-class
breakdown and an N x N confusion matrix (rows = true class, columns =
predicted). Reports serialize to JSON (field order fixed, meta embedded) or
to a plain CSV with exactly one header row, which is what plotting scripts
want to slurp.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import DimensionMismatch, LengthMismatch, MissingGroundTruth
from .similarity import METHODS, build_rankings
from .store import EmbeddingStore
from .validation import check_positive_int


@dataclass
class SelectionCell:
    """Mean selection accuracy for one (method, k) point, plus per-class values."""

    method: str
    k: int
    mean_accuracy: float
    per_class: list[float]


@dataclass
class SelectionReport:
    k_grid: list[int]
    class_names: list[str]
    cells: list[SelectionCell]
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "kind": "selection_report",
            "k_grid": list(self.k_grid),
            "class_names": list(self.class_names),
            "cells": [
                {
                    "method": c.method,
                    "k": c.k,
                    "mean_accuracy": c.mean_accuracy,
                    "per_class": list(c.per_class),
                }
                for c in self.cells
            ],
            "meta": self.meta,
        }


@dataclass
class AccuracyReport:
    """Overall and per-class accuracy with a confusion matrix.

    ``variant`` tags which classifier produced the predictions (for example
    zero_shot, seed_only, complete) so several reports can sit side by side.
    """

    variant: str
    num_images: int
    overall: float
    per_class: list[float]
    support: list[int]
    confusion: list[list[int]]
    class_names: list[str]
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        n = len(self.class_names)
        conf = np.asarray(self.confusion, dtype=np.int64)
        if conf.shape != (n, n):
            raise DimensionMismatch(
                f"confusion matrix has shape {conf.shape}, expected ({n}, {n})"
            )
        if [int(s) for s in conf.sum(axis=1)] != [int(s) for s in self.support]:
            raise DimensionMismatch("confusion rows must sum to per-class support")
        if int(conf.sum()) != self.num_images:
            raise DimensionMismatch("confusion total must equal num_images")

    def to_dict(self) -> dict:
        return {
            "kind": "accuracy_report",
            "variant": self.variant,
            "num_images": self.num_images,
            "overall": self.overall,
            "per_class": list(self.per_class),
            "support": list(self.support),
            "confusion": [list(row) for row in self.confusion],
            "class_names": list(self.class_names),
            "meta": self.meta,
        }


def selection_accuracy(
    store: EmbeddingStore,
    k_grid: Sequence[int],
    method: str,
    b_size: int = 100,
    k_neighbors: int = 5,
) -> SelectionReport:
    """Macro-averaged top-k selection accuracy for one method over a k grid.

    Raises:
        MissingGroundTruth: store has no labels to score against.
        ValueError: empty grid, k outside [1, b_size], unknown method.
    """
    if store.ground_truth is None:
        raise MissingGroundTruth("selection accuracy needs ground-truth labels")
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}, got {method!r}")
    grid = [check_positive_int(k, "k") for k in k_grid]
    if not grid:
        raise ValueError("k_grid must not be empty")
    if max(grid) > b_size:
        raise ValueError(f"largest k {max(grid)} exceeds b_size {b_size}")

    rankings = build_rankings(
        store, method=method, b_size=b_size, k_neighbors=k_neighbors
    )
    gt = store.ground_truth
    cells = []
    for k in grid:
        per_class = []
        for ranking in rankings:
            take = min(k, len(ranking))
            top = ranking.image_indices[:take]
            hits = sum(1 for i in top if int(gt[i]) == ranking.label_index)
            per_class.append(hits / take)
        cells.append(
            SelectionCell(
                method=method,
                k=k,
                mean_accuracy=float(np.mean(per_class)),
                per_class=per_class,
            )
        )
    return SelectionReport(
        k_grid=grid, class_names=list(store.class_names), cells=cells
    )


def selection_report(
    store: EmbeddingStore,
    k_grid: Sequence[int],
    methods: Sequence[str] = METHODS,
    b_size: int = 100,
    k_neighbors: int = 5,
) -> SelectionReport:
    """Selection accuracy for several methods merged into one report."""
    combined: Optional[SelectionReport] = None
    for method in methods:
        rep = selection_accuracy(
            store, k_grid, method, b_size=b_size, k_neighbors=k_neighbors
        )
        if combined is None:
            combined = rep
        else:
            combined.cells.extend(rep.cells)
    assert combined is not None, "methods must not be empty"
    return combined


def classification_accuracy(
    predictions,
    ground_truth,
    class_names: Optional[Sequence[str]] = None,
    variant: str = "complete",
) -> AccuracyReport:
    """Score predictions against ground truth.

    Class count comes from ``class_names`` when given, otherwise from the
    largest index seen. Labels with no ground-truth images score 0 accuracy
    by convention (their row of the confusion matrix is all zero anyway).

    Raises:
        LengthMismatch: prediction and label vectors differ in length.
        DimensionMismatch: a label falls outside the class range.
    """
    preds = np.ascontiguousarray(predictions, dtype=np.int64)
    gt = np.ascontiguousarray(ground_truth, dtype=np.int64)
    if preds.shape != gt.shape or preds.ndim != 1:
        raise LengthMismatch(
            f"predictions have shape {preds.shape}, ground truth {gt.shape}"
        )
    if preds.size == 0:
        raise ValueError("cannot score an empty prediction vector")
    if preds.min() < 0 or gt.min() < 0:
        raise DimensionMismatch("labels must be non-negative")
    n = int(max(preds.max(), gt.max())) + 1
    if class_names is not None:
        if n > len(class_names):
            raise DimensionMismatch(
                f"label {n - 1} out of range for {len(class_names)} classes"
            )
        n = len(class_names)
        names = [str(c) for c in class_names]
    else:
        names = [f"class_{i:03d}" for i in range(n)]

    confusion = np.zeros((n, n), dtype=np.int64)
    np.add.at(confusion, (gt, preds), 1)
    support = confusion.sum(axis=1)
    diag = np.diag(confusion)
    per_class = [
        float(diag[i] / support[i]) if support[i] else 0.0 for i in range(n)
    ]
    return AccuracyReport(
        variant=variant,
        num_images=int(preds.size),
        overall=float(diag.sum() / preds.size),
        per_class=per_class,
        support=[int(s) for s in support],
        confusion=[[int(v) for v in row] for row in confusion],
        class_names=names,
    )


def emit_report(
    report: SelectionReport | AccuracyReport,
    path: str | os.PathLike,
    format: str = "json",
) -> str:
    """Write a report as JSON or CSV; returns the path written.

    JSON embeds the full report including meta. CSV is one header row plus
    data rows only: selection reports emit one row per (method, k) with
    per-class columns; accuracy reports emit one row per class plus a final
    overall row (class_index -1).
    """
    p = os.fspath(path)
    if format == "json":
        with open(p, "w", encoding="utf-8") as fh:
            json.dump(report.to_dict(), fh, indent=2)
            fh.write("\n")
        return p
    if format != "csv":
        raise ValueError(f"format must be 'json' or 'csv', got {format!r}")

    with open(p, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        if isinstance(report, SelectionReport):
            writer.writerow(
                ["method", "k", "mean_accuracy"] + list(report.class_names)
            )
            for cell in report.cells:
                writer.writerow(
                    [cell.method, cell.k, repr(cell.mean_accuracy)]
                    + [repr(v) for v in cell.per_class]
                )
        elif isinstance(report, AccuracyReport):
            writer.writerow(
                ["class_index", "class_name", "support", "correct", "accuracy"]
            )
            diag = [report.confusion[i][i] for i in range(len(report.class_names))]
            for i, name in enumerate(report.class_names):
                writer.writerow(
                    [i, name, report.support[i], diag[i], repr(report.per_class[i])]
                )
            writer.writerow(
                [
                    -1,
                    "overall",
                    report.num_images,
                    sum(diag),
                    repr(report.overall),
                ]
            )
        else:
            raise TypeError(f"unsupported report type {type(report).__name__}")
    return p
