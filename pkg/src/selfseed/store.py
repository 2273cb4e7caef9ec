"""Embedding store: on-disk layout and in-memory container.

A store directory holds a ``manifest.json`` plus three binary matrices:

    image_clip.bin   M x d_c   image embeddings from the retrieval encoder
    text_clip.bin    N x d_c   one text embedding per class label
    features.bin     M x d_f   classifier-input features (decoupled extractor)

Each ``.bin`` file uses the same trivial container, magic ``EMBSTOR1``:

    bytes 0..7    b"EMBSTOR1"
    bytes 8..11   uint32 little-endian row count
    bytes 12..15  uint32 little-endian column count
    bytes 16..    float32 little-endian values, row-major, no padding/footer

The manifest ties the matrices together and optionally carries ground-truth
labels for evaluation. Ground truth never participates in selection or
training; pipeline entry points strip it via :meth:`EmbeddingStore.without_ground_truth`.

On load, image and text rows are L2-normalized (cosine against them reduces
to a dot product downstream). Rows already unit-norm within ``NORM_TOL`` are
left byte-identical, which makes write/load round trips exact. Feature rows
are never normalized; they stay raw extractor output.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DimensionMismatch, IoFailure, MissingFile, ZeroNormRow
from .validation import ZERO_NORM_EPS, as_float_matrix, check_same_length

MAGIC = b"EMBSTOR1"
MANIFEST_VERSION = 1
MANIFEST_NAME = "manifest.json"

# Rows whose L2 norm is within this tolerance of 1 are considered already
# normalized and are not touched on load.
NORM_TOL = 1e-5

_MATRIX_FILES = ("image_clip", "text_clip", "features")


def write_matrix(path: str | os.PathLike, matrix: np.ndarray) -> None:
    """Write a 2-D float32 matrix in the EMBSTOR1 container format.

    The write goes through a temp file in the same directory followed by an
    atomic replace, so readers never observe a half-written matrix.
    """
    arr = np.ascontiguousarray(matrix, dtype="<f4")
    if arr.ndim != 2:
        raise DimensionMismatch(f"matrix must be 2-D, got shape {arr.shape}")
    rows, cols = arr.shape
    header = MAGIC + np.array([rows, cols], dtype="<u4").tobytes()
    tmp = f"{path}.tmp"
    try:
        with open(tmp, "wb") as fh:
            fh.write(header)
            fh.write(arr.tobytes(order="C"))
        os.replace(tmp, path)
    except OSError as exc:
        raise IoFailure(f"cannot write matrix {path}: {exc}") from exc


def read_matrix(path: str | os.PathLike) -> np.ndarray:
    """Read an EMBSTOR1 matrix file into a float32 array.

    Raises:
        MissingFile: the path does not exist.
        IoFailure: bad magic, truncated header, or a payload whose size
            disagrees with the declared shape (trailing bytes included).
    """
    if not os.path.exists(path):
        raise MissingFile(f"matrix file not found: {path}")
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise IoFailure(f"cannot read matrix {path}: {exc}") from exc
    if len(blob) < 16 or blob[:8] != MAGIC:
        raise IoFailure(f"{path}: not an EMBSTOR1 matrix file")
    rows, cols = np.frombuffer(blob, dtype="<u4", count=2, offset=8)
    expected = 16 + int(rows) * int(cols) * 4
    if len(blob) != expected:
        raise IoFailure(
            f"{path}: payload is {len(blob)} bytes, expected {expected} "
            f"for a {rows}x{cols} matrix"
        )
    data = np.frombuffer(blob, dtype="<f4", offset=16)
    return data.reshape(int(rows), int(cols)).copy()


def _normalized_rows(matrix: np.ndarray, name: str) -> np.ndarray:
    """Return *matrix* with unit-norm rows; leave near-unit rows untouched."""
    norms = np.linalg.norm(matrix.astype(np.float64), axis=1)
    if np.any(norms < ZERO_NORM_EPS):
        bad = int(np.argmax(norms < ZERO_NORM_EPS))
        raise ZeroNormRow(f"{name} row {bad} has zero norm")
    off = np.abs(norms - 1.0) > NORM_TOL
    if not np.any(off):
        return matrix
    out = matrix.copy()
    scaled = matrix[off].astype(np.float64) / norms[off, None]
    out[off] = scaled.astype(np.float32)
    return out


@dataclass
class EmbeddingStore:
    """In-memory view of one store directory.

    Invariants are enforced at construction: matching row counts, finite
    values, unit-norm CLIP rows (within ``NORM_TOL``), raw feature rows, and
    a quarantined optional ground-truth vector. All arrays are set read-only;
    a store never mutates after construction.
    """

    image_clip: np.ndarray
    text_clip: np.ndarray
    features: np.ndarray
    class_names: list[str]
    image_ids: list[str]
    ground_truth: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.image_clip = _normalized_rows(
            as_float_matrix(self.image_clip, "image_clip"), "image_clip"
        )
        self.text_clip = _normalized_rows(
            as_float_matrix(self.text_clip, "text_clip"), "text_clip"
        )
        self.features = as_float_matrix(self.features, "features")

        m, d_c = self.image_clip.shape
        n, d_c2 = self.text_clip.shape
        if d_c != d_c2:
            raise DimensionMismatch(
                f"image_clip dim {d_c} != text_clip dim {d_c2}"
            )
        if m < 1:
            raise DimensionMismatch("store must contain at least one image")
        if n < 2:
            raise DimensionMismatch(f"store needs at least 2 classes, got {n}")
        if self.features.shape[0] != m:
            raise DimensionMismatch(
                f"features has {self.features.shape[0]} rows, expected {m}"
            )

        self.class_names = [str(c) for c in self.class_names]
        self.image_ids = [str(i) for i in self.image_ids]
        if len(self.class_names) != n:
            raise DimensionMismatch(
                f"{len(self.class_names)} class names for {n} text embeddings"
            )
        if any(not c for c in self.class_names):
            raise IoFailure("class names must be non-empty strings")
        check_same_length(self.image_ids, self.image_clip, "image_ids", "image_clip")

        if self.ground_truth is not None:
            gt = np.ascontiguousarray(self.ground_truth, dtype=np.int64)
            if gt.shape != (m,):
                raise DimensionMismatch(
                    f"ground_truth has shape {gt.shape}, expected ({m},)"
                )
            if gt.size and (gt.min() < 0 or gt.max() >= n):
                raise DimensionMismatch(
                    f"ground_truth labels must lie in [0, {n})"
                )
            gt.setflags(write=False)
            self.ground_truth = gt

        for arr in (self.image_clip, self.text_clip, self.features):
            arr.setflags(write=False)

    @property
    def num_images(self) -> int:
        return self.image_clip.shape[0]

    @property
    def num_classes(self) -> int:
        return self.text_clip.shape[0]

    @property
    def clip_dim(self) -> int:
        return self.image_clip.shape[1]

    @property
    def feature_dim(self) -> int:
        return self.features.shape[1]

    def without_ground_truth(self) -> "EmbeddingStore":
        """A view of this store with the ground-truth labels removed.

        Arrays are shared, not copied. Selection and training entry points
        call this so label leakage is structurally impossible.
        """
        if self.ground_truth is None:
            return self
        return EmbeddingStore(
            image_clip=self.image_clip,
            text_clip=self.text_clip,
            features=self.features,
            class_names=self.class_names,
            image_ids=self.image_ids,
            ground_truth=None,
            meta=self.meta,
        )


def _manifest_path(path: str | os.PathLike) -> str:
    p = os.fspath(path)
    if os.path.isdir(p):
        return os.path.join(p, MANIFEST_NAME)
    return p


def load_store(
    path: str | os.PathLike,
    standardize_features: bool = False,
) -> EmbeddingStore:
    """Load a store from a directory (or a direct manifest.json path).

    Args:
        path: store directory or manifest file.
        standardize_features: if True, feature columns are shifted/scaled to
            zero mean and unit variance after load (columns with near-zero
            spread keep their mean-shift only). Off by default; the raw
            extractor output is the documented contract.

    Raises:
        MissingFile, IoFailure, DimensionMismatch, NonFiniteValue, ZeroNormRow.
    """
    manifest_file = _manifest_path(path)
    if not os.path.exists(manifest_file):
        raise MissingFile(f"manifest not found: {manifest_file}")
    try:
        with open(manifest_file, "r", encoding="utf-8") as fh:
            manifest = json.load(fh)
    except OSError as exc:
        raise IoFailure(f"cannot read manifest {manifest_file}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise IoFailure(f"manifest {manifest_file} is not valid JSON: {exc}") from exc

    if not isinstance(manifest, dict):
        raise IoFailure(f"manifest {manifest_file} must be a JSON object")
    version = manifest.get("version")
    if version != MANIFEST_VERSION:
        raise IoFailure(
            f"unsupported manifest version {version!r} (expected {MANIFEST_VERSION})"
        )
    for key in ("num_images", "num_classes", "clip_dim", "feature_dim",
                "class_names", "image_ids", "files"):
        if key not in manifest:
            raise IoFailure(f"manifest is missing required key {key!r}")

    base = os.path.dirname(manifest_file)
    files = manifest["files"]
    matrices = {}
    for name in _MATRIX_FILES:
        if name not in files:
            raise IoFailure(f"manifest files map is missing {name!r}")
        matrices[name] = read_matrix(os.path.join(base, files[name]))

    declared = {
        "image_clip": (manifest["num_images"], manifest["clip_dim"]),
        "text_clip": (manifest["num_classes"], manifest["clip_dim"]),
        "features": (manifest["num_images"], manifest["feature_dim"]),
    }
    for name, shape in declared.items():
        got = matrices[name].shape
        if got != tuple(int(s) for s in shape):
            raise DimensionMismatch(
                f"{name} has shape {got}, manifest declares {tuple(shape)}"
            )

    gt = manifest.get("ground_truth")
    store = EmbeddingStore(
        image_clip=matrices["image_clip"],
        text_clip=matrices["text_clip"],
        features=matrices["features"],
        class_names=manifest["class_names"],
        image_ids=manifest["image_ids"],
        ground_truth=None if gt is None else np.asarray(gt, dtype=np.int64),
        meta=manifest.get("meta", {}) or {},
    )
    if standardize_features:
        store = _with_standardized_features(store)
    return store


def _with_standardized_features(store: EmbeddingStore) -> EmbeddingStore:
    feats = store.features.astype(np.float64)
    mean = feats.mean(axis=0)
    std = feats.std(axis=0)
    std[std < ZERO_NORM_EPS] = 1.0
    scaled = ((feats - mean) / std).astype(np.float32)
    return EmbeddingStore(
        image_clip=store.image_clip,
        text_clip=store.text_clip,
        features=scaled,
        class_names=store.class_names,
        image_ids=store.image_ids,
        ground_truth=store.ground_truth,
        meta=store.meta,
    )


def write_store(store: EmbeddingStore, out_dir: str | os.PathLike) -> str:
    """Write *store* as a directory; returns the manifest path.

    Matrices go out exactly as held in memory (already normalized), so
    ``load_store(write_store(s))`` reproduces every array bit for bit.
    """
    out = os.fspath(out_dir)
    try:
        os.makedirs(out, exist_ok=True)
    except OSError as exc:
        raise IoFailure(f"cannot create store directory {out}: {exc}") from exc

    files = {name: f"{name}.bin" for name in _MATRIX_FILES}
    write_matrix(os.path.join(out, files["image_clip"]), store.image_clip)
    write_matrix(os.path.join(out, files["text_clip"]), store.text_clip)
    write_matrix(os.path.join(out, files["features"]), store.features)

    manifest = {
        "version": MANIFEST_VERSION,
        "num_images": store.num_images,
        "num_classes": store.num_classes,
        "clip_dim": store.clip_dim,
        "feature_dim": store.feature_dim,
        "class_names": list(store.class_names),
        "image_ids": list(store.image_ids),
        "files": files,
    }
    if store.ground_truth is not None:
        manifest["ground_truth"] = [int(v) for v in store.ground_truth]
    if store.meta:
        manifest["meta"] = store.meta

    manifest_file = os.path.join(out, MANIFEST_NAME)
    tmp = f"{manifest_file}.tmp"
    try:
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2)
            fh.write("\n")
        os.replace(tmp, manifest_file)
    except OSError as exc:
        raise IoFailure(f"cannot write manifest {manifest_file}: {exc}") from exc
    return manifest_file
