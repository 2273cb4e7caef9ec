"""Linear-softmax classifier trained with full-batch Adam.

One dense layer over the (frozen) feature vectors, softmax on top, mean
cross-entropy loss. Nothing here is stochastic besides weight init: training
runs the whole batch every epoch, so a (seed, data) pair maps to exactly one
parameter trajectory.

Internals are float64 for clean gradient behavior; checkpoints serialize to
the store's float32 matrix container, which is the inference contract.

Gradients used by ``train``:

    grad_logits = (softmax(logits) - onehot(labels)) / B
    grad_W      = grad_logits.T @ X
    grad_b      = grad_logits.sum(axis=0)
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    IoFailure,
    LengthMismatch,
    MissingFile,
    NonFiniteValue,
)
from .store import read_matrix, write_matrix
from .validation import as_float_matrix, check_positive_int

INIT_SCALE = 0.01  # weights start i.i.d. uniform in [-INIT_SCALE, INIT_SCALE]


@dataclass
class TrainConfig:
    """Hyperparameters for one training phase."""

    epochs: int
    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    rng_seed: int = 0

    def __post_init__(self) -> None:
        self.epochs = check_positive_int(self.epochs, "epochs")
        if not self.learning_rate > 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("beta1 and beta2 must lie in [0, 1)")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be > 0")


@dataclass
class LabeledBatch:
    """Feature rows with integer labels, validated as parallel arrays."""

    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self) -> None:
        self.features = as_float_matrix(self.features, "features", dtype=np.float64)
        self.labels = np.ascontiguousarray(self.labels, dtype=np.int64)
        if self.labels.ndim != 1:
            raise DimensionMismatch(
                f"labels must be 1-D, got shape {self.labels.shape}"
            )
        if self.labels.shape[0] != self.features.shape[0]:
            raise LengthMismatch(
                f"{self.features.shape[0]} feature rows but "
                f"{self.labels.shape[0]} labels"
            )
        if self.labels.shape[0] < 1:
            raise ValueError("batch must contain at least one sample")
        if self.labels.min() < 0:
            raise ValueError("labels must be non-negative")

    def __len__(self) -> int:
        return self.labels.shape[0]


@dataclass
class LinearClassifier:
    """Parameters plus Adam state. Mutated in place by ``train``."""

    weights: np.ndarray  # (N, d_f)
    bias: np.ndarray  # (N,)
    m_w: np.ndarray
    v_w: np.ndarray
    m_b: np.ndarray
    v_b: np.ndarray
    step_count: int = 0

    @property
    def num_classes(self) -> int:
        return self.weights.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.weights.shape[1]

    def clone(self) -> "LinearClassifier":
        """Deep copy of parameters and optimizer state."""
        return LinearClassifier(
            weights=self.weights.copy(),
            bias=self.bias.copy(),
            m_w=self.m_w.copy(),
            v_w=self.v_w.copy(),
            m_b=self.m_b.copy(),
            v_b=self.v_b.copy(),
            step_count=self.step_count,
        )


def init_classifier(
    feature_dim: int, num_classes: int, rng_seed: int = 0
) -> LinearClassifier:
    """Fresh classifier: seeded uniform weights, zero bias, zero Adam state."""
    feature_dim = check_positive_int(feature_dim, "feature_dim")
    if num_classes < 2:
        raise ValueError(f"num_classes must be >= 2, got {num_classes}")
    rng = np.random.default_rng(rng_seed)
    weights = rng.uniform(-INIT_SCALE, INIT_SCALE, size=(num_classes, feature_dim))
    return LinearClassifier(
        weights=weights,
        bias=np.zeros(num_classes),
        m_w=np.zeros_like(weights),
        v_w=np.zeros_like(weights),
        m_b=np.zeros(num_classes),
        v_b=np.zeros(num_classes),
        step_count=0,
    )


def forward(clf: LinearClassifier, features) -> np.ndarray:
    """Logits ``X @ W.T + b`` for a batch of feature rows."""
    x = as_float_matrix(features, "features", dtype=np.float64)
    if x.shape[1] != clf.feature_dim:
        raise DimensionMismatch(
            f"features have dim {x.shape[1]}, classifier expects {clf.feature_dim}"
        )
    return x @ clf.weights.T + clf.bias


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax with max subtraction; each row sums to 1."""
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def softmax_cross_entropy(
    logits, labels
) -> tuple[float, np.ndarray]:
    """Mean cross-entropy and its gradient w.r.t. the logits.

    Returns:
        (loss, grad_logits) with grad_logits = (softmax - onehot) / B.

    Raises:
        LengthMismatch: batch sizes disagree.
        NonFiniteValue: logits or the resulting loss are not finite.
    """
    z = as_float_matrix(logits, "logits", dtype=np.float64)
    y = np.ascontiguousarray(labels, dtype=np.int64)
    if y.ndim != 1 or y.shape[0] != z.shape[0]:
        raise LengthMismatch(
            f"{z.shape[0]} logit rows but labels have shape {y.shape}"
        )
    if y.size and (y.min() < 0 or y.max() >= z.shape[1]):
        raise ValueError(f"labels must lie in [0, {z.shape[1]})")
    b = z.shape[0]
    shifted = z - z.max(axis=1, keepdims=True)
    log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    loss = float(-log_probs[np.arange(b), y].mean())
    if not np.isfinite(loss):
        raise NonFiniteValue("cross-entropy loss is not finite")
    grad = np.exp(log_probs)
    grad[np.arange(b), y] -= 1.0
    grad /= b
    return loss, grad


def adam_step(
    param: np.ndarray,
    grad: np.ndarray,
    m: np.ndarray,
    v: np.ndarray,
    t: int,
    learning_rate: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    epsilon: float = 1e-8,
) -> None:
    """One bias-corrected Adam update, in place on param/m/v.

    t is the 1-based step index after this update. On the first step the
    bias-corrected moments reduce to g and g**2, so the parameter moves by
    learning_rate * g / (|g| + epsilon): magnitude learning_rate for any
    appreciable gradient.
    """
    m *= beta1
    m += (1.0 - beta1) * grad
    v *= beta2
    v += (1.0 - beta2) * np.square(grad)
    m_hat = m / (1.0 - beta1**t)
    v_hat = v / (1.0 - beta2**t)
    param -= learning_rate * m_hat / (np.sqrt(v_hat) + epsilon)


def train(
    clf: LinearClassifier, batch: LabeledBatch, config: TrainConfig
) -> list[float]:
    """Full-batch training for ``config.epochs`` epochs, mutating *clf*.

    Returns the pre-update loss of each epoch, so trace[0] is the loss of
    the incoming parameters on this batch and trace[-1] the loss right
    before the final update.

    Raises:
        DimensionMismatch: batch feature dim or label range disagrees with clf.
        NonFiniteValue: loss or parameters diverge.
    """
    if batch.features.shape[1] != clf.feature_dim:
        raise DimensionMismatch(
            f"batch features have dim {batch.features.shape[1]}, "
            f"classifier expects {clf.feature_dim}"
        )
    if int(batch.labels.max()) >= clf.num_classes:
        raise DimensionMismatch(
            f"batch label {int(batch.labels.max())} out of range for "
            f"{clf.num_classes} classes"
        )
    x = batch.features
    trace: list[float] = []
    for _ in range(config.epochs):
        logits = x @ clf.weights.T + clf.bias
        loss, grad_logits = softmax_cross_entropy(logits, batch.labels)
        trace.append(loss)
        grad_w = grad_logits.T @ x
        grad_b = grad_logits.sum(axis=0)
        t = clf.step_count + 1
        adam_step(
            clf.weights, grad_w, clf.m_w, clf.v_w, t,
            config.learning_rate, config.beta1, config.beta2, config.epsilon,
        )
        adam_step(
            clf.bias, grad_b, clf.m_b, clf.v_b, t,
            config.learning_rate, config.beta1, config.beta2, config.epsilon,
        )
        clf.step_count = t
        if not (np.all(np.isfinite(clf.weights)) and np.all(np.isfinite(clf.bias))):
            raise NonFiniteValue("classifier parameters diverged to non-finite values")
    return trace


def predict(clf: LinearClassifier, features) -> np.ndarray:
    """Argmax class per row; ties resolve to the lowest class index."""
    return np.argmax(forward(clf, features), axis=1)


CHECKPOINT_SIDECAR = "checkpoint.json"
_WEIGHTS_FILE = "weights.bin"
_BIAS_FILE = "bias.bin"


def save_checkpoint(
    clf: LinearClassifier, out_dir: str | os.PathLike, config_echo: dict | None = None
) -> str:
    """Write weights/bias as float32 matrices plus a JSON sidecar.

    Adam moments are deliberately not persisted: a checkpoint captures
    inference state, and every training phase that follows a load starts
    cold. Returns the sidecar path.
    """
    out = os.fspath(out_dir)
    try:
        os.makedirs(out, exist_ok=True)
    except OSError as exc:
        raise IoFailure(f"cannot create checkpoint directory {out}: {exc}") from exc
    write_matrix(os.path.join(out, _WEIGHTS_FILE), clf.weights.astype(np.float32))
    write_matrix(
        os.path.join(out, _BIAS_FILE), clf.bias.astype(np.float32).reshape(1, -1)
    )
    sidecar = {
        "feature_dim": clf.feature_dim,
        "num_classes": clf.num_classes,
        "step_count": clf.step_count,
        "files": {"weights": _WEIGHTS_FILE, "bias": _BIAS_FILE},
        "config": config_echo or {},
    }
    path = os.path.join(out, CHECKPOINT_SIDECAR)
    tmp = f"{path}.tmp"
    try:
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(sidecar, fh, indent=2)
            fh.write("\n")
        os.replace(tmp, path)
    except OSError as exc:
        raise IoFailure(f"cannot write checkpoint sidecar {path}: {exc}") from exc
    return path


def load_checkpoint(path: str | os.PathLike) -> LinearClassifier:
    """Load a checkpoint directory (or sidecar path) written by save_checkpoint."""
    p = os.fspath(path)
    if os.path.isdir(p):
        p = os.path.join(p, CHECKPOINT_SIDECAR)
    if not os.path.exists(p):
        raise MissingFile(f"checkpoint sidecar not found: {p}")
    try:
        with open(p, "r", encoding="utf-8") as fh:
            sidecar = json.load(fh)
    except OSError as exc:
        raise IoFailure(f"cannot read checkpoint sidecar {p}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise IoFailure(f"checkpoint sidecar {p} is not valid JSON: {exc}") from exc

    base = os.path.dirname(p)
    files = sidecar.get("files", {})
    weights = read_matrix(
        os.path.join(base, files.get("weights", _WEIGHTS_FILE))
    ).astype(np.float64)
    bias_mat = read_matrix(os.path.join(base, files.get("bias", _BIAS_FILE)))
    if bias_mat.shape[0] != 1:
        raise DimensionMismatch(
            f"bias matrix must have one row, got shape {bias_mat.shape}"
        )
    bias = bias_mat.astype(np.float64).reshape(-1)
    n, d_f = weights.shape
    if sidecar.get("num_classes") != n or sidecar.get("feature_dim") != d_f:
        raise DimensionMismatch(
            f"sidecar declares {sidecar.get('num_classes')}x"
            f"{sidecar.get('feature_dim')}, matrices are {n}x{d_f}"
        )
    if bias.shape[0] != n:
        raise DimensionMismatch(
            f"bias has {bias.shape[0]} entries for {n} classes"
        )
    return LinearClassifier(
        weights=weights,
        bias=bias,
        m_w=np.zeros_like(weights),
        v_w=np.zeros_like(weights),
        m_b=np.zeros_like(bias),
        v_b=np.zeros_like(bias),
        step_count=int(sidecar.get("step_count", 0)),
    )
