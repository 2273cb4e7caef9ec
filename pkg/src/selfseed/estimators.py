"""Estimator wrappers with the scikit-learn fit/predict contract.

These are thin shells over the functional modules so the pipeline composes
with the usual tooling (``get_params``/``set_params``, ``clone``,
``check_is_fitted``). Hyperparameters live on ``__init__`` under their own
names; everything learned carries a trailing underscore.
"""

from __future__ import annotations

from typing import Optional

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.exceptions import NotFittedError
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .classifier import (
    LabeledBatch,
    TrainConfig,
    forward,
    init_classifier,
    predict,
    softmax,
    train,
)
from .selftrain import CycleConfig, run_selftraining, train_seed_classifier
from .similarity import METHODS, build_rankings
from .store import EmbeddingStore


class LinearSoftmaxClassifier(BaseEstimator, ClassifierMixin):
    """Linear layer + softmax trained with full-batch Adam.

    Parameters
    ----------
    epochs : int, default=100
        Full-batch passes over the training set.
    learning_rate : float, default=0.001
        Adam step size.
    beta1, beta2, epsilon : float
        Adam moment decays and denominator floor.
    random_state : int, default=0
        Seed for the uniform weight init.
    """

    def __init__(
        self,
        epochs: int = 100,
        learning_rate: float = 0.001,
        beta1: float = 0.9,
        beta2: float = 0.999,
        epsilon: float = 1e-8,
        random_state: int = 0,
    ):
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.random_state = random_state

    def fit(self, X, y) -> "LinearSoftmaxClassifier":
        X, y = check_X_y(X, y)
        self.classes_, encoded = np.unique(y, return_inverse=True)
        if self.classes_.shape[0] < 2:
            raise ValueError("need at least 2 classes to fit")
        self.n_features_in_ = X.shape[1]
        self.model_ = init_classifier(
            X.shape[1], self.classes_.shape[0], self.random_state
        )
        self.loss_trace_ = train(
            self.model_,
            LabeledBatch(features=X, labels=encoded),
            TrainConfig(
                epochs=self.epochs,
                learning_rate=self.learning_rate,
                beta1=self.beta1,
                beta2=self.beta2,
                epsilon=self.epsilon,
                rng_seed=self.random_state,
            ),
        )
        return self

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "model_")
        X = check_array(X)
        return self.classes_[predict(self.model_, X)]

    def predict_proba(self, X) -> np.ndarray:
        check_is_fitted(self, "model_")
        X = check_array(X)
        return softmax(forward(self.model_, X))


class CollaborativeSelfTrainer(BaseEstimator, ClassifierMixin):
    """Whole pipeline as one estimator: rank, seed, self-train, predict.

    ``fit`` consumes an :class:`EmbeddingStore` (ground truth, if present,
    is stripped before anything runs); ``predict`` scores feature matrices.

    Parameters mirror the CLI flags. ``k_neighbors=None`` means "same as k".

    Attributes after fit
    --------------------
    classifier_ : LinearClassifier
        Final parameters (rolled back when the last cycle rebounded).
    seed_classifier_ : LinearClassifier
        The seed-phase-only classifier, for before/after comparisons.
    rankings_ : list[Ranking]
        Per-label rankings the loop consumed.
    history_ : CycleHistory
        Audit records plus the stop reason.
    """

    def __init__(
        self,
        k: int = 5,
        k_neighbors: Optional[int] = None,
        b_size: int = 100,
        method: str = "improved",
        i_epochs: int = 100,
        r_epochs: int = 20,
        learning_rate: float = 0.001,
        loss_limit: float = 0.1,
        max_cycles: int = 20,
        retain_seed: bool = False,
        random_state: int = 0,
    ):
        self.k = k
        self.k_neighbors = k_neighbors
        self.b_size = b_size
        self.method = method
        self.i_epochs = i_epochs
        self.r_epochs = r_epochs
        self.learning_rate = learning_rate
        self.loss_limit = loss_limit
        self.max_cycles = max_cycles
        self.retain_seed = retain_seed
        self.random_state = random_state

    def _cycle_config(self) -> CycleConfig:
        return CycleConfig(
            k=self.k,
            b_size=self.b_size,
            i_epochs=self.i_epochs,
            r_epochs=self.r_epochs,
            learning_rate=self.learning_rate,
            loss_limit=self.loss_limit,
            max_cycles=self.max_cycles,
            rng_seed=self.random_state,
            retain_seed=self.retain_seed,
        )

    def fit(self, store: EmbeddingStore, y=None) -> "CollaborativeSelfTrainer":
        if not isinstance(store, EmbeddingStore):
            raise TypeError(
                f"fit expects an EmbeddingStore, got {type(store).__name__}"
            )
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}, got {self.method!r}")
        quarantined = store.without_ground_truth()
        config = self._cycle_config()
        self.rankings_ = build_rankings(
            quarantined,
            method=self.method,
            b_size=self.b_size,
            k_neighbors=self.k if self.k_neighbors is None else self.k_neighbors,
        )
        self.seed_classifier_, _, _ = train_seed_classifier(
            quarantined, self.rankings_, config
        )
        self.classifier_, self.history_ = run_selftraining(
            quarantined, self.rankings_, config
        )
        self.classes_ = np.arange(store.num_classes)
        self.class_names_ = list(store.class_names)
        self.n_features_in_ = store.feature_dim
        return self

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "classifier_")
        X = check_array(X)
        return predict(self.classifier_, X)


__all__ = [
    "LinearSoftmaxClassifier",
    "CollaborativeSelfTrainer",
    "NotFittedError",
]
