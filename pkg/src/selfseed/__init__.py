"""Zero-shot classification on precomputed embedding stores.

The pipeline: rank each label's likeliest images by text-image cosine,
optionally re-rank by neighborhood consensus, train a linear-softmax probe
on the most confident tranche, then let the probe co-sign further tranches
in a self-learning loop with loss-guarded stopping.
"""

__version__ = "0.1.0"

from .classifier import (
    LabeledBatch,
    LinearClassifier,
    TrainConfig,
    adam_step,
    forward,
    init_classifier,
    load_checkpoint,
    predict,
    save_checkpoint,
    softmax,
    softmax_cross_entropy,
    train,
)
from .errors import (
    DimensionMismatch,
    DimensionTooSmall,
    IoFailure,
    KTooLarge,
    LengthMismatch,
    MissingFile,
    MissingGroundTruth,
    NonFiniteValue,
    RankingTooShort,
    SeedEmpty,
    SelfSeedError,
    ZeroNormInput,
    ZeroNormRow,
)
from .estimators import CollaborativeSelfTrainer, LinearSoftmaxClassifier
from .evaluation import (
    AccuracyReport,
    SelectionCell,
    SelectionReport,
    classification_accuracy,
    emit_report,
    selection_accuracy,
    selection_report,
)
from .selftrain import (
    CycleConfig,
    CycleHistory,
    CycleRecord,
    PseudoLabeledSet,
    StopReason,
    assemble_seed,
    cycle_select,
    run_selftraining,
    train_seed_classifier,
    write_history,
)
from .similarity import (
    CandidateSet,
    Ranking,
    build_ranking,
    build_rankings,
    consensus_score,
    cosine,
    default_candidates,
    neighbors,
    text_image_similarities,
    zero_shot_predict,
)
from .store import EmbeddingStore, load_store, read_matrix, write_matrix, write_store
from .synthetic import SynthConfig, generate

__all__ = [
    "__version__",
    # store
    "EmbeddingStore", "load_store", "write_store", "read_matrix", "write_matrix",
    # similarity
    "CandidateSet", "Ranking", "cosine", "text_image_similarities",
    "default_candidates", "neighbors", "consensus_score", "build_ranking",
    "build_rankings", "zero_shot_predict",
    # classifier
    "LinearClassifier", "TrainConfig", "LabeledBatch", "init_classifier",
    "forward", "softmax", "softmax_cross_entropy", "adam_step", "train",
    "predict", "save_checkpoint", "load_checkpoint",
    # self-training
    "CycleConfig", "CycleHistory", "CycleRecord", "PseudoLabeledSet",
    "StopReason", "assemble_seed", "cycle_select", "run_selftraining",
    "train_seed_classifier", "write_history",
    # synthetic data
    "SynthConfig", "generate",
    # evaluation
    "SelectionReport", "SelectionCell", "AccuracyReport", "selection_accuracy",
    "selection_report", "classification_accuracy", "emit_report",
    # estimators
    "LinearSoftmaxClassifier", "CollaborativeSelfTrainer",
    # errors
    "SelfSeedError", "MissingFile", "IoFailure", "DimensionMismatch",
    "NonFiniteValue", "ZeroNormRow", "ZeroNormInput", "LengthMismatch",
    "KTooLarge", "RankingTooShort", "SeedEmpty", "MissingGroundTruth",
    "DimensionTooSmall",
]
