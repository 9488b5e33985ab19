"""Two-tier convolutional question-type classification.

A coarse six-way router and six fine-grained models, all built on a small
from-scratch CNN over fixed word embeddings: wide convolution, k-max
pooling, two tanh layers with dropout, softmax output, and hand-derived
gradients checked against finite differences.
"""

from .dataset import (
    DEFAULT_TAXONOMY,
    LabelTaxonomy,
    QuestionRecord,
    holdout_split,
    load_dataset,
    parse_trec_line,
    resolve_coarse_label,
    resolve_label_pair,
    subset_by_coarse,
)
from .embeddings import (
    EmbeddingTable,
    SentenceMatrix,
    embed_sentence,
    encode_question,
    load_embeddings,
    tokenize,
)
from .errors import (
    ConfigError,
    DatasetFormatError,
    EmbeddingFormatError,
    ModelFormatError,
    QclassError,
    TrainingDiverged,
)
from .estimators import QuestionCnnClassifier, TwoTierQuestionClassifier
from .hierarchy import (
    HierMetrics,
    TwoTierClassifier,
    classify,
    evaluate_hierarchical,
    train_tier1,
    train_tier2,
    train_two_tier,
)
from .model_io import load_classifier, load_model, save_classifier, save_model
from .network import (
    QcnnModel,
    backward,
    forward,
    init_model,
    k_max_pool,
    predict,
    predict_proba,
    wide_convolve,
)
from .numerics import Rng, finite_difference_grad, max_relative_error
from .report import RunReport
from .training import (
    GRAD_CHECK_TOLERANCE,
    TrainConfig,
    cross_entropy,
    evaluate,
    gradient_check_harness,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "QclassError",
    "EmbeddingFormatError",
    "DatasetFormatError",
    "ModelFormatError",
    "ConfigError",
    "TrainingDiverged",
    "Rng",
    "finite_difference_grad",
    "max_relative_error",
    "EmbeddingTable",
    "SentenceMatrix",
    "tokenize",
    "load_embeddings",
    "embed_sentence",
    "encode_question",
    "LabelTaxonomy",
    "DEFAULT_TAXONOMY",
    "QuestionRecord",
    "parse_trec_line",
    "load_dataset",
    "subset_by_coarse",
    "holdout_split",
    "resolve_coarse_label",
    "resolve_label_pair",
    "QcnnModel",
    "init_model",
    "wide_convolve",
    "k_max_pool",
    "forward",
    "backward",
    "predict",
    "predict_proba",
    "TrainConfig",
    "cross_entropy",
    "train",
    "evaluate",
    "gradient_check_harness",
    "GRAD_CHECK_TOLERANCE",
    "TwoTierClassifier",
    "train_tier1",
    "train_tier2",
    "train_two_tier",
    "classify",
    "evaluate_hierarchical",
    "HierMetrics",
    "save_model",
    "load_model",
    "save_classifier",
    "load_classifier",
    "RunReport",
    "QuestionCnnClassifier",
    "TwoTierQuestionClassifier",
]
