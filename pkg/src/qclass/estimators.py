"""Scikit-learn style estimators wrapping the question classifiers.

QuestionCnnClassifier is a flat single-model classifier over arbitrary
string labels. TwoTierQuestionClassifier fixes the six-coarse taxonomy and
trains the full router-plus-fine-models stack. Both follow the estimator
contract: keyword constructor params stored verbatim, fit returns self,
fitted state lives in trailing-underscore attributes, and get_params /
set_params make them clone-safe.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .dataset import DEFAULT_TAXONOMY, QuestionRecord, resolve_label_pair
from .embeddings import encode_question
from .hierarchy import classify, train_two_tier
from .network import init_model, predict_proba
from .numerics import Rng
from .training import TrainConfig, train
from .validation import as_embedding_table, check_equal_length, check_text_sequence

__all__ = ["QuestionCnnClassifier", "TwoTierQuestionClassifier"]


def _train_config(est, extra_seed: int = 0) -> TrainConfig:
    return TrainConfig(
        learning_rate=est.learning_rate,
        batch_size=est.batch_size,
        epochs=est.epochs,
        optimizer=est.optimizer,
        seed=est.seed + extra_seed,
        filters=est.filters,
        hidden=est.hidden,
        pool_size=est.pool_size,
        dropout=est.dropout,
        max_len=est.max_len,
        conv_activation=est.conv_activation,
        heights=tuple(est.heights),
    )


class QuestionCnnClassifier(ClassifierMixin, BaseEstimator):
    """Single CNN text classifier with a fit/predict interface.

    Parameters
    ----------
    embeddings : EmbeddingTable or path
        Pre-trained word vectors; they stay fixed during training.
    filters : int
        Convolution filters per window height.
    hidden : int
        Width of the first fully connected layer (must be even).
    heights : tuple of int
        Convolution window heights.
    optimizer : str
        "adam" or "sgd".
    seed : int
        Controls initialization, shuffling, and dropout; fixing it makes
        fit deterministic.

    Attributes
    ----------
    classes_ : ndarray
        Sorted unique labels seen in fit.
    model_ : QcnnModel
        The trained network.
    history_ : list of EpochStats
        Per-epoch loss and accuracy from fit.
    """

    def __init__(
        self,
        embeddings=None,
        *,
        filters: int = 100,
        hidden: int = 128,
        pool_size: int = 2,
        dropout: float = 0.5,
        conv_activation: str = "tanh",
        heights: tuple[int, ...] = (2, 3, 4, 5),
        optimizer: str = "adam",
        learning_rate: float = 1e-3,
        batch_size: int = 50,
        epochs: int = 20,
        max_len: int = 40,
        seed: int = 0,
        verbose: bool = False,
    ):
        self.embeddings = embeddings
        self.filters = filters
        self.hidden = hidden
        self.pool_size = pool_size
        self.dropout = dropout
        self.conv_activation = conv_activation
        self.heights = heights
        self.optimizer = optimizer
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.epochs = epochs
        self.max_len = max_len
        self.seed = seed
        self.verbose = verbose

    def fit(self, X, y):
        """Train on questions X (strings) and labels y."""
        X = check_text_sequence(X)
        X, y = check_equal_length(X, y)
        table = as_embedding_table(self.embeddings)
        classes, targets = np.unique(np.asarray(y, dtype=object), return_inverse=True)
        if classes.shape[0] < 2:
            raise ValueError(f"need at least 2 classes, got {classes.shape[0]}")
        config = _train_config(self)
        rng = Rng(config.seed)
        model = init_model(
            table.dim,
            classes.shape[0],
            rng,
            filters_per_height=config.filters,
            heights=config.heights,
            hidden=config.hidden,
            pool_size=config.pool_size,
            dropout_p=config.dropout,
            conv_activation=config.conv_activation,
        )
        examples = [
            (encode_question(text, table, config.max_len), int(target))
            for text, target in zip(X, targets)
        ]
        on_epoch = None
        if self.verbose:
            def on_epoch(stats):
                print(
                    f"epoch {stats.epoch}: loss {stats.loss:.4f} "
                    f"acc {stats.train_accuracy:.2%}"
                )
        history = train(model, examples, config, rng=rng, on_epoch=on_epoch)
        self.classes_ = classes
        self.model_ = model
        self.history_ = history
        self._table = table
        return self

    def _check_fitted(self):
        if not hasattr(self, "model_"):
            raise ValueError(
                f"{type(self).__name__} is not fitted yet; call fit first"
            )

    def predict_proba(self, X) -> np.ndarray:
        """Class probabilities, columns ordered like classes_."""
        self._check_fitted()
        X = check_text_sequence(X)
        probs = np.empty((len(X), self.classes_.shape[0]))
        for i, text in enumerate(X):
            sentence = encode_question(text, self._table, self.max_len)
            probs[i] = predict_proba(self.model_, sentence)
        return probs

    def predict(self, X) -> np.ndarray:
        """Most probable label per question; ties take the lowest index."""
        probs = self.predict_proba(X)
        return self.classes_[np.argmax(probs, axis=1)]


class TwoTierQuestionClassifier(ClassifierMixin, BaseEstimator):
    """Coarse-then-fine question classifier with a fit/predict interface.

    Labels are "Coarse:fine" strings or (coarse, fine) pairs; the short
    upper-case tags of the standard question files are accepted and
    canonicalized. predict returns "Coarse:fine" strings; predict_pairs
    returns (coarse, fine) tuples.

    Parameters
    ----------
    embeddings : EmbeddingTable or path
        Word vectors for the coarse router (and for the fine models unless
        embeddings_tier2 is given).
    embeddings_tier2 : EmbeddingTable or path, optional
        Separate word vectors for the fine models.
    """

    def __init__(
        self,
        embeddings=None,
        embeddings_tier2=None,
        *,
        filters: int = 100,
        hidden: int = 128,
        pool_size: int = 2,
        dropout: float = 0.5,
        conv_activation: str = "tanh",
        heights: tuple[int, ...] = (2, 3, 4, 5),
        optimizer: str = "adam",
        learning_rate: float = 1e-3,
        batch_size: int = 50,
        epochs: int = 20,
        max_len: int = 40,
        seed: int = 0,
        verbose: bool = False,
    ):
        self.embeddings = embeddings
        self.embeddings_tier2 = embeddings_tier2
        self.filters = filters
        self.hidden = hidden
        self.pool_size = pool_size
        self.dropout = dropout
        self.conv_activation = conv_activation
        self.heights = heights
        self.optimizer = optimizer
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.epochs = epochs
        self.max_len = max_len
        self.seed = seed
        self.verbose = verbose

    def fit(self, X, y):
        """Train the router and all six fine models."""
        X = check_text_sequence(X)
        X, y = check_equal_length(X, y)
        taxonomy = DEFAULT_TAXONOMY
        records = []
        for text, label in zip(X, y):
            coarse, fine = resolve_label_pair(label, taxonomy)
            records.append(QuestionRecord(coarse=coarse, fine=fine, text=text))
        table1 = as_embedding_table(self.embeddings)
        table2 = (
            as_embedding_table(self.embeddings_tier2)
            if self.embeddings_tier2 is not None
            else table1
        )
        config = _train_config(self)
        on_epoch = None
        if self.verbose:
            def on_epoch(name, stats):
                print(
                    f"{name} epoch {stats.epoch}: loss {stats.loss:.4f} "
                    f"acc {stats.train_accuracy:.2%}"
                )
        self.classifier_ = train_two_tier(
            records,
            table1,
            config,
            tier2_table=table2,
            taxonomy=taxonomy,
            on_epoch=on_epoch,
        )
        self.classes_ = np.asarray(
            [
                f"{coarse}:{fine}"
                for coarse in taxonomy.coarse
                for fine in taxonomy.fine_labels(coarse)
            ],
            dtype=object,
        )
        self._table1 = table1
        self._table2 = table2
        return self

    def _check_fitted(self):
        if not hasattr(self, "classifier_"):
            raise ValueError(
                f"{type(self).__name__} is not fitted yet; call fit first"
            )

    def predict_pairs(self, X) -> list[tuple[str, str]]:
        """Predicted (coarse, fine) tuple per question."""
        self._check_fitted()
        X = check_text_sequence(X)
        return [
            classify(self.classifier_, text, self._table1, self._table2)
            for text in X
        ]

    def predict(self, X) -> np.ndarray:
        """Predicted "Coarse:fine" string per question."""
        pairs = self.predict_pairs(X)
        return np.asarray([f"{c}:{f}" for c, f in pairs], dtype=object)
