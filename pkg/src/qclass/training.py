"""Training loop, optimizers, evaluation, and the gradient self-check.

Gradients come from network.backward and are averaged over each minibatch.
Two optimizers are available: plain SGD and Adam with bias correction. The
gradient check compares backward against central finite differences on a
battery of randomly shaped tiny models.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import TrainingDiverged
from .numerics import Rng, finite_difference_grad, max_relative_error
from . import network
from .network import QcnnModel, init_model, parameters

__all__ = [
    "PROB_FLOOR",
    "GRAD_CHECK_TOLERANCE",
    "TrainConfig",
    "EpochStats",
    "EvalResult",
    "cross_entropy",
    "SgdOptimizer",
    "AdamOptimizer",
    "make_optimizer",
    "batch_gradients",
    "train",
    "evaluate",
    "gradient_check_harness",
]

# Probabilities are clamped here before the log so a confidently wrong
# prediction yields a large finite loss instead of infinity.
PROB_FLOOR = 1e-12

GRAD_CHECK_TOLERANCE = 1e-4

OPTIMIZERS = ("sgd", "adam")


@dataclass
class TrainConfig:
    """Hyperparameters for one training run."""

    learning_rate: float = 1e-3
    batch_size: int = 50
    epochs: int = 20
    optimizer: str = "adam"
    beta1: float = 0.9
    beta2: float = 0.999
    adam_epsilon: float = 1e-8
    seed: int = 0
    filters: int = 100
    hidden: int = 128
    pool_size: int = 2
    dropout: float = 0.5
    max_len: int = 40
    conv_activation: str = "tanh"
    heights: tuple[int, ...] = (2, 3, 4, 5)
    val_fraction: float = 0.0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.epochs < 0:
            raise ValueError(f"epochs must be >= 0, got {self.epochs}")
        if self.optimizer not in OPTIMIZERS:
            raise ValueError(
                f"optimizer must be one of {OPTIMIZERS}, got {self.optimizer!r}"
            )
        if self.filters < 1:
            raise ValueError(f"filters must be >= 1, got {self.filters}")
        if self.hidden < 2 or self.hidden % 2 != 0:
            raise ValueError(f"hidden must be a positive even number, got {self.hidden}")
        if self.pool_size < 1:
            raise ValueError(f"pool_size must be >= 1, got {self.pool_size}")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError(f"dropout must be in [0, 1), got {self.dropout}")
        if self.max_len < 1:
            raise ValueError(f"max_len must be >= 1, got {self.max_len}")
        if not 0.0 <= self.val_fraction < 1.0:
            raise ValueError(f"val_fraction must be in [0, 1), got {self.val_fraction}")
        self.heights = tuple(self.heights)
        if not self.heights:
            raise ValueError("heights must not be empty")


@dataclass
class EpochStats:
    """Mean loss and accuracies observed during one epoch."""

    epoch: int
    loss: float
    train_accuracy: float
    val_accuracy: float | None = None


@dataclass
class EvalResult:
    """Accuracy plus a gold-by-predicted confusion matrix."""

    accuracy: float
    confusion: np.ndarray
    correct: int
    total: int


def cross_entropy(probabilities: np.ndarray, target: int) -> float:
    """Negative log probability of the target class, floored at PROB_FLOOR.

    >>> round(cross_entropy(np.full(6, 1.0 / 6.0), 2), 6)
    1.791759
    """
    probabilities = np.asarray(probabilities, dtype=np.float64)
    if not 0 <= target < probabilities.shape[0]:
        raise ValueError(
            f"target {target} out of range for {probabilities.shape[0]} classes"
        )
    return float(-np.log(max(probabilities[target], PROB_FLOOR)))


class SgdOptimizer:
    """Plain stochastic gradient descent: p -= lr * g."""

    def __init__(self, learning_rate: float):
        if learning_rate <= 0:
            raise ValueError(f"learning_rate must be positive, got {learning_rate}")
        self.learning_rate = learning_rate

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        for name, param in params.items():
            grad = grads[name]
            if grad.shape != param.shape:
                raise ValueError(
                    f"gradient shape {grad.shape} does not match parameter "
                    f"{name} shape {param.shape}"
                )
            param -= self.learning_rate * grad


class AdamOptimizer:
    """Adam with bias-corrected first and second moments.

    Keeps one (m, v) pair per parameter name; the step count t is shared.
    """

    def __init__(
        self,
        learning_rate: float,
        beta1: float = 0.9,
        beta2: float = 0.999,
        epsilon: float = 1e-8,
    ):
        if learning_rate <= 0:
            raise ValueError(f"learning_rate must be positive, got {learning_rate}")
        if not 0.0 <= beta1 < 1.0 or not 0.0 <= beta2 < 1.0:
            raise ValueError(f"betas must be in [0, 1), got {beta1}, {beta2}")
        if epsilon <= 0:
            raise ValueError(f"epsilon must be positive, got {epsilon}")
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.t = 0
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        for name, param in params.items():
            grad = grads[name]
            if grad.shape != param.shape:
                raise ValueError(
                    f"gradient shape {grad.shape} does not match parameter "
                    f"{name} shape {param.shape}"
                )
            if name not in self.m:
                self.m[name] = np.zeros_like(param)
                self.v[name] = np.zeros_like(param)
            m = self.m[name]
            v = self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * grad
            v *= self.beta2
            v += (1.0 - self.beta2) * grad * grad
            m_hat = m / (1.0 - self.beta1**self.t)
            v_hat = v / (1.0 - self.beta2**self.t)
            param -= self.learning_rate * m_hat / (np.sqrt(v_hat) + self.epsilon)


def make_optimizer(config: TrainConfig):
    if config.optimizer == "sgd":
        return SgdOptimizer(config.learning_rate)
    return AdamOptimizer(
        config.learning_rate, config.beta1, config.beta2, config.adam_epsilon
    )


def batch_gradients(
    model: QcnnModel,
    batch,
    rng: Rng | None = None,
) -> tuple[dict[str, np.ndarray], float, int]:
    """Mean gradients over a batch of (sentence, target) pairs.

    Returns (gradients, summed loss, count of correct train-mode argmax
    predictions). The average divides by the actual batch length, which may
    be shorter than the configured batch size on the last batch.
    """
    batch = list(batch)
    if not batch:
        raise ValueError("cannot compute gradients for an empty batch")
    total: dict[str, np.ndarray] | None = None
    loss_sum = 0.0
    correct = 0
    for sentence, target in batch:
        cache = network.forward(model, sentence, train_mode=True, rng=rng)
        loss_sum += cross_entropy(cache.probs, target)
        if int(np.argmax(cache.probs)) == target:
            correct += 1
        grads = network.backward(model, cache, target)
        if total is None:
            total = grads
        else:
            for name in total:
                total[name] += grads[name]
    assert total is not None
    scale = 1.0 / len(batch)
    for name in total:
        total[name] *= scale
    return total, loss_sum, correct


def train(
    model: QcnnModel,
    examples,
    config: TrainConfig,
    *,
    rng: Rng | None = None,
    val_examples=None,
    on_epoch=None,
) -> list[EpochStats]:
    """Minibatch training on (sentence, target) pairs; mutates the model.

    Each epoch shuffles the full example list with the run's rng, walks it
    in batches of config.batch_size, and records mean loss and train-mode
    accuracy. With epochs=0 the model is untouched and the history empty.
    Raises TrainingDiverged the moment a non-finite loss appears.
    """
    examples = list(examples)
    if not examples:
        raise ValueError("cannot train on an empty example list")
    if rng is None:
        rng = Rng(config.seed)
    optimizer = make_optimizer(config)
    params = parameters(model)
    history: list[EpochStats] = []
    for epoch in range(config.epochs):
        order = rng.permutation(len(examples))
        loss_sum = 0.0
        correct = 0
        for start in range(0, len(examples), config.batch_size):
            batch = [examples[i] for i in order[start : start + config.batch_size]]
            grads, batch_loss, batch_correct = batch_gradients(model, batch, rng=rng)
            batch_index = start // config.batch_size
            if not np.isfinite(batch_loss):
                raise TrainingDiverged(epoch=epoch, batch=batch_index, loss=batch_loss)
            loss_sum += batch_loss
            correct += batch_correct
            optimizer.step(params, grads)
        stats = EpochStats(
            epoch=epoch,
            loss=loss_sum / len(examples),
            train_accuracy=correct / len(examples),
        )
        if val_examples:
            stats.val_accuracy = evaluate(model, val_examples).accuracy
        history.append(stats)
        if on_epoch is not None:
            on_epoch(stats)
    return history


def evaluate(model: QcnnModel, examples) -> EvalResult:
    """Evaluation-mode accuracy and confusion matrix over (sentence, target)."""
    examples = list(examples)
    if not examples:
        raise ValueError("cannot evaluate on an empty example list")
    confusion = np.zeros((model.class_count, model.class_count), dtype=np.int64)
    correct = 0
    for sentence, target in examples:
        predicted = network.predict(model, sentence)
        confusion[target, predicted] += 1
        if predicted == target:
            correct += 1
    return EvalResult(
        accuracy=correct / len(examples),
        confusion=confusion,
        correct=correct,
        total=len(examples),
    )


def _random_check_model(rng: Rng) -> tuple[QcnnModel, np.ndarray, int]:
    """A tiny random model plus a random sentence and target for checking."""
    dim = rng.integers(2, 6)
    class_count = rng.integers(2, 6)
    m = rng.integers(1, 8)
    all_heights = (2, 3, 4, 5)
    picks = [h for h in all_heights if rng.uniform() < 0.5]
    heights = tuple(picks) if picks else (all_heights[rng.integers(0, 4)],)
    filters = rng.integers(1, 4)
    hidden = 4 if rng.uniform() < 0.5 else 8
    dropout = 0.5 if rng.uniform() < 0.5 else 0.0
    model = init_model(
        dim,
        class_count,
        rng,
        filters_per_height=filters,
        heights=heights,
        hidden=hidden,
        pool_size=2,
        dropout_p=dropout,
    )
    sentence = rng.normal(0.0, 1.0, (m, dim))
    target = rng.integers(0, class_count)
    return model, sentence, target


def gradient_check_harness(trials: int = 20, seed: int = 0, eps: float = 1e-5) -> float:
    """Worst relative error between backward and finite differences.

    Each trial builds a fresh tiny model with random shapes (including
    single-word sentences, where every window height exceeds the sentence
    length) and checks every parameter tensor. Dropout masks are drawn once
    per trial and pinned, so the finite-difference loss is the same
    deterministic function backward differentiates. The relative error is
    |a - n| / max(1, |a|, |n|); a healthy implementation stays far below
    GRAD_CHECK_TOLERANCE.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    rng = Rng(seed)
    worst = 0.0
    for _ in range(trials):
        model, sentence, target = _random_check_model(rng)
        if model.dropout_p > 0.0:
            masks = (
                _frozen_mask(model.fc1.out_size, model.dropout_p, rng),
                _frozen_mask(model.fc2.out_size, model.dropout_p, rng),
            )
        else:
            masks = None
        cache = network.forward(
            model, sentence, train_mode=True, rng=rng, dropout_masks=masks
        )
        analytic = network.backward(model, cache, target)
        params = parameters(model)
        for name, param in params.items():
            def loss_at(values: np.ndarray, _name=name, _param=param) -> float:
                saved = _param.copy()
                _param[...] = values
                try:
                    probe = network.forward(
                        model, sentence, train_mode=True, rng=rng, dropout_masks=masks
                    )
                    return cross_entropy(probe.probs, target)
                finally:
                    _param[...] = saved
            numeric = finite_difference_grad(loss_at, param, eps=eps)
            worst = max(worst, max_relative_error(analytic[name], numeric))
    return worst


def _frozen_mask(size: int, p: float, rng: Rng) -> np.ndarray:
    keep = rng.uniform(size) >= p
    return keep.astype(np.float64) / (1.0 - p)
