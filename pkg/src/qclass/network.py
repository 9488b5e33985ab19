"""The question-classification CNN: wide convolution, k-max pooling,
two hidden layers, softmax output, and hand-derived gradients.

A sentence arrives as an (m, d) matrix of word-embedding rows. Each filter
bank of height n convolves its (n, d) kernels over the zero-padded sentence
(wide convolution, m + n - 1 output positions), the top k responses per
filter are kept in their original order, the pooled banks are concatenated,
and two tanh layers with inverted dropout feed a linear softmax output.

The embedding rows are inputs, not parameters: backward never produces a
gradient with respect to the sentence matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .embeddings import SentenceMatrix
from .numerics import Rng

__all__ = [
    "ConvFilterBank",
    "DenseLayer",
    "QcnnModel",
    "ForwardCache",
    "init_model",
    "wide_convolve",
    "k_max_pool",
    "forward",
    "backward",
    "predict",
    "predict_proba",
    "parameters",
]

CONV_ACTIVATIONS = ("tanh", "relu", "none")


@dataclass(repr=False)
class ConvFilterBank:
    """One bank of convolution filters sharing a single window height.

    kernels has shape (filters, height * dim): each row is one kernel
    flattened row-major, so position h * dim + j multiplies word h,
    component j of a window. biases has shape (filters,).
    """

    height: int
    kernels: np.ndarray
    biases: np.ndarray

    def __post_init__(self):
        if not 1 <= self.height:
            raise ValueError(f"filter height must be >= 1, got {self.height}")
        if self.kernels.ndim != 2:
            raise ValueError(f"kernels must be 2-D, got shape {self.kernels.shape}")
        if self.biases.shape != (self.kernels.shape[0],):
            raise ValueError(
                f"biases shape {self.biases.shape} does not match "
                f"{self.kernels.shape[0]} kernels"
            )

    @property
    def filter_count(self) -> int:
        return self.kernels.shape[0]

    def __repr__(self) -> str:
        return f"ConvFilterBank(height={self.height}, filters={self.filter_count})"


@dataclass(repr=False)
class DenseLayer:
    """A fully connected layer: weights (out, in), biases (out,)."""

    weights: np.ndarray
    biases: np.ndarray

    def __post_init__(self):
        if self.weights.ndim != 2:
            raise ValueError(f"weights must be 2-D, got shape {self.weights.shape}")
        if self.biases.shape != (self.weights.shape[0],):
            raise ValueError(
                f"biases shape {self.biases.shape} does not match weights "
                f"{self.weights.shape}"
            )

    @property
    def out_size(self) -> int:
        return self.weights.shape[0]

    @property
    def in_size(self) -> int:
        return self.weights.shape[1]

    def __repr__(self) -> str:
        return f"DenseLayer(in={self.in_size}, out={self.out_size})"


@dataclass(repr=False)
class QcnnModel:
    """The full classifier: conv banks, two hidden layers, output layer."""

    embedding_dim: int
    class_count: int
    pool_size: int
    dropout_p: float
    conv_activation: str
    banks: list[ConvFilterBank]
    fc1: DenseLayer
    fc2: DenseLayer
    out: DenseLayer

    def __post_init__(self):
        if self.embedding_dim < 1:
            raise ValueError(f"embedding_dim must be >= 1, got {self.embedding_dim}")
        if self.class_count < 2:
            raise ValueError(f"class_count must be >= 2, got {self.class_count}")
        if self.pool_size < 1:
            raise ValueError(f"pool_size must be >= 1, got {self.pool_size}")
        if not 0.0 <= self.dropout_p < 1.0:
            raise ValueError(f"dropout_p must be in [0, 1), got {self.dropout_p}")
        if self.conv_activation not in CONV_ACTIVATIONS:
            raise ValueError(
                f"conv_activation must be one of {CONV_ACTIVATIONS}, "
                f"got {self.conv_activation!r}"
            )
        if not self.banks:
            raise ValueError("model needs at least one convolution bank")
        heights = [bank.height for bank in self.banks]
        if heights != sorted(heights) or len(set(heights)) != len(heights):
            raise ValueError(f"bank heights must be strictly ascending, got {heights}")
        for bank in self.banks:
            if bank.kernels.shape[1] != bank.height * self.embedding_dim:
                raise ValueError(
                    f"bank of height {bank.height} has kernel width "
                    f"{bank.kernels.shape[1]}, expected "
                    f"{bank.height * self.embedding_dim}"
                )
        merged = self.pool_size * sum(bank.filter_count for bank in self.banks)
        if self.fc1.in_size != merged:
            raise ValueError(
                f"fc1 input size {self.fc1.in_size} does not match pooled "
                f"feature size {merged}"
            )
        if self.fc2.in_size != self.fc1.out_size:
            raise ValueError(
                f"fc2 input size {self.fc2.in_size} does not match fc1 output "
                f"{self.fc1.out_size}"
            )
        if self.out.in_size != self.fc2.out_size:
            raise ValueError(
                f"output input size {self.out.in_size} does not match fc2 output "
                f"{self.fc2.out_size}"
            )
        if self.out.out_size != self.class_count:
            raise ValueError(
                f"output size {self.out.out_size} does not match class_count "
                f"{self.class_count}"
            )

    @property
    def heights(self) -> tuple[int, ...]:
        return tuple(bank.height for bank in self.banks)

    def __repr__(self) -> str:
        filters = tuple(bank.filter_count for bank in self.banks)
        return (
            f"QcnnModel(dim={self.embedding_dim}, classes={self.class_count}, "
            f"heights={self.heights}, filters={filters}, "
            f"hidden={self.fc1.out_size})"
        )


def _glorot_normal(rng: Rng, fan_in: int, fan_out: int, shape) -> np.ndarray:
    stdev = np.sqrt(2.0 / (fan_in + fan_out))
    return rng.normal(0.0, stdev, shape)


def init_model(
    embedding_dim: int,
    class_count: int,
    rng: Rng,
    *,
    filters_per_height: int = 100,
    heights: tuple[int, ...] = (2, 3, 4, 5),
    hidden: int = 128,
    pool_size: int = 2,
    dropout_p: float = 0.5,
    conv_activation: str = "tanh",
) -> QcnnModel:
    """Build a model with Glorot-normal weights and zero biases.

    Layer widths: fc1 maps the pooled features to ``hidden`` units, fc2
    halves that, and the output layer maps to ``class_count`` logits.
    Draw order is fixed (banks in height order, then fc1, fc2, out) so a
    given rng stream always produces the same initial weights.
    """
    if filters_per_height < 1:
        raise ValueError(f"filters_per_height must be >= 1, got {filters_per_height}")
    if hidden < 2 or hidden % 2 != 0:
        raise ValueError(f"hidden must be a positive even number, got {hidden}")
    heights = tuple(heights)
    banks = []
    for height in heights:
        width = height * embedding_dim
        kernels = _glorot_normal(rng, width, filters_per_height, (filters_per_height, width))
        banks.append(
            ConvFilterBank(
                height=height,
                kernels=kernels,
                biases=np.zeros(filters_per_height),
            )
        )
    merged = pool_size * filters_per_height * len(heights)
    half = hidden // 2
    fc1 = DenseLayer(
        weights=_glorot_normal(rng, merged, hidden, (hidden, merged)),
        biases=np.zeros(hidden),
    )
    fc2 = DenseLayer(
        weights=_glorot_normal(rng, hidden, half, (half, hidden)),
        biases=np.zeros(half),
    )
    out = DenseLayer(
        weights=_glorot_normal(rng, half, class_count, (class_count, half)),
        biases=np.zeros(class_count),
    )
    return QcnnModel(
        embedding_dim=embedding_dim,
        class_count=class_count,
        pool_size=pool_size,
        dropout_p=dropout_p,
        conv_activation=conv_activation,
        banks=banks,
        fc1=fc1,
        fc2=fc2,
        out=out,
    )


def _conv_windows(values: np.ndarray, height: int) -> np.ndarray:
    """All height-row windows of the zero-padded sentence, flattened.

    Padding height - 1 zero rows on each end makes every partial overlap a
    full window, so a sentence of m rows yields m + height - 1 windows.
    Returns shape (m + height - 1, height * dim).
    """
    m, dim = values.shape
    if height == 1:
        return values
    padded = np.zeros((m + 2 * (height - 1), dim))
    padded[height - 1 : height - 1 + m] = values
    windows = sliding_window_view(padded, (height, dim))[:, 0]
    # The reshape would otherwise yield an overlapping strided view, which
    # forces matmul off the fast contiguous path.
    return np.ascontiguousarray(windows).reshape(m + height - 1, height * dim)


def wide_convolve(sentence: np.ndarray, kernel: np.ndarray, bias: float = 0.0) -> np.ndarray:
    """Wide 1-D convolution of one (n, d) kernel over an (m, d) sentence.

    Returns the (m + n - 1,) response vector; position t is the inner
    product of the kernel with the window ending at word t (zero rows where
    the window hangs off either end), plus the bias.
    """
    sentence = np.asarray(sentence, dtype=np.float64)
    kernel = np.asarray(kernel, dtype=np.float64)
    if sentence.ndim != 2 or kernel.ndim != 2:
        raise ValueError("sentence and kernel must both be 2-D")
    if sentence.shape[1] != kernel.shape[1]:
        raise ValueError(
            f"sentence dim {sentence.shape[1]} != kernel dim {kernel.shape[1]}"
        )
    windows = _conv_windows(sentence, kernel.shape[0])
    return windows @ kernel.ravel() + bias


def _k_max_rows(column_matrix: np.ndarray, k: int) -> np.ndarray:
    """Row indices of the k largest entries per column, in original order.

    column_matrix has one column per filter. Ties resolve to the earlier
    row. Returns shape (k, filters) of int indices.
    """
    top = np.argsort(-column_matrix, axis=0, kind="stable")[:k]
    return np.sort(top, axis=0)


def k_max_pool(values: np.ndarray, k: int) -> np.ndarray:
    """Keep the k largest entries of a vector in their original order.

    Ties resolve to the earlier position. The input must have at least k
    entries.

    >>> k_max_pool(np.array([1.0, 5.0, 3.0, 5.0, 2.0]), 2)
    array([5., 5.])
    >>> k_max_pool(np.array([4.0, 1.0, 9.0]), 2)
    array([4., 9.])
    """
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 1:
        raise ValueError(f"k_max_pool expects a vector, got shape {values.shape}")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if values.shape[0] < k:
        raise ValueError(f"cannot take {k} maxima from {values.shape[0]} entries")
    rows = _k_max_rows(values[:, None], k)
    return values[rows[:, 0]]


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - np.max(logits)
    exp = np.exp(shifted)
    return exp / np.sum(exp)


def _conv_activation(pre: np.ndarray, kind: str) -> np.ndarray:
    if kind == "tanh":
        return np.tanh(pre)
    if kind == "relu":
        return np.maximum(pre, 0.0)
    return pre


def _conv_activation_grad(pre: np.ndarray, act: np.ndarray, kind: str) -> np.ndarray:
    if kind == "tanh":
        return 1.0 - act * act
    if kind == "relu":
        return (pre > 0.0).astype(np.float64)
    return np.ones_like(pre)


@dataclass(repr=False)
class ForwardCache:
    """Everything backward needs from one forward pass."""

    model: QcnnModel
    train_mode: bool
    windows: list[np.ndarray] = field(default_factory=list)
    conv_pre: list[np.ndarray] = field(default_factory=list)
    conv_act: list[np.ndarray] = field(default_factory=list)
    pool_rows: list[np.ndarray] = field(default_factory=list)
    merged: np.ndarray = None  # type: ignore[assignment]
    z1: np.ndarray = None  # type: ignore[assignment]
    a1: np.ndarray = None  # type: ignore[assignment]
    drop1: np.ndarray = None  # type: ignore[assignment]
    h1: np.ndarray = None  # type: ignore[assignment]
    z2: np.ndarray = None  # type: ignore[assignment]
    a2: np.ndarray = None  # type: ignore[assignment]
    drop2: np.ndarray = None  # type: ignore[assignment]
    h2: np.ndarray = None  # type: ignore[assignment]
    logits: np.ndarray = None  # type: ignore[assignment]
    probs: np.ndarray = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"ForwardCache(train_mode={self.train_mode})"


def _dropout_mask(shape, p: float, rng: Rng) -> np.ndarray:
    """Inverted-dropout mask: kept units scaled by 1 / (1 - p)."""
    keep = rng.uniform(shape) >= p
    return keep.astype(np.float64) / (1.0 - p)


def forward(
    model: QcnnModel,
    sentence,
    train_mode: bool = False,
    rng: Rng | None = None,
    dropout_masks: tuple[np.ndarray, np.ndarray] | None = None,
) -> ForwardCache:
    """Run the network on one sentence matrix and cache intermediates.

    In evaluation mode dropout is the identity (inverted dropout needs no
    test-time rescale). In train mode fresh masks are drawn from ``rng``
    unless ``dropout_masks`` supplies both masks explicitly, which makes a
    training step reproducible for gradient checking.
    """
    if isinstance(sentence, SentenceMatrix):
        values = sentence.values
    else:
        values = np.asarray(sentence, dtype=np.float64)
    if values.ndim != 2 or values.shape[1] != model.embedding_dim:
        raise ValueError(
            f"sentence shape {values.shape} does not match embedding dim "
            f"{model.embedding_dim}"
        )

    cache = ForwardCache(model=model, train_mode=train_mode)
    pooled_parts = []
    for bank in model.banks:
        windows = _conv_windows(values, bank.height)
        pre = windows @ bank.kernels.T + bank.biases
        act = _conv_activation(pre, model.conv_activation)
        rows = _k_max_rows(act, model.pool_size)
        cache.windows.append(windows)
        cache.conv_pre.append(pre)
        cache.conv_act.append(act)
        cache.pool_rows.append(rows)
        pooled = act[rows, np.arange(act.shape[1])]
        pooled_parts.append(pooled.T.ravel())
    cache.merged = np.concatenate(pooled_parts)

    use_dropout = train_mode and model.dropout_p > 0.0
    if use_dropout:
        if dropout_masks is not None:
            mask1, mask2 = dropout_masks
            mask1 = np.asarray(mask1, dtype=np.float64)
            mask2 = np.asarray(mask2, dtype=np.float64)
        elif rng is not None:
            mask1 = _dropout_mask(model.fc1.out_size, model.dropout_p, rng)
            mask2 = _dropout_mask(model.fc2.out_size, model.dropout_p, rng)
        else:
            raise ValueError("train-mode forward with dropout needs rng or dropout_masks")
        if mask1.shape != (model.fc1.out_size,) or mask2.shape != (model.fc2.out_size,):
            raise ValueError(
                f"dropout mask shapes {mask1.shape}, {mask2.shape} do not match "
                f"layer sizes {model.fc1.out_size}, {model.fc2.out_size}"
            )
    else:
        mask1 = np.ones(model.fc1.out_size)
        mask2 = np.ones(model.fc2.out_size)

    cache.z1 = model.fc1.weights @ cache.merged + model.fc1.biases
    cache.a1 = np.tanh(cache.z1)
    cache.drop1 = mask1
    cache.h1 = cache.a1 * mask1

    cache.z2 = model.fc2.weights @ cache.h1 + model.fc2.biases
    cache.a2 = np.tanh(cache.z2)
    cache.drop2 = mask2
    cache.h2 = cache.a2 * mask2

    cache.logits = model.out.weights @ cache.h2 + model.out.biases
    cache.probs = _softmax(cache.logits)
    return cache


def backward(model: QcnnModel, cache: ForwardCache, target: int) -> dict[str, np.ndarray]:
    """Gradients of the cross-entropy loss at ``target`` for every parameter.

    The cache must come from a forward pass of this exact model. Keys are
    ``conv{height}.kernels``, ``conv{height}.biases``, ``fc1.weights``,
    ``fc1.biases``, ``fc2.weights``, ``fc2.biases``, ``out.weights``,
    ``out.biases``. The sentence matrix gets no gradient: embeddings stay
    fixed.
    """
    if cache.model is not model:
        raise ValueError("cache was produced by a different model")
    if not 0 <= target < model.class_count:
        raise ValueError(
            f"target {target} out of range for {model.class_count} classes"
        )

    dlogits = cache.probs.copy()
    dlogits[target] -= 1.0

    grads: dict[str, np.ndarray] = {}
    grads["out.weights"] = np.outer(dlogits, cache.h2)
    grads["out.biases"] = dlogits

    dh2 = model.out.weights.T @ dlogits
    da2 = dh2 * cache.drop2
    dz2 = da2 * (1.0 - cache.a2 * cache.a2)
    grads["fc2.weights"] = np.outer(dz2, cache.h1)
    grads["fc2.biases"] = dz2

    dh1 = model.fc2.weights.T @ dz2
    da1 = dh1 * cache.drop1
    dz1 = da1 * (1.0 - cache.a1 * cache.a1)
    grads["fc1.weights"] = np.outer(dz1, cache.merged)
    grads["fc1.biases"] = dz1

    dmerged = model.fc1.weights.T @ dz1
    offset = 0
    for i, bank in enumerate(model.banks):
        count = model.pool_size * bank.filter_count
        part = dmerged[offset : offset + count]
        offset += count
        # Undo the merge layout: filter-major, pooled positions in order.
        dpooled = part.reshape(bank.filter_count, model.pool_size).T
        dact = np.zeros_like(cache.conv_act[i])
        cols = np.arange(bank.filter_count)
        dact[cache.pool_rows[i], cols] = dpooled
        dpre = dact * _conv_activation_grad(
            cache.conv_pre[i], cache.conv_act[i], model.conv_activation
        )
        grads[f"conv{bank.height}.kernels"] = dpre.T @ cache.windows[i]
        grads[f"conv{bank.height}.biases"] = dpre.sum(axis=0)
    return grads


def predict_proba(model: QcnnModel, sentence) -> np.ndarray:
    """Class probabilities for one sentence matrix (evaluation mode)."""
    return forward(model, sentence, train_mode=False).probs


def predict(model: QcnnModel, sentence) -> int:
    """Most probable class index; ties resolve to the lowest index."""
    return int(np.argmax(predict_proba(model, sentence)))


def parameters(model: QcnnModel) -> dict[str, np.ndarray]:
    """All trainable arrays keyed like the gradient dict, in a fixed order."""
    params: dict[str, np.ndarray] = {}
    for bank in model.banks:
        params[f"conv{bank.height}.kernels"] = bank.kernels
        params[f"conv{bank.height}.biases"] = bank.biases
    params["fc1.weights"] = model.fc1.weights
    params["fc1.biases"] = model.fc1.biases
    params["fc2.weights"] = model.fc2.weights
    params["fc2.biases"] = model.fc2.biases
    params["out.weights"] = model.out.weights
    params["out.biases"] = model.out.biases
    return params
