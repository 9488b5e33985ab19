"""Pretrained word vectors, tokenization, and sentence matrices.

A sentence is encoded as one embedding-table row per token. Embeddings are
static: they are looked up, never fine-tuned.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import EmbeddingFormatError

__all__ = [
    "DEFAULT_MAX_TOKENS",
    "EmbeddingTable",
    "SentenceMatrix",
    "tokenize",
    "load_embeddings",
    "embed_sentence",
    "encode_question",
]

DEFAULT_MAX_TOKENS = 40

# A token is a maximal run of word characters; any other non-space character
# stands alone. Pretrained vocabularies are lowercase, so the text is too.
_TOKEN_RE = re.compile(r"\w+|[^\w\s]")

_INT_RE = re.compile(r"^\d+$")


def tokenize(text: str) -> list[str]:
    """Lowercase and split, isolating punctuation as standalone tokens.

    >>> tokenize("What is a prism?")
    ['what', 'is', 'a', 'prism', '?']
    """
    return _TOKEN_RE.findall(text.lower())


@dataclass(repr=False)
class EmbeddingTable:
    """A vocabulary mapped onto rows of a dense float64 matrix.

    Attributes
    ----------
    dim : int
        Vector dimensionality, constant across all entries.
    vocab : dict[str, int]
        Token to row index.
    vectors : np.ndarray
        Shape (len(vocab), dim).
    """

    dim: int
    vocab: dict[str, int]
    vectors: np.ndarray

    def __post_init__(self):
        if self.vectors.shape != (len(self.vocab), self.dim):
            raise ValueError(
                f"vector matrix shape {self.vectors.shape} does not match "
                f"{len(self.vocab)} tokens of dimension {self.dim}"
            )

    def __len__(self) -> int:
        return len(self.vocab)

    def __contains__(self, token: str) -> bool:
        return token in self.vocab

    def __repr__(self) -> str:
        return f"EmbeddingTable(dim={self.dim}, vocab_size={len(self.vocab)})"

    def row(self, token: str) -> np.ndarray | None:
        """The vector for ``token``, or None if out of vocabulary."""
        index = self.vocab.get(token)
        return None if index is None else self.vectors[index]


@dataclass(repr=False)
class SentenceMatrix:
    """One row of embedding values per kept token.

    An empty token sequence is represented by a single all-zero row so the
    matrix is never degenerate; out-of-vocabulary tokens are all-zero rows.
    """

    values: np.ndarray
    tokens: tuple[str, ...]

    @property
    def token_count(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def __repr__(self) -> str:
        return f"SentenceMatrix(token_count={self.token_count}, dim={self.dim})"


def _decode(raw: bytes, line_number: int) -> str:
    try:
        return raw.decode("utf-8")
    except UnicodeDecodeError:
        # Converted vector files occasionally carry stray bytes in tokens;
        # Latin-1 keeps the line loadable (such tokens simply never match).
        return raw.decode("latin-1")


def load_embeddings(path, expected_dim: int | None = None) -> EmbeddingTable:
    """Load a text-format pretrained-vector file.

    Each content line is ``token v1 v2 ... v_d`` separated by whitespace. A
    first line with exactly two integer fields is treated as a count/dim
    header and skipped. The dimension is taken from the first vector line
    (or checked against ``expected_dim``); on duplicate tokens the first
    occurrence wins.

    Raises EmbeddingFormatError with a 1-based line number on any malformed
    line, and on an empty file.
    """
    if expected_dim is not None and expected_dim < 1:
        raise ValueError(f"expected_dim must be positive, got {expected_dim}")
    path = Path(path)

    dim: int | None = expected_dim
    header_dim: int | None = None
    vocab: dict[str, int] = {}
    capacity = 1024
    rows: np.ndarray | None = None
    count = 0
    seen_content = False

    with path.open("rb") as handle:
        for line_number, raw in enumerate(handle, start=1):
            line = _decode(raw, line_number).strip()
            if not line:
                continue
            parts = line.split()
            if not seen_content:
                seen_content = True
                if len(parts) == 2 and all(_INT_RE.match(p) for p in parts):
                    header_dim = int(parts[1])
                    continue
            token, values = parts[0], parts[1:]
            if not values:
                raise EmbeddingFormatError(
                    f"{path}: line {line_number}: no vector values after token {token!r}"
                )
            if dim is None:
                dim = len(values)
            if len(values) != dim:
                raise EmbeddingFormatError(
                    f"{path}: line {line_number}: expected {dim} values, got {len(values)}"
                )
            try:
                vector = np.array(values, dtype=np.float64)
            except ValueError as exc:
                raise EmbeddingFormatError(
                    f"{path}: line {line_number}: unparseable value ({exc})"
                ) from None
            if not np.all(np.isfinite(vector)):
                raise EmbeddingFormatError(
                    f"{path}: line {line_number}: non-finite vector value"
                )
            if token in vocab:
                continue
            if rows is None or count == rows.shape[0]:
                grown = np.empty((max(capacity, count * 2), dim), dtype=np.float64)
                if rows is not None:
                    grown[:count] = rows
                rows = grown
            rows[count] = vector
            vocab[token] = count
            count += 1

    if count == 0:
        raise EmbeddingFormatError(f"{path}: no embedding vectors found")
    if header_dim is not None and header_dim != dim:
        raise EmbeddingFormatError(
            f"{path}: header declares dimension {header_dim} but vectors have {dim}"
        )
    assert rows is not None and dim is not None
    return EmbeddingTable(dim=dim, vocab=vocab, vectors=rows[:count].copy())


def embed_sentence(tokens, table: EmbeddingTable, max_len: int = DEFAULT_MAX_TOKENS) -> SentenceMatrix:
    """Map the first ``max_len`` tokens to their vectors.

    Out-of-vocabulary tokens become zero rows; shorter sentences are not
    padded; an empty token sequence yields a single all-zero row.
    """
    if max_len < 1:
        raise ValueError(f"max_len must be at least 1, got {max_len}")
    kept = tuple(tokens)[:max_len]
    if not kept:
        return SentenceMatrix(values=np.zeros((1, table.dim)), tokens=())
    values = np.zeros((len(kept), table.dim))
    for i, token in enumerate(kept):
        row = table.row(token)
        if row is not None:
            values[i] = row
    return SentenceMatrix(values=values, tokens=kept)


def encode_question(text: str, table: EmbeddingTable, max_len: int = DEFAULT_MAX_TOKENS) -> SentenceMatrix:
    """Tokenize raw text and embed it in one step."""
    return embed_sentence(tokenize(text), table, max_len)
