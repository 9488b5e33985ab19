"""Input-validation helpers shared by the estimator layer."""

from __future__ import annotations

from pathlib import Path

from .embeddings import EmbeddingTable, load_embeddings

__all__ = ["check_text_sequence", "check_equal_length", "as_embedding_table"]


def check_text_sequence(X, name: str = "X") -> list[str]:
    """Require a non-empty sequence of strings; a bare string is rejected.

    A lone string iterates as characters, which silently turns one question
    into hundreds of one-letter ones, so it is an error here.
    """
    if isinstance(X, str):
        raise ValueError(f"{name} must be a sequence of strings, not a single string")
    items = list(X)
    if not items:
        raise ValueError(f"{name} must not be empty")
    for i, item in enumerate(items):
        if not isinstance(item, str):
            raise ValueError(
                f"{name}[{i}] must be a string, got {type(item).__name__}"
            )
    return items


def check_equal_length(X, y, x_name: str = "X", y_name: str = "y"):
    """Require len(X) == len(y); returns (list(X), list(y))."""
    X = list(X)
    y = list(y)
    if len(X) != len(y):
        raise ValueError(
            f"{x_name} and {y_name} have different lengths: {len(X)} vs {len(y)}"
        )
    return X, y


def as_embedding_table(source) -> EmbeddingTable:
    """Accept an EmbeddingTable or a path to an embedding file."""
    if isinstance(source, EmbeddingTable):
        return source
    if isinstance(source, (str, Path)):
        return load_embeddings(source)
    if source is None:
        raise ValueError(
            "an embedding table is required: pass an EmbeddingTable or a path "
            "to a word-vector text file"
        )
    raise ValueError(
        f"cannot interpret {type(source).__name__} as an embedding table"
    )
