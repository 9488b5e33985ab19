"""Question files, the coarse/fine label taxonomy, and per-category subsets.

The wire format is one question per line: ``COARSE:fine question text``.
Label tokens are matched case-insensitively against both the canonical
category names and the short tags used by the UIUC files (ABBR, ENTY, DESC,
HUM, LOC, NUM and their fine-label abbreviations).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

from .errors import DatasetFormatError
from .numerics import Rng

__all__ = [
    "LabelTaxonomy",
    "QuestionRecord",
    "DEFAULT_TAXONOMY",
    "parse_trec_line",
    "load_dataset",
    "subset_by_coarse",
    "holdout_split",
    "resolve_label_pair",
    "resolve_coarse_label",
]

logger = logging.getLogger(__name__)

COARSE_CATEGORIES = (
    "Abbreviation",
    "Entity",
    "Description",
    "Human",
    "Location",
    "Numeric",
)

FINE_CATEGORIES: dict[str, tuple[str, ...]] = {
    "Abbreviation": ("abbreviation", "expression"),
    "Entity": (
        "animal", "body", "colour", "creative", "currency", "disease",
        "event", "food", "instrument", "language", "letter", "other",
        "plant", "product", "religion", "sport", "substance", "symbol",
        "technique", "term", "vehicle", "word",
    ),
    "Description": ("definition", "description", "manner", "reason"),
    "Human": ("group", "individual", "title", "description"),
    "Location": ("city", "country", "mountain", "state", "other"),
    "Numeric": (
        "code", "count", "date", "distance", "money", "order", "period",
        "percent", "speed", "temperature", "size", "weight", "other",
    ),
}

# Short coarse tags used by the UIUC files.
_COARSE_ALIASES = {
    "abbr": "Abbreviation",
    "enty": "Entity",
    "desc": "Description",
    "hum": "Human",
    "loc": "Location",
    "num": "Numeric",
}

# Fine-label abbreviations used by the UIUC files, per coarse category.
_FINE_ALIASES: dict[str, dict[str, str]] = {
    "Abbreviation": {"abb": "abbreviation", "exp": "expression"},
    "Entity": {
        "color": "colour",
        "cremat": "creative",
        "dismed": "disease",
        "instru": "instrument",
        "lang": "language",
        "techmeth": "technique",
        "termeq": "term",
        "veh": "vehicle",
    },
    "Description": {"def": "definition", "desc": "description"},
    "Human": {"gr": "group", "ind": "individual", "desc": "description"},
    "Location": {"mount": "mountain"},
    "Numeric": {
        "dist": "distance",
        "ord": "order",
        "perc": "percent",
        "temp": "temperature",
        "volsize": "size",
    },
}


@dataclass(frozen=True)
class LabelTaxonomy:
    """The six coarse question categories and their fine sub-categories."""

    coarse: tuple[str, ...] = COARSE_CATEGORIES
    fine: dict[str, tuple[str, ...]] = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.fine is None:
            object.__setattr__(self, "fine", dict(FINE_CATEGORIES))
        if tuple(self.coarse) != COARSE_CATEGORIES:
            raise ValueError(
                f"taxonomy must have the six coarse categories {COARSE_CATEGORIES}, "
                f"got {tuple(self.coarse)}"
            )
        counts = tuple(len(self.fine[c]) for c in self.coarse)
        if counts != (2, 22, 4, 4, 5, 13):
            raise ValueError(
                f"fine-category counts must be (2, 22, 4, 4, 5, 13), got {counts}"
            )

    def coarse_index(self, name: str) -> int:
        return self.coarse.index(name)

    def fine_labels(self, coarse: str) -> tuple[str, ...]:
        return self.fine[coarse]

    def fine_index(self, coarse: str, fine: str) -> int:
        return self.fine[coarse].index(fine)

    def fine_count(self, coarse: str) -> int:
        return len(self.fine[coarse])

    @property
    def total_fine_count(self) -> int:
        return sum(len(v) for v in self.fine.values())


DEFAULT_TAXONOMY = LabelTaxonomy()


@dataclass(frozen=True)
class QuestionRecord:
    """A labeled question: coarse and fine category plus the raw text."""

    coarse: str
    fine: str
    text: str


def _resolve_coarse(token: str, taxonomy: LabelTaxonomy) -> str | None:
    lowered = token.lower()
    for name in taxonomy.coarse:
        if lowered == name.lower():
            return name
    return _COARSE_ALIASES.get(lowered)


def _resolve_fine(coarse: str, token: str, taxonomy: LabelTaxonomy) -> str | None:
    lowered = token.lower()
    for name in taxonomy.fine_labels(coarse):
        if lowered == name.lower():
            return name
    alias = _FINE_ALIASES.get(coarse, {}).get(lowered)
    if alias is not None and alias in taxonomy.fine_labels(coarse):
        return alias
    return None


def resolve_coarse_label(token: str, taxonomy: LabelTaxonomy = DEFAULT_TAXONOMY) -> str:
    """Canonicalize a coarse category name or its short tag.

    >>> resolve_coarse_label("NUM")
    'Numeric'
    """
    coarse = _resolve_coarse(token.strip(), taxonomy)
    if coarse is None:
        raise DatasetFormatError(f"unknown coarse category {token!r}")
    return coarse


def resolve_label_pair(label, taxonomy: LabelTaxonomy = DEFAULT_TAXONOMY) -> tuple[str, str]:
    """Canonicalize a ``(coarse, fine)`` pair or a ``"COARSE:fine"`` string.

    Raises DatasetFormatError for unknown labels.
    """
    if isinstance(label, str):
        coarse_token, sep, fine_token = label.partition(":")
        if not sep:
            raise DatasetFormatError(f"label {label!r} is missing the ':' separator")
    else:
        try:
            coarse_token, fine_token = label
        except (TypeError, ValueError):
            raise DatasetFormatError(
                f"label {label!r} is neither a 'COARSE:fine' string nor a pair"
            ) from None
    coarse = _resolve_coarse(str(coarse_token).strip(), taxonomy)
    if coarse is None:
        raise DatasetFormatError(f"unknown coarse category {coarse_token!r}")
    fine = _resolve_fine(coarse, str(fine_token).strip(), taxonomy)
    if fine is None:
        raise DatasetFormatError(
            f"unknown fine category {fine_token!r} under {coarse}"
        )
    return coarse, fine


def parse_trec_line(line: str, taxonomy: LabelTaxonomy = DEFAULT_TAXONOMY) -> QuestionRecord:
    """Parse one ``COARSE:fine question text`` line into a QuestionRecord."""
    stripped = line.strip()
    if not stripped:
        raise DatasetFormatError("empty line")
    label, sep, text = stripped.partition(" ")
    if not sep or not text.strip():
        raise DatasetFormatError(f"missing question text in line {stripped!r}")
    try:
        coarse, fine = resolve_label_pair(label, taxonomy)
    except DatasetFormatError as exc:
        raise DatasetFormatError(f"{exc} in line {stripped!r}") from None
    return QuestionRecord(coarse=coarse, fine=fine, text=text.strip())


def load_dataset(path, taxonomy: LabelTaxonomy = DEFAULT_TAXONOMY) -> list[QuestionRecord]:
    """Load a question file: one record per non-empty line, order preserved.

    Lines that are not valid UTF-8 fall back to Latin-1 (the UIUC files
    contain a handful of such bytes); each fallback is logged.
    """
    path = Path(path)
    records: list[QuestionRecord] = []
    with path.open("rb") as handle:
        for line_number, raw in enumerate(handle, start=1):
            try:
                line = raw.decode("utf-8")
            except UnicodeDecodeError:
                line = raw.decode("latin-1")
                logger.warning("%s: line %d decoded as Latin-1", path, line_number)
            if not line.strip():
                continue
            try:
                records.append(parse_trec_line(line, taxonomy))
            except DatasetFormatError as exc:
                raise DatasetFormatError(f"{path}: line {line_number}: {exc}") from None
    return records


def subset_by_coarse(
    records, coarse: str, taxonomy: LabelTaxonomy = DEFAULT_TAXONOMY
) -> list[QuestionRecord]:
    """Records whose coarse label matches, order preserved."""
    if coarse not in taxonomy.coarse:
        raise ValueError(f"unknown coarse category {coarse!r}")
    return [record for record in records if record.coarse == coarse]


def holdout_split(records, train_fraction: float, seed: int):
    """Seeded shuffle followed by an exact train/validation partition.

    ``train_fraction`` is the share of records kept for training; the rest
    form the validation set. The two parts never overlap and their union is
    the input.
    """
    records = list(records)
    if not records:
        raise ValueError("cannot split an empty record list")
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train_fraction must be in (0, 1), got {train_fraction}")
    order = Rng(seed).permutation(len(records))
    shuffled = [records[i] for i in order]
    cut = int(round(train_fraction * len(records)))
    return shuffled[:cut], shuffled[cut:]
