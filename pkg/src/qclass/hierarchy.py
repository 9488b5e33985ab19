"""Two-tier classification: a coarse router and six fine-grained models.

Tier 1 assigns one of the six coarse categories. Tier 2 holds one model per
coarse category, trained only on that category's records, that picks the
fine label. Evaluation reports accuracy at both levels and, per coarse
category, the fine accuracy when routing by the gold coarse label.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .dataset import (
    DEFAULT_TAXONOMY,
    LabelTaxonomy,
    QuestionRecord,
    holdout_split,
    subset_by_coarse,
)
from .embeddings import EmbeddingTable, encode_question
from .network import QcnnModel, init_model, predict
from .numerics import Rng
from .training import EpochStats, TrainConfig, evaluate, train

__all__ = [
    "TwoTierClassifier",
    "CoarseResult",
    "HierMetrics",
    "train_tier1",
    "train_tier2",
    "train_two_tier",
    "classify",
    "evaluate_hierarchical",
]


@dataclass(repr=False)
class TwoTierClassifier:
    """A coarse router plus one fine model per coarse category."""

    taxonomy: LabelTaxonomy
    tier1: QcnnModel
    tier2: dict[str, QcnnModel]
    max_len: int = 40

    def __post_init__(self):
        if self.tier1.class_count != len(self.taxonomy.coarse):
            raise ValueError(
                f"tier-1 model has {self.tier1.class_count} classes, "
                f"expected {len(self.taxonomy.coarse)}"
            )
        if set(self.tier2) != set(self.taxonomy.coarse):
            raise ValueError(
                f"tier-2 models cover {sorted(self.tier2)}, "
                f"expected {sorted(self.taxonomy.coarse)}"
            )
        for coarse, model in self.tier2.items():
            expected = self.taxonomy.fine_count(coarse)
            if model.class_count != expected:
                raise ValueError(
                    f"tier-2 model for {coarse} has {model.class_count} classes, "
                    f"expected {expected}"
                )
        if self.max_len < 1:
            raise ValueError(f"max_len must be >= 1, got {self.max_len}")

    def __repr__(self) -> str:
        return (
            f"TwoTierClassifier(coarse={len(self.taxonomy.coarse)}, "
            f"fine={self.taxonomy.total_fine_count}, max_len={self.max_len})"
        )


@dataclass
class CoarseResult:
    """Gold-routed fine accuracy for one coarse category."""

    entries: int
    correct: int

    @property
    def accuracy(self) -> float:
        return self.correct / self.entries if self.entries else 0.0


@dataclass
class HierMetrics:
    """Counts backing every reported accuracy, so ratios stay exact."""

    total: int
    main_correct: int
    both_correct: int
    per_coarse: dict[str, CoarseResult] = field(default_factory=dict)

    @property
    def main_accuracy(self) -> float:
        return self.main_correct / self.total if self.total else 0.0

    @property
    def sub_accuracy(self) -> float:
        """End-to-end fine accuracy: coarse and fine both correct."""
        return self.both_correct / self.total if self.total else 0.0

    @property
    def conditional_sub_accuracy(self) -> float:
        """Fine accuracy among records whose coarse prediction was right."""
        return self.both_correct / self.main_correct if self.main_correct else 0.0


def _encode_records(records, table: EmbeddingTable, max_len: int):
    return [encode_question(record.text, table, max_len) for record in records]


def _tier1_examples(records, table: EmbeddingTable, max_len: int, taxonomy: LabelTaxonomy):
    sentences = _encode_records(records, table, max_len)
    return [
        (sentence, taxonomy.coarse_index(record.coarse))
        for sentence, record in zip(sentences, records)
    ]


def _tier2_examples(records, table: EmbeddingTable, max_len: int, taxonomy: LabelTaxonomy, coarse: str):
    sentences = _encode_records(records, table, max_len)
    return [
        (sentence, taxonomy.fine_index(coarse, record.fine))
        for sentence, record in zip(sentences, records)
    ]


def _split_for_validation(examples, config: TrainConfig, seed_salt: int):
    if config.val_fraction <= 0.0:
        return examples, None
    train_part, val_part = holdout_split(
        examples, 1.0 - config.val_fraction, config.seed + seed_salt
    )
    return train_part, (val_part or None)


def _fresh_model(dim: int, class_count: int, rng: Rng, config: TrainConfig) -> QcnnModel:
    return init_model(
        dim,
        class_count,
        rng,
        filters_per_height=config.filters,
        heights=config.heights,
        hidden=config.hidden,
        pool_size=config.pool_size,
        dropout_p=config.dropout,
        conv_activation=config.conv_activation,
    )


def train_tier1(
    records,
    table: EmbeddingTable,
    config: TrainConfig,
    *,
    taxonomy: LabelTaxonomy = DEFAULT_TAXONOMY,
    rng: Rng | None = None,
    on_epoch=None,
) -> tuple[QcnnModel, list[EpochStats]]:
    """Train the coarse router on all records. Returns (model, history)."""
    records = list(records)
    if not records:
        raise ValueError("cannot train tier 1 on an empty record list")
    if rng is None:
        rng = Rng(config.seed).child(0)
    examples = _tier1_examples(records, table, config.max_len, taxonomy)
    examples, val_examples = _split_for_validation(examples, config, seed_salt=1)
    model = _fresh_model(table.dim, len(taxonomy.coarse), rng, config)
    history = train(
        model, examples, config, rng=rng, val_examples=val_examples, on_epoch=on_epoch
    )
    return model, history


def train_tier2(
    records,
    coarse: str,
    table: EmbeddingTable,
    config: TrainConfig,
    *,
    taxonomy: LabelTaxonomy = DEFAULT_TAXONOMY,
    rng: Rng | None = None,
    on_epoch=None,
) -> tuple[QcnnModel, list[EpochStats]]:
    """Train the fine model for one coarse category on its records only."""
    if coarse not in taxonomy.coarse:
        raise ValueError(f"unknown coarse category {coarse!r}")
    subset = subset_by_coarse(records, coarse, taxonomy)
    if not subset:
        raise ValueError(f"no records with coarse category {coarse}")
    if rng is None:
        rng = Rng(config.seed).child(taxonomy.coarse_index(coarse) + 1)
    examples = _tier2_examples(subset, table, config.max_len, taxonomy, coarse)
    examples, val_examples = _split_for_validation(
        examples, config, seed_salt=2 + taxonomy.coarse_index(coarse)
    )
    model = _fresh_model(table.dim, taxonomy.fine_count(coarse), rng, config)
    history = train(
        model, examples, config, rng=rng, val_examples=val_examples, on_epoch=on_epoch
    )
    return model, history


def train_two_tier(
    records,
    tier1_table: EmbeddingTable,
    config: TrainConfig,
    *,
    tier2_table: EmbeddingTable | None = None,
    taxonomy: LabelTaxonomy = DEFAULT_TAXONOMY,
    on_epoch=None,
) -> TwoTierClassifier:
    """Train the router and all six fine models from one labeled set.

    Every coarse category must appear in the records. Each of the seven
    models trains from its own child of the base seed (tier 1 from child 0,
    tier 2 for coarse index i from child i + 1), so results do not depend on
    training order. ``on_epoch``, if given, is called as
    ``on_epoch(model_name, stats)``.
    """
    records = list(records)
    base = Rng(config.seed)
    if tier2_table is None:
        tier2_table = tier1_table

    def stage_callback(name):
        if on_epoch is None:
            return None
        return lambda stats: on_epoch(name, stats)

    tier1, _ = train_tier1(
        records,
        tier1_table,
        config,
        taxonomy=taxonomy,
        rng=base.child(0),
        on_epoch=stage_callback("tier1"),
    )
    tier2: dict[str, QcnnModel] = {}
    for i, coarse in enumerate(taxonomy.coarse):
        model, _ = train_tier2(
            records,
            coarse,
            tier2_table,
            config,
            taxonomy=taxonomy,
            rng=base.child(i + 1),
            on_epoch=stage_callback(f"tier2-{coarse.lower()}"),
        )
        tier2[coarse] = model
    return TwoTierClassifier(
        taxonomy=taxonomy, tier1=tier1, tier2=tier2, max_len=config.max_len
    )


def classify(
    classifier: TwoTierClassifier,
    question: str,
    tier1_table: EmbeddingTable,
    tier2_table: EmbeddingTable | None = None,
) -> tuple[str, str]:
    """Predict (coarse, fine) for one question.

    The tier-1 prediction routes the question to that category's tier-2
    model; the fine label always belongs to the predicted coarse category.
    """
    if tier2_table is None:
        tier2_table = tier1_table
    taxonomy = classifier.taxonomy
    sentence1 = encode_question(question, tier1_table, classifier.max_len)
    coarse = taxonomy.coarse[predict(classifier.tier1, sentence1)]
    sentence2 = encode_question(question, tier2_table, classifier.max_len)
    fine = taxonomy.fine_labels(coarse)[predict(classifier.tier2[coarse], sentence2)]
    return coarse, fine


def evaluate_hierarchical(
    classifier: TwoTierClassifier,
    records,
    tier1_table: EmbeddingTable,
    tier2_table: EmbeddingTable | None = None,
) -> HierMetrics:
    """Coarse, end-to-end fine, and gold-routed per-category accuracy.

    A record counts toward both_correct only when the predicted coarse
    category is right and that category's model picks the right fine label.
    The per-coarse breakdown instead routes by the gold coarse label, so it
    isolates tier-2 quality from tier-1 mistakes. When the coarse prediction
    is right the routed model is the gold model, so one tier-2 forward pass
    per record serves both counts.
    """
    records = list(records)
    if not records:
        raise ValueError("cannot evaluate on an empty record list")
    if tier2_table is None:
        tier2_table = tier1_table
    taxonomy = classifier.taxonomy
    metrics = HierMetrics(total=len(records), main_correct=0, both_correct=0)
    for coarse in taxonomy.coarse:
        metrics.per_coarse[coarse] = CoarseResult(entries=0, correct=0)
    for record in records:
        sentence1 = encode_question(record.text, tier1_table, classifier.max_len)
        predicted_coarse = taxonomy.coarse[predict(classifier.tier1, sentence1)]
        main_right = predicted_coarse == record.coarse
        if main_right:
            metrics.main_correct += 1

        sentence2 = encode_question(record.text, tier2_table, classifier.max_len)
        gold_model = classifier.tier2[record.coarse]
        gold_fine = taxonomy.fine_labels(record.coarse)[predict(gold_model, sentence2)]
        fine_right = gold_fine == record.fine

        per = metrics.per_coarse[record.coarse]
        per.entries += 1
        if fine_right:
            per.correct += 1
        if main_right and fine_right:
            metrics.both_correct += 1
    return metrics
