"""Evaluation reports: one source of counts, two renderings.

The text table and the JSON document are both derived from the same
HierMetrics counts, so the two outputs can never disagree.
"""

from __future__ import annotations

from dataclasses import dataclass

from .dataset import LabelTaxonomy
from .hierarchy import HierMetrics

__all__ = ["CoarseRow", "RunReport"]


@dataclass
class CoarseRow:
    coarse: str
    entries: int
    correct: int

    @property
    def accuracy(self) -> float:
        return self.correct / self.entries if self.entries else 0.0


@dataclass
class RunReport:
    """Per-category and summary accuracy for one evaluation run."""

    total: int
    main_correct: int
    both_correct: int
    rows: list[CoarseRow]

    @classmethod
    def from_metrics(cls, metrics: HierMetrics, taxonomy: LabelTaxonomy) -> "RunReport":
        rows = [
            CoarseRow(
                coarse=coarse,
                entries=metrics.per_coarse[coarse].entries,
                correct=metrics.per_coarse[coarse].correct,
            )
            for coarse in taxonomy.coarse
        ]
        return cls(
            total=metrics.total,
            main_correct=metrics.main_correct,
            both_correct=metrics.both_correct,
            rows=rows,
        )

    @property
    def main_accuracy(self) -> float:
        return self.main_correct / self.total if self.total else 0.0

    @property
    def sub_accuracy(self) -> float:
        return self.both_correct / self.total if self.total else 0.0

    @property
    def conditional_sub_accuracy(self) -> float:
        return self.both_correct / self.main_correct if self.main_correct else 0.0

    def to_json_dict(self) -> dict:
        return {
            "total": self.total,
            "main_correct": self.main_correct,
            "main_accuracy": self.main_accuracy,
            "both_correct": self.both_correct,
            "sub_accuracy": self.sub_accuracy,
            "conditional_sub_accuracy": self.conditional_sub_accuracy,
            "per_coarse": [
                {
                    "coarse": row.coarse,
                    "entries": row.entries,
                    "correct": row.correct,
                    "accuracy": row.accuracy,
                }
                for row in self.rows
            ],
        }

    def to_text(self) -> str:
        """Aligned table of per-category results plus the three summaries.

        The per-category block routes by the gold coarse label, so it shows
        fine-model quality in isolation; the summary lines use the predicted
        route end to end.
        """
        lines = []
        header = f"{'Class':<14}{'Entries':>8}{'Correct':>9}{'Accuracy':>10}"
        lines.append(header)
        lines.append("-" * len(header))
        for row in self.rows:
            lines.append(
                f"{row.coarse:<14}{row.entries:>8}{row.correct:>9}"
                f"{row.accuracy:>9.2%}"
            )
        lines.append("-" * len(header))
        summaries = [
            ("main accuracy", self.main_correct, self.total, self.main_accuracy),
            ("sub accuracy (end-to-end)", self.both_correct, self.total, self.sub_accuracy),
            (
                "sub accuracy (given main)",
                self.both_correct,
                self.main_correct,
                self.conditional_sub_accuracy,
            ),
        ]
        for label, num, den, acc in summaries:
            lines.append(f"{label:<26}{num}/{den}  {acc:.2%}")
        return "\n".join(lines)
