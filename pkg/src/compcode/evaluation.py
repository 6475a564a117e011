"""Top-k accuracy, confusion matrix, per-class metrics, and the span statistic.

Gold labels may list several industries per company; a sample counts as a
top-k hit when ANY gold code appears among the k highest-ranked predictions.
The confusion matrix uses the first gold entry as the primary class and the
rank-1 prediction as the column.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import MissingGold
from .pscode import Prediction
from .taxonomy import CompanyRecord

log = logging.getLogger(__name__)

GoldMap = Mapping[str, CompanyRecord]


def gold_by_id(records: Sequence[CompanyRecord]) -> dict[str, CompanyRecord]:
    return {r.id: r for r in records}


def _gold_industries(prediction: Prediction, gold: GoldMap) -> tuple[str, ...]:
    record = gold.get(prediction.company_id)
    if record is None or not record.gold_industries:
        raise MissingGold(f"no gold industries for company {prediction.company_id!r}")
    return record.gold_industries


def topk_accuracy(predictions: Sequence[Prediction], gold: GoldMap, k: int) -> float:
    """Fraction of samples with any gold industry inside the predicted top-k."""
    if not predictions:
        raise MissingGold("no predictions to score")
    hits = 0
    for prediction in predictions:
        gold_codes = _gold_industries(prediction, gold)
        top = prediction.industries.ids()[:k]
        if any(code in top for code in gold_codes):
            hits += 1
    return hits / len(predictions)


def top2_ps_accuracy(predictions: Sequence[Prediction], gold: GoldMap) -> float:
    """Fraction of samples whose gold product/service code appears anywhere
    among the predicted (industry, code) pairs (at most 3 x 2 = 6 of them)."""
    if not predictions:
        raise MissingGold("no predictions to score")
    hits = 0
    for prediction in predictions:
        record = gold.get(prediction.company_id)
        if record is None or not record.gold_ps_codes:
            raise MissingGold(f"no gold product/service codes for {prediction.company_id!r}")
        predicted = {cid for ps in prediction.ps for cid in ps.ids()}
        if any(code in predicted for code in record.gold_ps_codes):
            hits += 1
    return hits / len(predictions)


@dataclass
class ConfusionMatrix:
    labels: list[str]  # row and column order
    counts: np.ndarray  # counts[gold, predicted]

    def row(self, gold_id: str) -> np.ndarray:
        return self.counts[self.labels.index(gold_id)]

    def total(self) -> int:
        return int(self.counts.sum())

    def to_csv(self, path: str | Path) -> None:
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["gold\\predicted", *self.labels])
            for label, row in zip(self.labels, self.counts):
                writer.writerow([label, *[int(v) for v in row]])


def confusion_matrix(predictions: Sequence[Prediction], gold: GoldMap) -> ConfusionMatrix:
    """Counts of (first gold industry, top-1 predicted industry) pairs."""
    pairs = []
    for prediction in predictions:
        gold_primary = _gold_industries(prediction, gold)[0]
        top1 = prediction.industries.ids()[0]
        pairs.append((gold_primary, top1))
    labels = sorted({g for g, _ in pairs} | {p for _, p in pairs})
    index = {label: i for i, label in enumerate(labels)}
    counts = np.zeros((len(labels), len(labels)), dtype=np.int64)
    for g, p in pairs:
        counts[index[g], index[p]] += 1
    return ConfusionMatrix(labels=labels, counts=counts)


def span_statistic(confusion: ConfusionMatrix, mass: float = 0.9) -> dict[str, int]:
    """Per gold class: how many predicted classes, taken largest-first, are
    needed to cover at least ``mass`` of the row's total. Empty rows are
    skipped with a log note."""
    spans: dict[str, int] = {}
    for label, row in zip(confusion.labels, confusion.counts):
        total = int(row.sum())
        if total == 0:
            log.info("span: class %s has no gold samples, skipped", label)
            continue
        cells = sorted(
            zip(row.tolist(), confusion.labels), key=lambda item: (-item[0], item[1])
        )
        acc = 0
        span = 0
        for count, _ in cells:
            acc += count
            span += 1
            if acc >= mass * total - 1e-9:
                break
        spans[label] = span
    return spans


@dataclass
class EvalReport:
    top3_industry_accuracy: float
    top2_ps_accuracy: float | None
    n_samples: int
    confusion: ConfusionMatrix
    per_class: dict[str, dict[str, float]] = field(default_factory=dict)
    span: dict[str, int] = field(default_factory=dict)
    k: int = 3

    def to_json_obj(self) -> dict:
        return {
            "top3_industry_accuracy": self.top3_industry_accuracy,
            "top2_ps_accuracy": self.top2_ps_accuracy,
            "n_samples": self.n_samples,
            "k": self.k,
            "per_class": self.per_class,
            "span": self.span,
            "confusion": {
                "labels": self.confusion.labels,
                "counts": [[int(v) for v in row] for row in self.confusion.counts],
            },
        }

    def format_table(self) -> str:
        lines = [
            f"{'samples':<28}{self.n_samples}",
            f"{'top-%d industry accuracy' % self.k:<28}{self.top3_industry_accuracy:.4f}",
        ]
        if self.top2_ps_accuracy is not None:
            lines.append(f"{'top-2 product/service acc':<28}{self.top2_ps_accuracy:.4f}")
        else:
            lines.append(f"{'top-2 product/service acc':<28}-")
        lines.append("")
        lines.append(f"{'class':<12}{'precision':>10}{'recall':>10}{'span':>6}")
        for label in self.confusion.labels:
            stats = self.per_class.get(label, {})
            span = self.span.get(label)
            lines.append(
                f"{label:<12}"
                f"{stats.get('precision', 0.0):>10.3f}"
                f"{stats.get('recall', 0.0):>10.3f}"
                f"{span if span is not None else '-':>6}"
            )
        return "\n".join(lines)


def _per_class_stats(confusion: ConfusionMatrix) -> dict[str, dict[str, float]]:
    stats: dict[str, dict[str, float]] = {}
    col_sums = confusion.counts.sum(axis=0)
    row_sums = confusion.counts.sum(axis=1)
    for i, label in enumerate(confusion.labels):
        diag = int(confusion.counts[i, i])
        stats[label] = {
            "precision": diag / int(col_sums[i]) if col_sums[i] else 0.0,
            "recall": diag / int(row_sums[i]) if row_sums[i] else 0.0,
        }
    return stats


def evaluate(
    predictions: Sequence[Prediction],
    gold: GoldMap,
    k: int = 3,
    mass: float = 0.9,
) -> EvalReport:
    """Assemble the full report. Product/service accuracy is computed over
    the subset of samples that carry gold codes and reported as None when
    no sample does."""
    industry_acc = topk_accuracy(predictions, gold, k)
    with_ps = [
        p
        for p in predictions
        if gold.get(p.company_id) is not None and gold[p.company_id].gold_ps_codes
    ]
    ps_acc = top2_ps_accuracy(with_ps, gold) if with_ps else None
    confusion = confusion_matrix(predictions, gold)
    return EvalReport(
        top3_industry_accuracy=industry_acc,
        top2_ps_accuracy=ps_acc,
        n_samples=len(predictions),
        confusion=confusion,
        per_class=_per_class_stats(confusion),
        span=span_statistic(confusion, mass=mass),
        k=k,
    )


def save_report(report: EvalReport, path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        json.dump(report.to_json_obj(), fh, indent=2)
        fh.write("\n")
