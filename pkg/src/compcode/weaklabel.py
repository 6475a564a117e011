"""Weak-label dataset construction and the seeded train/test split.

Labels come from two routes, in strict precedence order: a company whose
source-taxonomy triple is found in the mapping takes the mapped industry,
unconditionally; everything else is matched against candidate industry
descriptions by cosine similarity and labeled with the argmax candidate
when that score clears the threshold. Companies that satisfy neither
route are dropped and counted.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .embedding import EmbeddingVector, cosine_similarity
from .errors import EmptyDataset, ParseError
from .taxonomy import CompanyRecord, IndustryTaxonomy, SourceMapping

PROVENANCE_MAPPING = "mapping"
PROVENANCE_SIMILARITY = "similarity"


@dataclass(frozen=True)
class WeakLabelConfig:
    thresh: float = 0.5
    uncovered_only: bool = True
    split_ratio: float = 0.8
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.thresh <= 1.0:
            raise ValueError(f"thresh must be in [0, 1], got {self.thresh}")
        if not 0.0 < self.split_ratio < 1.0:
            raise ValueError(f"split_ratio must be in (0, 1), got {self.split_ratio}")


@dataclass(frozen=True)
class Provenance:
    kind: str  # PROVENANCE_MAPPING | PROVENANCE_SIMILARITY
    score: float | None = None


@dataclass(frozen=True)
class LabeledExample:
    company_id: str
    embedding: EmbeddingVector
    label: str
    provenance: Provenance


@dataclass(frozen=True)
class LabelReport:
    mapped: int
    similarity: int
    dropped: int
    per_class: dict[str, int] = field(default_factory=dict)

    def to_json_obj(self) -> dict:
        return {
            "mapped": self.mapped,
            "similarity": self.similarity,
            "dropped": self.dropped,
            "per_class": dict(sorted(self.per_class.items())),
        }


@dataclass
class LabeledDataset:
    examples: list[LabeledExample]
    class_labels: list[str]
    report: LabelReport

    def __len__(self) -> int:
        return len(self.examples)


def _make_report(examples: Sequence[LabeledExample], dropped: int = 0) -> LabelReport:
    per_class: dict[str, int] = {}
    mapped = similarity = 0
    for ex in examples:
        per_class[ex.label] = per_class.get(ex.label, 0) + 1
        if ex.provenance.kind == PROVENANCE_MAPPING:
            mapped += 1
        else:
            similarity += 1
    return LabelReport(mapped=mapped, similarity=similarity, dropped=dropped, per_class=per_class)


def label_by_mapping(
    company: CompanyRecord, mapping: SourceMapping
) -> tuple[str, Provenance] | None:
    """Mapped industry id when the company carries a triple found in the mapping."""
    if company.source_codes is None:
        return None
    target = mapping.lookup(company.source_codes)
    if target is None:
        return None
    return target, Provenance(PROVENANCE_MAPPING)


def label_by_similarity(
    company_vec: EmbeddingVector,
    candidates: Sequence[tuple[str, EmbeddingVector]],
    thresh: float,
) -> tuple[str, Provenance] | None:
    """Argmax-similarity candidate when its score clears ``thresh``.

    Ties break toward the ascending candidate id. Returns None when there
    are no candidates or the best score falls below the threshold.
    """
    best_id: str | None = None
    best_score = -2.0
    for cand_id, cand_vec in sorted(candidates, key=lambda c: c[0]):
        score = cosine_similarity(company_vec, cand_vec)
        if score > best_score:
            best_id, best_score = cand_id, score
    if best_id is None or best_score < thresh:
        return None
    return best_id, Provenance(PROVENANCE_SIMILARITY, score=best_score)


def build_labeled_dataset(
    companies: Sequence[CompanyRecord],
    mapping: SourceMapping,
    taxonomy: IndustryTaxonomy,
    provider,
    config: WeakLabelConfig,
) -> LabeledDataset:
    """Run both labeling routes over ``companies`` and assemble the dataset.

    The similarity route considers only industries outside the mapping's
    coverage when ``config.uncovered_only`` is set (the default), or the
    whole taxonomy otherwise.
    """
    if config.uncovered_only:
        candidate_ids = sorted(mapping.uncovered(taxonomy))
    else:
        candidate_ids = sorted(taxonomy.ids())
    candidate_texts = [taxonomy.lookup(i).description for i in candidate_ids]
    candidate_vecs = provider.embed(candidate_texts) if candidate_ids else []
    candidates = list(zip(candidate_ids, candidate_vecs))

    company_vecs = provider.embed([c.description for c in companies])

    examples: list[LabeledExample] = []
    dropped = 0
    for company, vec in zip(companies, company_vecs):
        outcome = label_by_mapping(company, mapping)
        if outcome is None:
            outcome = label_by_similarity(vec, candidates, config.thresh)
        if outcome is None:
            dropped += 1
            continue
        label, provenance = outcome
        examples.append(
            LabeledExample(
                company_id=company.id, embedding=vec, label=label, provenance=provenance
            )
        )
    if not examples:
        raise EmptyDataset("no company received a label; dataset is empty")
    class_labels = sorted({ex.label for ex in examples})
    return LabeledDataset(
        examples=examples,
        class_labels=class_labels,
        report=_make_report(examples, dropped=dropped),
    )


def split_dataset(
    dataset: LabeledDataset, ratio: float, seed: int
) -> tuple[LabeledDataset, LabeledDataset]:
    """Deterministic stratified split into (train, test).

    Per class with n >= 2 examples, round(n * ratio) land in train (at
    least one); singleton classes go entirely to train. Example order is
    preserved within each half, and both halves keep the parent's class
    label list so downstream models see the same class space.
    """
    if not 0.0 < ratio < 1.0:
        raise ValueError(f"ratio must be in (0, 1), got {ratio}")
    if not dataset.examples:
        raise EmptyDataset("cannot split an empty dataset")
    by_class: dict[str, list[int]] = {}
    for idx, ex in enumerate(dataset.examples):
        by_class.setdefault(ex.label, []).append(idx)

    rng = np.random.default_rng(seed)
    train_idx: set[int] = set()
    for label in sorted(by_class):
        indices = by_class[label]
        if len(indices) < 2:
            train_idx.update(indices)
            continue
        n_train = int(len(indices) * ratio + 0.5)
        n_train = max(1, min(len(indices), n_train))
        order = rng.permutation(len(indices))
        train_idx.update(indices[i] for i in order[:n_train])

    train = [ex for i, ex in enumerate(dataset.examples) if i in train_idx]
    test = [ex for i, ex in enumerate(dataset.examples) if i not in train_idx]
    labels = list(dataset.class_labels)
    return (
        LabeledDataset(train, labels, _make_report(train)),
        LabeledDataset(test, labels, _make_report(test)),
    )


def example_to_json_obj(example: LabeledExample) -> dict:
    provenance: dict = {"kind": example.provenance.kind}
    if example.provenance.score is not None:
        provenance["score"] = example.provenance.score
    return {
        "company_id": example.company_id,
        "label": example.label,
        "provenance": provenance,
        "embedding": [float(v) for v in example.embedding],
    }


def save_dataset(dataset: LabeledDataset, path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for example in dataset.examples:
            fh.write(json.dumps(example_to_json_obj(example), separators=(",", ":")))
            fh.write("\n")


def load_dataset(path: str | Path) -> LabeledDataset:
    examples: list[LabeledExample] = []
    path = Path(path)
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                provenance = Provenance(
                    kind=obj["provenance"]["kind"],
                    score=obj["provenance"].get("score"),
                )
                examples.append(
                    LabeledExample(
                        company_id=str(obj["company_id"]),
                        embedding=np.asarray(obj["embedding"], dtype=np.float32),
                        label=str(obj["label"]),
                        provenance=provenance,
                    )
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise ParseError(f"{path}:{lineno}: bad dataset line ({exc})") from exc
    if not examples:
        raise EmptyDataset(f"{path}: dataset file has no examples")
    class_labels = sorted({ex.label for ex in examples})
    return LabeledDataset(examples, class_labels, _make_report(examples))


def save_report(report: LabelReport, path: str | Path, extra: dict | None = None) -> None:
    """Write the audit report; ``extra`` carries run provenance such as the
    embedding fingerprint that the train step later stamps into the model."""
    obj = report.to_json_obj()
    if extra:
        obj.update(extra)
    with Path(path).open("w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=False)
        fh.write("\n")


def load_report(path: str | Path) -> dict:
    with Path(path).open(encoding="utf-8") as fh:
        return json.load(fh)
