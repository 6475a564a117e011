"""Targeted product/service ranking inside predicted industries.

Stage two of inference is unsupervised: within each of the top-3 predicted
industries, that industry's product/service codes are ranked by cosine
similarity between the company vector and the code-description vectors,
and the top 2 are reported with their raw scores.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .classifier import MlpModel, TopKPrediction, check_fingerprint, predict_topk
from .embedding import EmbeddingVector, cosine_similarity, embed_text
from .errors import ParseError, UnknownIndustry
from .taxonomy import ProductServiceTaxonomy

PsIndex = dict[str, list[tuple[str, EmbeddingVector]]]


@dataclass(frozen=True)
class PsPrediction:
    industry_id: str
    ranked: list[tuple[str, float]]  # (ps code id, similarity), descending

    def ids(self) -> list[str]:
        return [cid for cid, _ in self.ranked]


@dataclass(frozen=True)
class Prediction:
    company_id: str
    industries: TopKPrediction
    ps: list[PsPrediction]  # aligned with industries.ranked


def embed_ps_taxonomy(taxonomy: ProductServiceTaxonomy, provider) -> PsIndex:
    """One vector per code description, grouped by industry in file order."""
    vectors = provider.embed([code.description for code in taxonomy.codes])
    index: PsIndex = {i: [] for i in taxonomy.industry_ids()}
    for code, vec in zip(taxonomy.codes, vectors):
        index[code.industry_id].append((code.id, vec))
    return index


def predict_ps_codes(
    company_vec: EmbeddingVector, industry_id: str, index: PsIndex, top_n: int = 2
) -> PsPrediction:
    """Exhaustive cosine ranking of one industry's codes, truncated to top_n.

    Ties break toward the ascending code id.
    """
    if industry_id not in index:
        raise UnknownIndustry(f"no product/service codes indexed for {industry_id!r}")
    scored = [
        (code_id, cosine_similarity(company_vec, vec))
        for code_id, vec in index[industry_id]
    ]
    scored.sort(key=lambda item: (-item[1], item[0]))
    return PsPrediction(industry_id=industry_id, ranked=scored[: max(0, top_n)])


def classify_company(
    description: str,
    model: MlpModel,
    ps_index: PsIndex,
    provider,
    *,
    company_id: str = "",
    k: int = 3,
    top_n: int = 2,
    strict_fingerprint: bool = True,
) -> Prediction:
    """Full two-stage inference for one description.

    Embeds the description once, takes the top-k industries from the
    classifier, then ranks each predicted industry's codes; at the default
    k=3, top_n=2 a company receives at most 6 product/service assignments.
    """
    check_fingerprint(model, provider, strict=strict_fingerprint)
    vec = embed_text(provider, description)
    industries = predict_topk(model, vec, k)
    ps = [
        predict_ps_codes(vec, industry_id, ps_index, top_n=top_n)
        for industry_id in industries.ids()
    ]
    return Prediction(company_id=company_id, industries=industries, ps=ps)


def prediction_to_json_obj(prediction: Prediction) -> dict:
    return {
        "company_id": prediction.company_id,
        "industries": [
            {"id": cid, "prob": prob} for cid, prob in prediction.industries.ranked
        ],
        "products": [
            {
                "industry_id": ps.industry_id,
                "codes": [{"id": cid, "score": score} for cid, score in ps.ranked],
            }
            for ps in prediction.ps
        ],
    }


def save_predictions(predictions: Sequence[Prediction], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for prediction in predictions:
            fh.write(json.dumps(prediction_to_json_obj(prediction), separators=(",", ":")))
            fh.write("\n")


def load_predictions(path: str | Path) -> list[Prediction]:
    path = Path(path)
    out: list[Prediction] = []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                industries = TopKPrediction(
                    ranked=[(str(e["id"]), float(e["prob"])) for e in obj["industries"]]
                )
                ps = [
                    PsPrediction(
                        industry_id=str(p["industry_id"]),
                        ranked=[(str(c["id"]), float(c["score"])) for c in p["codes"]],
                    )
                    for p in obj["products"]
                ]
                out.append(
                    Prediction(
                        company_id=str(obj["company_id"]), industries=industries, ps=ps
                    )
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise ParseError(f"{path}:{lineno}: bad prediction line ({exc})") from exc
    return out
