"""Deterministic synthetic corpora for running the pipeline without data.

Every industry owns a disjoint vocabulary theme and every product/service
code owns a disjoint sub-vocabulary, all drawn from a seeded syllable
generator. Company descriptions are templated from their gold industry's
theme run plus their gold code's words, so at noise 0 the gold industry is
recoverable by hashed-embedding similarity alone and the corpus is
solvable by construction. Generation is single-threaded and byte-exact
under the seed.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .taxonomy import (
    CompanyRecord,
    IndustryCode,
    IndustryTaxonomy,
    ProductServiceCode,
    ProductServiceTaxonomy,
    SourceCodeTriple,
    SourceMapping,
    save_companies,
    save_industry_taxonomy,
    save_ps_taxonomy,
    save_source_mapping,
)

_ONSETS = [
    "b", "br", "cl", "d", "dr", "f", "fl", "g", "gr", "k", "kr", "l", "m",
    "n", "p", "pl", "pr", "r", "s", "sk", "sl", "st", "t", "tr", "v", "z",
]
_VOWELS = ["a", "e", "i", "o", "u", "ai", "ea", "ia", "io", "oa", "ou"]
_FINALS = ["", "l", "m", "n", "r", "s", "t", "x", "nd", "st"]

# words the description templates use; the generator must never emit them
_RESERVED = frozenset(
    "providers of services solutions specialists in for businesses and".split()
)

THEME_WORDS = 8  # per industry
PS_WORDS = 4  # per product/service code
_THEME_RUN = 6  # contiguous theme words quoted in a company description
_PS_RUN = 3  # contiguous code words quoted in a company description


@dataclass(frozen=True)
class CorpusSpec:
    n_industries: int = 12
    ps_per_industry: tuple[int, int] = (8, 15)
    n_companies: int = 2000
    mapped_fraction: float = 0.75
    noise: float = 0.0
    seed: int = 7

    def __post_init__(self):
        if self.n_industries <= 0 or self.n_companies <= 0:
            raise ValueError("n_industries and n_companies must be positive")
        lo, hi = self.ps_per_industry
        if lo < 1 or hi < lo:
            raise ValueError(f"bad ps_per_industry range {self.ps_per_industry}")
        if not 0.0 <= self.mapped_fraction <= 1.0:
            raise ValueError("mapped_fraction must be in [0, 1]")
        if not 0.0 <= self.noise <= 1.0:
            raise ValueError("noise must be in [0, 1]")


@dataclass
class GeneratedCorpus:
    industries: IndustryTaxonomy
    ps_taxonomy: ProductServiceTaxonomy
    mapping: SourceMapping
    companies: list[CompanyRecord]


def _new_word(rng: np.random.Generator, used: set[str]) -> str:
    while True:
        parts = []
        for _ in range(2 + int(rng.integers(0, 2))):
            parts.append(_ONSETS[rng.integers(len(_ONSETS))])
            parts.append(_VOWELS[rng.integers(len(_VOWELS))])
        parts.append(_FINALS[rng.integers(len(_FINALS))])
        word = "".join(parts)
        if word not in used and word not in _RESERVED:
            used.add(word)
            return word


def _words(rng: np.random.Generator, used: set[str], n: int) -> list[str]:
    return [_new_word(rng, used) for _ in range(n)]


def generate_corpus(spec: CorpusSpec) -> GeneratedCorpus:
    """Build taxonomies, a partial source mapping, and gold-labeled companies.

    The mapping covers round(mapped_fraction * n_industries) industries;
    companies of covered industries carry a source triple that resolves to
    their gold industry, companies of uncovered industries carry none, so
    the fraction of companies with triples tracks mapped_fraction.
    """
    rng = np.random.default_rng(spec.seed)
    used: set[str] = set()

    themes = [_words(rng, used, THEME_WORDS) for _ in range(spec.n_industries)]
    industries = IndustryTaxonomy(
        [
            IndustryCode(
                id=f"IND{i + 1:02d}",
                name=f"{theme[0].title()} {theme[1].title()}",
                description=f"Providers of {' '.join(theme)} services",
            )
            for i, theme in enumerate(themes)
        ]
    )

    lo, hi = spec.ps_per_industry
    ps_codes = []
    ps_words: dict[str, list[str]] = {}
    for i, industry in enumerate(industries):
        n_codes = int(rng.integers(lo, hi + 1))
        for j in range(n_codes):
            words = _words(rng, used, PS_WORDS)
            code_id = f"PS{i + 1:02d}{j + 1:02d}"
            ps_words[code_id] = words
            ps_codes.append(
                ProductServiceCode(
                    id=code_id,
                    industry_id=industry.id,
                    name=f"{words[0].title()} {words[1].title()}",
                    description=(
                        f"Specialists in {' '.join(words)} for "
                        f"{themes[i][0]} {themes[i][1]} businesses"
                    ),
                )
            )
    ps_taxonomy = ProductServiceTaxonomy(ps_codes, industries)

    n_covered = int(round(spec.mapped_fraction * spec.n_industries))
    covered_ids = industries.ids()[:n_covered]
    entries = []
    triples_by_industry: dict[str, list[SourceCodeTriple]] = {}
    for i, industry_id in enumerate(covered_ids):
        triples = [
            SourceCodeTriple(f"S{i // 4 + 1:02d}", f"G{i // 2 + 1:02d}", f"C{i + 1:03d}{suffix}")
            for suffix in ("a", "b")
        ]
        triples_by_industry[industry_id] = triples
        entries.extend((t, industry_id) for t in triples)
    mapping = SourceMapping(entries, industries)

    name_pool = _words(rng, used, 200)
    distractors = _words(rng, used, 200)

    companies = []
    industry_list = list(industries)
    for c in range(spec.n_companies):
        idx = c % spec.n_industries
        industry = industry_list[idx]
        theme = themes[idx]
        children = ps_taxonomy.children(industry.id)
        code = children[rng.integers(len(children))]

        t_start = int(rng.integers(0, THEME_WORDS - _THEME_RUN + 1))
        theme_run = theme[t_start : t_start + _THEME_RUN]
        p_start = int(rng.integers(0, PS_WORDS - _PS_RUN + 1))
        ps_run = ps_words[code.id][p_start : p_start + _PS_RUN]

        content = theme_run + ps_run
        if spec.noise > 0.0:
            content = [
                distractors[rng.integers(len(distractors))]
                if rng.random() < spec.noise
                else word
                for word in content
            ]
        run = " ".join(content)

        template = int(rng.integers(0, 3))
        if template == 0:
            description = f"Providers of {run} services"
        elif template == 1:
            n1 = name_pool[rng.integers(len(name_pool))]
            n2 = name_pool[rng.integers(len(name_pool))]
            description = f"{n1} {n2} providers of {run} solutions"
        else:
            description = f"Specialists in {run} services"

        triple = None
        if industry.id in triples_by_industry:
            options = triples_by_industry[industry.id]
            triple = options[rng.integers(len(options))]

        companies.append(
            CompanyRecord(
                id=f"CMP{c + 1:05d}",
                description=description,
                source_codes=triple,
                gold_industries=(industry.id,),
                gold_ps_codes=(code.id,),
            )
        )

    return GeneratedCorpus(
        industries=industries,
        ps_taxonomy=ps_taxonomy,
        mapping=mapping,
        companies=companies,
    )


def write_corpus(corpus: GeneratedCorpus, outdir: str | Path) -> dict[str, Path]:
    """Write the four corpus files into ``outdir`` and return their paths."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths = {
        "industries": outdir / "industries.csv",
        "ps_codes": outdir / "ps_codes.csv",
        "mapping": outdir / "mapping.csv",
        "companies": outdir / "companies.jsonl",
    }
    save_industry_taxonomy(corpus.industries, paths["industries"])
    save_ps_taxonomy(corpus.ps_taxonomy, paths["ps_codes"])
    save_source_mapping(corpus.mapping, paths["mapping"])
    save_companies(corpus.companies, paths["companies"])
    return paths
