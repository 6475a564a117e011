"""Weak labeling: mapping precedence, similarity thresholding, splits.

The 6-company fixture is fully hand-traceable: with unit-vector industry
embeddings every cosine equals a coordinate of the company vector, so the
expected label and score of each company can be read straight off the
fixture table (worked out below by hand and in comments).
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from compcode.errors import DimensionMismatch, EmptyDataset
from compcode.taxonomy import SourceCodeTriple
from compcode.weaklabel import (
    PROVENANCE_MAPPING,
    PROVENANCE_SIMILARITY,
    LabeledDataset,
    LabeledExample,
    Provenance,
    WeakLabelConfig,
    build_labeled_dataset,
    label_by_mapping,
    label_by_similarity,
    load_dataset,
    load_report,
    save_dataset,
    save_report,
    split_dataset,
)

from helpers import StubProvider, make_company

# fixture geometry, dim 3: IND_A=[0,0,1] (covered by the mapping),
# IND_B=[1,0,0], IND_C=[0,1,0] (uncovered, similarity candidates).
# Company vectors are unit length, so cosine(company, IND_B) = x and
# cosine(company, IND_C) = y up to float32 rounding; the scores 0.75,
# 0.95, 0.25 sit between the 0.1-step threshold grid points on purpose.
#   c1..c3 carry mapped triples                   -> mapping: IND_A
#   c4 = [0.75, 0.661, 0]    best B 0.75 >= 0.5   -> similarity: IND_B
#   c5 = [0.312, 0.95, 0]    best C 0.95 >= 0.5   -> similarity: IND_C
#   c6 = [0.25, 0.15, 0.957] best B 0.25 <  0.5   -> dropped (its 0.957
#        similarity to IND_A does not count: IND_A is mapping-covered)
FIXTURE_TABLE = {
    "alpha industry": [0.0, 0.0, 1.0],
    "beta industry": [1.0, 0.0, 0.0],
    "gamma industry": [0.0, 1.0, 0.0],
    "c1 text": [0.0, 0.1, 0.9],
    "c2 text": [0.9, 0.1, 0.0],
    "c3 text": [0.1, 0.9, 0.0],
    "c4 text": [0.75, math.sqrt(1 - 0.75**2), 0.0],
    "c5 text": [math.sqrt(1 - 0.95**2), 0.95, 0.0],
    "c6 text": [0.25, 0.15, math.sqrt(1 - 0.25**2 - 0.15**2)],
}


@pytest.fixture
def fixture_provider():
    return StubProvider(FIXTURE_TABLE, dim=3)


@pytest.fixture
def six_companies():
    return [
        make_company("c1", "c1 text", SourceCodeTriple("S1", "G1", "C1")),
        make_company("c2", "c2 text", SourceCodeTriple("S1", "G1", "C2")),
        make_company("c3", "c3 text", SourceCodeTriple("S1", "G2", "C3")),
        make_company("c4", "c4 text"),
        make_company("c5", "c5 text"),
        make_company("c6", "c6 text"),
    ]


def test_label_by_mapping_paths(abc_mapping):
    hit = make_company("x", "d", SourceCodeTriple("S1", "G1", "C1"))
    label, prov = label_by_mapping(hit, abc_mapping)
    assert (label, prov.kind) == ("IND_A", PROVENANCE_MAPPING)
    assert prov.score is None

    assert label_by_mapping(make_company("y", "d"), abc_mapping) is None
    miss = make_company("z", "d", SourceCodeTriple("S9", "G9", "C9"))
    assert label_by_mapping(miss, abc_mapping) is None


def test_label_by_similarity_self_match():
    v = np.array([0.0, 1.0], dtype=np.float32)
    out = label_by_similarity(v, [("IND_B", v.copy())], thresh=0.9)
    assert out is not None
    label, prov = out
    assert label == "IND_B"
    assert prov.kind == PROVENANCE_SIMILARITY
    assert prov.score == pytest.approx(1.0, abs=1e-6)


def test_label_by_similarity_direct_arithmetic():
    # cos([0.6, 0.8], [1,0]) = 0.6 and cos([0.6, 0.8], [0,1]) = 0.8
    candidates = [
        ("IND_A", np.array([1.0, 0.0], dtype=np.float32)),
        ("IND_B", np.array([0.0, 1.0], dtype=np.float32)),
    ]
    label, prov = label_by_similarity(np.array([0.6, 0.8]), candidates, thresh=0.5)
    assert label == "IND_B"
    assert prov.score == pytest.approx(0.8, abs=1e-6)


def test_label_by_similarity_below_threshold():
    candidates = [("IND_A", np.array([1.0, 0.0]))]
    assert label_by_similarity(np.array([0.0, 1.0]), candidates, thresh=0.5) is None
    assert label_by_similarity(np.array([1.0, 0.0]), [], thresh=0.0) is None


def test_label_by_similarity_threshold_inclusive():
    candidates = [("IND_A", np.array([1.0, 0.0]))]
    out = label_by_similarity(np.array([1.0, 0.0]), candidates, thresh=1.0)
    assert out is not None and out[0] == "IND_A"


def test_label_by_similarity_tie_breaks_ascending():
    v = np.array([1.0, 0.0])
    candidates = [("IND_Z", v.copy()), ("IND_A", v.copy()), ("IND_M", v.copy())]
    label, _ = label_by_similarity(v, candidates, thresh=0.5)
    assert label == "IND_A"


def test_label_by_similarity_dim_mismatch():
    with pytest.raises(DimensionMismatch):
        label_by_similarity(np.zeros(3), [("IND_A", np.zeros(4))], thresh=0.1)


def test_fixture_counts(abc_industries, abc_mapping, six_companies, fixture_provider):
    dataset = build_labeled_dataset(
        six_companies, abc_mapping, abc_industries, fixture_provider, WeakLabelConfig()
    )
    report = dataset.report
    assert (report.mapped, report.similarity, report.dropped) == (3, 2, 1)
    by_id = {ex.company_id: ex for ex in dataset.examples}
    assert set(by_id) == {"c1", "c2", "c3", "c4", "c5"}
    assert all(by_id[c].provenance.kind == PROVENANCE_MAPPING for c in ("c1", "c2", "c3"))
    assert all(by_id[c].label == "IND_A" for c in ("c1", "c2", "c3"))
    assert by_id["c4"].label == "IND_B"
    assert by_id["c4"].provenance.score == pytest.approx(0.75, abs=1e-6)
    assert by_id["c5"].label == "IND_C"
    assert by_id["c5"].provenance.score == pytest.approx(0.95, abs=1e-6)
    assert dataset.class_labels == ["IND_A", "IND_B", "IND_C"]
    assert report.per_class == {"IND_A": 3, "IND_B": 1, "IND_C": 1}


def test_mapping_wins_unconditionally(abc_industries, abc_mapping, fixture_provider):
    # c2's text is closest to IND_B's embedding (cos 0.99 to B), yet its
    # triple maps to IND_A; the similarity route must never be consulted.
    company = make_company("c2", "c2 text", SourceCodeTriple("S1", "G1", "C2"))
    dataset = build_labeled_dataset(
        [company], abc_mapping, abc_industries, fixture_provider, WeakLabelConfig()
    )
    assert dataset.examples[0].label == "IND_A"
    assert dataset.examples[0].provenance.kind == PROVENANCE_MAPPING


def test_all_mapped_companies(abc_industries, abc_mapping, fixture_provider):
    companies = [
        make_company(f"m{i}", "c1 text", SourceCodeTriple("S1", "G1", "C1"))
        for i in range(10)
    ]
    dataset = build_labeled_dataset(
        companies, abc_mapping, abc_industries, fixture_provider, WeakLabelConfig()
    )
    assert len(dataset) == 10
    assert dataset.report.mapped == 10
    assert dataset.report.similarity == 0
    assert dataset.report.dropped == 0


def test_uncovered_only_false_reclaims_c6(
    abc_industries, abc_mapping, six_companies, fixture_provider
):
    config = WeakLabelConfig(uncovered_only=False)
    dataset = build_labeled_dataset(
        six_companies, abc_mapping, abc_industries, fixture_provider, config
    )
    by_id = {ex.company_id: ex for ex in dataset.examples}
    assert by_id["c6"].label == "IND_A"  # 0.957 similarity, now a candidate
    assert dataset.report.dropped == 0


def test_empty_dataset_raises(abc_industries, abc_mapping, fixture_provider):
    # no triple and similarity capped below any threshold hit
    companies = [make_company("c6", "c6 text")]
    with pytest.raises(EmptyDataset):
        build_labeled_dataset(
            companies, abc_mapping, abc_industries, fixture_provider, WeakLabelConfig(thresh=0.99)
        )


def test_threshold_monotonicity(abc_industries, abc_mapping, six_companies, fixture_provider):
    # best uncovered scores in the fixture: c4 0.75, c5 0.95, c6 0.25, so
    # the similarity count steps 3 -> 2 -> 1 at thresholds 0.3 and 0.8.
    counts = []
    for thresh in [round(0.1 * i, 1) for i in range(1, 10)]:
        dataset = build_labeled_dataset(
            six_companies,
            abc_mapping,
            abc_industries,
            fixture_provider,
            WeakLabelConfig(thresh=thresh),
        )
        counts.append(dataset.report.similarity)
    assert counts == [3, 3, 2, 2, 2, 2, 2, 1, 1]
    assert all(a >= b for a, b in zip(counts, counts[1:]))


def test_similarity_scores_respect_threshold(
    abc_industries, abc_mapping, six_companies, fixture_provider
):
    dataset = build_labeled_dataset(
        six_companies, abc_mapping, abc_industries, fixture_provider, WeakLabelConfig(thresh=0.4)
    )
    for ex in dataset.examples:
        if ex.provenance.kind == PROVENANCE_SIMILARITY:
            assert ex.provenance.score >= 0.4


def test_config_validation():
    with pytest.raises(ValueError):
        WeakLabelConfig(thresh=1.5)
    with pytest.raises(ValueError):
        WeakLabelConfig(split_ratio=1.0)
    with pytest.raises(ValueError):
        WeakLabelConfig(split_ratio=0.0)


def _toy_dataset(class_sizes: dict[str, int]) -> LabeledDataset:
    examples = []
    for label, n in sorted(class_sizes.items()):
        for i in range(n):
            vec = np.array([len(examples), 1.0], dtype=np.float32)
            examples.append(
                LabeledExample(f"{label}-{i}", vec, label, Provenance(PROVENANCE_MAPPING))
            )
    from compcode.weaklabel import _make_report

    return LabeledDataset(examples, sorted(class_sizes), _make_report(examples))


def test_split_cardinality_and_determinism():
    dataset = _toy_dataset({"IND_A": 100})
    train1, test1 = split_dataset(dataset, 0.8, seed=1)
    train2, test2 = split_dataset(dataset, 0.8, seed=1)
    assert (len(train1), len(test1)) == (80, 20)
    ids = lambda ds: [ex.company_id for ex in ds.examples]
    assert ids(train1) == ids(train2)
    assert ids(test1) == ids(test2)


def test_split_singleton_goes_to_train():
    dataset = _toy_dataset({"IND_A": 1, "IND_B": 10})
    train, test = split_dataset(dataset, 0.8, seed=0)
    train_labels = [ex.label for ex in train.examples]
    assert train_labels.count("IND_A") == 1
    assert all(ex.label != "IND_A" for ex in test.examples)


def test_split_stratification_50_50():
    dataset = _toy_dataset({"IND_A": 50, "IND_B": 50})
    train, test = split_dataset(dataset, 0.8, seed=3)
    for label in ("IND_A", "IND_B"):
        assert sum(ex.label == label for ex in train.examples) == 40
        assert sum(ex.label == label for ex in test.examples) == 10


def test_split_partition_exact():
    dataset = _toy_dataset({"IND_A": 7, "IND_B": 13, "IND_C": 2})
    train, test = split_dataset(dataset, 0.7, seed=5)
    train_ids = {ex.company_id for ex in train.examples}
    test_ids = {ex.company_id for ex in test.examples}
    assert not train_ids & test_ids
    assert train_ids | test_ids == {ex.company_id for ex in dataset.examples}
    assert train.class_labels == dataset.class_labels
    assert test.class_labels == dataset.class_labels


def test_split_empty_dataset():
    dataset = _toy_dataset({"IND_A": 1})
    dataset.examples.clear()
    with pytest.raises(EmptyDataset):
        split_dataset(dataset, 0.5, seed=0)


@settings(max_examples=60, deadline=None)
@given(
    st.dictionaries(
        st.sampled_from(["IA", "IB", "IC", "ID"]),
        st.integers(1, 40),
        min_size=1,
    ),
    st.floats(0.05, 0.95),
    st.integers(0, 2**32 - 1),
)
def test_split_properties(class_sizes, ratio, seed):
    dataset = _toy_dataset(class_sizes)
    train, test = split_dataset(dataset, ratio, seed)
    assert len(train) + len(test) == len(dataset)
    train_counts = {}
    for ex in train.examples:
        train_counts[ex.label] = train_counts.get(ex.label, 0) + 1
    for label, n in class_sizes.items():
        expected = n if n == 1 else min(n, max(1, int(n * ratio + 0.5)))
        assert train_counts.get(label, 0) == expected
    # order within each half preserves dataset order
    pos = {ex.company_id: i for i, ex in enumerate(dataset.examples)}
    for half in (train, test):
        indices = [pos[ex.company_id] for ex in half.examples]
        assert indices == sorted(indices)


def test_dataset_jsonl_round_trip(tmp_path, abc_industries, abc_mapping, six_companies, fixture_provider):
    dataset = build_labeled_dataset(
        six_companies, abc_mapping, abc_industries, fixture_provider, WeakLabelConfig()
    )
    path = tmp_path / "dataset.jsonl"
    save_dataset(dataset, path)
    loaded = load_dataset(path)
    assert loaded.class_labels == dataset.class_labels
    assert len(loaded) == len(dataset)
    for a, b in zip(loaded.examples, dataset.examples):
        assert a.company_id == b.company_id
        assert a.label == b.label
        assert a.provenance.kind == b.provenance.kind
        if b.provenance.score is None:
            assert a.provenance.score is None
        else:
            assert a.provenance.score == pytest.approx(b.provenance.score, abs=1e-9)
        assert a.embedding.dtype == np.float32
        assert np.array_equal(a.embedding, b.embedding)


def test_dataset_line_schema(tmp_path, abc_industries, abc_mapping, six_companies, fixture_provider):
    import json

    dataset = build_labeled_dataset(
        six_companies, abc_mapping, abc_industries, fixture_provider, WeakLabelConfig()
    )
    path = tmp_path / "dataset.jsonl"
    save_dataset(dataset, path)
    lines = path.read_text(encoding="utf-8").splitlines()
    assert len(lines) == 5
    first = json.loads(lines[0])
    assert set(first) == {"company_id", "label", "provenance", "embedding"}
    assert first["provenance"]["kind"] in ("mapping", "similarity")
    mapped = [json.loads(l) for l in lines if json.loads(l)["provenance"]["kind"] == "mapping"]
    assert all("score" not in m["provenance"] for m in mapped)


def test_report_round_trip(tmp_path, abc_industries, abc_mapping, six_companies, fixture_provider):
    dataset = build_labeled_dataset(
        six_companies, abc_mapping, abc_industries, fixture_provider, WeakLabelConfig()
    )
    path = tmp_path / "report.json"
    save_report(dataset.report, path, extra={"provider_fingerprint": "stub:dim=3"})
    obj = load_report(path)
    assert obj["mapped"] == 3
    assert obj["similarity"] == 2
    assert obj["dropped"] == 1
    assert obj["per_class"] == {"IND_A": 3, "IND_B": 1, "IND_C": 1}
    assert obj["provider_fingerprint"] == "stub:dim=3"
