#!/usr/bin/env python3
"""End-to-end benchmark on the synthetic corpus.

Generates the default 12-industry / 2000-company corpus, weak-labels it,
trains the industry classifier, predicts both stages for every company,
and prints per-stage timings plus the evaluation table.  All stages run
in-process through the library API; artifacts land in --workdir so the
run can be inspected or re-scored afterwards.
"""

import argparse
import logging
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from compcode.classifier import MlpHyperparams, save_model, train_mlp
from compcode.corpus import CorpusSpec, generate_corpus, write_corpus
from compcode.embedding import HashedNgramProvider
from compcode.evaluation import evaluate, gold_by_id, save_report
from compcode.pscode import classify_company, embed_ps_taxonomy, save_predictions
from compcode.weaklabel import (
    WeakLabelConfig,
    build_labeled_dataset,
    save_dataset,
    split_dataset,
)

log = logging.getLogger("benchmark")


def parse_args(argv):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--workdir", default="benchmark_run", help="output directory")
    parser.add_argument("--n-companies", type=int, default=2000)
    parser.add_argument("--noise", type=float, default=0.0)
    parser.add_argument("--corpus-seed", type=int, default=7)
    parser.add_argument("--dim", type=int, default=256, help="hashed embedding dimension")
    parser.add_argument("--embed-seed", type=int, default=0)
    parser.add_argument("--epochs", type=int, default=100)
    parser.add_argument("--seed", type=int, default=0, help="split and training seed")
    return parser.parse_args(argv)


def main(argv=None):
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    args = parse_args(argv)
    workdir = Path(args.workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    timings = {}

    t0 = time.perf_counter()
    spec = CorpusSpec(
        n_companies=args.n_companies, noise=args.noise, seed=args.corpus_seed
    )
    corpus = generate_corpus(spec)
    write_corpus(corpus, workdir / "corpus")
    timings["generate"] = time.perf_counter() - t0
    log.info(
        "corpus: %d industries, %d ps codes, %d companies",
        len(corpus.industries), len(corpus.ps_taxonomy.codes), len(corpus.companies),
    )

    t0 = time.perf_counter()
    provider = HashedNgramProvider(dim=args.dim, seed=args.embed_seed)
    wl = WeakLabelConfig(seed=args.seed)
    dataset = build_labeled_dataset(
        corpus.companies, corpus.mapping, corpus.industries, provider, wl
    )
    train, test = split_dataset(dataset, wl.split_ratio, wl.seed)
    save_dataset(train, workdir / "train.jsonl")
    save_dataset(test, workdir / "test.jsonl")
    timings["label+split"] = time.perf_counter() - t0
    log.info(
        "labels: %d mapped, %d similarity, %d dropped -> %d train / %d test",
        dataset.report.mapped, dataset.report.similarity, dataset.report.dropped,
        len(train.examples), len(test.examples),
    )

    t0 = time.perf_counter()
    hp = MlpHyperparams(epochs=args.epochs, seed=args.seed)
    model, history = train_mlp(train, test, hp, provider_fingerprint=provider.fingerprint)
    save_model(model, workdir / "model.json")
    timings["train"] = time.perf_counter() - t0
    log.info(
        "training stopped at epoch %d, best val accuracy %.4f at epoch %d",
        history.stopped_epoch, max(history.val_accuracy), history.best_epoch,
    )

    t0 = time.perf_counter()
    ps_index = embed_ps_taxonomy(corpus.ps_taxonomy, provider)
    predictions = [
        classify_company(c.description, model, ps_index, provider, company_id=c.id)
        for c in corpus.companies
    ]
    save_predictions(predictions, workdir / "predictions.jsonl")
    timings["predict"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    report = evaluate(predictions, gold_by_id(corpus.companies))
    save_report(report, workdir / "eval_report.json")
    report.confusion.to_csv(workdir / "confusion.csv")
    timings["evaluate"] = time.perf_counter() - t0

    print(report.format_table())
    print()
    for stage, seconds in timings.items():
        print(f"{stage:<12}{seconds:8.2f} s")
    print(f"{'total':<12}{sum(timings.values()):8.2f} s")
    print(f"\nartifacts in {workdir}/")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
