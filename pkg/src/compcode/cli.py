"""Command-line pipeline orchestration.

Five subcommands cover the whole flow: gen-corpus, build-dataset, train,
predict, evaluate. Every flag can also be supplied through a TOML config
file (flat keys named like the flags, dashes as underscores); precedence
is CLI flag > config file > built-in default. Logs go to stderr, data to
files or stdout, so commands compose in shell pipelines.

Exit codes: 0 success, 2 bad usage, 3 input error, 4 fingerprint or model
version error, 5 remote provider error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from .classifier import (
    MlpHyperparams,
    check_fingerprint,
    load_model,
    save_model,
    train_mlp,
)
from .corpus import CorpusSpec, generate_corpus, write_corpus
from .embedding import ProviderConfig, make_provider
from .errors import CompcodeError, InputError, ParseError
from .evaluation import evaluate, gold_by_id, save_report as save_eval_report
from .pscode import classify_company, embed_ps_taxonomy, load_predictions, save_predictions
from .taxonomy import (
    load_companies,
    load_industry_taxonomy,
    load_ps_taxonomy,
    load_source_mapping,
)
from .weaklabel import (
    WeakLabelConfig,
    build_labeled_dataset,
    load_dataset,
    load_report as load_label_report,
    save_dataset,
    save_report as save_label_report,
    split_dataset,
)

log = logging.getLogger("compcode")


def _load_config(path: str) -> dict:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except FileNotFoundError as exc:
        raise InputError(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    flat: dict = {}
    for key, value in data.items():
        if isinstance(value, dict):  # sections are cosmetic grouping only
            for inner_key, inner_value in value.items():
                flat[inner_key.replace("-", "_")] = inner_value
        else:
            flat[key.replace("-", "_")] = value
    return flat


def _extract_config(argv: list[str]) -> dict:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    ns, _ = pre.parse_known_args(argv)
    return _load_config(ns.config) if ns.config else {}


def _opt(args, config: dict, name: str, default):
    """Resolve one setting: CLI flag beats config file beats default."""
    value = getattr(args, name, None)
    if value is None:
        value = config.get(name)
    return default if value is None else value


def _req(args, config: dict, name: str):
    value = _opt(args, config, name, None)
    if value is None:
        raise ValueError(f"missing required flag --{name.replace('_', '-')}")
    return value


def _hidden_dims(value) -> tuple[int, ...]:
    if isinstance(value, (list, tuple)):
        return tuple(int(v) for v in value)
    return tuple(int(part) for part in str(value).split(",") if part.strip())


def _provider_from(args, config: dict):
    cfg = ProviderConfig(
        kind=_opt(args, config, "provider", "hashed"),
        dim=_opt(args, config, "dim", None),
        seed=int(_opt(args, config, "embed_seed", 0)),
        endpoint=_opt(args, config, "endpoint", None),
    )
    return make_provider(cfg, _opt(args, config, "cache", None))


def _add_provider_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("embedding provider")
    group.add_argument("--provider", choices=["hashed", "remote"], help="default: hashed")
    group.add_argument("--dim", type=int, help="embedding dimension (default: 256 hashed, advertised for remote)")
    group.add_argument("--embed-seed", type=int, dest="embed_seed", help="hash seed of the hashed provider (default: 0)")
    group.add_argument("--endpoint", help="base URL of a remote embedding service")
    group.add_argument("--cache", help="sqlite file caching embeddings across runs")


def cmd_gen_corpus(args, config: dict) -> int:
    spec = CorpusSpec(
        n_industries=int(_opt(args, config, "n_industries", 12)),
        ps_per_industry=(
            int(_opt(args, config, "ps_min", 8)),
            int(_opt(args, config, "ps_max", 15)),
        ),
        n_companies=int(_opt(args, config, "n_companies", 2000)),
        mapped_fraction=float(_opt(args, config, "mapped_fraction", 0.75)),
        noise=float(_opt(args, config, "noise", 0.0)),
        seed=int(_opt(args, config, "seed", 7)),
    )
    corpus = generate_corpus(spec)
    paths = write_corpus(corpus, _req(args, config, "outdir"))
    log.info(
        "wrote %d industries, %d ps codes, %d mapping rows, %d companies under %s",
        len(corpus.industries),
        len(corpus.ps_taxonomy),
        len(corpus.mapping),
        len(corpus.companies),
        Path(_req(args, config, "outdir")),
    )
    for name, path in paths.items():
        log.info("  %s: %s", name, path)
    return 0


def cmd_build_dataset(args, config: dict) -> int:
    candidates = _opt(args, config, "candidates", "uncovered")
    if candidates not in ("uncovered", "all"):
        raise ValueError(f"--candidates must be 'uncovered' or 'all', got {candidates!r}")
    wl = WeakLabelConfig(
        thresh=float(_opt(args, config, "thresh", 0.5)),
        uncovered_only=candidates == "uncovered",
        split_ratio=float(_opt(args, config, "split_ratio", 0.8)),
        seed=int(_opt(args, config, "seed", 0)),
    )
    provider = _provider_from(args, config)  # usage errors before any file I/O
    industries = load_industry_taxonomy(_req(args, config, "industries"))
    mapping = load_source_mapping(_req(args, config, "mapping"), industries)
    companies = load_companies(_req(args, config, "companies"))

    dataset = build_labeled_dataset(companies, mapping, industries, provider, wl)
    train, test = split_dataset(dataset, wl.split_ratio, wl.seed)

    out_train = _opt(args, config, "out_train", "train.jsonl")
    out_test = _opt(args, config, "out_test", "test.jsonl")
    report_path = _opt(args, config, "report", "label_report.json")
    save_dataset(train, out_train)
    save_dataset(test, out_test)
    save_label_report(
        dataset.report,
        report_path,
        extra={
            "provider_fingerprint": provider.fingerprint,
            "class_labels": list(dataset.class_labels),
            "n_examples": len(dataset),
            "n_train": len(train),
            "n_test": len(test),
            "thresh": wl.thresh,
            "uncovered_only": wl.uncovered_only,
            "split_ratio": wl.split_ratio,
            "seed": wl.seed,
        },
    )
    rep = dataset.report
    log.info(
        "labeled %d/%d companies (mapped %d, similarity %d, dropped %d) over %d classes",
        len(dataset),
        len(companies),
        rep.mapped,
        rep.similarity,
        rep.dropped,
        len(dataset.class_labels),
    )
    log.info("train %d -> %s, test %d -> %s, report -> %s", len(train), out_train, len(test), out_test, report_path)
    return 0


def cmd_train(args, config: dict) -> int:
    train = load_dataset(_req(args, config, "train"))
    valid = load_dataset(_req(args, config, "valid"))
    label_report = load_label_report(_req(args, config, "report"))
    fingerprint = label_report.get("provider_fingerprint", "")
    hp = MlpHyperparams(
        hidden_dims=_hidden_dims(_opt(args, config, "hidden_dims", "256")),
        learning_rate=float(_opt(args, config, "lr", 0.05)),
        epochs=int(_opt(args, config, "epochs", 100)),
        batch_size=int(_opt(args, config, "batch_size", 32)),
        l2=float(_opt(args, config, "l2", 1e-4)),
        seed=int(_opt(args, config, "seed", 0)),
        early_stop_patience=int(_opt(args, config, "patience", 10)),
    )
    model, history = train_mlp(train, valid, hp, provider_fingerprint=fingerprint)
    out = _opt(args, config, "out", "model.json")
    save_model(model, out)
    history_path = _opt(args, config, "history", None)
    if history_path is not None:
        with open(history_path, "w", encoding="utf-8") as fh:
            json.dump(history.to_json_obj(), fh, indent=2)
            fh.write("\n")
    log.info(
        "trained on %d examples, %d classes; best epoch %d (val acc %.4f); model -> %s",
        len(train),
        model.n_classes,
        history.best_epoch,
        history.val_accuracy[history.best_epoch - 1],
        out,
    )
    return 0


def cmd_predict(args, config: dict) -> int:
    provider = _provider_from(args, config)  # usage errors before any file I/O
    industries = load_industry_taxonomy(_req(args, config, "industries"))
    ps_taxonomy = load_ps_taxonomy(_req(args, config, "ps_codes"), industries)
    model = load_model(_req(args, config, "model"))
    companies = load_companies(_req(args, config, "companies"))
    check_fingerprint(model, provider)

    k = int(_opt(args, config, "k", 3))
    top_n = int(_opt(args, config, "top_n", 2))
    ps_index = embed_ps_taxonomy(ps_taxonomy, provider)
    predictions = [
        classify_company(
            company.description,
            model,
            ps_index,
            provider,
            company_id=company.id,
            k=k,
            top_n=top_n,
        )
        for company in companies
    ]
    out = _opt(args, config, "out", "predictions.jsonl")
    save_predictions(predictions, out)
    log.info("predicted %d companies (k=%d, top_n=%d) -> %s", len(predictions), k, top_n, out)
    return 0


def _restrict_ids(path: str) -> set[str]:
    ids = set()
    with open(path, "r", encoding="utf-8") as fh:
        for n, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                ids.add(json.loads(line)["company_id"])
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ParseError(f"{path}:{n}: expected a dataset line with company_id") from exc
    return ids


def cmd_evaluate(args, config: dict) -> int:
    predictions = load_predictions(_req(args, config, "predictions"))
    companies = load_companies(_req(args, config, "companies"))
    restrict_to = _opt(args, config, "restrict_to", None)
    if restrict_to is not None:
        keep = _restrict_ids(restrict_to)
        predictions = [p for p in predictions if p.company_id in keep]
    report = evaluate(
        predictions,
        gold_by_id(companies),
        k=int(_opt(args, config, "k", 3)),
        mass=float(_opt(args, config, "span_mass", 0.9)),
    )
    report_path = _opt(args, config, "report", "eval_report.json")
    save_eval_report(report, report_path)
    confusion_csv = _opt(args, config, "confusion_csv", None)
    if confusion_csv is not None:
        report.confusion.to_csv(confusion_csv)
    print(report.format_table())
    log.info("evaluated %d predictions; report -> %s", report.n_samples, report_path)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="compcode",
        description="Two-stage industry and product/service code prediction pipeline.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-corpus", help="generate a synthetic taxonomy + company corpus")
    p.add_argument("--config")
    p.add_argument("--outdir", help="directory for the four corpus files")
    p.add_argument("--n-industries", type=int, dest="n_industries", help="default: 12")
    p.add_argument("--ps-min", type=int, dest="ps_min", help="min ps codes per industry (default: 8)")
    p.add_argument("--ps-max", type=int, dest="ps_max", help="max ps codes per industry (default: 15)")
    p.add_argument("--n-companies", type=int, dest="n_companies", help="default: 2000")
    p.add_argument("--mapped-fraction", type=float, dest="mapped_fraction", help="fraction of industries covered by the source mapping (default: 0.75)")
    p.add_argument("--noise", type=float, help="word substitution probability (default: 0)")
    p.add_argument("--seed", type=int, help="default: 7")
    p.set_defaults(func=cmd_gen_corpus)

    p = sub.add_parser("build-dataset", help="weak-label companies and write train/test splits")
    p.add_argument("--config")
    p.add_argument("--industries", help="industry taxonomy CSV")
    p.add_argument("--mapping", help="source mapping CSV")
    p.add_argument("--companies", help="companies JSONL")
    p.add_argument("--out-train", dest="out_train", help="default: train.jsonl")
    p.add_argument("--out-test", dest="out_test", help="default: test.jsonl")
    p.add_argument("--report", help="label report JSON (default: label_report.json)")
    p.add_argument("--thresh", type=float, help="similarity labeling threshold (default: 0.5)")
    p.add_argument("--candidates", choices=["uncovered", "all"], help="industries eligible for similarity labels (default: uncovered)")
    p.add_argument("--split-ratio", type=float, dest="split_ratio", help="train fraction (default: 0.8)")
    p.add_argument("--seed", type=int, help="split seed (default: 0)")
    _add_provider_flags(p)
    p.set_defaults(func=cmd_build_dataset)

    p = sub.add_parser("train", help="train the industry classifier")
    p.add_argument("--config")
    p.add_argument("--train", help="training dataset JSONL")
    p.add_argument("--valid", help="validation dataset JSONL")
    p.add_argument("--report", help="label report JSON from build-dataset (carries the provider fingerprint)")
    p.add_argument("--out", help="model JSON (default: model.json)")
    p.add_argument("--history", help="optional training history JSON")
    p.add_argument("--hidden-dims", dest="hidden_dims", help="comma-separated hidden sizes (default: 256)")
    p.add_argument("--lr", type=float, help="default: 0.05")
    p.add_argument("--epochs", type=int, help="default: 100")
    p.add_argument("--batch-size", type=int, dest="batch_size", help="default: 32")
    p.add_argument("--l2", type=float, help="default: 1e-4")
    p.add_argument("--patience", type=int, help="early stop patience, 0 disables (default: 10)")
    p.add_argument("--seed", type=int, help="default: 0")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="two-stage prediction over a company file")
    p.add_argument("--config")
    p.add_argument("--model", help="model JSON from train")
    p.add_argument("--industries", help="industry taxonomy CSV")
    p.add_argument("--ps-codes", dest="ps_codes", help="product/service taxonomy CSV")
    p.add_argument("--companies", help="companies JSONL")
    p.add_argument("--out", help="predictions JSONL (default: predictions.jsonl)")
    p.add_argument("--k", type=int, help="industries per company (default: 3)")
    p.add_argument("--top-n", type=int, dest="top_n", help="ps codes per industry (default: 2)")
    _add_provider_flags(p)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="score predictions against gold labels")
    p.add_argument("--config")
    p.add_argument("--predictions", help="predictions JSONL")
    p.add_argument("--companies", help="companies JSONL with gold labels")
    p.add_argument("--report", help="eval report JSON (default: eval_report.json)")
    p.add_argument("--confusion-csv", dest="confusion_csv", help="optional confusion matrix CSV")
    p.add_argument("--restrict-to", dest="restrict_to", help="dataset JSONL; score only companies listed in it")
    p.add_argument("--k", type=int, help="top-k for industry accuracy (default: 3)")
    p.add_argument("--span-mass", type=float, dest="span_mass", help="row mass the span must cover (default: 0.9)")
    p.set_defaults(func=cmd_evaluate)

    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(levelname)s %(message)s")
    try:
        config = _extract_config(argv)
        args = _build_parser().parse_args(argv)
        return args.func(args, config)
    except CompcodeError as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return exc.exit_code
    except ValueError as exc:
        log.error("%s", exc)
        return 2
    except OSError as exc:
        log.error("%s", exc)
        return 3


if __name__ == "__main__":
    raise SystemExit(main())
