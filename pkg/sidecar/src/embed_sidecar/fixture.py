"""Build a miniature local encoder checkpoint for tests and demos.

Trains a byte-level BPE tokenizer on a small built-in corpus and saves a
tiny randomly initialized transformer encoder next to it.  The result
loads through the standard from_pretrained machinery with no network
access; its embeddings are deterministic and unit-norm after pooling but
carry no semantics, which is exactly enough to exercise the protocol and
the downstream pipeline.
"""

from __future__ import annotations

from pathlib import Path

_CORPUS = [
    "providers of accounting software for small businesses",
    "specialists in dental practice management tools",
    "cloud payroll and invoicing services for contractors",
    "manufacturers of industrial cooling equipment",
    "logistics and freight forwarding for retailers",
    "subscription analytics dashboards for ecommerce teams",
    "custom injection molding and tooling services",
    "managed security monitoring for regional banks",
    "telehealth scheduling platforms for rural clinics",
    "precision agriculture sensors and field mapping",
]


def build_tiny_encoder(outdir: str | Path, seed: int = 0, hidden_size: int = 32) -> Path:
    """Write tokenizer + model files into ``outdir`` and return it."""
    import torch
    from tokenizers import ByteLevelBPETokenizer
    from transformers import PreTrainedTokenizerFast, RobertaConfig, RobertaModel

    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)

    bpe = ByteLevelBPETokenizer()
    bpe.train_from_iterator(
        _CORPUS,
        vocab_size=600,
        min_frequency=1,
        special_tokens=["<s>", "<pad>", "</s>", "<unk>", "<mask>"],
    )
    tokenizer = PreTrainedTokenizerFast(
        tokenizer_object=bpe,
        model_max_length=128,
        bos_token="<s>",
        eos_token="</s>",
        unk_token="<unk>",
        pad_token="<pad>",
        mask_token="<mask>",
        cls_token="<s>",
        sep_token="</s>",
    )
    tokenizer.save_pretrained(outdir)

    config = RobertaConfig(
        vocab_size=bpe.get_vocab_size(),
        hidden_size=hidden_size,
        num_hidden_layers=2,
        num_attention_heads=2,
        intermediate_size=hidden_size * 2,
        max_position_embeddings=514,
        pad_token_id=1,
        bos_token_id=0,
        eos_token_id=2,
    )
    torch.manual_seed(seed)
    model = RobertaModel(config)
    model.save_pretrained(outdir)
    return outdir


def main(argv=None) -> int:
    import argparse

    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("outdir", help="directory for the checkpoint")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--hidden-size", type=int, dest="hidden_size", default=32)
    args = parser.parse_args(argv)
    path = build_tiny_encoder(args.outdir, seed=args.seed, hidden_size=args.hidden_size)
    print(path)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
