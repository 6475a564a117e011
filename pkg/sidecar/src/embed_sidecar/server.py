"""FastAPI app implementing the embedding wire protocol.

POST /embed  {"texts": ["...", ...]}
         ->  {"model": "<name>", "dim": <int>, "vectors": [[<float>...], ...]}
GET  /health -> {"status": "ok", "model": "<name>", "dim": <int>}

Errors come back as {"error": "<message>"}: 400 for malformed requests,
413 when the batch or a single text is too large, 503 while no model is
loaded.  Texts longer than the tokenizer limit are truncated, so the
413 guard only trips on pathological payloads.

Pooling is the one substantive choice here: the token vectors of the
last hidden state are averaged under the attention mask (padding
excluded), then L2-normalized, so every served vector has unit norm.
"""

from __future__ import annotations

import argparse
import logging
import threading
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from fastapi import FastAPI
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel

log = logging.getLogger("embed_sidecar")


@dataclass(frozen=True)
class SidecarConfig:
    model: str
    host: str = "127.0.0.1"
    port: int = 8900
    max_batch: int = 64
    max_length: int = 128  # tokenizer truncation, in tokens
    max_text_chars: int = 32768  # hard 413 guard, in characters

    def __post_init__(self):
        if not self.model:
            raise ValueError("model must be a local path or hub name")
        if self.port <= 0 or self.max_batch <= 0:
            raise ValueError("port and max_batch must be positive")
        if self.max_length <= 0 or self.max_text_chars <= 0:
            raise ValueError("max_length and max_text_chars must be positive")


class EmbedRequest(BaseModel):
    texts: list[str]


class Encoder:
    """Loaded model plus tokenizer; inference is serialized by a lock."""

    def __init__(self, config: SidecarConfig):
        from transformers import AutoModel, AutoTokenizer

        self.config = config
        self.tokenizer = AutoTokenizer.from_pretrained(config.model)
        self.model = AutoModel.from_pretrained(config.model).eval()
        self.dim = int(self.model.config.hidden_size)
        source = Path(config.model)
        self.name = source.name if source.exists() else config.model
        self._lock = threading.Lock()

    def embed(self, texts: list[str]) -> np.ndarray:
        with self._lock, torch.no_grad():
            batch = self.tokenizer(
                texts,
                padding=True,
                truncation=True,
                max_length=self.config.max_length,
                return_tensors="pt",
            )
            hidden = self.model(**batch).last_hidden_state
            mask = batch["attention_mask"].unsqueeze(-1).to(hidden.dtype)
            pooled = (hidden * mask).sum(dim=1) / mask.sum(dim=1).clamp(min=1.0)
            normed = torch.nn.functional.normalize(pooled, p=2, dim=1)
            return normed.cpu().numpy().astype(np.float32)


def _error(status: int, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"error": message})


def create_app(config: SidecarConfig, defer_load: bool = False) -> FastAPI:
    app = FastAPI(title="embed-sidecar", docs_url=None, redoc_url=None)
    app.state.encoder = None if defer_load else Encoder(config)

    @app.exception_handler(RequestValidationError)
    async def on_bad_request(request, exc):
        return _error(400, f"malformed request: {exc.errors()[:1]}")

    @app.get("/health")
    def health():
        encoder = app.state.encoder
        if encoder is None:
            return _error(503, "model not loaded")
        return {"status": "ok", "model": encoder.name, "dim": encoder.dim}

    @app.post("/embed")
    def embed(request: EmbedRequest):
        encoder = app.state.encoder
        if encoder is None:
            return _error(503, "model not loaded")
        if not request.texts:
            return _error(400, "texts must be a non-empty list")
        if len(request.texts) > config.max_batch:
            return _error(
                413, f"batch of {len(request.texts)} exceeds max_batch {config.max_batch}"
            )
        oversized = [i for i, t in enumerate(request.texts) if len(t) > config.max_text_chars]
        if oversized:
            return _error(
                413,
                f"text {oversized[0]} has {len(request.texts[oversized[0]])} chars, "
                f"limit {config.max_text_chars}",
            )
        vectors = encoder.embed(request.texts)
        return {
            "model": encoder.name,
            "dim": encoder.dim,
            "vectors": [[float(v) for v in row] for row in vectors],
        }

    return app


def main(argv=None) -> int:
    import uvicorn

    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--model", required=True, help="local checkpoint dir or hub name")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8900)
    parser.add_argument("--max-batch", type=int, dest="max_batch", default=64)
    parser.add_argument("--max-length", type=int, dest="max_length", default=128)
    args = parser.parse_args(argv)

    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    config = SidecarConfig(
        model=args.model,
        host=args.host,
        port=args.port,
        max_batch=args.max_batch,
        max_length=args.max_length,
    )
    app = create_app(config)
    log.info(
        "serving %s (dim %d) on %s:%d",
        app.state.encoder.name, app.state.encoder.dim, config.host, config.port,
    )
    uvicorn.run(app, host=config.host, port=config.port, log_level="warning")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
