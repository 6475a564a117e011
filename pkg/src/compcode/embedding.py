"""Embedding providers and cosine similarity.

Texts become fixed-dimension float32 vectors through one of two providers:

  * hashed n-gram, an offline deterministic surrogate built on a seeded
    FNV-1a 64-bit hash, sufficient for the synthetic pipeline and tests;
  * remote HTTP, the transformer-backed path served by the embed sidecar
    over POST /embed, GET /health.

Non-empty texts embed to unit vectors; texts that normalize to nothing
embed to the zero vector. Similarity accumulations run in float64.
"""

from __future__ import annotations

import hashlib
import re
import sqlite3
import threading
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import requests

from .errors import (
    DimensionMismatch,
    MalformedResponse,
    RemoteDimensionMismatch,
    RemoteUnavailable,
)

# 1-D float32 array; "EmbeddingVector" throughout the package.
EmbeddingVector = np.ndarray

_WORD_RE = re.compile(r"[0-9a-z]+")

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF


def _fnv1a64(data: bytes, seed: int) -> int:
    """Seeded FNV-1a 64-bit: plain FNV-1a over the 8-byte little-endian
    seed followed by the payload. Fixed published algorithm, so golden
    vectors are stable across platforms and Python versions."""
    h = _FNV_OFFSET
    for byte in (seed & _MASK64).to_bytes(8, "little") + data:
        h ^= byte
        h = (h * _FNV_PRIME) & _MASK64
    return h


def _ngrams(text: str) -> list[str]:
    """Lowercase, split on non-alphanumeric, emit word unigrams plus
    adjacent bigrams (joined with a single space)."""
    words = _WORD_RE.findall(text.lower())
    return words + [f"{a} {b}" for a, b in zip(words, words[1:])]


def hashed_ngram_embed(text: str, dim: int, seed: int) -> EmbeddingVector:
    """Signed feature hashing of word uni/bigrams into ``dim`` buckets.

    Each n-gram hashes to h = fnv1a64(seed, gram); it contributes
    +1 or -1 (bit 1 of h) at index h mod dim. The accumulator is then
    L2-normalized; a zero accumulator stays the zero vector.
    """
    if dim < 2:
        raise ValueError(f"dim must be >= 2, got {dim}")
    acc = np.zeros(dim, dtype=np.float64)
    for gram in _ngrams(text):
        h = _fnv1a64(gram.encode("utf-8"), seed)
        sign = 1.0 if (h >> 1) & 1 else -1.0
        acc[h % dim] += sign
    norm = float(np.linalg.norm(acc))
    if norm == 0.0:
        return acc.astype(np.float32)
    return (acc / norm).astype(np.float32)


def cosine_similarity(a: EmbeddingVector, b: EmbeddingVector) -> float:
    """dot(a, b) / (||a|| * ||b||), clamped to [-1, 1].

    Returns 0.0 when either vector has zero norm so empty descriptions
    rank last instead of crashing the pipeline.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise DimensionMismatch(f"cosine over dims {a.shape} vs {b.shape}")
    a64 = a.astype(np.float64, copy=False)
    b64 = b.astype(np.float64, copy=False)
    na = float(np.linalg.norm(a64))
    nb = float(np.linalg.norm(b64))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(min(1.0, max(-1.0, float(np.dot(a64, b64)) / (na * nb))))


DEFAULT_DIM = 256


@dataclass(frozen=True)
class ProviderConfig:
    """CLI-level provider settings; ``make_provider`` turns it into a live one.

    ``dim`` left as None means: DEFAULT_DIM for the hashed provider, adopt
    the advertised dimension for the remote one.
    """

    kind: str = "hashed"  # "hashed" | "remote"
    dim: int | None = None
    seed: int = 0  # hashed only
    endpoint: str | None = None  # remote only


class HashedNgramProvider:
    """Deterministic offline provider; see hashed_ngram_embed."""

    def __init__(self, dim: int = 256, seed: int = 0):
        if dim < 2:
            raise ValueError(f"dim must be >= 2, got {dim}")
        self.dim = dim
        self.seed = seed

    @property
    def fingerprint(self) -> str:
        return f"hashed:dim={self.dim}:seed={self.seed}"

    def embed(self, texts: Sequence[str]) -> list[EmbeddingVector]:
        return [hashed_ngram_embed(t, self.dim, self.seed) for t in texts]


def remote_embed_batch(
    endpoint: str,
    texts: Sequence[str],
    *,
    expect_dim: int | None = None,
    timeout: float = 30.0,
    retries: int = 2,
) -> list[EmbeddingVector]:
    """POST ``{"texts": [...]}`` to ``endpoint``/embed.

    Retries connection-level failures and 5xx responses ``retries`` times
    before raising RemoteUnavailable. Response vectors must be one per
    input text, in order, all of the advertised (or expected) dimension.
    """
    if not texts:
        raise ValueError("remote_embed_batch requires a non-empty text list")
    url = endpoint.rstrip("/") + "/embed"
    last_exc: Exception | None = None
    for _ in range(retries + 1):
        try:
            resp = requests.post(url, json={"texts": list(texts)}, timeout=timeout)
        except requests.RequestException as exc:
            last_exc = exc
            continue
        if resp.status_code >= 500:
            last_exc = RemoteUnavailable(f"{url} responded {resp.status_code}")
            continue
        if resp.status_code != 200:
            raise MalformedResponse(f"{url} responded {resp.status_code}: {resp.text[:200]}")
        try:
            payload = resp.json()
            dim = int(payload["dim"])
            vectors = payload["vectors"]
        except (ValueError, KeyError, TypeError) as exc:
            raise MalformedResponse(f"{url}: bad response body ({exc})") from exc
        if expect_dim is not None and dim != expect_dim:
            raise RemoteDimensionMismatch(
                f"{url}: advertised dim {dim}, expected {expect_dim}"
            )
        if not isinstance(vectors, list) or len(vectors) != len(texts):
            raise MalformedResponse(
                f"{url}: expected {len(texts)} vectors, got "
                f"{len(vectors) if isinstance(vectors, list) else type(vectors).__name__}"
            )
        out = []
        for vec in vectors:
            arr = np.asarray(vec, dtype=np.float32)
            if arr.ndim != 1 or arr.shape[0] != dim:
                raise RemoteDimensionMismatch(
                    f"{url}: vector of length {arr.shape}, advertised dim {dim}"
                )
            out.append(arr)
        return out
    raise RemoteUnavailable(f"{url} unreachable after {retries + 1} attempts: {last_exc}")


class RemoteProvider:
    """HTTP client for the embedding wire protocol.

    Contacts GET /health at construction to learn the served model name and
    dimension, which become part of the fingerprint.
    """

    def __init__(
        self,
        endpoint: str,
        *,
        dim: int | None = None,
        timeout: float = 30.0,
        retries: int = 2,
        batch_size: int = 32,
    ):
        self.endpoint = endpoint.rstrip("/")
        self.timeout = timeout
        self.retries = retries
        self.batch_size = batch_size
        health = self._fetch_health()
        self.model = str(health.get("model", "unknown"))
        try:
            self.dim = int(health["dim"])
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedResponse(f"{self.endpoint}/health: missing dim") from exc
        if dim is not None and dim != self.dim:
            raise RemoteDimensionMismatch(
                f"{self.endpoint} serves dim {self.dim}, configured dim {dim}"
            )

    def _fetch_health(self) -> dict:
        url = self.endpoint + "/health"
        last_exc: Exception | None = None
        for _ in range(self.retries + 1):
            try:
                resp = requests.get(url, timeout=self.timeout)
            except requests.RequestException as exc:
                last_exc = exc
                continue
            if resp.status_code != 200:
                last_exc = RemoteUnavailable(f"{url} responded {resp.status_code}")
                continue
            try:
                return resp.json()
            except ValueError as exc:
                raise MalformedResponse(f"{url}: non-JSON body") from exc
        raise RemoteUnavailable(f"{url} unreachable after {self.retries + 1} attempts: {last_exc}")

    @property
    def fingerprint(self) -> str:
        return f"remote:dim={self.dim}:model={self.model}"

    def embed(self, texts: Sequence[str]) -> list[EmbeddingVector]:
        out: list[EmbeddingVector] = []
        for start in range(0, len(texts), self.batch_size):
            chunk = list(texts[start : start + self.batch_size])
            out.extend(
                remote_embed_batch(
                    self.endpoint,
                    chunk,
                    expect_dim=self.dim,
                    timeout=self.timeout,
                    retries=self.retries,
                )
            )
        return out


def embed_text(provider, text: str) -> EmbeddingVector:
    """Embed one text through any provider."""
    return provider.embed([text])[0]


def _cache_key(fingerprint: str, text: str) -> bytes:
    # length-prefix the fingerprint so (fingerprint, text) boundaries
    # cannot collide under plain concatenation
    fp = fingerprint.encode("utf-8")
    return hashlib.sha256(len(fp).to_bytes(4, "big") + fp + text.encode("utf-8")).digest()


class EmbeddingCache:
    """Single-file persistent vector store keyed by SHA-256(fingerprint, text).

    Backed by sqlite, which gives concurrent readers for free; writes are
    serialized through one connection guarded by a lock. Vectors round-trip
    bit-identically (stored as little-endian float32 bytes).
    """

    def __init__(self, path: str = ":memory:"):
        self.path = str(path)
        self._conn = sqlite3.connect(self.path, check_same_thread=False)
        self._lock = threading.Lock()
        with self._lock:
            self._conn.execute(
                "CREATE TABLE IF NOT EXISTS vectors ("
                "key BLOB PRIMARY KEY, dim INTEGER NOT NULL, data BLOB NOT NULL)"
            )
            self._conn.commit()

    def get(self, fingerprint: str, text: str) -> EmbeddingVector | None:
        row = self._conn.execute(
            "SELECT dim, data FROM vectors WHERE key = ?",
            (_cache_key(fingerprint, text),),
        ).fetchone()
        if row is None:
            return None
        dim, data = row
        return np.frombuffer(data, dtype="<f4", count=dim).copy()

    def put(self, fingerprint: str, text: str, vector: EmbeddingVector) -> None:
        arr = np.ascontiguousarray(np.asarray(vector, dtype="<f4"))
        with self._lock:
            self._conn.execute(
                "INSERT OR REPLACE INTO vectors (key, dim, data) VALUES (?, ?, ?)",
                (_cache_key(fingerprint, text), arr.shape[0], arr.tobytes()),
            )
            self._conn.commit()

    def close(self) -> None:
        self._conn.close()


def cached_embed(provider, texts: Sequence[str], cache: EmbeddingCache) -> list[EmbeddingVector]:
    """Embed ``texts`` through ``cache``; each distinct missing text hits the
    provider exactly once, and repeats within the batch share one computation."""
    fingerprint = provider.fingerprint
    unique: dict[str, EmbeddingVector | None] = {}
    for text in texts:
        if text not in unique:
            unique[text] = cache.get(fingerprint, text)
    missing = [t for t, v in unique.items() if v is None]
    if missing:
        for text, vec in zip(missing, provider.embed(missing)):
            cache.put(fingerprint, text, vec)
            unique[text] = vec
    return [unique[t] for t in texts]  # type: ignore[misc]


class CachedProvider:
    """Provider wrapper that reads through an EmbeddingCache."""

    def __init__(self, provider, cache: EmbeddingCache):
        self.provider = provider
        self.cache = cache

    @property
    def dim(self) -> int:
        return self.provider.dim

    @property
    def fingerprint(self) -> str:
        return self.provider.fingerprint

    def embed(self, texts: Sequence[str]) -> list[EmbeddingVector]:
        return cached_embed(self.provider, texts, self.cache)


def make_provider(config: ProviderConfig, cache_path: str | None = None):
    """Build a provider from CLI-level settings, optionally cache-backed."""
    if config.kind == "hashed":
        provider = HashedNgramProvider(
            dim=config.dim if config.dim is not None else DEFAULT_DIM,
            seed=config.seed,
        )
    elif config.kind == "remote":
        if not config.endpoint:
            raise ValueError("remote provider requires an endpoint")
        provider = RemoteProvider(config.endpoint, dim=config.dim)
    else:
        raise ValueError(f"unknown provider kind {config.kind!r}")
    if cache_path is not None:
        return CachedProvider(provider, EmbeddingCache(cache_path))
    return provider
