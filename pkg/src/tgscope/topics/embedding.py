"""Text embedders: a deterministic hashed bag of tokens and a remote service."""

from __future__ import annotations

import hashlib
import logging
import re
import time
from dataclasses import dataclass
from typing import Optional, Sequence

import httpx
import numpy as np

logger = logging.getLogger(__name__)

_TOKEN_RE = re.compile(r"\w+")


class EmbeddingError(RuntimeError):
    pass


class RemoteUnavailable(EmbeddingError):
    pass


class EmptyTextList(EmbeddingError, ValueError):
    pass


@dataclass(frozen=True)
class EmbeddingProvider:
    kind: str = "hashed"
    dim: int = 384
    endpoint: Optional[str] = None
    seed: int = 0
    batch_size: int = 64
    max_retries: int = 3
    timeout: float = 30.0

    def __post_init__(self) -> None:
        if self.kind not in ("hashed", "remote"):
            raise ValueError(f"unknown embedding provider kind {self.kind!r}")
        if self.dim < 2:
            raise ValueError("embedding dim must be at least 2")
        if self.kind == "remote" and not self.endpoint:
            raise ValueError("remote embedding provider needs an endpoint")

    def to_json(self) -> dict:
        return {"kind": self.kind, "dim": self.dim, "endpoint": self.endpoint, "seed": self.seed}


def token_hash(token: str, seed: int = 0) -> int:
    """Stable unsigned 64-bit hash of a token."""
    salt = seed.to_bytes(16, "little", signed=True)
    return int.from_bytes(hashlib.blake2b(token.encode("utf-8"), digest_size=8, salt=salt).digest(), "big")


def hashed_vector(text: str, dim: int, seed: int = 0) -> np.ndarray:
    vec = np.zeros(dim)
    tokens = _TOKEN_RE.findall((text or "").lower()) or [""]
    for tok in tokens:
        h = token_hash(tok, seed)
        vec[h % dim] += -1.0 if h >> 63 else 1.0
    norm = np.linalg.norm(vec)
    if norm == 0:
        # every token cancelled out; fall back to the first token's bucket
        h = token_hash(tokens[0], seed)
        vec[h % dim] = 1.0
        norm = 1.0
    return vec / norm


def normalize_rows(m: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(m, axis=1, keepdims=True)
    if np.any(norms == 0):
        raise EmbeddingError("cannot normalize a zero embedding")
    return m / norms


def _remote_batch(client: httpx.Client, url: str, texts: list[str], provider: EmbeddingProvider) -> list:
    last: Exception | None = None
    for attempt in range(provider.max_retries + 1):
        try:
            resp = client.post(url, json={"texts": texts})
            if resp.status_code < 500 and resp.status_code != 429:
                resp.raise_for_status()
                vectors = resp.json()["vectors"]
                if len(vectors) != len(texts):
                    raise RemoteUnavailable(f"expected {len(texts)} vectors, got {len(vectors)}")
                return vectors
            last = RemoteUnavailable(f"HTTP {resp.status_code}")
        except (httpx.HTTPError, ValueError, KeyError, TypeError) as exc:
            last = exc
        if attempt < provider.max_retries:
            time.sleep(0.5 * 2**attempt)
    raise RemoteUnavailable(f"embedding service {url} failed: {last}")


def embed_texts(
    texts: Sequence[str],
    provider: EmbeddingProvider = EmbeddingProvider(),
    client: Optional[httpx.Client] = None,
) -> np.ndarray:
    """Embed texts into an ``n x dim`` matrix of unit rows."""
    if len(texts) == 0:
        raise EmptyTextList("nothing to embed")
    if provider.kind == "hashed":
        return np.vstack([hashed_vector(t, provider.dim, provider.seed) for t in texts])
    url = provider.endpoint.rstrip("/") + "/embed"
    own = client is None
    client = client or httpx.Client(timeout=provider.timeout)
    try:
        rows: list = []
        for i in range(0, len(texts), provider.batch_size):
            rows.extend(_remote_batch(client, url, list(texts[i : i + provider.batch_size]), provider))
    finally:
        if own:
            client.close()
    m = np.asarray(rows, dtype=float)
    if m.ndim != 2 or m.shape[1] != provider.dim:
        raise RemoteUnavailable(f"embedding service returned shape {m.shape}, expected (*, {provider.dim})")
    return normalize_rows(m)
