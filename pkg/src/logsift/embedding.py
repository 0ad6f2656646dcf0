"""Log embedding: provider vector, word-count fusion, linear encoder, normalization.

The final vector for a log is computed in three steps: a text-embedding
provider maps the content to a D-vector, the whitespace word count is
appended as one scaled feature, and a two-layer affine encoder projects the
fused vector before L2 normalization. Cosine similarity between two logs is
then a plain dot product.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass

import numpy as np

from .errors import (
    ConfigError,
    DegenerateEmbeddingError,
    DimensionMismatchError,
    ProviderError,
)
from .records import LogRecord

NORM_EPS = 1e-12
WORD_COUNT_SCALE = 100.0


class EmbeddingProvider:
    """Interface: map text to a fixed-dimension float vector."""

    dim: int

    def embed(self, text: str) -> np.ndarray:
        raise NotImplementedError


class HashingProvider(EmbeddingProvider):
    """Deterministic local provider: L2-normalized bag of hashed tokens.

    Each whitespace token is hashed with blake2b into one of `dim` buckets.
    Two logs get a high cosine similarity exactly when they share most of
    their tokens, which is enough to exercise the full pipeline offline.
    """

    def __init__(self, dim: int = 512):
        if dim < 2:
            raise ConfigError("provider dimension must be >= 2")
        self.dim = dim

    def _bucket(self, token: str) -> int:
        digest = hashlib.blake2b(token.encode("utf-8"), digest_size=8).digest()
        return int.from_bytes(digest, "big") % self.dim

    def embed(self, text: str) -> np.ndarray:
        counts = np.zeros(self.dim, dtype=np.float64)
        for token in text.split():
            counts[self._bucket(token)] += 1.0
        norm = np.linalg.norm(counts)
        if norm < NORM_EPS:
            raise DegenerateEmbeddingError("no tokens to hash")
        return counts / norm


class RemoteProvider(EmbeddingProvider):
    """HTTP JSON embedding client.

    Request body: {"model": ..., "input": text}; response body must carry
    one float array under "embedding". The API key is read from the
    environment variable named in the config, never stored.
    """

    def __init__(self, url: str, model: str, dim: int,
                 api_key_env: str = "EMBEDDING_API_KEY",
                 timeout: float = 30.0, retries: int = 2):
        if api_key_env not in os.environ:
            raise ConfigError(f"credentials env var {api_key_env!r} not set")
        self.url = url
        self.model = model
        self.dim = dim
        self._key = os.environ[api_key_env]
        self.timeout = timeout
        self.retries = retries

    def embed(self, text: str) -> np.ndarray:
        import requests

        last_err = None
        for _ in range(self.retries + 1):
            try:
                resp = requests.post(
                    self.url,
                    json={"model": self.model, "input": text},
                    headers={"Authorization": f"Bearer {self._key}"},
                    timeout=self.timeout,
                )
                resp.raise_for_status()
                values = np.asarray(resp.json()["embedding"], dtype=np.float64)
            except Exception as exc:  # transport or schema failure
                last_err = exc
                continue
            if values.shape != (self.dim,):
                raise DimensionMismatchError(
                    f"provider returned dim {values.shape}, expected {self.dim}"
                )
            return values
        raise ProviderError(f"embedding request failed: {last_err}")


@dataclass
class EncoderWeights:
    """Two affine layers mapping the fused (D+1)-vector to the clustering space.

    w1: (H, D+1), b1: (H,), w2: (E, H), b2: (E,). No activation between the
    layers; the composition is still trained as two separate factors.
    """

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray

    def __post_init__(self):
        self.w1 = np.asarray(self.w1, dtype=np.float64)
        self.b1 = np.asarray(self.b1, dtype=np.float64)
        self.w2 = np.asarray(self.w2, dtype=np.float64)
        self.b2 = np.asarray(self.b2, dtype=np.float64)
        h, d_in = self.w1.shape
        e, h2 = self.w2.shape
        if h2 != h or self.b1.shape != (h,) or self.b2.shape != (e,):
            raise ConfigError("encoder weight dimensions are inconsistent")
        for a in (self.w1, self.b1, self.w2, self.b2):
            if not np.all(np.isfinite(a)):
                raise ConfigError("encoder weights contain non-finite entries")

    @property
    def input_dim(self) -> int:
        return self.w1.shape[1]

    @property
    def hidden_dim(self) -> int:
        return self.w1.shape[0]

    @property
    def output_dim(self) -> int:
        return self.w2.shape[0]

    @classmethod
    def identity_init(cls, provider_dim: int,
                      hidden_dim: int | None = None,
                      output_dim: int | None = None) -> "EncoderWeights":
        """Identity-padded start: the encoder initially reproduces the raw
        provider embedding (word-count column passes through layer 1 and is
        dropped by layer 2 when output_dim == provider_dim)."""
        d_in = provider_dim + 1
        h = d_in if hidden_dim is None else hidden_dim
        e = provider_dim if output_dim is None else output_dim
        w1 = np.zeros((h, d_in))
        np.fill_diagonal(w1[: min(h, d_in), : min(h, d_in)], 1.0)
        w2 = np.zeros((e, h))
        np.fill_diagonal(w2[: min(e, h), : min(e, h)], 1.0)
        return cls(w1=w1, b1=np.zeros(h), w2=w2, b2=np.zeros(e))

    def copy(self) -> "EncoderWeights":
        return EncoderWeights(self.w1.copy(), self.b1.copy(),
                              self.w2.copy(), self.b2.copy())

    def save(self, path: str) -> None:
        doc = {
            "version": 1,
            "input_dim": self.input_dim,
            "hidden_dim": self.hidden_dim,
            "output_dim": self.output_dim,
            "w1": self.w1.tolist(),
            "b1": self.b1.tolist(),
            "w2": self.w2.tolist(),
            "b2": self.b2.tolist(),
        }
        tmp = path + ".tmp"
        with open(tmp, "w") as fh:
            json.dump(doc, fh)
        os.replace(tmp, path)

    @classmethod
    def load(cls, path: str) -> "EncoderWeights":
        with open(path) as fh:
            doc = json.load(fh)
        if doc.get("version") != 1:
            raise ConfigError(f"unsupported weights file version: {doc.get('version')}")
        return cls(w1=np.array(doc["w1"]), b1=np.array(doc["b1"]),
                   w2=np.array(doc["w2"]), b2=np.array(doc["b2"]))


def embed_raw(record: LogRecord, provider: EmbeddingProvider) -> np.ndarray:
    """Provider embedding of the record content (Algorithm step 1)."""
    values = provider.embed(record.content)
    if values.shape != (provider.dim,):
        raise DimensionMismatchError(
            f"provider dim {values.shape} != configured {provider.dim}"
        )
    if not np.all(np.isfinite(values)):
        raise ProviderError("provider returned non-finite values", record=record)
    return values


def fuse_word_count(raw: np.ndarray, word_count: int) -> np.ndarray:
    """Append the scaled word count as one extra feature dimension."""
    if word_count < 1:
        raise ValueError("word_count must be >= 1")
    return np.concatenate([raw, [word_count / WORD_COUNT_SCALE]])


def encode(fused: np.ndarray, weights: EncoderWeights) -> np.ndarray:
    """Two affine layers followed by L2 normalization."""
    hidden = weights.w1 @ fused + weights.b1
    out = weights.w2 @ hidden + weights.b2
    norm = np.linalg.norm(out)
    if norm < NORM_EPS:
        raise DegenerateEmbeddingError("encoder output norm below threshold")
    return out / norm


def embed_log(record: LogRecord, provider: EmbeddingProvider,
              weights: EncoderWeights) -> np.ndarray:
    """Full pipeline: provider embedding -> word-count fusion -> encoder."""
    return encode(fuse_word_count(embed_raw(record, provider), record.word_count),
                  weights)
