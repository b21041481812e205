"""Deterministic providers for tests and offline runs."""

from __future__ import annotations

import hashlib
import json
import re
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np

from ..errors import ProviderExhausted
from .base import CompletionRequest, unit

_WORD = re.compile(r"[a-z0-9]+")


def _hash_vector(token: str, dim: int) -> np.ndarray:
    out = np.empty(dim)
    counter = 0
    filled = 0
    while filled < dim:
        digest = hashlib.sha256(f"{counter}:{token}".encode("utf-8")).digest()
        words = np.frombuffer(digest, dtype=">u4").astype(np.float64)
        take = min(dim - filled, len(words))
        out[filled:filled + take] = words[:take] / 2**31 - 1.0
        filled += take
        counter += 1
    return out


class HashEmbedder:
    """Feature-hashing embedder: the sum of per-word pseudo-random vectors.

    Texts sharing words land closer together, which keeps retrieval in offline
    runs loosely meaningful. Texts without words hash as a whole.
    """

    def __init__(self, dim: int = 8):
        self.dim = dim

    def vector(self, text: str) -> np.ndarray:
        words = _WORD.findall(text.lower())
        v = sum((_hash_vector(w, self.dim) for w in words), np.zeros(self.dim)) if words else None
        if v is None or not np.any(v):
            v = _hash_vector("\x00" + text, self.dim)
        return unit(v)

    def embed(self, texts: Sequence[str]) -> list[np.ndarray]:
        if not texts:
            raise ValueError("nothing to embed")
        return [self.vector(t) for t in texts]


class ScriptedProvider:
    """Answers from queues.

    ``responses`` is either one list consumed in order, or a mapping from
    request purpose to a list. ``defaults`` maps a purpose to the reply used
    once its queue is empty. Every request is kept in ``requests``.
    """

    def __init__(self, responses: Sequence[str] | Mapping[str, Sequence[str]] = (),
                 defaults: Mapping[str, str] | None = None, embedder=None):
        if isinstance(responses, Mapping):
            self.queues = {k: list(v) for k, v in responses.items()}
        else:
            self.queues = {"*": list(responses)}
        self.defaults = dict(defaults or {})
        self.embedder = embedder or HashEmbedder()
        self.requests: list[CompletionRequest] = []

    @classmethod
    def from_json(cls, path: str | Path, embedder=None) -> "ScriptedProvider":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(data.get("queues", {}), data.get("defaults", {}), embedder)

    def complete(self, req: CompletionRequest) -> str:
        self.requests.append(req)
        for key in (req.purpose, "*"):
            q = self.queues.get(key)
            if q:
                return q.pop(0)
        for key in (req.purpose, "*"):
            if key in self.defaults:
                return self.defaults[key]
        raise ProviderExhausted(f"no scripted response left for purpose {req.purpose!r}")

    def embed(self, texts: Sequence[str]) -> list[np.ndarray]:
        return self.embedder.embed(texts)


class FunctionProvider:
    """Replies computed by a function of the request."""

    def __init__(self, fn: Callable[[CompletionRequest], str], embedder=None):
        self.fn = fn
        self.embedder = embedder or HashEmbedder()
        self.requests: list[CompletionRequest] = []

    def complete(self, req: CompletionRequest) -> str:
        self.requests.append(req)
        return self.fn(req)

    def embed(self, texts: Sequence[str]) -> list[np.ndarray]:
        return self.embedder.embed(texts)
