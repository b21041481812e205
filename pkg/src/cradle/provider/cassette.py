"""Record/replay of completions keyed by request digest."""

from __future__ import annotations

import json
import threading
from collections import defaultdict
from pathlib import Path
from typing import Literal, Sequence

import numpy as np

from ..errors import CassetteMiss, ProviderConfigError
from .base import CompletionRequest, Provider, request_digest
from .mock import HashEmbedder

Mode = Literal["strict", "record", "passthrough"]


class CassetteProvider:
    """Replays recorded responses; records new ones from an inner provider.

    * ``strict``: a miss raises :class:`CassetteMiss`.
    * ``record``: every request goes to ``inner`` and is appended to the file.
    * ``passthrough``: hits replay, misses go to ``inner`` and are recorded.

    A digest may be recorded several times (the same prompt asked again later
    in a run); the n-th identical request replays the n-th recording, and the
    last one repeats once they run out. Embeddings are not recorded: they come
    from ``embedder``, which must itself be deterministic.
    """

    def __init__(self, path: str | Path, mode: Mode = "strict", inner: Provider | None = None, embedder=None):
        if mode not in ("strict", "record", "passthrough"):
            raise ProviderConfigError(f"unknown cassette mode {mode!r}")
        if mode != "strict" and inner is None:
            raise ProviderConfigError(f"cassette mode {mode!r} needs an inner provider")
        self.path = Path(path)
        self.mode = mode
        self.inner = inner
        self.embedder = embedder or getattr(inner, "embedder", None) or HashEmbedder()
        self._lock = threading.Lock()
        self._tape: dict[str, list[str]] = defaultdict(list)
        self._seen: dict[str, int] = defaultdict(int)
        if mode == "record":
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self.path.write_text("", encoding="utf-8")
        elif self.path.exists():
            for lineno, line in enumerate(self.path.read_text(encoding="utf-8").splitlines(), 1):
                if not line.strip():
                    continue
                try:
                    item = json.loads(line)
                    self._tape[item["digest"]].append(item["response"])
                except (json.JSONDecodeError, KeyError, TypeError) as exc:
                    raise ProviderConfigError(f"{self.path}:{lineno}: bad cassette line ({exc})") from None
        elif mode == "strict":
            raise ProviderConfigError(f"cassette {self.path} does not exist")

    def __len__(self) -> int:
        return sum(len(v) for v in self._tape.values())

    def complete(self, req: CompletionRequest) -> str:
        digest = request_digest(req)
        with self._lock:
            n = self._seen[digest]
            self._seen[digest] += 1
            recorded = self._tape.get(digest)
            if self.mode != "record" and recorded and n < len(recorded):
                return recorded[n]
            if self.mode == "strict":
                if recorded:
                    return recorded[-1]
                raise CassetteMiss(f"no recording for request {digest[:12]} ({req.purpose or 'unlabelled'})")
        response = self.inner.complete(req)  # type: ignore[union-attr]
        with self._lock:
            self._tape[digest].append(response)
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps({"digest": digest, "purpose": req.purpose, "response": response}) + "\n")
        return response

    def embed(self, texts: Sequence[str]) -> list[np.ndarray]:
        return self.embedder.embed(texts)
