"""OpenAI-compatible chat-completions and embeddings client."""

from __future__ import annotations

import base64
import io
import os
import time
from typing import Any, Callable, Sequence

import httpx
import numpy as np
from PIL import Image

from ..errors import MalformedResponse, ProviderConfigError, ProviderFailure, ProviderTimeout, RateLimited
from .base import CompletionRequest, ImagePart, TextPart, unit

KEY_ENV = "CRADLE_PROVIDER_KEY"
BACKOFF = (1.0, 2.0, 4.0)


def image_data_url(part: ImagePart) -> str:
    buf = io.BytesIO()
    Image.fromarray(part.frame.pixels).save(buf, format="PNG")
    return "data:image/png;base64," + base64.b64encode(buf.getvalue()).decode("ascii")


def wire_messages(req: CompletionRequest) -> list[dict[str, Any]]:
    out = []
    for m in req.messages:
        content = []
        for p in m.parts:
            if isinstance(p, TextPart):
                content.append({"type": "text", "text": p.text})
            else:
                content.append({"type": "image_url", "image_url": {"url": image_data_url(p), "detail": p.detail}})
        out.append({"role": m.role, "content": content})
    return out


class RemoteProvider:
    """HTTP client with up to three retries on rate limits, 5xx and timeouts.

    Retries wait 1, 2 and 4 seconds (at most 7 s in total) through the
    injectable ``sleep``; ``transport`` lets tests substitute a mock transport.
    """

    def __init__(self, base_url: str, model: str = "gpt-4o", embed_model: str = "text-embedding-ada-002", *,
                 api_key: str | None = None, timeout: float = 60.0,
                 transport: httpx.BaseTransport | None = None, sleep: Callable[[float], None] = time.sleep):
        if not base_url:
            raise ProviderConfigError("remote provider needs a base URL")
        self.model = model
        self.embed_model = embed_model
        self.sleep = sleep
        key = api_key if api_key is not None else os.environ.get(KEY_ENV)
        headers = {"Authorization": f"Bearer {key}"} if key else {}
        self.client = httpx.Client(base_url=base_url.rstrip("/"), headers=headers, timeout=timeout,
                                   transport=transport)
        self.attempts: list[str] = []

    def _post(self, path: str, payload: dict[str, Any]) -> dict[str, Any]:
        last: ProviderFailure | None = None
        for attempt in range(len(BACKOFF) + 1):
            if attempt:
                self.sleep(BACKOFF[attempt - 1])
            self.attempts.append(path)
            try:
                resp = self.client.post(path, json=payload)
            except httpx.TimeoutException as exc:
                last = ProviderTimeout(f"{path}: {exc}")
                continue
            except httpx.HTTPError as exc:
                last = ProviderTimeout(f"{path}: transport error {exc}")
                continue
            if resp.status_code == 429:
                last = RateLimited(f"{path}: HTTP 429")
                continue
            if resp.status_code >= 500:
                last = ProviderTimeout(f"{path}: HTTP {resp.status_code}")
                continue
            if resp.status_code >= 400:
                raise ProviderFailure(f"{path}: HTTP {resp.status_code}: {resp.text[:200]}")
            try:
                return resp.json()
            except ValueError:
                raise MalformedResponse(f"{path}: response is not JSON") from None
        assert last is not None
        raise last

    def complete(self, req: CompletionRequest) -> str:
        data = self._post("/chat/completions", {
            "model": req.model or self.model, "messages": wire_messages(req),
            "temperature": req.temperature, "max_tokens": req.max_tokens,
        })
        try:
            content = data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError):
            raise MalformedResponse("completion response lacks choices[0].message.content") from None
        if not isinstance(content, str):
            raise MalformedResponse("completion content is not text")
        return content

    def embed(self, texts: Sequence[str]) -> list[np.ndarray]:
        if not texts:
            raise ValueError("nothing to embed")
        data = self._post("/embeddings", {"model": self.embed_model, "input": list(texts)})
        try:
            items = sorted(data["data"], key=lambda d: d.get("index", 0))
            vecs = [unit(np.asarray(d["embedding"], dtype=np.float64)) for d in items]
        except (KeyError, TypeError, ValueError):
            raise MalformedResponse("embedding response lacks data[].embedding") from None
        if len(vecs) != len(texts):
            raise MalformedResponse(f"asked for {len(texts)} embeddings, got {len(vecs)}")
        return vecs
