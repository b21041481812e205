"""Request types, digests and the provider interface."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Literal, Protocol, Sequence, Union

import numpy as np

from ..observation import Frame

Role = Literal["system", "user", "assistant"]


@dataclass(frozen=True)
class TextPart:
    text: str


@dataclass(frozen=True)
class ImagePart:
    frame: Frame
    detail: str = "auto"


Part = Union[TextPart, ImagePart]


@dataclass(frozen=True)
class Message:
    role: Role
    parts: tuple[Part, ...]

    def __post_init__(self):
        if self.role not in ("system", "user", "assistant"):
            raise ValueError(f"unknown role {self.role!r}")
        if not self.parts:
            raise ValueError("a message needs at least one part")
        if self.role != "user" and any(isinstance(p, ImagePart) for p in self.parts):
            raise ValueError("images are only allowed in user messages")

    @classmethod
    def user(cls, *parts: Part | str) -> "Message":
        return cls("user", tuple(TextPart(p) if isinstance(p, str) else p for p in parts))

    @classmethod
    def system(cls, text: str) -> "Message":
        return cls("system", (TextPart(text),))

    def text(self) -> str:
        return "".join(p.text for p in self.parts if isinstance(p, TextPart))

    def images(self) -> list[ImagePart]:
        return [p for p in self.parts if isinstance(p, ImagePart)]


@dataclass(frozen=True)
class CompletionRequest:
    model: str
    messages: tuple[Message, ...]
    temperature: float = 0.0
    max_tokens: int = 1024
    purpose: str = field(default="", compare=False)

    def __post_init__(self):
        if not 0 <= self.temperature <= 2:
            raise ValueError("temperature must lie in [0, 2]")
        if not self.messages:
            raise ValueError("a request needs at least one message")

    def images(self) -> list[ImagePart]:
        return [p for m in self.messages for p in m.images()]

    def text(self) -> str:
        return "\n".join(m.text() for m in self.messages)


def pixel_digest(frame: Frame) -> str:
    px = np.ascontiguousarray(frame.pixels)
    h = hashlib.sha256(f"{px.shape[0]}x{px.shape[1]}x{px.shape[2]}:".encode())
    h.update(px.tobytes())
    return h.hexdigest()


def canonical_request(req: CompletionRequest) -> dict:
    """JSON-ready view of the request with images replaced by pixel hashes."""
    msgs = []
    for m in req.messages:
        parts = []
        for p in m.parts:
            if isinstance(p, TextPart):
                parts.append({"text": p.text})
            else:
                parts.append({"image": pixel_digest(p.frame), "detail": p.detail})
        msgs.append({"role": m.role, "parts": parts})
    return {"model": req.model, "messages": msgs, "temperature": float(req.temperature)}


def request_digest(req: CompletionRequest) -> str:
    blob = json.dumps(canonical_request(req), sort_keys=True, separators=(",", ":"), ensure_ascii=True)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    n = float(np.linalg.norm(v))
    if n == 0.0 or not np.isfinite(n):
        raise ValueError("embedding has zero or non-finite norm")
    return v / n


class Provider(Protocol):
    def complete(self, req: CompletionRequest) -> str: ...

    def embed(self, texts: Sequence[str]) -> list[np.ndarray]: ...
