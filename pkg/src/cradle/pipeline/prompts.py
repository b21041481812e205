"""Prompt templates with ``{name}`` text slots and ``<image:name>`` image slots."""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

from ..errors import ConfigError
from ..observation import Frame
from ..provider.base import ImagePart, Message, TextPart

_SLOT = re.compile(r"\{(\w+)\}")
_IMAGE = re.compile(r"<image:(\w+)>")

# template name -> (allowed text slots, allowed image slots)
PROMPT_SLOTS: dict[str, tuple[frozenset[str], frozenset[str]]] = {
    "gather_ocr": (frozenset(), frozenset({"keyframe"})),
    "gather_describe": (frozenset({"task", "ocr", "marks"}), frozenset({"last_frame"})),
    "reflect": (frozenset({"task", "last_action", "exec_summary"}), frozenset({"frames"})),
    "infer_task": (frozenset({"summary", "task", "horizon", "reflection", "gathered"}), frozenset()),
    "curate": (frozenset({"task", "gathered", "ocr", "skill_names"}), frozenset({"last_frame"})),
    "plan": (frozenset({"task", "summary", "recent", "reflection", "gathered", "retrieved_skills"}),
             frozenset({"last_frame"})),
    "summary": (frozenset({"summary", "records", "cap"}), frozenset()),
    "toolbar_tooltip": (frozenset({"x", "y"}), frozenset({"frame"})),
    "toolbar_skill": (frozenset({"x", "y", "description", "skill_names"}), frozenset({"frame"})),
}


@dataclass(frozen=True)
class PromptTemplate:
    name: str
    text: str

    def placeholders(self) -> set[str]:
        return set(_SLOT.findall(self.text))

    def image_slots(self) -> set[str]:
        return set(_IMAGE.findall(self.text))

    def fill(self, values: Mapping[str, object]) -> str:
        def sub(m: re.Match) -> str:
            if m.group(1) not in values:
                raise ConfigError(f"prompt {self.name!r} needs a value for {{{m.group(1)}}}")
            return str(values[m.group(1)])

        return _SLOT.sub(sub, self.text)

    def render(self, values: Mapping[str, object], images: Mapping[str, Sequence[Frame]] | None = None,
               detail: str = "auto") -> Message:
        """Fill text slots, then split at image slots into a user message."""
        images = images or {}
        text = self.fill(values)
        parts: list[TextPart | ImagePart] = []
        pos = 0
        for m in _IMAGE.finditer(text):
            chunk = text[pos:m.start()]
            if chunk.strip():
                parts.append(TextPart(chunk.strip("\n")))
            parts.extend(ImagePart(f, detail) for f in images.get(m.group(1), ()))
            pos = m.end()
        tail = text[pos:]
        if tail.strip():
            parts.append(TextPart(tail.strip("\n")))
        return Message("user", tuple(parts))


def _check(t: PromptTemplate) -> PromptTemplate:
    allowed_text, allowed_images = PROMPT_SLOTS[t.name]
    extra = t.placeholders() - allowed_text
    if extra:
        raise ConfigError(f"prompt {t.name!r} uses unknown placeholders {sorted(extra)}")
    extra = t.image_slots() - allowed_images
    if extra:
        raise ConfigError(f"prompt {t.name!r} uses unknown image slots {sorted(extra)}")
    return t


def load_prompts(overrides: Mapping[str, str | Path] | None = None) -> dict[str, PromptTemplate]:
    """Packaged templates, with any entry replaced by a file from ``overrides``."""
    overrides = dict(overrides or {})
    unknown = set(overrides) - set(PROMPT_SLOTS)
    if unknown:
        raise ConfigError(f"unknown prompt names {sorted(unknown)}")
    out = {}
    pkg = resources.files("cradle").joinpath("prompts")
    for name in PROMPT_SLOTS:
        if name in overrides:
            try:
                text = Path(overrides[name]).read_text(encoding="utf-8")
            except OSError as exc:
                raise ConfigError(f"cannot read prompt {name!r}: {exc}") from None
        else:
            text = pkg.joinpath(f"{name}.txt").read_text(encoding="utf-8")
        out[name] = _check(PromptTemplate(name, text))
    return out
