"""Read labelled sections (``Label: value``) out of model replies."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Any, Literal

from ..errors import MissingField, UnparsableBool
from ..skills.parser import extract_code_blocks

Kind = Literal["bool", "text", "list", "code"]


@dataclass(frozen=True)
class FieldSpec:
    label: str
    kind: Kind = "text"
    required: bool = True
    tag: str = "skill"


@dataclass(frozen=True)
class SectionSchema:
    fields: tuple[FieldSpec, ...]

    def __post_init__(self):
        labels = [f.label.lower() for f in self.fields]
        if len(set(labels)) != len(labels):
            raise ValueError("section labels must be unique")

    @classmethod
    def of(cls, **kinds: str) -> "SectionSchema":
        """Shorthand: keyword = kind, with ``_`` standing for a space and a
        trailing ``?`` on the kind marking the field optional."""
        return cls(tuple(FieldSpec(k.replace("_", " "), v.rstrip("?"), not v.endswith("?"))  # type: ignore[arg-type]
                         for k, v in kinds.items()))


_BULLET = re.compile(r"^\s*(?:[-*+]|\d+[.)])\s+")


def _parse_bool(label: str, raw: str) -> bool:
    word = raw.strip().strip("*`\"'").rstrip(".").strip().lower()
    if word == "true":
        return True
    if word == "false":
        return False
    raise UnparsableBool(f"{label}: expected true or false, got {raw.strip()!r}")


def _parse_list(raw: str) -> list[str]:
    out = []
    for line in raw.splitlines():
        line = _BULLET.sub("", line).strip()
        if line and line.lower() not in ("none", "n/a"):
            out.append(line)
    return out


def parse_sections(text: str, schema: SectionSchema) -> dict[str, Any]:
    """Map each schema label to its parsed value.

    A section starts where its label appears at the start of a line followed
    by a colon (markdown bold and heading marks are tolerated) and runs to the
    next known label. Missing optional fields map to ``None``.
    """
    by_lower = {f.label.lower(): f for f in schema.fields}
    alternatives = "|".join(re.escape(f.label) for f in sorted(schema.fields, key=lambda f: -len(f.label)))
    pattern = re.compile(rf"^[ \t]*(?:#+[ \t]*)?(?:\*\*)?({alternatives})(?:\*\*)?[ \t]*:(?:\*\*)?[ \t]*",
                         re.IGNORECASE | re.MULTILINE)
    hits = []
    seen: set[str] = set()
    for m in pattern.finditer(text):
        key = m.group(1).lower()
        hits.append((m.start(), m.end(), key if key not in seen else None))
        seen.add(key)
    raw: dict[str, str] = {}
    for i, (_, end, key) in enumerate(hits):
        stop = hits[i + 1][0] if i + 1 < len(hits) else len(text)
        if key is not None:
            raw[key] = text[end:stop].strip()
    out: dict[str, Any] = {}
    for f in schema.fields:
        value = raw.get(f.label.lower())
        if value is None:
            if f.required:
                raise MissingField(f"missing section {f.label!r}")
            out[f.label] = None
            continue
        if f.kind == "bool":
            out[f.label] = _parse_bool(f.label, value)
        elif f.kind == "list":
            out[f.label] = _parse_list(value)
        elif f.kind == "code":
            out[f.label] = extract_code_blocks(value, f.tag)
        else:
            out[f.label] = value
    return out
