"""Short-term ring of interaction records plus a recurrent long-term summary."""

from __future__ import annotations

import re
from collections import deque
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Callable

from ..errors import NonMonotoneIteration

DEFAULT_K = 5
DEFAULT_SENTENCE_CAP = 8

_SENTENCE_END = re.compile(r"(?<=[.!?])\s+")

SUMMARY_TEMPLATE = (
    "Previous summary:\n{summary}\n\n"
    "Recent interactions:\n{records}\n\n"
    "Write an updated summary of at most {cap} sentences."
)


def split_sentences(text: str) -> list[str]:
    text = text.strip()
    return [s for s in _SENTENCE_END.split(text) if s] if text else []


def cap_sentences(text: str, cap: int) -> str:
    parts = split_sentences(text)
    if len(parts) <= cap:
        return text.strip()
    return " ".join(parts[:cap])


@dataclass(frozen=True)
class EpisodicRecord:
    iteration: int
    screenshot_refs: tuple[str, ...] = ()
    info_text: str = ""
    task: dict[str, Any] | None = None
    action: tuple[str, ...] = ()
    reflection: dict[str, Any] | None = None
    reasoning: str = ""

    def digest(self) -> str:
        """One-line rendering used in prompts."""
        acts = "; ".join(self.action) if self.action else "none"
        return f"[{self.iteration}] {self.info_text} | action: {acts}"

    def to_json(self) -> dict[str, Any]:
        d = asdict(self)
        d["screenshot_refs"] = list(self.screenshot_refs)
        d["action"] = list(self.action)
        return d


@dataclass(frozen=True)
class LongTermSummary:
    text: str = ""
    sentence_cap: int = DEFAULT_SENTENCE_CAP
    last_updated_iteration: int = 0


class EpisodicStore:
    def __init__(self, k: int = DEFAULT_K, sentence_cap: int = DEFAULT_SENTENCE_CAP):
        if k < 1:
            raise ValueError("k must be at least 1")
        self.k = k
        self._ring: deque[EpisodicRecord] = deque(maxlen=k)
        self._newest: int | None = None
        self.summary = LongTermSummary(sentence_cap=sentence_cap)

    def __len__(self) -> int:
        return len(self._ring)

    def append(self, record: EpisodicRecord) -> None:
        if self._newest is not None and record.iteration <= self._newest:
            raise NonMonotoneIteration(f"iteration {record.iteration} is not after {self._newest}")
        self._ring.append(record)
        self._newest = record.iteration

    def recent(self, n: int) -> list[EpisodicRecord]:
        """The ``n`` newest records, oldest first."""
        if n <= 0:
            return []
        return list(self._ring)[-n:]

    def iterations(self) -> list[int]:
        return [r.iteration for r in self._ring]

    def pending(self) -> list[EpisodicRecord]:
        return [r for r in self._ring if r.iteration > self.summary.last_updated_iteration]

    def summary_prompt(self, template: str = SUMMARY_TEMPLATE) -> str:
        records = "\n".join(r.digest() for r in self.pending())
        return (template.replace("{summary}", self.summary.text or "(none)")
                .replace("{records}", records).replace("{cap}", str(self.summary.sentence_cap)))

    def update_summary(self, complete: Callable[[str], str], template: str = SUMMARY_TEMPLATE) -> LongTermSummary:
        """Fold the records newer than the last update into the summary.

        ``complete`` maps a prompt to the provider's reply. On provider failure
        the old summary stays in place and the error propagates. With nothing
        new to fold the summary is returned unchanged without a provider call.
        """
        pending = self.pending()
        if not pending:
            return self.summary
        prompt = self.summary_prompt(template)
        reply = complete(prompt)
        self.summary = replace(self.summary, text=cap_sentences(reply, self.summary.sentence_cap),
                               last_updated_iteration=pending[-1].iteration)
        return self.summary
