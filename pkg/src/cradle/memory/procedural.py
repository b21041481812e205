"""Skill store with documentation embeddings and cosine top-k retrieval."""

from __future__ import annotations

import base64
import json
import re
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Literal, Mapping, Protocol, Sequence

import numpy as np

from ..errors import (
    CorruptEntry,
    DimensionMismatch,
    DuplicateName,
    FormatVersionMismatch,
    NotFound,
    SkillError,
)
from ..skills.ast import CallSkill, Param, Ref, SkillScript, serialize
from ..skills.calls import BUILTIN_NATIVES, NativeSkill, Skill
from ..skills.parser import parse

FORMAT_VERSION = "v1"
DEFAULT_TOP_K = 10
Source = Literal["predefined", "generated", "composed"]
SOURCES = ("predefined", "generated", "composed")


class Embedder(Protocol):
    def embed(self, texts: Sequence[str]) -> list[np.ndarray]: ...


def normalize(v) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64).ravel()
    n = float(np.linalg.norm(v))
    if not np.isfinite(n) or n == 0.0:
        raise ValueError("cannot normalize a zero or non-finite vector")
    return v / n


@dataclass(eq=False)
class SkillEntry:
    script: Skill
    embedding: np.ndarray
    source: Source = "predefined"
    created_at: int = 0

    def __post_init__(self):
        self.embedding = normalize(self.embedding)
        if self.source not in SOURCES:
            raise ValueError(f"unknown source {self.source!r}")

    @property
    def name(self) -> str:
        return self.script.name

    @property
    def doc(self) -> str:
        return self.script.doc

    @property
    def is_native(self) -> bool:
        return isinstance(self.script, NativeSkill)

    def signature(self) -> str:
        params = ", ".join(f"{p.name}: {p.kind}" for p in self.script.params)
        return f"{self.name}({params})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, SkillEntry):
            return NotImplemented
        same_script = (self.script.name == other.script.name if self.is_native or other.is_native
                       else self.script == other.script)
        return (same_script and self.is_native == other.is_native and self.source == other.source
                and self.created_at == other.created_at and np.array_equal(self.embedding, other.embedding))


class SkillStore:
    """Entries keyed by name, all embeddings of one dimension.

    Writes are serialized by an internal lock; retrieval reads a snapshot of
    the entry table and may run concurrently.
    """

    def __init__(self, dim: int):
        if dim < 1:
            raise ValueError("dimension must be positive")
        self.dim = dim
        self._entries: dict[str, SkillEntry] = {}
        self._lock = threading.RLock()

    # queries ----------------------------------------------------------------

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, name: object) -> bool:
        return name in self._entries

    def __eq__(self, other) -> bool:
        if not isinstance(other, SkillStore):
            return NotImplemented
        return self.dim == other.dim and self._entries == other._entries

    def names(self) -> list[str]:
        return sorted(self._entries)

    def entries(self) -> list[SkillEntry]:
        return [self._entries[n] for n in self.names()]

    def get(self, name: str) -> SkillEntry:
        try:
            return self._entries[name]
        except KeyError:
            raise NotFound(f"no skill named {name!r}") from None

    def registry(self) -> dict[str, Skill]:
        return {n: e.script for n, e in self._entries.items()}

    # writes -----------------------------------------------------------------

    def _check_dim(self, v: np.ndarray) -> None:
        if v.shape != (self.dim,):
            raise DimensionMismatch(f"embedding has shape {v.shape}, store dimension is {self.dim}")

    def add(self, entry: SkillEntry) -> None:
        self._check_dim(entry.embedding)
        with self._lock:
            if entry.name in self._entries:
                raise DuplicateName(f"a skill named {entry.name!r} already exists")
            self._entries[entry.name] = entry

    def add_skill(self, script: Skill, embedder: Embedder, source: Source = "predefined",
                  created_at: int = 0) -> SkillEntry:
        if script.name in self._entries:
            raise DuplicateName(f"a skill named {script.name!r} already exists")
        entry = SkillEntry(script, embedder.embed([script.doc])[0], source, created_at)
        self.add(entry)
        return entry

    def update(self, name: str, new_script: Skill, embedder: Embedder, *, source: Source | None = None) -> SkillEntry:
        """Replace a skill's script; the embedding is recomputed only if the doc changed."""
        with self._lock:
            old = self.get(name)
            if new_script.name != name:
                raise ValueError(f"cannot rename {name!r} to {new_script.name!r} via update")
            emb = old.embedding if new_script.doc == old.doc else embedder.embed([new_script.doc])[0]
            entry = SkillEntry(new_script, emb, source or old.source, old.created_at)
            self._check_dim(entry.embedding)
            self._entries[name] = entry
            return entry

    def compose(self, name: str, parts: Sequence[str], doc: str, embedder: Embedder,
                created_at: int = 0) -> SkillEntry:
        """Create a skill calling ``parts`` in order, forwarding all their parameters.

        Parameters keep their names unless two parts share one, in which case
        the later copy is prefixed with its skill's name.
        """
        params: list[Param] = []
        body = []
        taken: set[str] = set()
        for part in parts:
            callee = self.get(part).script
            args = []
            for p in callee.params:
                pname = p.name if p.name not in taken else f"{part}_{p.name}"
                taken.add(pname)
                params.append(Param(pname, p.kind))
                args.append(Ref(pname))
            body.append(CallSkill(part, tuple(args)))
        script = SkillScript(name, tuple(params), doc, tuple(body))
        return self.add_skill(script, embedder, "composed", created_at)

    # retrieval --------------------------------------------------------------

    def retrieve_by_vector(self, task_vec, k: int = DEFAULT_TOP_K) -> list[SkillEntry]:
        if k < 1:
            raise ValueError("k must be at least 1")
        q = normalize(task_vec)
        self._check_dim(q)
        entries = list(self._entries.values())
        if not entries:
            return []
        # Row-wise reduction, not a matrix product: BLAS gemv can round identical
        # rows differently depending on their position, which breaks exact ties.
        sims = (np.stack([e.embedding for e in entries]) * q).sum(axis=1)
        order = sorted(range(len(entries)), key=lambda i: (-sims[i], entries[i].name))
        return [entries[i] for i in order[:k]]

    def retrieve(self, task_text: str, k: int, embedder: Embedder) -> list[SkillEntry]:
        return self.retrieve_by_vector(embedder.embed([task_text])[0], k)

    # persistence ------------------------------------------------------------

    def persist(self, path: str | Path) -> Path:
        path = Path(path)
        lines = [f"skillstore {FORMAT_VERSION} dim={self.dim} count={len(self)}"]
        for e in self.entries():
            lines.append(f"entry {e.name}")
            lines.append("doc " + json.dumps(e.doc))
            lines.append(f"source {e.source}")
            lines.append(f"created {e.created_at}")
            lines.append("embedding " + base64.b64encode(e.embedding.astype("<f8").tobytes()).decode("ascii"))
            if e.is_native:
                lines.append(f"native {e.name}")
            else:
                lines.append("```skill")
                lines.extend(serialize(e.script).rstrip("\n").split("\n"))
                lines.append("```")
            lines.append("end")
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        return path

    @classmethod
    def load(cls, path: str | Path, natives: Mapping[str, NativeSkill] = BUILTIN_NATIVES) -> "SkillStore":
        lines = Path(path).read_text(encoding="utf-8").split("\n")
        m = re.fullmatch(r"skillstore (\S+) dim=(\d+) count=(\d+)", lines[0].strip()) if lines else None
        if m is None:
            if lines and lines[0].startswith("skillstore "):
                raise FormatVersionMismatch(f"unrecognized header {lines[0]!r}")
            raise CorruptEntry("missing skill store header")
        if m.group(1) != FORMAT_VERSION:
            raise FormatVersionMismatch(f"store version {m.group(1)}, expected {FORMAT_VERSION}")
        store = cls(int(m.group(2)))
        expected = int(m.group(3))
        it = iter(enumerate(lines[1:], start=2))

        def take(prefix: str) -> str:
            for lineno, line in it:
                if prefix == "" or line.startswith(prefix):
                    return line[len(prefix):]
                raise CorruptEntry(f"line {lineno}: expected {prefix.strip()!r}, got {line!r}")
            raise CorruptEntry(f"file ends while expecting {prefix.strip() or 'more data'!r}")

        for _ in range(expected):
            name = take("entry ")
            try:
                doc = json.loads(take("doc "))
                source = take("source ")
                created = int(take("created "))
                raw = base64.b64decode(take("embedding "), validate=True)
                emb = np.frombuffer(raw, dtype="<f8").astype(np.float64)
            except (ValueError, json.JSONDecodeError) as exc:
                raise CorruptEntry(f"entry {name!r}: {exc}") from None
            head = take("")
            if head.startswith("native "):
                native = natives.get(head[len("native "):])
                if native is None:
                    raise CorruptEntry(f"entry {name!r} refers to unknown native skill")
                script: Skill = native
            elif head == "```skill":
                body = []
                while (line := take("")) != "```":
                    body.append(line)
                try:
                    script = parse("\n".join(body))
                except SkillError as exc:
                    raise CorruptEntry(f"entry {name!r}: {exc}") from None
            else:
                raise CorruptEntry(f"entry {name!r}: expected script block, got {head!r}")
            if take("") != "end":
                raise CorruptEntry(f"entry {name!r} is not terminated")
            if script.name != name or script.doc != doc:
                raise CorruptEntry(f"entry {name!r}: name or doc disagrees with its script")
            try:
                store.add(SkillEntry(script, emb, source, created))  # type: ignore[arg-type]
            except (ValueError, DimensionMismatch, DuplicateName) as exc:
                raise CorruptEntry(f"entry {name!r}: {exc}") from None
        return store


def build_store(scripts: Iterable[Skill], embedder: Embedder, dim: int, source: Source = "predefined") -> SkillStore:
    store = SkillStore(dim)
    for s in scripts:
        store.add_skill(s, embedder, source)
    return store
