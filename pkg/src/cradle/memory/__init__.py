"""Procedural (skill) and episodic (experience) memories."""

from .episodic import EpisodicRecord, EpisodicStore, LongTermSummary, cap_sentences, split_sentences
from .procedural import DEFAULT_TOP_K, SkillEntry, SkillStore, build_store, normalize

__all__ = [
    "DEFAULT_TOP_K", "EpisodicRecord", "EpisodicStore", "LongTermSummary", "SkillEntry", "SkillStore",
    "build_store", "cap_sentences", "normalize", "split_sentences",
]
