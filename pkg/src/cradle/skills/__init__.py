"""Skill language: parsing, validation, compilation and preset libraries."""

from __future__ import annotations

from importlib import resources

from .ast import SkillScript, serialize
from .calls import BUILTIN_NATIVES, INFEASIBLE, NativeSkill, Skill, SkillCall, parse_call, parse_calls
from .compiler import compile_call, compile_script
from .parser import extract_code_blocks, parse, parse_library
from .validate import ValidationError, validate

PRESETS = ("games", "software")


def preset_text(name: str) -> str:
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; choose from {PRESETS}")
    return resources.files(__package__).joinpath("presets", f"{name}.skill").read_text()


def load_preset(name: str) -> list[SkillScript]:
    return parse_library(preset_text(name))


__all__ = [
    "BUILTIN_NATIVES", "INFEASIBLE", "NativeSkill", "PRESETS", "Skill", "SkillCall", "SkillScript",
    "ValidationError", "compile_call", "compile_script", "extract_code_blocks", "load_preset", "parse",
    "parse_call", "parse_calls", "parse_library", "preset_text", "serialize", "validate",
]
