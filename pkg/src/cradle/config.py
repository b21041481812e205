"""Run profiles: INI-style files with [run], [env], [augment], [toolbar],
[provider], [skills] and [prompts] sections.

Relative paths are resolved against the profile's directory when loading and
are kept absolute afterwards, so ``load(serialize(p)) == p`` wherever the
serialized text is written. Credentials never live in profiles; the remote
provider reads its key from the environment.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any

from .errors import ConfigError
from .io_env import PauseStrategy
from .pipeline.prompts import PROMPT_SLOTS
from .pipeline.runconfig import AugmentConfig, RunConfig, ToolbarConfig
from .skills import PRESETS

PROVIDER_KINDS = ("scripted", "cassette", "remote")


@dataclass(frozen=True)
class ProviderSettings:
    kind: str = "cassette"
    base_url: str = "https://api.openai.com/v1"
    embed_model: str = "text-embedding-3-small"
    embed_dim: int = 64
    timeout: float = 60.0
    cassette: str | None = None
    script: str | None = None

    def __post_init__(self):
        if self.kind not in PROVIDER_KINDS:
            raise ValueError(f"provider kind must be one of {PROVIDER_KINDS}")
        if self.embed_dim < 1:
            raise ValueError("embed_dim must be positive")


@dataclass(frozen=True)
class SkillSettings:
    presets: tuple[str, ...] = ()
    store: str | None = None

    def __post_init__(self):
        bad = [p for p in self.presets if p not in PRESETS]
        if bad:
            raise ValueError(f"unknown skill presets {bad}")


@dataclass(frozen=True)
class Profile:
    name: str
    scenario: str
    run: RunConfig
    provider: ProviderSettings = field(default_factory=ProviderSettings)
    skills: SkillSettings = field(default_factory=SkillSettings)
    prompts: tuple[tuple[str, str], ...] = ()
    trajectory: str | None = None

    def prompt_overrides(self) -> dict[str, str]:
        return dict(self.prompts)


# --- value codecs -------------------------------------------------------------------


def _rect(text: str) -> tuple[int, int, int, int]:
    parts = [int(p) for p in text.replace(" ", "").split(",")]
    if len(parts) != 4 or parts[0] >= parts[2] or parts[1] >= parts[3] or min(parts) < 0:
        raise ValueError(f"bad rectangle {text!r}; expected x0,y0,x1,y1")
    return tuple(parts)  # type: ignore[return-value]


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("true", "yes", "on", "1"):
        return True
    if t in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _fmt(v: Any) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple) and len(v) == 4 and all(isinstance(x, int) for x in v):
        return ",".join(str(x) for x in v)
    if isinstance(v, PauseStrategy):
        return str(v)
    return str(v)


# section, key -> (RunConfig field, parser); text_region is optional
_RUN_KEYS: dict[str, tuple[str, Any]] = {
    "task": ("task", str),
    "mode": ("mode", str),
    "max_steps": ("max_steps", int),
    "actions_per_step": ("actions_per_step", int),
    "pause": ("pause", PauseStrategy.parse),
    "fps": ("fps", float),
    "k": ("k", int),
    "top_k": ("top_k", int),
    "short_task_window": ("short_task_window", int),
    "summary_stride": ("summary_stride", int),
    "sentence_cap": ("sentence_cap", int),
    "reflection_width": ("reflection_width", int),
    "text_region": ("text_region", _rect),
    "keyframe_threshold": ("keyframe_threshold", float),
    "settle": ("settle", float),
    "generate_skills": ("generate_skills", _bool),
}
_ENV_KEYS = {"tick_seconds": ("tick_seconds", float)}
_MODEL_KEYS = {"model": ("model", str), "temperature": ("temperature", float), "max_tokens": ("max_tokens", int)}
_AUGMENT_KEYS = {"grid": _bool, "grid_rows": int, "grid_cols": int, "bands": _bool, "pointer": _bool,
                 "marks": str, "min_mark_area": int, "watermark": str}
_TOOLBAR_KEYS = {"region": _rect, "submenu_region": _rect, "hover_wait": float, "min_item_size": int}
_PROVIDER_KEYS = {"kind": str, "base_url": str, "embed_model": str, "embed_dim": int, "timeout": float,
                  "cassette": str, "script": str}
_PATH_KEYS = {("augment", "watermark"), ("provider", "cassette"), ("provider", "script"), ("skills", "store"),
              ("env", "scenario"), ("run", "trajectory")}
_OUTPUT_PATHS = {("provider", "cassette"), ("run", "trajectory")}  # may not exist yet


def _path(base: Path, text: str, must_exist: bool, what: str) -> str:
    p = Path(text).expanduser()
    if not p.is_absolute():
        p = base / p
    p = p.resolve()
    if must_exist and not p.exists():
        raise ConfigError(f"{what} {p} does not exist")
    return str(p)


def parse_profile(text: str, base_dir: str | Path = ".", name: str = "profile", *, check_files: bool = True) -> Profile:
    base = Path(base_dir)
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str  # keep key case
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse profile: {exc}") from None
    known = {"run", "env", "augment", "toolbar", "provider", "skills", "prompts"}
    unknown = set(cp.sections()) - known
    if unknown:
        raise ConfigError(f"unknown profile sections {sorted(unknown)}")

    def section(name: str) -> dict[str, str]:
        return dict(cp.items(name)) if cp.has_section(name) else {}

    def take(sec: str, items: dict[str, str], table: dict[str, Any]) -> dict[str, Any]:
        out: dict[str, Any] = {}
        for key, raw in items.items():
            if key not in table:
                raise ConfigError(f"[{sec}] unknown key {key!r}")
            spec = table[key]
            fname, conv = spec if isinstance(spec, tuple) else (key, spec)
            if (sec, key) in _PATH_KEYS:
                must_exist = check_files and (sec, key) not in _OUTPUT_PATHS
                out[fname] = _path(base, raw, must_exist, f"[{sec}] {key}")
                continue
            try:
                out[fname] = conv(raw.strip())
            except ValueError as exc:
                raise ConfigError(f"[{sec}] {key}: {exc}") from None
        return out

    try:
        run_items = section("run")
        profile_name = run_items.pop("name", name)
        trajectory = run_items.pop("trajectory", None)
        if trajectory is not None:
            trajectory = _path(base, trajectory, False, "[run] trajectory")
        env_items = section("env")
        scenario_raw = env_items.pop("scenario", None)
        if scenario_raw is None:
            raise ConfigError("[env] scenario is required")
        scenario = _path(base, scenario_raw, check_files, "[env] scenario")
        kwargs = take("run", run_items, _RUN_KEYS)
        kwargs.update(take("env", env_items, _ENV_KEYS))
        prov_items = section("provider")
        kwargs.update(take("provider", {k: v for k, v in prov_items.items() if k in _MODEL_KEYS}, _MODEL_KEYS))
        provider = ProviderSettings(**take("provider", {k: v for k, v in prov_items.items()
                                                         if k not in _MODEL_KEYS}, _PROVIDER_KEYS))
        if "task" not in kwargs:
            raise ConfigError("[run] task is required")
        if cp.has_section("augment"):
            kwargs["augment"] = AugmentConfig(**take("augment", section("augment"), _AUGMENT_KEYS))
        if cp.has_section("toolbar"):
            tb = take("toolbar", section("toolbar"), _TOOLBAR_KEYS)
            if "region" not in tb:
                raise ConfigError("[toolbar] region is required")
            kwargs["toolbar"] = ToolbarConfig(**tb)
        run = RunConfig(**kwargs)
        sk = section("skills")
        unknown_sk = set(sk) - {"presets", "store"}
        if unknown_sk:
            raise ConfigError(f"[skills] unknown keys {sorted(unknown_sk)}")
        presets = tuple(p.strip() for p in sk.get("presets", "").split(",") if p.strip())
        store = _path(base, sk["store"], check_files, "[skills] store") if "store" in sk else None
        skills = SkillSettings(presets, store)
        prompts = []
        for pname, ppath in section("prompts").items():
            if pname not in PROMPT_SLOTS:
                raise ConfigError(f"[prompts] unknown template {pname!r}")
            prompts.append((pname, _path(base, ppath, check_files, f"[prompts] {pname}")))
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from None
    return Profile(profile_name, scenario, run, provider, skills, tuple(sorted(prompts)), trajectory)


def load_profile(path: str | Path, *, check_files: bool = True) -> Profile:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read profile {path}: {exc}") from None
    return parse_profile(text, path.parent, path.stem, check_files=check_files)


def serialize_profile(p: Profile) -> str:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    r = p.run
    defaults = RunConfig(task=r.task)
    run: dict[str, str] = {"name": p.name}
    for key, (fname, _) in _RUN_KEYS.items():
        v = getattr(r, fname)
        if v is not None:
            run[key] = _fmt(v)
    if p.trajectory:
        run["trajectory"] = p.trajectory
    cp["run"] = run
    cp["env"] = {"scenario": p.scenario, "tick_seconds": _fmt(r.tick_seconds)}
    if r.augment != defaults.augment:
        cp["augment"] = {f.name: _fmt(getattr(r.augment, f.name)) for f in fields(AugmentConfig)
                         if getattr(r.augment, f.name) is not None}
    if r.toolbar is not None:
        cp["toolbar"] = {f.name: _fmt(getattr(r.toolbar, f.name)) for f in fields(ToolbarConfig)
                         if getattr(r.toolbar, f.name) is not None}
    prov = {k: _fmt(getattr(r, k)) for k in _MODEL_KEYS}
    prov.update({f.name: _fmt(getattr(p.provider, f.name)) for f in fields(ProviderSettings)
                 if getattr(p.provider, f.name) is not None})
    cp["provider"] = prov
    sk = {"presets": ",".join(p.skills.presets)}
    if p.skills.store:
        sk["store"] = p.skills.store
    cp["skills"] = sk
    if p.prompts:
        cp["prompts"] = dict(p.prompts)
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def with_overrides(p: Profile, *, max_steps: int | None = None) -> Profile:
    if max_steps is None:
        return p
    try:
        return replace(p, run=replace(p.run, max_steps=max_steps))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
