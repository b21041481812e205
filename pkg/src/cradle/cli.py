"""Command-line entry point: ``cradle run|replay|skills|metrics|augment``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Sequence

from .augmentation import ComponentSegmenter, GridSpec, draw_grid, draw_pointer, draw_side_bands, render_marks, \
    segment_to_marks
from .config import Profile, load_profile, with_overrides
from .errors import (
    ConfigError,
    CradleError,
    DigestMismatch,
    NotFound,
    ProviderConfigError,
    ScenarioParseError,
    TrajectoryParseError,
)
from .harness import efficiency, fmt_pct, load_ledger, report_json, report_text, success_report, summarize_run, \
    trade_report
from .memory import SkillStore, build_store
from .observation import load_png, save_png
from .pipeline import Agent, load_prompts, read_trajectory, replay
from .provider import CassetteProvider, HashEmbedder, RemoteProvider, ScriptedProvider
from .simenv import load_scenario
from .skills import BUILTIN_NATIVES, load_preset, parse_library, serialize, validate

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _err(msg: str) -> None:
    print(f"cradle: {msg}", file=sys.stderr)


# --- shared builders --------------------------------------------------------------------


def build_skill_store(presets: Sequence[str], store_path: str | None, dim: int) -> SkillStore:
    embedder = HashEmbedder(dim)
    if store_path:
        store = SkillStore.load(store_path)
        if store.dim != dim and len(store):
            raise ConfigError(f"skill store {store_path} has dimension {store.dim}, profile expects {dim}")
    else:
        store = SkillStore(dim)
    for name in presets:
        for script in load_preset(name):
            if script.name not in store:
                store.add_skill(script, embedder, "predefined")
    return store


def build_provider(profile: Profile, *, cassette: str | None, record: bool, script: str | None):
    ps = profile.provider
    embedder = HashEmbedder(ps.embed_dim)
    inner = None
    script = script or ps.script
    if script:
        try:
            inner = ScriptedProvider.from_json(script, embedder)
        except (OSError, ValueError) as exc:
            raise ProviderConfigError(f"cannot read provider script {script}: {exc}") from None
    elif ps.kind == "remote":
        inner = RemoteProvider(ps.base_url, profile.run.model, ps.embed_model, timeout=ps.timeout)
    cassette = cassette or ps.cassette
    if cassette:
        if record:
            return CassetteProvider(cassette, "record", inner, embedder)
        return CassetteProvider(cassette, "strict", embedder=embedder)
    if record:
        raise ProviderConfigError("--record needs --cassette")
    if inner is None:
        raise ProviderConfigError("no provider: give --cassette, --script or a remote provider in the profile")
    return inner


# --- run ------------------------------------------------------------------------------------


def cmd_run(args: argparse.Namespace) -> int:
    try:
        profile = with_overrides(load_profile(args.profile), max_steps=args.max_steps)
        env = load_scenario(profile.scenario, profile.run.tick_seconds)
        store = build_skill_store(profile.skills.presets, profile.skills.store, profile.provider.embed_dim)
        provider = build_provider(profile, cassette=args.cassette, record=args.record, script=args.script)
        prompts = load_prompts(profile.prompt_overrides())
    except (ConfigError, ProviderConfigError, ScenarioParseError) as exc:
        _err(str(exc))
        return EXIT_CONFIG
    except CradleError as exc:
        _err(f"{type(exc).__name__}: {exc}")
        return EXIT_CONFIG
    trajectory = args.trajectory or profile.trajectory or f"{profile.name}.trajectory.jsonl"
    result = Agent(env, profile.run, provider, store, prompts=prompts).run(trajectory)
    if args.save_store:
        store.persist(args.save_store)
    print(json.dumps(result.to_json(), sort_keys=True))
    return EXIT_OK if result.success else EXIT_FAIL


# --- replay -----------------------------------------------------------------------------------


def cmd_replay(args: argparse.Namespace) -> int:
    try:
        lines = read_trajectory(args.trajectory)
        tick = float(lines[0].get("tick_seconds", 0.05))
        env = load_scenario(args.scenario, tick)
    except (TrajectoryParseError, ScenarioParseError, OSError) as exc:
        _err(str(exc))
        return EXIT_CONFIG
    try:
        checkpoints = replay(lines, env)
    except DigestMismatch as exc:
        _err(f"mismatch: {exc}")
        return EXIT_FAIL
    except TrajectoryParseError as exc:
        _err(str(exc))
        return EXIT_CONFIG
    print(f"ok: {len(checkpoints)} checkpoints match, final digest {checkpoints[-1][:16] if checkpoints else '-'}")
    return EXIT_OK


# --- skills ----------------------------------------------------------------------------------------


def _skills_store(args: argparse.Namespace) -> SkillStore:
    presets = [p for p in (args.preset or "").split(",") if p]
    if args.store:
        store = SkillStore.load(args.store)
        return build_skill_store(presets, args.store, store.dim) if presets else store
    return build_skill_store(presets, None, args.dim)


def cmd_skills(args: argparse.Namespace) -> int:
    try:
        store = _skills_store(args)
    except CradleError as exc:
        _err(f"{type(exc).__name__}: {exc}")
        return EXIT_CONFIG
    if args.action == "list":
        for e in store.entries():
            print(f"{e.signature()}  {e.doc}")
        return EXIT_OK
    if args.action == "show":
        try:
            e = store.get(args.name)
        except NotFound as exc:
            _err(f"NotFound: {exc}")
            return EXIT_FAIL
        print(f"# source: {e.source}")
        print(f"native {e.name}" if e.is_native else serialize(e.script), end="" if not e.is_native else "\n")
        return EXIT_OK
    # lint
    try:
        scripts = parse_library(Path(args.path).read_text(encoding="utf-8"))
    except OSError as exc:
        _err(str(exc))
        return EXIT_CONFIG
    except CradleError as exc:
        print(f"{args.path}: SyntaxError {exc}")
        return EXIT_FAIL
    registry = {**BUILTIN_NATIVES, **store.registry()}
    bad = 0
    for script in scripts:
        errors = validate(script, registry)
        if errors:
            bad += 1
            for e in errors:
                print(f"{args.path}: {script.name}: {e}")
        else:
            registry[script.name] = script
    print(f"{len(scripts)} skills, {bad} with errors")
    return EXIT_FAIL if bad else EXIT_OK


# --- metrics ---------------------------------------------------------------------------------------------


def cmd_metrics(args: argparse.Namespace) -> int:
    try:
        if args.kind == "trade":
            rows = trade_report(load_ledger(args.ledger))
            if not args.json:
                rows = {k: f"{v}%" for k, v in rows.items()}
        elif args.kind == "success":
            rows = success_report([summarize_run(p) for p in args.trajectories])
        else:
            rows = {"efficiency": fmt_pct(efficiency(args.expected, args.actual))}
    except (CradleError, ZeroDivisionError, ValueError) as exc:
        _err(f"{type(exc).__name__}: {exc}")
        return EXIT_FAIL
    print(report_json(rows) if args.json else report_text(rows))
    return EXIT_OK


# --- augment ---------------------------------------------------------------------------------------------


def cmd_augment(args: argparse.Namespace) -> int:
    try:
        frame = load_png(args.input)
    except OSError as exc:
        _err(str(exc))
        return EXIT_CONFIG
    try:
        marks = segment_to_marks(frame, ComponentSegmenter(min_area=args.min_area)) if args.marks else None
        view = frame
        if args.pointer:
            x, y = (int(v) for v in args.pointer.split(","))
            view = draw_pointer(view, (x, y))
        if args.grid:
            rows, cols = (int(v) for v in args.grid.split("x"))
            view, _ = draw_grid(view, GridSpec(rows, cols))
        if args.bands:
            view = draw_side_bands(view)
        if marks is not None:
            view = render_marks(view, marks, args.marks).frame
            for m in marks:
                print(f"{m.id}: {m.rect[0]},{m.rect[1]},{m.rect[2]},{m.rect[3]}")
    except (CradleError, ValueError) as exc:
        _err(f"{type(exc).__name__}: {exc}")
        return EXIT_FAIL
    save_png(view, args.output)
    return EXIT_OK


# --- parser ---------------------------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cradle", description="Screen-in, keyboard/mouse-out agent runtime.")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run the agent loop on a profile")
    r.add_argument("--profile", required=True)
    r.add_argument("--max-steps", type=int)
    r.add_argument("--cassette")
    mode = r.add_mutually_exclusive_group()
    mode.add_argument("--record", action="store_true", help="record provider replies into the cassette")
    mode.add_argument("--strict", action="store_true", help="replay only; a miss aborts the run (default)")
    r.add_argument("--script", help="JSON file of scripted provider replies")
    r.add_argument("--trajectory", help="where to write the trajectory (JSON lines)")
    r.add_argument("--save-store", help="persist the skill store after the run")
    r.set_defaults(fn=cmd_run)

    rp = sub.add_parser("replay", help="re-emit a trajectory's events and verify render digests")
    rp.add_argument("--trajectory", required=True)
    rp.add_argument("--scenario", required=True)
    rp.set_defaults(fn=cmd_replay)

    s = sub.add_parser("skills", help="inspect skill stores and lint skill files")
    s.add_argument("--store", help="persisted skill store")
    s.add_argument("--preset", help="comma-separated preset libraries (games, software)")
    s.add_argument("--dim", type=int, default=64, help="embedding size when no store is given")
    ss = s.add_subparsers(dest="action", required=True)
    ss.add_parser("list")
    show = ss.add_parser("show")
    show.add_argument("name")
    lint = ss.add_parser("lint")
    lint.add_argument("path")
    s.set_defaults(fn=cmd_skills)

    m = sub.add_parser("metrics", help="evaluation metrics")
    m.add_argument("--json", action="store_true")
    ms = m.add_subparsers(dest="kind", required=True)
    t = ms.add_parser("trade")
    t.add_argument("ledger")
    sc = ms.add_parser("success")
    sc.add_argument("trajectories", nargs="+")
    ef = ms.add_parser("efficiency")
    ef.add_argument("--expected", type=float, required=True)
    ef.add_argument("--actual", type=float, required=True)
    m.set_defaults(fn=cmd_metrics)

    a = sub.add_parser("augment", help="draw visual prompts onto a screenshot")
    a.add_argument("input")
    a.add_argument("output")
    a.add_argument("--grid", help="ROWSxCOLS")
    a.add_argument("--bands", action="store_true")
    a.add_argument("--pointer", help="x,y")
    a.add_argument("--marks", choices=("standard", "uniform"))
    a.add_argument("--min-area", type=int, default=16)
    a.set_defaults(fn=cmd_augment)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * args.verbose
    logging.basicConfig(level=max(level, logging.DEBUG), format="%(levelname)s %(name)s: %(message)s")
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
