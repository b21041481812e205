from __future__ import annotations

from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cradle.config import Profile, ProviderSettings, SkillSettings, load_profile, parse_profile, serialize_profile, \
    with_overrides
from cradle.errors import ConfigError
from cradle.io_env import PauseStrategy
from cradle.pipeline import AugmentConfig, RunConfig, ToolbarConfig
from conftest import E2E, E2E_NAMES


@pytest.mark.parametrize("name", E2E_NAMES)
def test_fixture_profiles_load_and_roundtrip(name, tmp_path):
    p = load_profile(E2E / name / "profile.ini")
    assert p.name == name and Path(p.scenario).is_absolute() and Path(p.scenario).exists()
    text = serialize_profile(p)
    (tmp_path / "copy.ini").write_text(text)
    assert load_profile(tmp_path / "copy.ini") == p


def test_toolbar_profile_values():
    p = load_profile(E2E / "toolbar" / "profile.ini")
    assert p.run.toolbar == ToolbarConfig((0, 196, 320, 228), (0, 156, 320, 196), 0.2)
    assert p.run.augment.marks == "standard" and p.run.actions_per_step == 2
    assert p.skills.presets == ("software",) and p.provider.kind == "cassette"


BASE = "[run]\ntask = t\n[env]\nscenario = s.txt\n"


@pytest.mark.parametrize("text, fragment", [
    ("[run]\ntask = t\n", "scenario is required"),
    ("[env]\nscenario = s.txt\n", "task is required"),
    (BASE + "[weird]\n", "unknown profile sections"),
    (BASE.replace("task = t", "task = t\ncolour = red"), "unknown key"),
    (BASE.replace("task = t", "task = t\nmax_steps = many"), "max_steps"),
    (BASE.replace("task = t", "task = t\nmode = games\nactions_per_step = 2"), "one action per step"),
    (BASE + "[toolbar]\nhover_wait = 1\n", "region is required"),
    (BASE + "[toolbar]\nregion = 5,5,1,1\n", "bad rectangle"),
    (BASE + "[skills]\npresets = chess\n", "unknown skill presets"),
    (BASE + "[prompts]\nnope = x.txt\n", "unknown template"),
    (BASE + "[provider]\nkind = psychic\n", "provider kind"),
    ("not an ini", "cannot parse"),
])
def test_profile_errors(text, fragment):
    with pytest.raises(ConfigError) as info:
        parse_profile(text, ".", check_files=False)
    assert fragment in str(info.value)


def test_missing_input_file_reported(tmp_path):
    with pytest.raises(ConfigError) as info:
        parse_profile(BASE, tmp_path)
    assert "does not exist" in str(info.value)
    # outputs need not exist yet
    (tmp_path / "s.txt").write_text("goal clicked x")
    p = parse_profile(BASE + "[provider]\ncassette = new.jsonl\n", tmp_path)
    assert p.provider.cassette == str((tmp_path / "new.jsonl").resolve())


def test_overrides():
    p = parse_profile(BASE, "/tmp", check_files=False)
    assert with_overrides(p, max_steps=3).run.max_steps == 3
    assert with_overrides(p) is p
    with pytest.raises(ConfigError):
        with_overrides(p, max_steps=0)


rect = st.tuples(st.integers(0, 100), st.integers(0, 100), st.integers(1, 50), st.integers(1, 50)).map(
    lambda t: (t[0], t[1], t[0] + t[2], t[1] + t[3]))
words = st.text(st.sampled_from("abcdefgh xyz"), min_size=1, max_size=20).map(str.strip).filter(bool)


@st.composite
def profiles(draw):
    mode = draw(st.sampled_from(["games", "software"]))
    aug = AugmentConfig(grid=draw(st.booleans()), grid_rows=draw(st.integers(1, 6)), bands=draw(st.booleans()),
                        marks=draw(st.sampled_from(["none", "standard", "uniform"])))
    toolbar = draw(st.none() | st.builds(ToolbarConfig, rect, st.none() | rect, st.floats(0, 2), st.integers(1, 20)))
    run = RunConfig(
        task=draw(words), mode=mode, max_steps=draw(st.integers(1, 500)),
        actions_per_step=1 if mode == "games" else draw(st.sampled_from([1, 2])),
        pause=PauseStrategy.parse(draw(st.sampled_from(["none", "focus", "key:esc", "key:p"]))),
        fps=draw(st.floats(0.5, 60)), tick_seconds=draw(st.sampled_from([0.01, 0.05, 0.1])),
        k=draw(st.integers(1, 10)), top_k=draw(st.integers(1, 30)), text_region=draw(st.none() | rect),
        keyframe_threshold=draw(st.floats(0.001, 0.5)), settle=draw(st.floats(0, 1)),
        generate_skills=draw(st.booleans()), temperature=draw(st.floats(0, 2)), augment=aug, toolbar=toolbar)
    provider = ProviderSettings(kind=draw(st.sampled_from(["scripted", "cassette", "remote"])),
                                embed_dim=draw(st.integers(1, 256)), timeout=draw(st.floats(1, 120)),
                                cassette=draw(st.none() | st.just("/abs/c.jsonl")))
    skills = SkillSettings(tuple(draw(st.lists(st.sampled_from(["games", "software"]), unique=True))))
    return Profile(draw(st.sampled_from(["alpha", "beta_2"])), "/abs/scenario.txt", run, provider, skills,
                   trajectory=draw(st.none() | st.just("/abs/out.jsonl")))


@settings(max_examples=80, deadline=None)
@given(profiles())
def test_serialize_roundtrip(p):
    assert parse_profile(serialize_profile(p), "/", "ignored", check_files=False) == p
