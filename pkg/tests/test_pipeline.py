from __future__ import annotations

import json

import numpy as np
import pytest

from cradle.augmentation import ComponentSegmenter, render_marks, segment_to_marks
from cradle.errors import ConfigError
from cradle.io_env import PauseStrategy
from cradle.memory import SkillStore, build_store
from cradle.observation import Frame, VideoClip
from cradle.pipeline import (
    Action,
    Agent,
    AugmentConfig,
    ReflectionOutcome,
    RunConfig,
    TaskSpec,
    TaskStack,
    load_prompts,
    read_trajectory,
    replay,
    summarize,
)
from cradle.provider import HashEmbedder, ScriptedProvider, pixel_digest
from cradle.simenv import SimEnv, parse_scenario
from cradle.skills import SkillCall, load_preset

WORLD = """
seed 2
screen 320 240
tile 32
move_rate 2
pause key esc
grid
##########
#@.......#
#........#
##########
end
goal reach G
"""
WORLD = WORLD.replace("#........#\n##", "#.......G#\n##")

DESK = """
screen 320 240
pause none
widget a 20,20,80,50 "A" "Alpha" enabled effect=none
widget b 100,20,160,50 "B" "Beta" enabled effect=none
widget c 180,20,240,50 "C" "Gamma" enabled effect=none
goal clicked c
"""

DEFAULTS = {
    "gather_ocr": "none",
    "gather_describe": "Description: a screen",
    "reflect": "Success: true\nTask done: false\nContinue held action: false\nAnalysis: none",
    "infer_task": "New task: none",
    "curate": "No new skills.",
    "summary": "Working on it.",
    "plan": "Actions:\nmove_right(0.5)",
}


def games_agent(plans=(), extra=None, defaults=None, **cfg) -> Agent:
    env = SimEnv(parse_scenario(WORLD))
    queues = {"plan": list(plans), **(extra or {})}
    provider = ScriptedProvider(queues, {**DEFAULTS, **(defaults or {})}, HashEmbedder(16))
    store = build_store(load_preset("games"), provider, 16)
    config = RunConfig(task="Reach the goal tile", mode="games", pause=PauseStrategy.parse(cfg.pop("pause", "key:esc")),
                       top_k=20, **cfg)
    return Agent(env, config, provider, store)


def desk_agent(plans, **cfg) -> Agent:
    env = SimEnv(parse_scenario(DESK))
    provider = ScriptedProvider({"plan": list(plans)}, DEFAULTS, HashEmbedder(16))
    store = build_store(load_preset("software"), provider, 16)
    config = RunConfig(task="Click C", mode="software", actions_per_step=2, top_k=20,
                       augment=AugmentConfig(marks="standard", min_mark_area=16), **cfg)
    return Agent(env, config, provider, store)


def lines_of(path) -> list[dict]:
    return [json.loads(x) for x in open(path)]


# --- task stack --------------------------------------------------------------------


def test_short_task_yields_after_exactly_window_iterations():
    stack = TaskStack(TaskSpec("root"), window=3)
    active = []
    for it in range(1, 9):
        stack.expire(it)
        if it == 2:
            stack.push(TaskSpec("dodge", "short", it))
        active.append(stack.active.description)
    assert active.count("dodge") == 3
    assert active == ["root", "dodge", "dodge", "dodge", "root", "root", "root", "root"]


def test_stack_rules():
    stack = TaskStack(TaskSpec("root"))
    assert stack.pop() is None and len(stack) == 1  # root stays
    assert not stack.push(TaskSpec("ROOT "))
    stack.push(TaskSpec("chop tree", "long", 1))
    stack.push(TaskSpec("flee", "short", 2))
    stack.push(TaskSpec("hide", "short", 3))  # replaces the active short task
    assert [t.description for t in stack.tasks] == ["root", "chop tree", "hide"]
    assert stack.pop().description == "hide" and stack.active.description == "chop tree"
    with pytest.raises(ValueError):
        TaskSpec("x", "medium")
    with pytest.raises(ValueError):
        ReflectionOutcome(last_action_ok=False)


def test_short_task_window_through_the_loop(tmp_path):
    infer = ["New task: none", "New task: Step around the bush\nHorizon: short"]
    agent = games_agent(extra={"infer_task": infer}, max_steps=7)
    agent.run(tmp_path / "t.jsonl")
    tasks = [r["task"]["description"] for r in lines_of(tmp_path / "t.jsonl") if r["kind"] == "iteration"]
    assert tasks[1:5] == ["Step around the bush"] * 3 + ["Reach the goal tile"]
    assert tasks.count("Step around the bush") == 3


def test_task_done_pops_before_new_proposal(tmp_path):
    reflect_done = "Success: true\nTask done: true\nAnalysis: none"
    agent = games_agent(extra={"infer_task": ["New task: Open the chest\nHorizon: long", "New task: none",
                                              "New task: none"],
                               "reflect": [reflect_done]},
                        max_steps=3)
    agent.run(tmp_path / "t.jsonl")
    recs = [r for r in lines_of(tmp_path / "t.jsonl") if r["kind"] == "iteration"]
    assert recs[0]["stack"] == ["Reach the goal tile", "Open the chest"]
    assert recs[1]["stack"] == ["Reach the goal tile"]  # the reflection said done at iteration 2


# --- execute ------------------------------------------------------------------------


def test_execute_is_bracketed_by_pause_toggles(tmp_path):
    agent = games_agent(max_steps=1)
    agent.run(tmp_path / "t.jsonl")
    it = [r for r in lines_of(tmp_path / "t.jsonl") if r["kind"] == "iteration"][0]
    kinds = [(e[1], e[2]) for e in it["events"]]
    # the toggle that paused the game before the loop, then unpause / act / pause
    assert kinds == [("key_down", "esc"), ("key_up", "esc")] * 2 + [("key_down", "d"), ("key_up", "d"),
                                                                   ("key_down", "esc"), ("key_up", "esc")]
    assert agent.env.paused and agent.env.avatar == (2, 1)


def test_compile_error_runs_nothing(tmp_path):
    agent = games_agent(plans=['Actions:\nmove_right("far")'], max_steps=1)
    agent.run(tmp_path / "t.jsonl")
    it = [r for r in lines_of(tmp_path / "t.jsonl") if r["kind"] == "iteration"][0]
    assert [e[1:] for e in it["events"]] == [["key_down", "esc"], ["key_up", "esc"]]  # initial pause only
    assert it["reports"] == [] and "released" not in it
    assert it["errors"] and it["errors"][0].startswith("ArgumentMismatch")
    assert agent.env.avatar == (1, 1)


def test_execution_error_recorded_and_game_paused_again(tmp_path):
    agent = games_agent(plans=["Actions:\nmove_right(99)"], max_steps=1)
    agent.run(tmp_path / "t.jsonl")
    it = [r for r in lines_of(tmp_path / "t.jsonl") if r["kind"] == "iteration"][0]
    assert [r["outcome"] for r in it["reports"]] == ["error"]
    assert it["errors"][0].startswith("DurationOutOfRange")
    assert agent.env.paused and agent.env.avatar == (1, 1)


def test_errors_are_recorded_and_loop_continues(tmp_path):
    agent = games_agent(plans=["Actions:\nfly_away(1)", "Actions:\nmove_right(0.5)"], max_steps=2)
    result = agent.run(tmp_path / "t.jsonl")
    recs = [r for r in lines_of(tmp_path / "t.jsonl") if r["kind"] == "iteration"]
    assert recs[0]["errors"][0].startswith("UnknownSkillChosen")
    assert recs[1]["errors"] == [] and result.reason == "max_steps"


def test_failed_reflection_needs_analysis(tmp_path):
    agent = games_agent(extra={"reflect": ["Success: false\nTask done: false\nAnalysis: none"]}, max_steps=2)
    agent.run(tmp_path / "t.jsonl")
    recs = [r for r in lines_of(tmp_path / "t.jsonl") if r["kind"] == "iteration"]
    assert recs[1]["errors"][0].startswith("MissingField")


def test_infeasible_stops_at_step_two(tmp_path):
    agent = games_agent(plans=["Actions:\nmove_right(0.5)", "Actions:\ntask_is_not_feasible()"], max_steps=5)
    result = agent.run(tmp_path / "t.jsonl")
    assert (result.steps_used, result.success, result.reason) == (2, False, "infeasible")


def test_max_steps(tmp_path):
    agent = games_agent(plans=["Actions:\nmove_down(0.5)"] * 3, defaults={"plan": "Actions:\nmove_up(0.5)"},
                        max_steps=3)
    result = agent.run(tmp_path / "t.jsonl")
    assert (result.steps_used, result.reason) == (3, "max_steps")
    assert lines_of(tmp_path / "t.jsonl")[-1]["held_after_exit"] == []


def test_goal_reached(tmp_path):
    agent = games_agent(plans=["Actions:\nmove_right(3.5)", "Actions:\nmove_down(0.5)"], max_steps=5)
    result = agent.run(tmp_path / "t.jsonl")
    assert (result.steps_used, result.success, result.reason) == (2, True, "goal")


def test_fatal_provider_error_ends_run(tmp_path):
    agent = games_agent(max_steps=3)
    agent.provider.defaults.pop("plan")
    result = agent.run(tmp_path / "t.jsonl")
    last = lines_of(tmp_path / "t.jsonl")[-1]
    assert result.reason == "error" and last["error"].startswith("ProviderExhausted")
    assert last["held_after_exit"] == []


def test_games_mode_keeps_one_call(tmp_path):
    agent = games_agent(plans=["Actions:\nmove_right(0.5)\nmove_down(0.5)"], max_steps=1)
    agent.run(tmp_path / "t.jsonl")
    it = [r for r in lines_of(tmp_path / "t.jsonl") if r["kind"] == "iteration"][0]
    assert it["action"]["calls"] == ["move_right(0.5)"] and it["action"]["dropped"] == ["move_down(0.5)"]


def test_held_keys_released_unless_continued(tmp_path):
    hold = '```skill\nskill sprint() doc "Hold shift to run." {\n    key_hold("shift");\n}\n```'
    cont = "Success: true\nTask done: false\nContinue held action: true\nAnalysis: none"
    agent = games_agent(plans=["Actions:\nsprint()", "Actions:\nmove_right(0.5)", "Actions:\nmove_right(0.5)"],
                        extra={"curate": [hold], "reflect": [cont]}, max_steps=3)
    agent.run(tmp_path / "t.jsonl")
    recs = [r for r in lines_of(tmp_path / "t.jsonl") if r["kind"] == "iteration"]
    assert recs[0]["curation"]["new_skills"] == ["sprint"]
    assert recs[1]["released"] == []  # continued and not in conflict
    assert recs[2]["released"] == ["key:shift"]
    assert agent.store.get("sprint").source == "generated"


def test_curate_rejects_invalid_skills(tmp_path):
    bad = ('```skill\nskill move_up(d: number) doc "dup" { key_press("w", d); }\n```\n'
           '```skill\nskill broken( doc\n```\n'
           '```skill\nskill loop() doc "x" { call loop(); }\n```')
    agent = games_agent(extra={"curate": [bad]}, max_steps=1)
    agent.run(tmp_path / "t.jsonl")
    cur = [r for r in lines_of(tmp_path / "t.jsonl") if r["kind"] == "iteration"][0]["curation"]
    assert cur["new_skills"] == []
    assert [r["name"] for r in cur["rejected"]] == ["move_up", None, "loop"]


# --- observation routing ----------------------------------------------------------


def test_reflection_gets_eight_frames_from_twenty():
    agent = games_agent(max_steps=1)
    agent.last_action = Action([SkillCall("move_right", (0.5,))])
    rasters = [np.full((240, 320, 3), i * 10, np.uint8) for i in range(20)]
    clip = VideoClip(tuple(Frame(i, i, r) for i, r in enumerate(rasters)), 2.0, 0, 20)
    agent.stage_reflect(clip)
    req = agent.requests[-1]
    assert req.purpose == "reflect"
    assert [int(img.frame.pixels[0, 0, 0]) for img in req.images()] == [i * 10 for i in (0, 3, 5, 8, 11, 14, 16, 19)]


def test_software_reflection_uses_first_and_last():
    agent = desk_agent([])
    agent.last_action = Action([SkillCall("click_on", (1,))])
    rasters = [np.full((240, 320, 3), i, np.uint8) for i in range(7)]
    agent.stage_reflect(VideoClip(tuple(Frame(i, i, r) for i, r in enumerate(rasters)), 2.0, 0, 7))
    assert [int(i.frame.pixels[0, 0, 0]) for i in agent.requests[-1].images()] == [0, 6]


def test_describe_image_is_the_marked_frame(tmp_path):
    agent = desk_agent(["Actions:\nclick_on(4)"], max_steps=1)
    screen = agent.env.render()  # nothing changes the screen before the first look
    agent.run(tmp_path / "t.jsonl")
    marks = segment_to_marks(Frame(0, 0, screen), ComponentSegmenter(min_area=16))
    expected = pixel_digest(render_marks(Frame(0, 0, screen), marks, "standard").frame)
    describe = next(r for r in agent.requests if r.purpose == "gather_describe")
    assert [pixel_digest(i.frame) for i in describe.images()] == [expected]


def test_software_click_by_mark_and_two_calls(tmp_path):
    # mark 1 is the background; the widgets are marks 2, 3 and 4
    agent = desk_agent(["Actions:\nclick_on(2)\nclick_on(4)\nclick_on(3)"], max_steps=2)
    result = agent.run(tmp_path / "t.jsonl")
    it = [r for r in lines_of(tmp_path / "t.jsonl") if r["kind"] == "iteration"][0]
    assert len(it["action"]["calls"]) == 2 and it["action"]["dropped"] == ["click_on(3)"]
    assert agent.env.clicked[:2] == ["a", "c"] and result.success


# --- trajectories --------------------------------------------------------------------


def test_trajectory_replays(tmp_path):
    path = tmp_path / "t.jsonl"
    agent = games_agent(plans=["Actions:\nmove_right(3.5)", "Actions:\nmove_down(0.5)"], max_steps=5)
    agent.run(path)
    lines = read_trajectory(path)
    assert summarize(lines).success
    assert len(replay(lines, SimEnv(parse_scenario(WORLD)))) == len(lines) - 1


def test_replay_with_edited_event_mismatches(tmp_path):
    from cradle.errors import DigestMismatch

    path = tmp_path / "t.jsonl"
    games_agent(plans=["Actions:\nmove_right(3.5)"], max_steps=1).run(path)
    lines = read_trajectory(path)
    it = lines[1]
    for ev in it["events"]:
        if ev[1:] == ["key_down", "d"]:
            ev[2] = "s"
        elif ev[1:] == ["key_up", "d"]:
            ev[2] = "s"
    with pytest.raises(DigestMismatch):
        replay(lines, SimEnv(parse_scenario(WORLD)))


def test_prompt_overrides(tmp_path):
    p = tmp_path / "plan.txt"
    p.write_text("Task: {task}\n<image:last_frame>\nActions:")
    assert load_prompts({"plan": p})["plan"].text.startswith("Task:")
    bad = tmp_path / "bad.txt"
    bad.write_text("{nonsense}")
    with pytest.raises(ConfigError):
        load_prompts({"plan": bad})
    with pytest.raises(ConfigError):
        load_prompts({"nope": p})


def test_run_config_rules():
    with pytest.raises(ValueError):
        RunConfig(task="t", mode="games", actions_per_step=2)
    with pytest.raises(ValueError):
        RunConfig(task="t", max_steps=0)
    assert RunConfig(task="t", mode="games").reflection_frames == 8
    assert RunConfig(task="t", mode="software").reflection_frames == 2
