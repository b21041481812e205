from __future__ import annotations

import pytest

from cradle.clock import SimClock
from cradle.errors import ScenarioParseError
from cradle.io_env import ButtonClick, IOEnv, KeyPress, MouseMove, PauseStrategy, TypeText, Wait
from cradle.simenv import SimEnv, parse_scenario
from cradle.simenv.env import TOOLTIP_TICKS
from conftest import E2E

WORLD = """
seed 1
screen 320 240
tile 32
move_rate 2
pause key esc
grid
#######
#@.R.D#
#.....#
#######
end
tool 1 pickaxe
obstacle R rock pickaxe
goal cleared 1
"""

DESK = """
screen 320 240
pause none
widget ok 10,10,60,30 "OK" "Confirm the order" enabled effect=submit:price
widget locked 70,10,120,30 "Lock" "" disabled effect=none
widget price_box 10,40,110,60 "Price" "" enabled effect=focus:price
input price 10,70,110,90 "Offer"
goal submitted price 80 100
"""


def rig(text: str, tick: float = 0.05):
    env = SimEnv(parse_scenario(text), tick)
    clock = SimClock(tick)
    clock.add_listener(env.on_tick)
    return env, IOEnv(env, clock), clock


def test_movement_rate_and_blocking():
    env, io, _ = rig(WORLD)
    io.execute(KeyPress("d", 0.5))  # 2 tiles/s for 0.5 s = one tile
    assert env.avatar == (2, 1)
    io.execute(KeyPress("d", 2.0))  # rock in the way
    assert env.avatar == (2, 1) and env.blocked and env.facing == "right"


def test_half_tile_rounds_on_release():
    env, io, _ = rig(WORLD)
    io.execute(KeyPress("s", 0.25))
    assert env.avatar == (1, 2)
    env2, io2, _ = rig(WORLD)
    io2.execute(KeyPress("s", 0.2))
    assert env2.avatar == (1, 1)


def test_tool_use_clears_obstacle_and_goal():
    env, io, _ = rig(WORLD)
    io.execute(KeyPress("d", 0.5))
    io.execute(KeyPress("c", 0.1))
    assert env.message == "no tool selected"
    io.execute(KeyPress("1", 0.1))
    io.execute(KeyPress("c", 0.1))
    assert env.cleared == 1 and env.check_goal() and env.grid[1][3] == "."


def test_turning():
    env, io, _ = rig(WORLD)
    io.execute(KeyPress("right", 0.5))  # one quarter turn clockwise from down
    assert env.facing == "left"
    io.execute(KeyPress("left", 1.0))
    assert env.facing == "right"


def test_pause_key_freezes_time():
    env, io, clock = rig(WORLD)
    esc = PauseStrategy.parse("key:esc")
    io.pause(esc)
    assert env.paused and not env.running
    before = env.sim_ticks
    clock.advance(40)
    assert env.sim_ticks == before
    io.execute(KeyPress("d", 1.0))  # ignored while paused
    assert env.avatar == (1, 1)
    io.unpause(esc)
    assert env.running
    io.execute(KeyPress("d", 0.5))
    assert env.avatar == (2, 1)


def test_focus_pause_ignored_when_not_configured():
    env, io, _ = rig(WORLD)
    io.pause(PauseStrategy.parse("focus"))
    assert env.running and env.ignored and env.ignored[-1][1].kind == "focus_out"


def test_tooltip_after_hover_and_hidden_by_click():
    env, io, _ = rig(DESK)
    io.execute(MouseMove(20, 20))
    assert env.tooltip() is None
    io.execute(Wait(TOOLTIP_TICKS * 0.05))
    assert env.tooltip() == "Confirm the order"
    io.execute(ButtonClick("left", 0.0))
    assert env.tooltip() is None
    io.execute(MouseMove(80, 20))
    io.execute(Wait(0.5))
    assert env.tooltip() is None  # disabled widget has no tooltip


def test_typing_and_submit():
    env, io, _ = rig(DESK)
    io.execute(MouseMove(20, 80))
    io.execute(ButtonClick("left", 0.05))
    assert env.focused_input == "price"
    io.execute(TypeText("90"))
    assert env.values["price"] == "90"
    io.execute(MouseMove(20, 20))
    io.execute(ButtonClick("left", 0.05))
    assert env.submitted == {"price": "90"} and env.check_goal()
    io.execute(MouseMove(80, 20))
    io.execute(ButtonClick("left", 0.05))
    assert "locked" not in env.clicked


def test_render_and_digest_deterministic():
    a, io_a, _ = rig(WORLD)
    b, io_b, _ = rig(WORLD)
    for io in (io_a, io_b):
        io.execute(KeyPress("d", 0.5))
    assert a.digest() == b.digest()
    px = a.render()
    assert px.shape == (240, 320, 3) and px.dtype.name == "uint8"
    io_b.execute(KeyPress("s", 0.5))
    assert a.digest() != b.digest()


def test_fixture_scenarios_load():
    for name in ("clear_obstacles", "navigate_door", "toolbar", "haggle"):
        sc = parse_scenario((E2E / name / "scenario.txt").read_text())
        assert sc.goals


@pytest.mark.parametrize("text, fragment", [
    ("screen 10 10", "screen too small"),
    ("pause sometimes", "unknown pause mode"),
    ("grid\n#@#\n", "not closed"),
    ("tool 12 axe", "one digit"),
    ("bogus 1", "unknown directive"),
    ("grid\n#@#\n#@#\nend", "more than one '@'"),
    ("grid\n####\n#@.\nend", "same length"),
    ("grid\n#.#\nend", "without an avatar"),
    ('widget a 0,0,10,10 "A" "" maybe effect=none', "enabled or disabled"),
    ('widget a 0,0,10,10 "A" "" enabled effect=explode', "unknown effect"),
    ("goal clicked nowhere", "unknown widget"),
    ("grid\n#@R#\nend\nobstacle R rock pickaxe", "undeclared tool"),
])
def test_parse_errors(text, fragment):
    with pytest.raises(ScenarioParseError) as info:
        parse_scenario(text)
    assert fragment in str(info.value)
