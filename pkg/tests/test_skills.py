from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cradle.augmentation import MarkSet
from cradle.errors import (
    ArgumentMismatch,
    ExpressionOverflow,
    LabelNotFound,
    MalformedCall,
    ProgramTooLarge,
    SkillSyntaxError,
    UnknownCallee,
)
from cradle.io_env import ButtonClick, KeyPress, MouseMove, Wait
from cradle.skills import (
    BUILTIN_NATIVES,
    PRESETS,
    SkillCall,
    compile_call,
    compile_script,
    extract_code_blocks,
    load_preset,
    parse,
    parse_call,
    parse_calls,
    parse_library,
    serialize,
    validate,
)
from synth import skill_corpus

SCREEN = (1920, 1080)


def registry(*presets: str) -> dict:
    reg = dict(BUILTIN_NATIVES)
    for p in presets:
        for s in load_preset(p):
            reg[s.name] = s
    return reg


def codes(script_text: str, reg: dict | None = None) -> list[str]:
    return [e.code for e in validate(parse(script_text), reg if reg is not None else registry("games"))]


def test_corpus_roundtrip(rng):
    corpus = skill_corpus(rng, 50)
    assert len({s.name for s in corpus}) == 50
    for script in corpus:
        text = serialize(script)
        back = parse(text)
        assert back == script
        assert serialize(back) == text


def test_library_roundtrip(rng):
    corpus = skill_corpus(rng, 50)
    text = "\n".join(serialize(s) for s in corpus)
    assert parse_library(text) == corpus


@pytest.mark.parametrize("preset", PRESETS)
def test_presets_parse_validate_and_roundtrip(preset):
    reg = dict(BUILTIN_NATIVES)
    for script in load_preset(preset):
        assert parse(serialize(script)) == script
        assert validate(script, reg) == []
        reg[script.name] = script


def test_semicolons_and_comments_optional():
    a = parse('skill t() doc "x" { key_press("w", 1) # hold\n wait(0.5) }')
    b = parse('skill t() doc "x" {\n  key_press("w", 1);\n  wait(0.5);\n}')
    assert a == b


@pytest.mark.parametrize("text, expected", [
    ('skill () doc "x" { wait(1); }', "skill name"),
    ('skill a() { wait(1); }', "'doc' clause"),
    ('skill a() doc "x" { }', "at least one statement"),
    ('skill a(p: colour) doc "x" { wait(1); }', "one of number|string|point|label"),
    ('skill a() doc "x" { launch(1); }', "primitive name, 'call' or 'repeat'"),
    ('skill a() doc "x" { repeat 0 { wait(1); } }', "integer repeat count"),
    ('skill a() doc "x" { repeat 1001 { wait(1); } }', "integer repeat count"),
    ('skill a() doc "x" { wait(1); ', "'}'"),
])
def test_syntax_errors_name_the_expectation(text, expected):
    with pytest.raises(SkillSyntaxError) as info:
        parse(text)
    assert info.value.expected == expected


def test_syntax_error_location():
    with pytest.raises(SkillSyntaxError) as info:
        parse('skill a() doc "x" {\n    wait(1);\n    bogus(2);\n}')
    assert (info.value.line, info.value.col) == (3, 5)


def test_duplicate_name_rejected():
    assert "DuplicateName" in codes('skill move_up(d: number) doc "again" { key_press("w", d); }')


def test_unknown_callee_rejected():
    assert codes('skill a() doc "x" { call fly(3); }') == ["UnknownCallee"]


def test_direct_recursion_rejected():
    assert "RecursionRejected" in codes('skill spin(n: number) doc "x" { call spin(n); }')


def test_mutual_recursion_rejected():
    reg = registry("games")
    ping = parse('skill ping() doc "x" { call pong(); }')
    pong = parse('skill pong() doc "x" { call ping(); }')
    assert [e.code for e in validate(ping, reg)] == ["UnknownCallee"]
    reg["ping"] = ping
    assert [e.code for e in validate(pong, reg)] == ["RecursionRejected"]


@pytest.mark.parametrize("body, code", [
    ('key_press("nokey", 1);', "InvalidKey"),
    ('key_combo("ctrl+ctrl");', "InvalidKey"),
    ('key_press("w", 99);', "DurationOutOfRange"),
    ('key_press("w", 1, 2);', "ArityMismatch"),
    ('mouse_move("here");', "KindMismatch"),
    ('button_click("centre");', "KindMismatch"),
    ('click_on_label(0);', "KindMismatch"),
    ('wait(q);', "UnknownParam"),
    ('wait(1 / 0);', "ExpressionOverflow"),
    ('call move_up("fast");', "KindMismatch"),
    ('call move_up(1, 2);', "ArityMismatch"),
])
def test_validation_codes(body, code):
    assert codes(f'skill a() doc "x" {{ {body} }}') == [code]


def test_empty_doc_and_duplicate_param():
    assert codes('skill a(x: number, x: number) doc " " { wait(x); }') == ["EmptyDoc", "DuplicateParam"]


def test_turn_and_move_forward_is_concatenation():
    reg = registry("games")
    whole = compile_call(SkillCall("turn_and_move_forward", (90, 2.5)), reg, SCREEN)
    parts = compile_call(SkillCall("turn", (90,)), reg, SCREEN) + compile_call(SkillCall("move_forward", (2.5,)), reg, SCREEN)
    assert whole == parts == [KeyPress("right", 0.5), KeyPress("w", 2.5)]


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 360), st.floats(0, 10, allow_nan=False))
def test_composition_property(degree, duration):
    reg = registry("games")
    whole = compile_call(SkillCall("turn_and_move_forward", (degree, duration)), reg, SCREEN)
    parts = compile_call(SkillCall("turn", (degree,)), reg, SCREEN) + \
        compile_call(SkillCall("move_forward", (duration,)), reg, SCREEN)
    assert whole == parts


def test_composition_fails_like_its_parts():
    from cradle.errors import DurationOutOfRange

    reg = registry("games")
    with pytest.raises(DurationOutOfRange):
        compile_call(SkillCall("turn", (-90,)), reg, SCREEN)
    with pytest.raises(DurationOutOfRange):
        compile_call(SkillCall("turn_and_move_forward", (-90, 1)), reg, SCREEN)


def test_repeat_unrolls_and_limits():
    s = parse('skill tap3() doc "x" { repeat 3 { key_press("c", 0.1); wait(0.2); } }')
    out = compile_script(s, (), {}, SCREEN)
    assert out == [KeyPress("c", 0.1), Wait(0.2)] * 3
    big = parse('skill big() doc "x" { repeat 1000 { repeat 1000 { wait(0); } } }')
    with pytest.raises(ProgramTooLarge):
        compile_script(big, (), {}, SCREEN)


def test_labels_and_relative_points():
    reg = registry("software")
    marks = MarkSet.from_rects([(10, 10, 30, 20)])
    assert compile_call(SkillCall("click_on", (1,)), reg, SCREEN, marks) == [MouseMove(20, 15), ButtonClick("left", 0.05)]
    with pytest.raises(LabelNotFound):
        compile_call(SkillCall("click_on", (2,)), reg, SCREEN, marks)
    rel = parse('skill mid() doc "x" { mouse_move((0.5, 0.5), 0, "relative"); }')
    assert compile_script(rel, (), {}, SCREEN) == [MouseMove(960, 540)]


def test_runtime_argument_errors():
    reg = registry("games")
    with pytest.raises(ArgumentMismatch):
        compile_call(SkillCall("move_up", ("far",)), reg, SCREEN)
    with pytest.raises(ArgumentMismatch):
        compile_call(SkillCall("move_up", ()), reg, SCREEN)
    with pytest.raises(UnknownCallee):
        compile_call(SkillCall("fly", ()), reg, SCREEN)
    s = parse('skill div(n: number) doc "x" { wait(1 / n); }')
    with pytest.raises(ExpressionOverflow):
        compile_script(s, (0,), {}, SCREEN)


def test_parse_call_forms():
    reg = registry("games")
    assert parse_call("move_right(3.5)") == SkillCall("move_right", (3.5,))
    assert parse_call("turn_and_move_forward(duration=2, degree=90);", reg) == \
        SkillCall("turn_and_move_forward", (90, 2))
    assert parse_call("click_at_position([3, 4])").args == ((3, 4),)
    for bad in ("move_right(x)", "os.system('x')", "move_right(3", "move_right(True)"):
        with pytest.raises(MalformedCall):
            parse_call(bad)


def test_parse_calls_tolerates_list_markup():
    text = "```\n1. move_up(1)\n- `use_tool()`\n\n* select_tool(\"2\")\n```"
    assert [str(c) for c in parse_calls(text)] == ['move_up(1)', 'use_tool()', 'select_tool("2")']


def test_extract_code_blocks():
    reply = "Here:\n```skill\nskill a() doc \"x\" { wait(1); }\n```\nand\n```python\nprint(1)\n```"
    blocks = extract_code_blocks(reply)
    assert len(blocks) == 1 and parse(blocks[0]).name == "a"
