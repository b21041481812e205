"""Toolbar exploration: hover each item, read its tooltip, write a skill for it."""

from __future__ import annotations

import logging
from typing import TYPE_CHECKING, Sequence

from ..augmentation import centroid, marks_in_region, segment_to_marks
from ..errors import CradleError, SkillSyntaxError
from ..io_env import MouseMove, Wait
from ..observation import Frame
from ..provider import SectionSchema, parse_sections
from ..skills import SkillCall, compile_call, extract_code_blocks, parse, validate
from .runconfig import Rect, ToolbarConfig

if TYPE_CHECKING:
    from .agent import Agent

log = logging.getLogger(__name__)

TOOLTIP = SectionSchema.of(Description="text", Available="bool")


def toolbar_items(frame: Frame, config: ToolbarConfig, segmenter, region: Rect | None = None) -> list[Rect]:
    """Outermost segments inside the toolbar region, in reading order."""
    marks = segment_to_marks(frame, segmenter)
    return [m.rect for m in marks_in_region(marks, region or config.region, config.min_item_size)]


def _explore_item(agent: "Agent", rect: Rect, depth: int, out: list[str]) -> None:
    cfg = agent.config.toolbar
    x, y = centroid(rect)
    agent.io.execute(MouseMove(x, y))
    agent.io.execute(Wait(cfg.hover_wait))
    frame = agent.capture.snap()
    s = parse_sections(agent.complete("toolbar_tooltip", {"x": x, "y": y}, {"frame": [frame]}), TOOLTIP)
    description = s["Description"].strip()
    if not s["Available"] or description.lower() in ("", "none"):
        log.info("toolbar item at (%d, %d) skipped: %s", x, y, description or "no tooltip")
        return
    reply = agent.complete("toolbar_skill", {"x": x, "y": y, "description": description,
                                             "skill_names": ", ".join(agent.store.names()) or "none"},
                           {"frame": [frame]})
    blocks = extract_code_blocks(reply)
    if not blocks:
        log.info("no skill written for toolbar item %r", description)
        return
    try:
        script = parse(blocks[0])
    except SkillSyntaxError as exc:
        log.info("toolbar skill for %r does not parse: %s", description, exc)
        return
    errors = validate(script, agent.registry())
    if errors or script.params:
        log.info("toolbar skill %s rejected: %s", script.name, [str(e) for e in errors] or "takes parameters")
        return
    agent.store.add_skill(script, agent.provider, "generated", 0)
    out.append(script.name)
    if depth > 0 or cfg.submenu_region is None:
        return
    # open the second level and treat its items the same way
    try:
        agent.io.execute_sequence(compile_call(SkillCall(script.name), agent.registry(), agent.io.screen))
    except CradleError as exc:
        log.info("toolbar skill %s failed to run: %s", script.name, exc)
        return
    opened = agent.capture.snap()
    for sub in toolbar_items(opened, cfg, agent.segmenter, cfg.submenu_region):
        _explore_item(agent, sub, depth + 1, out)


def explore_toolbar(agent: "Agent", items: Sequence[Rect]) -> list[str]:
    """Generate and register a skill for every available toolbar item; returns
    the new skill names in registration order."""
    out: list[str] = []
    for rect in items:
        _explore_item(agent, rect, 0, out)
    return out
