"""The agent loop: gather, reflect, infer the task, curate skills, plan, execute."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping, Protocol, Sequence

import numpy as np

from ..augmentation import (
    ComponentSegmenter,
    GridSpec,
    MarkSet,
    Template,
    draw_grid,
    draw_pointer,
    draw_side_bands,
    filter_watermarks,
    render_marks,
    segment_to_marks,
)
from ..clock import SimClock
from ..errors import (
    BackendFailure,
    CassetteMiss,
    CradleError,
    EmptyClip,
    MissingField,
    ProviderConfigError,
    ProviderExhausted,
    SkillSyntaxError,
    SourceUnavailable,
    UnknownSkillChosen,
)
from ..io_env import (
    ButtonClick,
    ButtonHold,
    ButtonRelease,
    Event,
    ExecReport,
    Hotkey,
    IOEnv,
    KeyCombo,
    KeyHold,
    KeyPress,
    KeyRelease,
    MouseDrag,
    TypeText,
    Wait,
    _char_keys,
)
from ..memory import EpisodicRecord, EpisodicStore, SkillEntry, SkillStore
from ..observation import CaptureConfig, Frame, VideoClip, downscale_to_width, extract_keyframes, load_png, \
    sample_frames, start_capture, stop_capture
from ..provider import CompletionRequest, Message, SectionSchema, TextPart, parse_sections
from ..skills import BUILTIN_NATIVES, INFEASIBLE, NativeSkill, Skill, SkillCall, compile_call, \
    extract_code_blocks, parse, parse_calls, validate
from .prompts import PromptTemplate, load_prompts
from .runconfig import RunConfig
from .tasks import ReflectionOutcome, TaskSpec, TaskStack
from .trajectory import RunResult, TrajectoryWriter, encode_events

log = logging.getLogger(__name__)

# errors after which the run cannot make progress
FATAL = (CassetteMiss, ProviderExhausted, ProviderConfigError, BackendFailure, SourceUnavailable)

DESCRIBE = SectionSchema.of(Description="text")
REFLECT = SectionSchema.of(Success="bool", Task_done="bool", Continue_held_action="bool?", Analysis="text?")
INFER = SectionSchema.of(New_task="text", Horizon="text?")
PLAN = SectionSchema.of(Reasoning="text?", Actions="text")

NONE_WORDS = ("none", "no", "n/a", "nothing", "no new skills")


def _is_none(text: str | None) -> bool:
    return text is None or text.strip().strip("`*.").strip().lower() in NONE_WORDS or not text.strip()


class Environment(Protocol):
    """What the loop needs from the thing it controls."""

    screen_size: tuple[int, int]

    def emit(self, tick: int, event: Event) -> None: ...

    def on_tick(self, tick: int) -> None: ...

    def render(self) -> np.ndarray: ...

    def check_goal(self) -> bool: ...

    def digest(self) -> str: ...


class TeeBackend:
    """Forwards events to the environment and keeps a copy for the trajectory."""

    def __init__(self, inner: Environment):
        self.inner = inner
        self.screen_size = inner.screen_size
        self.log: list[tuple[int, Event]] = []

    def emit(self, tick: int, event: Event) -> None:
        self.inner.emit(tick, event)
        self.log.append((tick, event))


@dataclass
class GatheredInfo:
    keyframe_texts: list[str]
    last_frame_description: str
    marks: MarkSet | None = None
    view: Frame | None = None  # the (possibly augmented) frame shown to the model

    @property
    def ocr(self) -> str:
        texts = [t for t in self.keyframe_texts if not _is_none(t)]
        return "\n".join(texts) if texts else "none"

    def to_json(self) -> dict[str, Any]:
        return {
            "keyframe_texts": list(self.keyframe_texts),
            "description": self.last_frame_description,
            "marks": [[m.id, *m.rect] for m in self.marks] if self.marks is not None else None,
            "view_digest": self.view.digest() if self.view is not None else None,
        }


@dataclass
class Action:
    calls: list[SkillCall]
    reasoning: str = ""
    dropped: list[str] = field(default_factory=list)

    def to_json(self) -> dict[str, Any]:
        return {"calls": [str(c) for c in self.calls], "reasoning": self.reasoning, "dropped": self.dropped}


@dataclass
class Curation:
    new_skills: list[str]
    rejected: list[dict[str, Any]]
    retrieved: list[SkillEntry]

    def to_json(self) -> dict[str, Any]:
        return {"new_skills": self.new_skills, "rejected": self.rejected,
                "retrieved": [e.name for e in self.retrieved]}


def _touched(prims) -> tuple[set[str], set[str]]:
    keys: set[str] = set()
    buttons: set[str] = set()
    for p in prims:
        if isinstance(p, (KeyPress, KeyHold)):
            keys.add(p.key)
        elif isinstance(p, (KeyCombo, Hotkey)):
            keys.update(p.keys)
        elif isinstance(p, TypeText):
            for ch in p.text:
                keys.update(_char_keys(ch))
        elif isinstance(p, (ButtonClick, ButtonHold)):
            buttons.add(p.button)
        elif isinstance(p, MouseDrag):
            buttons.add("left")
    return keys, buttons


class Agent:
    """One run of the loop against one environment.

    The agent owns the clock, the executor and the capture handle. ``env``
    must be fresh: the trajectory header records its initial render.
    """

    def __init__(self, env: Environment, config: RunConfig, provider, store: SkillStore, *,
                 prompts: Mapping[str, PromptTemplate] | None = None,
                 natives: Mapping[str, NativeSkill] = BUILTIN_NATIVES):
        self.env = env
        self.config = config
        self.provider = provider
        self.store = store
        self.prompts = dict(prompts) if prompts is not None else load_prompts()
        self.natives = dict(natives)
        self.clock = SimClock(config.tick_seconds)
        self.clock.add_listener(env.on_tick)  # env steps before capture samples it
        self.backend = TeeBackend(env)
        self.io = IOEnv(self.backend, self.clock)
        self.capture = start_capture(env.render, CaptureConfig(config.fps, reflection_width=config.reflection_width),
                                     self.clock)
        self.episodic = EpisodicStore(config.k, config.sentence_cap)
        self.stack = TaskStack(TaskSpec(config.task, "long", 0), config.short_task_window)
        self.segmenter = ComponentSegmenter(min_area=config.augment.min_mark_area)
        wm = config.augment.watermark
        self.watermark = Template(Path(wm).stem, load_png(wm).pixels) if wm else None
        self.reflection = ReflectionOutcome()
        self.last_action: Action | None = None
        self.last_reports: list[ExecReport] = []
        self.marks: MarkSet | None = None
        self.iteration = 0
        self.requests: list[CompletionRequest] = []
        self._mark = 0  # index into the backend log of the next unrecorded event

    # provider ------------------------------------------------------------------

    def complete(self, template: str, values: Mapping[str, object] | None = None,
                 images: Mapping[str, Sequence[Frame]] | None = None) -> str:
        msg = self.prompts[template].render(values or {}, images)
        req = CompletionRequest(self.config.model, (msg,), self.config.temperature, self.config.max_tokens,
                                purpose=template)
        self.requests.append(req)
        return self.provider.complete(req)

    def registry(self) -> dict[str, Skill]:
        return {**self.natives, **self.store.registry()}

    # observation ---------------------------------------------------------------

    def clip(self) -> VideoClip:
        try:
            return self.capture.clip_since_last_action()
        except EmptyClip:
            pass
        frame = self.capture.snap()
        try:
            return self.capture.clip_since_last_action()
        except EmptyClip:
            # nothing happened since the last look; reuse the newest frame
            return VideoClip((frame,), self.config.fps, frame.timestamp, self.clock.now)

    def augment(self, frame: Frame) -> tuple[Frame, MarkSet | None]:
        aug = self.config.augment
        marks = None
        if aug.marks != "none":
            marks = segment_to_marks(frame, self.segmenter)
            if self.watermark is not None:
                marks = filter_watermarks(marks, frame, self.watermark)
        view = frame
        if aug.pointer:
            view = draw_pointer(view, self.io.pointer)
        if aug.grid:
            view, _ = draw_grid(view, GridSpec(aug.grid_rows, aug.grid_cols))
        if aug.bands:
            view = draw_side_bands(view)
        if marks is not None:
            view = render_marks(view, marks, aug.marks).frame
        return view, marks

    # stages --------------------------------------------------------------------

    def stage_gather(self, clip: VideoClip) -> GatheredInfo:
        keyframes = extract_keyframes(clip, self.config.text_region, self.config.keyframe_threshold)
        texts = [self.complete("gather_ocr", {}, {"keyframe": [kf]}).strip() for kf in keyframes]
        view, marks = self.augment(clip.last)
        self.marks = marks
        marks_text = ""
        if marks is not None:
            marks_text = "Numbered marks (id: x0, y0, x1, y1):\n" + "\n".join(
                f"{m.id}: {', '.join(str(v) for v in m.rect)}" for m in marks)
        info = GatheredInfo(texts, "", marks, view)
        reply = self.complete("gather_describe", {"task": self.stack.active.description, "ocr": info.ocr,
                                                  "marks": marks_text}, {"last_frame": [view]})
        try:
            info.last_frame_description = parse_sections(reply, DESCRIBE)["Description"]
        except MissingField:
            info.last_frame_description = reply.strip()
        return info

    def stage_reflect(self, clip: VideoClip) -> ReflectionOutcome:
        if self.last_action is None:
            return ReflectionOutcome()
        width = self.config.reflection_width
        frames = [downscale_to_width(f, width) for f in sample_frames(clip, self.config.reflection_frames)]
        exec_summary = "; ".join(
            f"{type(r.primitive).__name__} {r.outcome}" + (f" ({r.error})" if r.error else "")
            for r in self.last_reports) or "nothing executed"
        reply = self.complete("reflect", {
            "task": self.stack.active.description,
            "last_action": "; ".join(str(c) for c in self.last_action.calls) or "none",
            "exec_summary": exec_summary,
        }, {"frames": frames})
        s = parse_sections(reply, REFLECT)
        analysis = "" if _is_none(s["Analysis"]) else s["Analysis"].strip()
        if not s["Success"] and not analysis:
            raise MissingField("a failed action needs an Analysis section")
        return ReflectionOutcome(s["Success"], s["Task done"], analysis if not s["Success"] else "",
                                 bool(s["Continue held action"]))

    def stage_infer_task(self, reflection: ReflectionOutcome, gathered: GatheredInfo, iteration: int) -> TaskSpec:
        # completion first, then window expiry, then the new proposal
        if reflection.task_done:
            self.stack.pop()
        self.stack.expire(iteration)
        active = self.stack.active
        reply = self.complete("infer_task", {
            "summary": self.episodic.summary.text or "none",
            "task": active.description,
            "horizon": active.horizon,
            "reflection": reflection.summary(),
            "gathered": gathered.last_frame_description,
        })
        s = parse_sections(reply, INFER)
        if not _is_none(s["New task"]):
            horizon = (s["Horizon"] or "long").strip().strip("*.").lower()
            self.stack.push(TaskSpec(s["New task"].strip(), "short" if horizon == "short" else "long", iteration))
        return self.stack.active

    def stage_curate(self, task: TaskSpec, gathered: GatheredInfo) -> Curation:
        new: list[str] = []
        rejected: list[dict[str, Any]] = []
        if self.config.generate_skills:
            reply = self.complete("curate", {
                "task": task.description,
                "gathered": gathered.last_frame_description,
                "ocr": gathered.ocr,
                "skill_names": ", ".join(self.store.names()) or "none",
            }, {"last_frame": [gathered.view]} if gathered.view is not None else None)
            for block in extract_code_blocks(reply):
                try:
                    script = parse(block)
                except SkillSyntaxError as exc:
                    rejected.append({"name": None, "errors": [f"SyntaxError: {exc}"]})
                    continue
                errors = validate(script, self.registry())
                if errors:
                    rejected.append({"name": script.name, "errors": [str(e) for e in errors]})
                    continue
                self.store.add_skill(script, self.provider, "generated", self.iteration)
                new.append(script.name)
        retrieved = self.store.retrieve(task.description, self.config.top_k, self.provider) if len(self.store) else []
        return Curation(new, rejected, retrieved)

    def stage_plan(self, task: TaskSpec, retrieved: Sequence[SkillEntry], gathered: GatheredInfo,
                   reflection: ReflectionOutcome) -> Action:
        offered = [e.script for e in retrieved] + [n for n in self.natives.values()
                                                    if n.name not in {e.name for e in retrieved}]
        skills_text = "\n".join(
            f"- {s.name}({', '.join(f'{p.name}: {p.kind}' for p in s.params)}): {s.doc}" for s in offered)
        recent = "\n".join(r.digest() for r in self.episodic.recent(self.config.k)) or "none"
        reply = self.complete("plan", {
            "task": task.description,
            "summary": self.episodic.summary.text or "none",
            "recent": recent,
            "reflection": reflection.summary(),
            "gathered": gathered.last_frame_description,
            "retrieved_skills": skills_text,
        }, {"last_frame": [gathered.view]} if gathered.view is not None else None)
        s = parse_sections(reply, PLAN)
        lines = [ln for ln in s["Actions"].splitlines() if not _is_none(ln.strip().lstrip("-*"))]
        calls = parse_calls("\n".join(lines), self.registry())
        n = self.config.actions_per_step
        kept, dropped = calls[:n], calls[n:]
        allowed = {e.name for e in retrieved} | set(self.natives)
        for c in kept:
            if c.name not in allowed:
                raise UnknownSkillChosen(f"{c.name!r} is neither retrieved nor built in")
        return Action(kept, (s["Reasoning"] or "").strip(), [str(c) for c in dropped])

    def stage_execute(self, action: Action, reflection: ReflectionOutcome) -> tuple[list[ExecReport], list[str]]:
        """Compile everything first so a compile error runs nothing; returns
        the execution reports and the held inputs released as conflicts."""
        registry = self.registry()
        prims = []
        for call in action.calls:
            prims.extend(compile_call(call, registry, self.io.screen, self.marks))
        pause = self.config.pause
        self.io.unpause(pause)
        released: list[str] = []
        keys, buttons = _touched(prims)
        for k in sorted(self.io.held.held_keys):
            if not reflection.continue_held_action or k in keys:
                self.io.execute(KeyRelease(k))
                released.append(f"key:{k}")
        for b in sorted(self.io.held.held_buttons):
            if not reflection.continue_held_action or b in buttons:
                self.io.execute(ButtonRelease(b))
                released.append(f"button:{b}")
        for r in released:
            log.info("released held %s before the next action", r)
        reports = self.io.execute_sequence(prims) if prims else []
        if self.config.settle > 0:
            self.io.execute(Wait(self.config.settle))
        self.capture.snap()
        self.io.pause(pause)
        return reports, released

    # loop ------------------------------------------------------------------------

    def _events_since_mark(self) -> list[list]:
        events = encode_events(self.backend.log[self._mark:])
        self._mark = len(self.backend.log)
        return events

    def _checkpoint(self) -> dict[str, Any]:
        return {"events": self._events_since_mark(), "end_tick": self.clock.now, "render_digest": self.env.digest()}

    def _summarize(self, text: str) -> str:
        req = CompletionRequest(self.config.model, (Message.user(TextPart(text)),), self.config.temperature,
                                self.config.max_tokens, purpose="summary")
        self.requests.append(req)
        return self.provider.complete(req)

    def run_iteration(self, i: int) -> dict[str, Any]:
        """One pass through all stages; returns the trajectory record."""
        self.iteration = i
        rec: dict[str, Any] = {"kind": "iteration", "iteration": i, "start_tick": self.clock.now}
        ticks: dict[str, int] = {}
        errors: list[str] = []
        gathered = GatheredInfo([], "")
        task = self.stack.active
        action = Action([])
        reports: list[ExecReport] = []
        infeasible = False

        def timed(stage: str, fn, *args):
            t0 = self.clock.now
            try:
                return fn(*args)
            finally:
                ticks[stage] = self.clock.now - t0

        try:
            clip = self.clip()
            gathered = timed("gather", self.stage_gather, clip)
            self.reflection = timed("reflect", self.stage_reflect, clip)
            task = timed("infer_task", self.stage_infer_task, self.reflection, gathered, i)
            curation = timed("curate", self.stage_curate, task, gathered)
            rec["curation"] = curation.to_json()
            action = timed("plan", self.stage_plan, task, curation.retrieved, gathered, self.reflection)
            if any(c.name == INFEASIBLE for c in action.calls):
                infeasible = True
            else:
                reports, released = timed("execute", self.stage_execute, action, self.reflection)
                rec["released"] = released
                errors.extend(r.error for r in reports if r.outcome == "error" and r.error)
            self.last_action = action
            self.last_reports = reports
        except FATAL:
            raise
        except CradleError as exc:
            errors.append(f"{type(exc).__name__}: {exc}")
            log.warning("iteration %d: %s", i, errors[-1])

        success = bool(self.env.check_goal())
        latest = self.capture.latest()
        self.episodic.append(EpisodicRecord(
            i, (f"frame:{latest.index}",) if latest is not None else (), gathered.last_frame_description,
            task.description, tuple(str(c) for c in action.calls), self.reflection.summary(), action.reasoning))
        if i % self.config.summary_stride == 0:
            try:
                self.episodic.update_summary(self._summarize, self.prompts["summary"].text)
            except FATAL:
                raise
            except CradleError as exc:
                errors.append(f"{type(exc).__name__}: {exc}")
        rec.update({
            "gathered": gathered.to_json(),
            "reflection": self.reflection.to_json(),
            "task": task.to_json(),
            "stack": [t.description for t in self.stack.tasks],
            "action": action.to_json(),
            "reports": [r.to_json() for r in reports],
            "errors": errors,
            "stage_ticks": ticks,
            "success": success,
            "infeasible": infeasible,
            **self._checkpoint(),
        })
        return rec

    def run(self, trajectory: str | Path) -> RunResult:
        from .toolbar import explore_toolbar, toolbar_items

        writer = TrajectoryWriter(trajectory, {
            "task": self.config.task,
            "mode": self.config.mode,
            "max_steps": self.config.max_steps,
            "actions_per_step": self.config.actions_per_step,
            "pause": str(self.config.pause),
            "tick_seconds": self.config.tick_seconds,
            "screen": list(self.io.screen),
            "initial_digest": self.env.digest(),
        })
        steps = 0
        success = False
        reason = "max_steps"
        error = None
        stage_ticks: dict[str, int] = {}
        try:
            if self.config.toolbar is not None:
                self.capture.snap()
                first = self.capture.latest()
                items = toolbar_items(first, self.config.toolbar, self.segmenter)
                generated = explore_toolbar(self, items)
                writer.write({"kind": "prelude", "toolbar_items": [list(r) for r in items],
                              "generated": generated, **self._checkpoint()})
            self.io.pause(self.config.pause)
            self.capture.snap()
            for i in range(1, self.config.max_steps + 1):
                steps = i
                rec = self.run_iteration(i)
                writer.write(rec)
                for k, v in rec["stage_ticks"].items():
                    stage_ticks[k] = stage_ticks.get(k, 0) + v
                if rec["success"]:
                    success, reason = True, "goal"
                    break
                if rec["infeasible"]:
                    reason = "infeasible"
                    break
        except FATAL as exc:
            reason = "error"
            error = f"{type(exc).__name__}: {exc}"
            log.error("run aborted: %s", error)
        finally:
            try:
                self.io.release_all()
            finally:
                stop_capture(self.capture)
                writer.write({"kind": "result", "steps_used": steps, "success": success, "reason": reason,
                              "error": error, "held_after_exit": sorted(self.io.held.held_keys
                                                                       | self.io.held.held_buttons),
                              **self._checkpoint()})
                writer.close()
        return RunResult(steps, success, reason, str(trajectory), dict(sorted(stage_ticks.items())))
