"""The agent loop, its configuration, prompts, task stack and trajectories."""

from .agent import Action, Agent, Curation, GatheredInfo, TeeBackend
from .prompts import PROMPT_SLOTS, PromptTemplate, load_prompts
from .runconfig import AugmentConfig, RunConfig, ToolbarConfig
from .tasks import ReflectionOutcome, TaskSpec, TaskStack
from .toolbar import explore_toolbar, toolbar_items
from .trajectory import SCHEMA, RunResult, TrajectoryWriter, read_trajectory, replay, summarize


def run(env, config: RunConfig, provider, store, trajectory, **kwargs) -> RunResult:
    """Run the loop on ``env`` and write the trajectory; see :class:`Agent`."""
    return Agent(env, config, provider, store, **kwargs).run(trajectory)


__all__ = [
    "Action", "Agent", "AugmentConfig", "Curation", "GatheredInfo", "PROMPT_SLOTS", "PromptTemplate",
    "ReflectionOutcome", "RunConfig", "RunResult", "SCHEMA", "TaskSpec", "TaskStack", "TeeBackend",
    "ToolbarConfig", "TrajectoryWriter", "explore_toolbar", "load_prompts", "read_trajectory", "replay", "run",
    "summarize", "toolbar_items",
]
