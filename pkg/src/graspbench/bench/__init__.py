"""Task success predicates and benchmark statistics."""

from .episode import (
    BenchConfig,
    Camera,
    ContactImpulse,
    EpisodeState,
    Snapshot,
    TaskObjects,
    TaskSpec,
    episode_from_states,
)
from .predicates import (
    OracleResult,
    SuccessResult,
    eval_close,
    eval_navigate,
    eval_open,
    eval_open_door,
    eval_pick,
    eval_place,
    eval_place_color,
    eval_place_next_to,
    evaluate,
    grasp_transitions,
    oracle_success,
    visible_fraction,
)
from .stats import Correlation, correlation, correlation_summary, credible_interval, rate_table

__all__ = [
    "BenchConfig",
    "Camera",
    "ContactImpulse",
    "Correlation",
    "EpisodeState",
    "OracleResult",
    "Snapshot",
    "SuccessResult",
    "TaskObjects",
    "TaskSpec",
    "correlation",
    "correlation_summary",
    "credible_interval",
    "episode_from_states",
    "eval_close",
    "eval_navigate",
    "eval_open",
    "eval_open_door",
    "eval_pick",
    "eval_place",
    "eval_place_color",
    "eval_place_next_to",
    "evaluate",
    "grasp_transitions",
    "oracle_success",
    "rate_table",
    "visible_fraction",
]
