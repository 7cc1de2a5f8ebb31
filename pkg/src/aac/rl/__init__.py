"""Soft actor-critic with optional hindsight relabeling."""

from .buffer import ReplayBuffer, Transition
from .her import her_relabel
from .loop import EpisodeResult, EpochRow, EvalMetrics, evaluate, run_episode, train
from .sac import SacAgent, SacConfig, UpdateReport

__all__ = [
    "ReplayBuffer",
    "Transition",
    "her_relabel",
    "EpisodeResult",
    "EpochRow",
    "EvalMetrics",
    "evaluate",
    "run_episode",
    "train",
    "SacAgent",
    "SacConfig",
    "UpdateReport",
]
