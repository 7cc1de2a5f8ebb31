"""Shared goal-conditioned value types and the extended-observation layout.

Everything downstream (adviser, environments, replay, networks) passes
float64 vectors around. A goal observation bundles the raw state with the
desired and achieved goals; an extended observation is the flat vector
``[state | achieved_goal | third_slot]`` consumed by the actor and critics,
where the third slot holds the negated tracking error (plain runs) or the
adviser's synthetic error (advised runs).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def as_vector(values, name: str = "vector") -> np.ndarray:
    """Coerce to a read-only 1-D float64 array, rejecting non-finite entries."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {arr.shape}")
    if arr.size and not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    arr = arr.copy()
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class GoalObservation:
    """One environment snapshot: raw state plus desired and achieved goals."""

    observation: np.ndarray
    desired_goal: np.ndarray
    achieved_goal: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "observation", as_vector(self.observation, "observation"))
        object.__setattr__(self, "desired_goal", as_vector(self.desired_goal, "desired_goal"))
        object.__setattr__(self, "achieved_goal", as_vector(self.achieved_goal, "achieved_goal"))
        if self.desired_goal.shape != self.achieved_goal.shape:
            raise ValueError(
                "desired_goal and achieved_goal dimensions differ: "
                f"{self.desired_goal.shape} vs {self.achieved_goal.shape}"
            )

    @property
    def goal_dim(self) -> int:
        return self.desired_goal.size


def error(obs: GoalObservation) -> np.ndarray:
    """Tracking error: desired goal minus achieved goal, elementwise."""
    return obs.desired_goal - obs.achieved_goal


def build_extended_observation(obs: GoalObservation, third_slot) -> np.ndarray:
    """Concatenate ``[state | achieved_goal | third_slot]``.

    Passing ``third_slot = -error(obs)`` yields the plain (unadvised) layout;
    an adviser substitutes its synthetic error instead. The result has length
    ``dim(state) + 2 * dim(goal)``.
    """
    third = np.asarray(third_slot, dtype=np.float64)
    if third.shape != obs.achieved_goal.shape:
        raise ValueError(
            f"third slot dimension {third.shape} does not match goal dimension "
            f"{obs.achieved_goal.shape}"
        )
    if third.size and not np.all(np.isfinite(third)):
        raise ValueError("third slot contains non-finite entries")
    return np.concatenate([obs.observation, obs.achieved_goal, third])


def extended_observation_dim(obs_dim: int, goal_dim: int) -> int:
    return obs_dim + 2 * goal_dim
