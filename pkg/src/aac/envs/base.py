"""Environment contract shared by all simulators.

Every environment is goal-conditioned: observations come back as a
:class:`~aac.core.GoalObservation`, rewards are pure functions of
``(achieved, desired, extras, action)`` so replay relabeling can recompute
them, and episodes end either by a termination condition or by truncation at
``max_steps``. Instances are single-threaded; run one per worker.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Optional

import numpy as np

from ..core import GoalObservation


@dataclass(frozen=True)
class EnvStepResult:
    obs: GoalObservation
    reward: float
    terminated: bool
    truncated: bool


@dataclass
class EnvConfig:
    """Environment selection plus overrides for dt, horizon, and physics."""

    name: str
    dt: Optional[float] = None
    max_steps: int = 1000
    seed: Optional[int] = None
    physics: Dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.max_steps < 1:
            raise ValueError(f"max_steps must be >= 1, got {self.max_steps}")
        if self.dt is not None and not (np.isfinite(self.dt) and self.dt > 0):
            raise ValueError(f"dt must be > 0, got {self.dt}")


class GoalEnv:
    """Base class; subclasses fill in dynamics, sampling, and reward."""

    name: str = "base"
    default_dt: float = 0.02
    physics_defaults: Dict[str, float] = {}

    obs_dim: int
    goal_dim: int
    action_dim: int

    def __init__(self, config: EnvConfig):
        if config.name != self.name:
            raise ValueError(f"config names {config.name}, environment is {self.name}")
        unknown = sorted(set(config.physics) - set(self.physics_defaults))
        if unknown:
            raise ValueError(f"unknown physics key for {self.name}: {unknown[0]}")
        self.config = config
        self.dt = float(config.dt) if config.dt is not None else self.default_dt
        self.max_steps = int(config.max_steps)
        self.params = dict(self.physics_defaults)
        self.params.update(config.physics)
        self._rng: Optional[np.random.Generator] = None
        self._steps = 0
        if config.seed is not None:
            self.reset(seed=config.seed)

    # -- contract ------------------------------------------------------------

    def reset(self, seed: Optional[int] = None) -> GoalObservation:
        """Draw a fresh start state and goal. Reseeds the stream when given."""
        if seed is not None:
            self._rng = np.random.default_rng(seed)
        if self._rng is None:
            raise RuntimeError("environment used before seeding; call reset(seed=...)")
        self._steps = 0
        self._sample_initial(self._rng)
        return self._observe()

    def step(self, action) -> EnvStepResult:
        if self._rng is None:
            raise RuntimeError("step() before reset()")
        action = np.asarray(action, dtype=np.float64)
        if action.shape != (self.action_dim,):
            raise ValueError(f"action shape {action.shape}, expected ({self.action_dim},)")
        if not np.all(np.isfinite(action)):
            raise ValueError("action contains non-finite entries")
        action = np.clip(action, self.action_low, self.action_high)

        self._advance(action)
        self._steps += 1
        obs = self._observe()
        reward = self.compute_reward(obs.achieved_goal, obs.desired_goal,
                                     self.reward_extras(obs), action)
        terminated = self._terminated(obs)
        truncated = self._steps >= self.max_steps
        return EnvStepResult(obs=obs, reward=reward, terminated=terminated,
                             truncated=truncated)

    def compute_reward(self, achieved, desired, extras, action) -> float:
        raise NotImplementedError

    def reward_extras(self, obs: GoalObservation) -> np.ndarray:
        """Observation-derived quantities the reward needs beyond the goals."""
        return np.zeros(0)

    def project_goal(self, achieved) -> np.ndarray:
        """Map an achieved goal onto the desired-goal manifold (for relabeling)."""
        return np.asarray(achieved, dtype=np.float64).copy()

    def is_success(self, achieved, desired) -> bool:
        raise NotImplementedError

    def goal_error(self, achieved, desired) -> float:
        return float(np.linalg.norm(np.asarray(desired) - np.asarray(achieved)))

    # -- per-environment hooks -------------------------------------------------

    def _sample_initial(self, rng: np.random.Generator) -> None:
        raise NotImplementedError

    def _advance(self, action: np.ndarray) -> None:
        raise NotImplementedError

    def _observe(self) -> GoalObservation:
        raise NotImplementedError

    def _terminated(self, obs: GoalObservation) -> bool:
        raise NotImplementedError

    # -- metadata ----------------------------------------------------------------

    @property
    def action_low(self) -> np.ndarray:
        raise NotImplementedError

    @property
    def action_high(self) -> np.ndarray:
        raise NotImplementedError

    @property
    def default_integral_clamp(self) -> float:
        """10x the goal-range half-width; anti-windup default for advisers."""
        raise NotImplementedError

    @property
    def steps_taken(self) -> int:
        return self._steps
