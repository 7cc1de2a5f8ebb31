"""PID adviser: turns the true tracking error into a synthetic one.

The adviser sits between the environment and the actor. Each step it reads
the true error ``e = desired - achieved``, updates its integral and
derivative state, and emits

    eps = -(kp * e + ki * integral + kd * de/dt)

which replaces ``-e`` in the third slot of the extended observation. With
gains (1, 0, 0) the substitution is exact (``eps == -e``) and the actor sees
the plain observation, so an identity adviser is behaviourally transparent.

State is carried functionally: every operation takes a state and returns a
new one, so independent episodes can run in parallel with independent states.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np

from .core import GoalObservation, build_extended_observation, error

IDENTITY_GAINS = (1.0, 0.0, 0.0)


@dataclass(frozen=True)
class AdviserGains:
    """Proportional, integral, and derivative gains. All must be >= 0."""

    kp: float
    ki: float
    kd: float

    def __post_init__(self):
        for name in ("kp", "ki", "kd"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise ValueError(f"gain {name} must be finite and >= 0, got {v}")

    @classmethod
    def identity(cls) -> "AdviserGains":
        return cls(*IDENTITY_GAINS)

    def is_identity(self) -> bool:
        return (self.kp, self.ki, self.kd) == IDENTITY_GAINS

    def as_tuple(self) -> Tuple[float, float, float]:
        return (self.kp, self.ki, self.kd)


@dataclass(frozen=True)
class AdviserState:
    gains: AdviserGains
    dt: float
    integral_clamp: float
    integral: np.ndarray
    prev_error: Optional[np.ndarray] = None

    def __post_init__(self):
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if not (np.isfinite(self.integral_clamp) and self.integral_clamp > 0):
            raise ValueError(f"integral_clamp must be > 0, got {self.integral_clamp}")


def make_adviser(gains: AdviserGains, goal_dim: int, dt: float,
                 integral_clamp: float = 10.0) -> AdviserState:
    """Fresh adviser state: zero integral, no previous error."""
    return AdviserState(gains=gains, dt=float(dt), integral_clamp=float(integral_clamp),
                        integral=np.zeros(goal_dim), prev_error=None)


def reset(state: AdviserState) -> AdviserState:
    """Zero the integral and clear the previous error; gains and dt persist."""
    return replace(state, integral=np.zeros_like(state.integral), prev_error=None)


def fake_error(state: AdviserState, e) -> Tuple[np.ndarray, AdviserState]:
    """One PID step on the error vector.

    Backward-Euler integral (accumulated before use, then clamped to
    ``[-integral_clamp, integral_clamp]``), backward-difference derivative
    (zero on the first step after a reset).
    """
    e = np.asarray(e, dtype=np.float64)
    if e.shape != state.integral.shape:
        raise ValueError(f"error dimension {e.shape} does not match adviser "
                         f"dimension {state.integral.shape}")
    if not np.all(np.isfinite(e)):
        raise ValueError("error contains non-finite entries")

    g = state.gains
    integral = np.clip(state.integral + e * state.dt,
                       -state.integral_clamp, state.integral_clamp)
    if state.prev_error is None:
        derivative = np.zeros_like(e)
    else:
        derivative = (e - state.prev_error) / state.dt
    eps = -(g.kp * e + g.ki * integral + g.kd * derivative)
    return eps, replace(state, integral=integral, prev_error=e.copy())


def advise(state: AdviserState, obs: GoalObservation) -> Tuple[np.ndarray, AdviserState]:
    """Build the extended observation with the synthetic error in the third slot."""
    eps, new_state = fake_error(state, error(obs))
    return build_extended_observation(obs, eps), new_state


def fake_goal(obs: GoalObservation, eps) -> np.ndarray:
    """Goal whose plain third slot would reproduce ``eps``: g_f = g_a - eps.

    Only used for logging and waypoint visualisation; the control path feeds
    ``eps`` directly into the extended observation.
    """
    eps = np.asarray(eps, dtype=np.float64)
    if eps.shape != obs.achieved_goal.shape:
        raise ValueError(f"synthetic error dimension {eps.shape} does not match "
                         f"goal dimension {obs.achieved_goal.shape}")
    return obs.achieved_goal - eps
