"""Adviser-actor-critic control workbench.

A PID adviser converts goal-tracking errors into synthetic errors that steer
a goal-conditioned soft actor-critic agent, removing steady-state error at
evaluation time. The package bundles the adviser, four simulated
environments, the SAC(+HER) training stack with hand-written network
gradients, a Routh/contraction stability suite, and a FastAPI service with a
thin CLI client.
"""

__version__ = "0.1.0"

from .adviser import AdviserGains, AdviserState, advise, fake_error, fake_goal
from .core import GoalObservation, build_extended_observation, error

__all__ = [
    "AdviserGains",
    "AdviserState",
    "advise",
    "fake_error",
    "fake_goal",
    "GoalObservation",
    "build_extended_observation",
    "error",
    "__version__",
]
