"""One-dimensional point mass with a constant actuation bias.

Micro-environment for oracle tests: a unit mass on a line, force input with
an additive bias ``b``, and viscous damping. Under a proportional policy
``a = k * (g - x)`` the closed loop settles with steady-state error exactly
``-b / k`` (force balance: k*(g - x) + b = 0), which gives the test suite a
closed-form target. The bias also makes a plain learned policy keep a
nonzero residual that integral advisers can remove.
"""

from __future__ import annotations

import numpy as np

from ..core import GoalObservation
from .base import GoalEnv


class Line1DEnv(GoalEnv):
    name = "line1d"
    default_dt = 0.05
    physics_defaults = {
        "mass": 1.0,
        "force_scale": 5.0,
        "damping": 2.0,
        "action_bias": 0.0,
        "start_pos_halfwidth": 1.0,
        "start_vel_halfwidth": 0.05,
        "goal_halfwidth": 1.0,
        "success_pos": 0.01,
        "success_vel": 0.01,
        "position_bound": 4.8,
    }

    obs_dim = 2
    goal_dim = 1
    action_dim = 1

    def _sample_initial(self, rng):
        p = self.params
        self._x = rng.uniform(-p["start_pos_halfwidth"], p["start_pos_halfwidth"])
        self._v = rng.uniform(-p["start_vel_halfwidth"], p["start_vel_halfwidth"])
        self._goal = np.array([rng.uniform(-p["goal_halfwidth"], p["goal_halfwidth"])])

    def _advance(self, action):
        p = self.params
        force = p["force_scale"] * (action[0] + p["action_bias"]) - p["damping"] * self._v
        self._v = self._v + (force / p["mass"]) * self.dt
        self._x = self._x + self._v * self.dt

    def _observe(self):
        return GoalObservation(observation=np.array([self._x, self._v]),
                               desired_goal=self._goal,
                               achieved_goal=np.array([self._x]))

    def compute_reward(self, achieved, desired, extras, action):
        return float(-abs(float(np.asarray(achieved)[0]) - float(np.asarray(desired)[0])))

    def is_success(self, achieved, desired):
        p = self.params
        return bool(abs(float(np.asarray(achieved)[0]) - float(np.asarray(desired)[0]))
                    < p["success_pos"] and abs(self._v) < p["success_vel"])

    def _terminated(self, obs):
        out = abs(self._x) > self.params["position_bound"]
        return bool(out) or self.is_success(obs.achieved_goal, obs.desired_goal)

    @property
    def action_low(self):
        return np.array([-1.0])

    @property
    def action_high(self):
        return np.array([1.0])

    @property
    def default_integral_clamp(self):
        return 10.0 * self.params["goal_halfwidth"]
