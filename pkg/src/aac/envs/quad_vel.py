"""Quadcopter velocity tracking with an inner attitude loop.

The action is a setpoint vector (vertical velocity, roll, pitch, yaw) handed
to an idealised inner controller: attitude tracks its setpoints through a
first-order lag, vertical velocity tracks its setpoint through a slower lag,
and horizontal acceleration follows the tilt (g * tan of roll/pitch) against
linear drag. Observation is velocity, acceleration, angular rates, and
attitude; the goal is a 3-D velocity.
"""

from __future__ import annotations

import numpy as np

from ..core import GoalObservation
from .base import GoalEnv


class QuadVelEnv(GoalEnv):
    name = "quad_vel"
    default_dt = 0.02
    physics_defaults = {
        "attitude_tau": 0.15,
        "vertical_tau": 0.3,
        "drag": 0.5,
        "gravity": 9.81,
        "velocity_bound": 4.0,
        "attitude_bound": np.pi / 2,
        "success_distance": 0.05,
        "goal_halfwidth": 1.0,
        "start_attitude_halfwidth": 0.05,
    }

    obs_dim = 12
    goal_dim = 3
    action_dim = 4

    def _sample_initial(self, rng):
        p = self.params
        self._vel = rng.uniform(-1.0, 1.0, 3)
        self._att = rng.uniform(-p["start_attitude_halfwidth"],
                                p["start_attitude_halfwidth"], 3)  # roll, pitch, yaw
        self._acc = np.zeros(3)
        self._rates = np.zeros(3)
        self._goal = rng.uniform(-p["goal_halfwidth"], p["goal_halfwidth"], 3)

    def _advance(self, action):
        p = self.params
        vz_sp = action[0]
        att_sp = action[1:4]

        self._rates = (att_sp - self._att) / p["attitude_tau"]
        self._att = self._att + self._rates * self.dt

        roll, pitch = self._att[0], self._att[1]
        ax = p["gravity"] * np.tan(pitch) - p["drag"] * self._vel[0]
        ay = -p["gravity"] * np.tan(roll) - p["drag"] * self._vel[1]
        az = (vz_sp - self._vel[2]) / p["vertical_tau"]
        self._acc = np.array([ax, ay, az])
        self._vel = self._vel + self._acc * self.dt

    def _observe(self):
        state = np.concatenate([self._vel, self._acc, self._rates, self._att])
        return GoalObservation(observation=state, desired_goal=self._goal,
                               achieved_goal=self._vel.copy())

    def compute_reward(self, achieved, desired, extras, action):
        return float(-np.linalg.norm(np.asarray(achieved) - np.asarray(desired)))

    def is_success(self, achieved, desired):
        return bool(np.linalg.norm(np.asarray(achieved) - np.asarray(desired))
                    < self.params["success_distance"])

    def _terminated(self, obs):
        p = self.params
        out = bool(np.any(np.abs(self._vel) > p["velocity_bound"])
                   or np.any(np.abs(self._att[:2]) > p["attitude_bound"]))
        return out or self.is_success(obs.achieved_goal, obs.desired_goal)

    @property
    def action_low(self):
        return np.array([-2.0, -0.2, -0.2, -0.2])

    @property
    def action_high(self):
        return np.array([2.0, 0.2, 0.2, 0.2])

    @property
    def default_integral_clamp(self):
        return 10.0 * self.params["goal_halfwidth"]
