"""Planar mass-spring-damper position task.

A unit mass on a 2-D plane, pulled toward the origin by a weak spring and
damped slightly; the action is a force in the plane. The goal is a target
position with zero target velocity, so holding off-origin positions needs a
small steady force against the spring.
"""

from __future__ import annotations

import numpy as np

from ..core import GoalObservation
from .base import GoalEnv


class PointMassEnv(GoalEnv):
    name = "point_mass"
    default_dt = 0.02
    physics_defaults = {
        "mass": 1.0,
        "spring": 0.5,
        "damping": 0.1,
        "force_scale": 10.0,
        "start_pos_halfwidth": 2.4,
        "start_vel_halfwidth": 0.1,
        "goal_halfwidth": 2.4,
        "success_pos": 0.01,
        "success_vel": 0.01,
        "position_bound": 4.8,
    }

    obs_dim = 4
    goal_dim = 4
    action_dim = 2

    def _sample_initial(self, rng):
        p = self.params
        self._pos = rng.uniform(-p["start_pos_halfwidth"], p["start_pos_halfwidth"], 2)
        self._vel = rng.uniform(-p["start_vel_halfwidth"], p["start_vel_halfwidth"], 2)
        goal_pos = rng.uniform(-p["goal_halfwidth"], p["goal_halfwidth"], 2)
        self._goal = np.concatenate([goal_pos, np.zeros(2)])

    def _advance(self, action):
        p = self.params
        force = p["force_scale"] * action - p["spring"] * self._pos - p["damping"] * self._vel
        self._vel = self._vel + (force / p["mass"]) * self.dt
        self._pos = self._pos + self._vel * self.dt

    def _observe(self):
        state = np.concatenate([self._pos, self._vel])
        return GoalObservation(observation=state, desired_goal=self._goal,
                               achieved_goal=state)

    def compute_reward(self, achieved, desired, extras, action):
        achieved = np.asarray(achieved)
        desired = np.asarray(desired)
        dpos = achieved[:2] - desired[:2]
        dvel = achieved[2:] - desired[2:]
        return float(-1.0 * dpos @ dpos - 0.5 * dvel @ dvel
                     - 0.1 * np.linalg.norm(np.asarray(action)))

    def is_success(self, achieved, desired):
        achieved = np.asarray(achieved)
        desired = np.asarray(desired)
        p = self.params
        return bool(np.linalg.norm(achieved[:2] - desired[:2]) < p["success_pos"]
                    and np.linalg.norm(achieved[2:] - desired[2:]) < p["success_vel"])

    def _terminated(self, obs):
        bound = self.params["position_bound"]
        out = bool(np.any(np.abs(self._pos) > bound))
        return out or self.is_success(obs.achieved_goal, obs.desired_goal)

    def project_goal(self, achieved):
        # Goal space pins target velocity to zero.
        achieved = np.asarray(achieved, dtype=np.float64)
        return np.concatenate([achieved[:2], np.zeros(2)])

    @property
    def action_low(self):
        return np.array([-1.0, -1.0])

    @property
    def action_high(self):
        return np.array([1.0, 1.0])

    @property
    def default_integral_clamp(self):
        return 10.0 * self.params["goal_halfwidth"]
