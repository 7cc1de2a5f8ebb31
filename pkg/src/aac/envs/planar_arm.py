"""Torque-controlled 3-DoF reaching arm.

Joints are a base yaw plus two pitch joints driving a two-segment chain
(upper arm 0.4 m, forearm 0.4 m with a rigid 0.2 m end extension). Joint
dynamics are decoupled double integrators with viscous damping. The base
sits at (0.75, 0.75, -0.3) so the whole target box
[0.5, 1.0] x [0.5, 1.0] x [0.0, 0.3] lies inside the reachable shell
(radii 0.2 to 1.0 around the shoulder); mounted at the origin the far box
corners would be out of reach.
"""

from __future__ import annotations

import numpy as np

from ..core import GoalObservation
from .base import GoalEnv

GOAL_BOX_LOW = np.array([0.5, 0.5, 0.0])
GOAL_BOX_HIGH = np.array([1.0, 1.0, 0.3])


class PlanarArmEnv(GoalEnv):
    name = "planar_arm"
    default_dt = 0.02
    physics_defaults = {
        "link1": 0.4,
        "link2": 0.4,
        "link3": 0.2,
        "base_x": 0.75,
        "base_y": 0.75,
        "base_z": -0.3,
        "inertia": 1.0,
        "joint_damping": 0.5,
        "torque_scale": 5.0,
        "velocity_limit": 10.0,
        "success_distance": 0.1,
        "start_vel_halfwidth": 0.005,
    }

    obs_dim = 9
    goal_dim = 3
    action_dim = 3

    def _sample_initial(self, rng):
        p = self.params
        self._q = rng.uniform(-np.pi, np.pi, 3)
        self._qd = rng.uniform(-p["start_vel_halfwidth"], p["start_vel_halfwidth"], 3)
        self._goal = rng.uniform(GOAL_BOX_LOW, GOAL_BOX_HIGH)

    def _advance(self, action):
        p = self.params
        qdd = (p["torque_scale"] * action - p["joint_damping"] * self._qd) / p["inertia"]
        self._qd = self._qd + qdd * self.dt
        self._q = self._q + self._qd * self.dt

    def end_effector(self, q=None) -> np.ndarray:
        """Forward kinematics of the yaw + 2-pitch chain."""
        p = self.params
        if q is None:
            q = self._q
        yaw, q2, q3 = q
        reach2 = p["link2"] + p["link3"]
        radial = p["link1"] * np.cos(q2) + reach2 * np.cos(q2 + q3)
        height = p["link1"] * np.sin(q2) + reach2 * np.sin(q2 + q3)
        return np.array([
            p["base_x"] + radial * np.cos(yaw),
            p["base_y"] + radial * np.sin(yaw),
            p["base_z"] + height,
        ])

    def _observe(self):
        state = np.concatenate([np.cos(self._q), np.sin(self._q), self._qd])
        return GoalObservation(observation=state, desired_goal=self._goal,
                               achieved_goal=self.end_effector())

    def reward_extras(self, obs):
        # Joint velocities live in the last three observation slots.
        return obs.observation[6:9].copy()

    def compute_reward(self, achieved, desired, extras, action):
        dist = np.linalg.norm(np.asarray(achieved) - np.asarray(desired))
        return float(-1.0 * dist - 0.1 * np.linalg.norm(np.asarray(extras))
                     - 0.1 * np.linalg.norm(np.asarray(action)))

    def is_success(self, achieved, desired):
        return bool(np.linalg.norm(np.asarray(achieved) - np.asarray(desired))
                    < self.params["success_distance"])

    def _terminated(self, obs):
        overspeed = bool(np.any(np.abs(self._qd) > self.params["velocity_limit"]))
        return overspeed or self.is_success(obs.achieved_goal, obs.desired_goal)

    @property
    def action_low(self):
        return np.full(3, -1.0)

    @property
    def action_high(self):
        return np.full(3, 1.0)

    @property
    def default_integral_clamp(self):
        return 10.0 * float(np.max((GOAL_BOX_HIGH - GOAL_BOX_LOW) / 2.0))

    @property
    def max_reach(self) -> float:
        p = self.params
        return p["link1"] + p["link2"] + p["link3"]
