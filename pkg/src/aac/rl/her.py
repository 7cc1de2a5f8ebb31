"""Hindsight relabeling with the "future" strategy.

Each stored transition is replayed as-is, plus up to ``k`` copies whose
desired goal is the achieved goal of a uniformly drawn strictly-later step
of the same episode. Rewards are recomputed through the environment's pure
reward function and the extended observations are rebuilt in the plain
(unadvised) layout: adviser integral state cannot be replayed against a
counterfactual goal. Recorded dynamics never change; only goals, rewards,
and goal-derived observation slots do.
"""

from __future__ import annotations

from dataclasses import replace
from typing import List

import numpy as np

from ..core import GoalObservation, build_extended_observation, error
from ..envs.base import GoalEnv
from .buffer import Transition


def _with_goal(obs: GoalObservation, goal: np.ndarray) -> GoalObservation:
    return GoalObservation(observation=obs.observation, desired_goal=goal,
                           achieved_goal=obs.achieved_goal)


def her_relabel(episode: List[Transition], k: int, rng: np.random.Generator,
                env: GoalEnv) -> List[Transition]:
    """Original transitions plus future-goal relabels, episode order preserved."""
    out: List[Transition] = []
    n = len(episode)
    for i, tr in enumerate(episode):
        out.append(tr)
        if k <= 0 or i + 1 >= n:
            continue
        future = rng.integers(i + 1, n, size=k)
        for j in future:
            goal = env.project_goal(episode[j].obs.achieved_goal)
            obs = _with_goal(tr.obs, goal)
            next_obs = _with_goal(tr.next_obs, goal)
            reward = env.compute_reward(next_obs.achieved_goal, goal,
                                        tr.reward_extras, tr.action)
            out.append(replace(
                tr,
                s_e=build_extended_observation(obs, -error(obs)),
                s_e_next=build_extended_observation(next_obs, -error(next_obs)),
                reward=reward,
                obs=obs,
                next_obs=next_obs,
            ))
    return out
