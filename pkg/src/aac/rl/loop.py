"""Episode collection, training, and evaluation.

Rollouts optionally route every observation through a PID adviser before the
policy sees it; passing ``gains=None`` uses the plain extended observation
``[s, g_a, -e]``. An identity adviser (gains 1/0/0) and the plain path are
numerically indistinguishable, which the test suite pins down to the byte
level. Adviser state is rebuilt at every episode boundary.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .. import adviser as adv
from ..adviser import AdviserGains
from ..core import GoalObservation, build_extended_observation, error
from ..envs.base import GoalEnv
from .buffer import ReplayBuffer, Transition
from .her import her_relabel
from .sac import SacAgent

TAIL_WINDOW = 50  # steps in the settled-tail error metric


@dataclass
class EpisodeResult:
    transitions: List[Transition]
    steps: int
    total_return: float
    final_goal_error: float
    tail_goal_error: float
    success: bool
    trajectory_rows: List[list] = field(default_factory=list)


@dataclass
class EpochRow:
    epoch: int
    mean_return: float
    median_final_goal_error: float
    success_rate: float
    alpha: float
    critic_loss: float
    policy_loss: float
    steps: int
    updates: int


@dataclass
class EvalMetrics:
    episodes: int
    success_rate: float
    final_goal_error_median: float
    tail_goal_error_median: float
    mean_return: float
    empty: bool = False
    per_episode: List[dict] = field(default_factory=list)
    trajectory_rows: List[list] = field(default_factory=list)


def _plain_extended(obs: GoalObservation) -> np.ndarray:
    return build_extended_observation(obs, -error(obs))


def run_episode(env: GoalEnv, agent: SacAgent, gains: Optional[AdviserGains],
                deterministic: bool, collect: bool, episode_tag: int = 0,
                seed: Optional[int] = None, integral_clamp: Optional[float] = None,
                record_trajectory: bool = False) -> EpisodeResult:
    obs = env.reset(seed=seed) if seed is not None else env.reset()
    state = None
    if gains is not None:
        clamp = integral_clamp if integral_clamp is not None else env.default_integral_clamp
        state = adv.make_adviser(gains, env.goal_dim, env.dt, clamp)
        s_e, state = adv.advise(state, obs)
    else:
        s_e = _plain_extended(obs)

    transitions: List[Transition] = []
    rows: List[list] = []
    errors: List[float] = []
    total_return = 0.0
    step = 0
    while True:
        action = agent.sample_action(s_e, deterministic=deterministic)
        result = env.step(action)
        next_obs = result.obs
        if state is not None:
            s_e_next, state = adv.advise(state, next_obs)
        else:
            s_e_next = _plain_extended(next_obs)

        if collect:
            transitions.append(Transition(
                s_e=s_e, action=action, reward=result.reward, s_e_next=s_e_next,
                terminated=result.terminated, episode_tag=episode_tag,
                step_index=step, obs=obs, next_obs=next_obs,
                reward_extras=env.reward_extras(next_obs)))
        if record_trajectory:
            rows.append([step * env.dt]
                        + [float(v) for v in next_obs.observation]
                        + [float(v) for v in action]
                        + [float(v) for v in next_obs.achieved_goal]
                        + [float(v) for v in next_obs.desired_goal]
                        + [float(result.reward), int(result.terminated),
                           int(result.truncated)])

        total_return += result.reward
        errors.append(env.goal_error(next_obs.achieved_goal, next_obs.desired_goal))
        obs, s_e = next_obs, s_e_next
        step += 1
        if result.terminated or result.truncated:
            break

    tail = errors[-TAIL_WINDOW:]
    return EpisodeResult(
        transitions=transitions, steps=step, total_return=total_return,
        final_goal_error=errors[-1], tail_goal_error=float(np.mean(tail)),
        success=env.is_success(obs.achieved_goal, obs.desired_goal),
        trajectory_rows=rows)


def train(agent: SacAgent, env: GoalEnv, train_gains: Optional[AdviserGains],
          epochs: int, episodes_per_epoch: int, seed: int,
          integral_clamp: Optional[float] = None,
          buffer: Optional[ReplayBuffer] = None) -> List[EpochRow]:
    """Collect, relabel, and update. One gradient step per environment step.

    The environment stream is seeded once; the relabeling generator is kept
    separate from the agent's so toggling hindsight replay leaves the action
    noise sequence untouched.
    """
    cfg = agent.config
    if buffer is None:
        buffer = ReplayBuffer(capacity=cfg.buffer_capacity, min_fill=cfg.min_buffer)
    her_rng = np.random.default_rng(seed + 3000)
    env.reset(seed=seed)

    rows: List[EpochRow] = []
    episode_tag = 0
    for epoch in range(epochs):
        returns, final_errors, successes = [], [], []
        critic_losses, policy_losses = [], []
        epoch_steps = 0
        epoch_updates = 0
        for _ in range(episodes_per_epoch):
            ep = run_episode(env, agent, train_gains, deterministic=False,
                             collect=True, episode_tag=episode_tag,
                             integral_clamp=integral_clamp)
            episode_tag += 1
            transitions = ep.transitions
            if cfg.her:
                transitions = her_relabel(transitions, cfg.her_k, her_rng, env)
            buffer.extend(transitions)
            for _ in range(ep.steps):
                report = agent.update(buffer)
                if report.updated:
                    epoch_updates += 1
                    critic_losses.append(report.critic_loss)
                    policy_losses.append(report.policy_loss)
            epoch_steps += ep.steps
            returns.append(ep.total_return)
            final_errors.append(ep.final_goal_error)
            successes.append(ep.success)

        rows.append(EpochRow(
            epoch=epoch,
            mean_return=float(np.mean(returns)),
            median_final_goal_error=float(np.median(final_errors)),
            success_rate=float(np.mean(successes)),
            alpha=agent.alpha,
            critic_loss=float(np.mean(critic_losses)) if critic_losses else float("nan"),
            policy_loss=float(np.mean(policy_losses)) if policy_losses else float("nan"),
            steps=epoch_steps,
            updates=epoch_updates,
        ))
    return rows


def evaluate(agent: SacAgent, env: GoalEnv, eval_gains: Optional[AdviserGains],
             episodes: int, seed: int, integral_clamp: Optional[float] = None,
             record_trajectories: bool = False) -> EvalMetrics:
    """Deterministic-policy rollouts through the evaluation adviser."""
    if episodes <= 0:
        nan = float("nan")
        return EvalMetrics(episodes=0, success_rate=nan, final_goal_error_median=nan,
                           tail_goal_error_median=nan, mean_return=nan, empty=True)

    per_episode = []
    rows: List[list] = []
    for i in range(episodes):
        ep = run_episode(env, agent, eval_gains, deterministic=True, collect=False,
                         episode_tag=i, seed=seed + i, integral_clamp=integral_clamp,
                         record_trajectory=record_trajectories)
        per_episode.append({
            "episode": i,
            "steps": ep.steps,
            "return": ep.total_return,
            "final_goal_error": ep.final_goal_error,
            "tail_goal_error": ep.tail_goal_error,
            "success": ep.success,
        })
        if record_trajectories:
            rows.extend([[i] + r for r in ep.trajectory_rows])

    return EvalMetrics(
        episodes=episodes,
        success_rate=float(np.mean([p["success"] for p in per_episode])),
        final_goal_error_median=float(np.median([p["final_goal_error"] for p in per_episode])),
        tail_goal_error_median=float(np.median([p["tail_goal_error"] for p in per_episode])),
        mean_return=float(np.mean([p["return"] for p in per_episode])),
        per_episode=per_episode,
        trajectory_rows=rows,
    )
