import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from aac.core import GoalObservation, build_extended_observation, error
from aac.envs import EnvConfig, make_env
from aac.rl import ReplayBuffer, Transition, her_relabel


def make_transition(tag, step, dim=3):
    rng = np.random.default_rng(tag * 1000 + step)
    obs = GoalObservation(observation=rng.normal(size=2),
                          desired_goal=rng.normal(size=1),
                          achieved_goal=rng.normal(size=1))
    next_obs = GoalObservation(observation=rng.normal(size=2),
                               desired_goal=obs.desired_goal,
                               achieved_goal=rng.normal(size=1))
    return Transition(
        s_e=build_extended_observation(obs, -error(obs)),
        action=rng.normal(size=1), reward=float(rng.normal()),
        s_e_next=build_extended_observation(next_obs, -error(next_obs)),
        terminated=False, episode_tag=tag, step_index=step,
        obs=obs, next_obs=next_obs, reward_extras=np.zeros(0))


class TestReplayBuffer:
    def test_fifo_eviction(self):
        buf = ReplayBuffer(capacity=10, min_fill=1)
        for i in range(13):
            buf.push(make_transition(0, i))
        assert len(buf) == 10
        np.testing.assert_array_equal(buf.column("step_index"), np.arange(3, 13))

    @settings(deadline=None, max_examples=25)
    @given(st.integers(1, 40), st.integers(0, 60))
    def test_fifo_order_preserved(self, capacity, extra):
        buf = ReplayBuffer(capacity=capacity, min_fill=1)
        total = capacity + extra
        for i in range(total):
            buf.push(make_transition(0, i))
        assert len(buf) == capacity
        np.testing.assert_array_equal(buf.column("step_index"),
                                      np.arange(total - capacity, total))

    def test_ready_threshold(self):
        buf = ReplayBuffer(capacity=100, min_fill=5)
        for i in range(4):
            buf.push(make_transition(0, i))
        assert not buf.ready
        buf.push(make_transition(0, 4))
        assert buf.ready

    def test_sample_shapes_and_membership(self):
        buf = ReplayBuffer(capacity=64, min_fill=1)
        for i in range(20):
            buf.push(make_transition(0, i))
        batch = buf.sample(8, np.random.default_rng(0))
        assert batch["s_e"].shape == (8, 4)
        assert batch["action"].shape == (8, 1)
        assert batch["reward"].shape == (8,)
        assert set(batch["step_index"].astype(int)) <= set(range(20))

    def test_sample_empty_rejected(self):
        with pytest.raises(ValueError):
            ReplayBuffer(capacity=4, min_fill=1).sample(1, np.random.default_rng(0))

    def test_growth_preserves_contents(self):
        buf = ReplayBuffer(capacity=5000, min_fill=1)
        for i in range(2100):
            buf.push(make_transition(0, i))
        np.testing.assert_array_equal(buf.column("step_index"), np.arange(2100))


def collect_episode(env, seed, n):
    obs = env.reset(seed=seed)
    rng = np.random.default_rng(seed)
    episode = []
    for step in range(n):
        action = rng.uniform(env.action_low, env.action_high)
        res = env.step(action)
        episode.append(Transition(
            s_e=build_extended_observation(obs, -error(obs)), action=action,
            reward=res.reward,
            s_e_next=build_extended_observation(res.obs, -error(res.obs)),
            terminated=res.terminated, episode_tag=0, step_index=step,
            obs=obs, next_obs=res.obs, reward_extras=env.reward_extras(res.obs)))
        obs = res.obs
        if res.terminated or res.truncated:
            break
    return episode


class TestHerRelabel:
    def setup_method(self):
        self.env = make_env(EnvConfig(name="point_mass", max_steps=30))
        self.episode = collect_episode(self.env, seed=2, n=30)

    def test_relabel_with_true_goal_reproduces_original(self):
        tr = self.episode[3]
        goal = tr.obs.desired_goal
        reward = self.env.compute_reward(tr.next_obs.achieved_goal, goal,
                                         tr.reward_extras, tr.action)
        assert reward == tr.reward

    def test_future_goal_zeroes_position_term(self):
        rng = np.random.default_rng(0)
        out = her_relabel(self.episode, k=1, rng=rng, env=self.env)
        # Find a relabeled copy whose goal came from the transition right after it.
        checked = 0
        for tr in out:
            if np.array_equal(tr.obs.desired_goal, self.episode[tr.step_index].obs.desired_goal):
                continue  # original
            source = tr.obs.desired_goal[:2]
            next_achieved = tr.next_obs.achieved_goal
            if np.array_equal(source, next_achieved[:2]):
                vel = next_achieved[2:]
                expected = (-0.5 * float(vel @ vel)
                            - 0.1 * float(np.linalg.norm(tr.action)))
                assert tr.reward == pytest.approx(expected)
                checked += 1
        assert checked >= 1

    def test_goal_counts(self):
        rng = np.random.default_rng(1)
        k = 4
        out = her_relabel(self.episode, k=k, rng=rng, env=self.env)
        n = len(self.episode)
        # every transition except the last gains exactly k copies
        assert len(out) == n + k * (n - 1)

    def test_last_transition_gets_no_copies(self):
        rng = np.random.default_rng(2)
        out = her_relabel(self.episode, k=4, rng=rng, env=self.env)
        last_idx = self.episode[-1].step_index
        assert sum(1 for tr in out if tr.step_index == last_idx) == 1

    def test_empty_episode(self):
        assert her_relabel([], k=4, rng=np.random.default_rng(0), env=self.env) == []

    def test_dynamics_never_fabricated(self):
        rng = np.random.default_rng(3)
        out = her_relabel(self.episode, k=3, rng=rng, env=self.env)
        by_step = {tr.step_index: tr for tr in self.episode}
        for tr in out:
            orig = by_step[tr.step_index]
            assert np.array_equal(tr.obs.observation, orig.obs.observation)
            assert np.array_equal(tr.next_obs.observation, orig.next_obs.observation)
            assert np.array_equal(tr.action, orig.action)
            assert tr.terminated == orig.terminated
            # state and achieved-goal slots of the extended observation unchanged
            np.testing.assert_array_equal(tr.s_e[:6], orig.s_e[:6])
            np.testing.assert_array_equal(tr.s_e_next[:6], orig.s_e_next[:6])

    def test_relabeled_goals_live_in_goal_space(self):
        rng = np.random.default_rng(4)
        out = her_relabel(self.episode, k=4, rng=rng, env=self.env)
        for tr in out:
            np.testing.assert_array_equal(tr.obs.desired_goal[2:], [0.0, 0.0])

    def test_relabeled_extended_obs_rebuilt_unadvised(self):
        rng = np.random.default_rng(5)
        out = her_relabel(self.episode, k=2, rng=rng, env=self.env)
        for tr in out:
            np.testing.assert_array_equal(
                tr.s_e, build_extended_observation(tr.obs, -error(tr.obs)))

    def test_future_goals_come_from_strictly_later_steps(self):
        rng = np.random.default_rng(6)
        out = her_relabel(self.episode, k=4, rng=rng, env=self.env)
        achieved = {i: self.episode[i].obs.achieved_goal for i in range(len(self.episode))}
        for tr in out:
            i = tr.step_index
            if np.array_equal(tr.obs.desired_goal, self.episode[i].obs.desired_goal):
                continue
            sources = [j for j, g in achieved.items()
                       if np.array_equal(tr.obs.desired_goal[:2], g[:2])]
            assert any(j > i for j in sources)
