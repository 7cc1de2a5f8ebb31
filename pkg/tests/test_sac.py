import numpy as np
import pytest

from aac.adviser import AdviserGains
from aac.core import extended_observation_dim
from aac.envs import EnvConfig, make_env
from aac.rl import ReplayBuffer, SacAgent, SacConfig, evaluate, run_episode, train
from aac.rl.buffer import Transition
from aac.core import GoalObservation, build_extended_observation, error


def small_agent(obs_dim=6, action_low=(-1.0, -1.0), action_high=(1.0, 1.0),
                seed=0, **cfg_kwargs):
    defaults = dict(hidden_dim=8, hidden_layers=3, min_buffer=16, batch_size=8)
    defaults.update(cfg_kwargs)
    return SacAgent(obs_dim, np.array(action_low), np.array(action_high),
                    SacConfig(**defaults), seed=seed)


def filled_buffer(agent, n=64, seed=0, reward_scale=1.0):
    rng = np.random.default_rng(seed)
    buf = ReplayBuffer(capacity=256, min_fill=agent.config.min_buffer)
    dim = agent.obs_dim
    for i in range(n):
        obs = GoalObservation(observation=rng.normal(size=dim - 4),
                              desired_goal=rng.normal(size=2),
                              achieved_goal=rng.normal(size=2))
        nxt = GoalObservation(observation=rng.normal(size=dim - 4),
                              desired_goal=obs.desired_goal,
                              achieved_goal=rng.normal(size=2))
        buf.push(Transition(
            s_e=build_extended_observation(obs, -error(obs)),
            action=rng.uniform(-1, 1, size=agent.action_dim),
            reward=float(rng.uniform(-1, 1)) * reward_scale,
            s_e_next=build_extended_observation(nxt, -error(nxt)),
            terminated=bool(rng.random() < 0.1), episode_tag=0, step_index=i,
            obs=obs, next_obs=nxt, reward_extras=np.zeros(0)))
    return buf


class TestSampleAction:
    def test_zero_policy_deterministic_action_is_box_center(self):
        agent = small_agent(action_low=(-2.0, 0.0), action_high=(2.0, 1.0))
        agent.policy.theta[:] = 0.0
        a = agent.sample_action(np.zeros(6), deterministic=True)
        np.testing.assert_allclose(a, [0.0, 0.5])

    def test_actions_respect_box(self):
        agent = small_agent(action_low=(-2.0, -0.2), action_high=(2.0, 0.2), seed=3)
        for _ in range(200):
            a = agent.sample_action(np.random.default_rng(0).normal(size=6))
            assert np.all(a >= agent.action_low) and np.all(a <= agent.action_high)

    def test_fixed_seed_identical_samples(self):
        a1 = small_agent(seed=11).sample_action(np.ones(6))
        a2 = small_agent(seed=11).sample_action(np.ones(6))
        np.testing.assert_array_equal(a1, a2)


class TestCriticTarget:
    def test_terminal_transition_uses_reward_only(self):
        agent = small_agent()
        batch = {
            "s_e": np.zeros((4, 6)), "s_e_next": np.ones((4, 6)),
            "reward": np.array([1.0, -2.0, 0.5, 3.0]),
            "terminated": np.ones(4),
            "action": np.zeros((4, 2)),
        }
        np.testing.assert_array_equal(agent.critic_target(batch), batch["reward"])

    def test_non_terminal_bootstrap_formula(self):
        agent = small_agent()
        agent.q1_target.theta[:] = 0.0
        agent.q2_target.theta[:] = 0.0
        agent._sample_batch = lambda obs: (np.zeros((4, 2)), np.zeros(4))
        batch = {
            "s_e": np.zeros((4, 6)), "s_e_next": np.zeros((4, 6)),
            "reward": np.ones(4), "terminated": np.zeros(4),
            "action": np.zeros((4, 2)),
        }
        # y = 1 + 0.995 * (0 - alpha * 0) = 1
        np.testing.assert_allclose(agent.critic_target(batch), np.ones(4))

    def test_zero_discount_returns_rewards(self):
        agent = small_agent(gamma=0.0)
        buf = filled_buffer(agent, 40)
        batch = buf.sample(8, np.random.default_rng(1))
        np.testing.assert_array_equal(agent.critic_target(batch), batch["reward"])

    def test_targets_bounded_with_bounded_rewards(self):
        agent = small_agent(seed=5)
        agent.q1_target.theta[:] = 0.0
        agent.q2_target.theta[:] = 0.0
        buf = filled_buffer(agent, 60, reward_scale=1.0)
        batch = buf.sample(16, np.random.default_rng(2))
        _, logp = agent._sample_batch(batch["s_e_next"])
        y = agent.critic_target(batch)
        # rng streams differ between the two _sample_batch calls, so bound by
        # a generous worst case over observed log-probabilities.
        bound = 1.0 + agent.config.gamma * agent.alpha * (np.max(np.abs(logp)) + 10.0)
        assert np.all(np.isfinite(y))
        assert np.all(np.abs(y) <= bound)


class TestGradients:
    def test_critic_gradient_matches_finite_differences(self):
        agent = small_agent(seed=7)
        rng = np.random.default_rng(0)
        xin = rng.normal(size=(6, agent.obs_dim + agent.action_dim))
        y = rng.normal(size=6)
        loss, grad = agent.critic_loss_grad(agent.q1, xin, y)
        h = 1e-6
        idx = rng.choice(agent.q1.n_params, size=40, replace=False)
        for i in idx:
            theta0 = agent.q1.theta[i]
            agent.q1.theta[i] = theta0 + h
            up, _ = agent.critic_loss_grad(agent.q1, xin, y)
            agent.q1.theta[i] = theta0 - h
            down, _ = agent.critic_loss_grad(agent.q1, xin, y)
            agent.q1.theta[i] = theta0
            fd = (up - down) / (2 * h)
            assert grad[i] == pytest.approx(fd, rel=1e-4, abs=1e-7)

    def test_policy_gradient_matches_finite_differences(self):
        agent = small_agent(seed=9)
        rng = np.random.default_rng(1)
        obs = rng.normal(size=(5, agent.obs_dim))
        noise = rng.normal(size=(5, agent.action_dim))
        loss, grad, _ = agent.policy_loss_grad(obs, noise)
        h = 1e-6
        idx = rng.choice(agent.policy.n_params, size=40, replace=False)
        for i in idx:
            theta0 = agent.policy.theta[i]
            agent.policy.theta[i] = theta0 + h
            up, _, _ = agent.policy_loss_grad(obs, noise)
            agent.policy.theta[i] = theta0 - h
            down, _, _ = agent.policy_loss_grad(obs, noise)
            agent.policy.theta[i] = theta0
            fd = (up - down) / (2 * h)
            assert grad[i] == pytest.approx(fd, rel=2e-4, abs=1e-7)

    def test_log_prob_matches_naive_formula(self):
        agent = small_agent(seed=2)
        rng = np.random.default_rng(3)
        noise = rng.normal(size=(4, 2))
        log_std = rng.uniform(-1, 0.5, size=(4, 2))
        u = rng.normal(size=(4, 2))
        got = agent._log_prob(noise, log_std, u)
        gauss = (-0.5 * noise ** 2 - 0.5 * np.log(2 * np.pi) - log_std)
        naive = np.sum(gauss - np.log(agent.half * (1.0 - np.tanh(u) ** 2)), axis=-1)
        np.testing.assert_allclose(got, naive, rtol=1e-9)


class TestUpdate:
    def test_underfilled_buffer_is_noop(self):
        agent = small_agent(min_buffer=1000)
        buf = filled_buffer(agent, 50)
        theta_before = agent.policy.theta.copy()
        report = agent.update(buf)
        assert not report.updated
        np.testing.assert_array_equal(agent.policy.theta, theta_before)

    def test_update_changes_parameters_and_reports_losses(self):
        agent = small_agent()
        buf = filled_buffer(agent, 64)
        report = agent.update(buf)
        assert report.updated
        assert np.isfinite(report.critic_loss) and np.isfinite(report.policy_loss)
        assert np.isfinite(report.alpha) and report.alpha > 0

    def test_parameters_stay_finite_over_many_updates(self):
        agent = small_agent(seed=13)
        buf = filled_buffer(agent, 120, seed=13)
        for _ in range(300):
            agent.update(buf)
        for net in (agent.policy, agent.q1, agent.q2, agent.q1_target, agent.q2_target):
            assert np.all(np.isfinite(net.theta))
        assert np.isfinite(agent.log_alpha[0])

    def test_polyak_formula(self):
        agent = small_agent()
        online = agent.q1.theta.copy()
        target = agent.q1_target.theta.copy()
        agent.q1.theta[:] = online + 1.0
        agent.polyak_update()
        np.testing.assert_allclose(agent.q1_target.theta,
                                   0.005 * (online + 1.0) + 0.995 * target)

    def test_polyak_geometric_contraction(self):
        agent = small_agent(seed=4)
        agent.q1.theta[:] = 1.0
        agent.q1_target.theta[:] = 0.0
        gaps = []
        for _ in range(4):
            gaps.append(np.linalg.norm(agent.q1.theta - agent.q1_target.theta))
            agent.polyak_update()
        for a, b in zip(gaps, gaps[1:]):
            assert b == pytest.approx(0.995 * a, rel=1e-9)

    def test_temperature_gradient_stationary_at_target_entropy(self):
        # The temperature objective's gradient in log-alpha is
        # -(mean logpi + target_entropy); it vanishes when the policy entropy
        # -mean(logpi) equals the target -dim(A), i.e. mean logpi = dim(A).
        agent = small_agent()
        assert agent.target_entropy == -2.0
        logp = np.full(8, 2.0)
        grad = -np.mean(logp + agent.target_entropy)
        assert grad == 0.0
        low_entropy = np.full(8, 5.0)   # logpi above stationary point
        assert -np.mean(low_entropy + agent.target_entropy) < 0  # alpha grows


class TestTrainEvaluate:
    def _mini(self, her=False, seed=0):
        env = make_env(EnvConfig(name="line1d", max_steps=25))
        ext = extended_observation_dim(env.obs_dim, env.goal_dim)
        agent = SacAgent(ext, env.action_low, env.action_high,
                         SacConfig(hidden_dim=8, min_buffer=30, batch_size=8,
                                   her=her, her_k=2), seed=seed)
        return env, agent

    def test_identity_adviser_train_is_bit_identical_to_plain(self):
        env_a, agent_a = self._mini(seed=3)
        env_b, agent_b = self._mini(seed=3)
        rows_a = train(agent_a, env_a, AdviserGains.identity(),
                       epochs=2, episodes_per_epoch=3, seed=5)
        rows_b = train(agent_b, env_b, None, epochs=2, episodes_per_epoch=3, seed=5)
        assert rows_a == rows_b
        np.testing.assert_array_equal(agent_a.policy.theta, agent_b.policy.theta)

    def test_epoch_count_honored(self):
        env, agent = self._mini()
        rows = train(agent, env, None, epochs=3, episodes_per_epoch=2, seed=1)
        assert [r.epoch for r in rows] == [0, 1, 2]

    def test_her_augments_buffer(self):
        env, agent = self._mini(her=True)
        buf = ReplayBuffer(capacity=10000, min_fill=30)
        train(agent, env, None, epochs=1, episodes_per_epoch=2, seed=2, buffer=buf)
        env2, agent2 = self._mini(her=False)
        buf2 = ReplayBuffer(capacity=10000, min_fill=30)
        train(agent2, env2, None, epochs=1, episodes_per_epoch=2, seed=2, buffer=buf2)
        assert len(buf) > len(buf2)

    def test_evaluate_empty_request_flagged(self):
        env, agent = self._mini()
        metrics = evaluate(agent, env, None, episodes=0, seed=0)
        assert metrics.empty and metrics.episodes == 0

    def test_evaluate_deterministic_under_seed(self):
        env, agent = self._mini(seed=6)
        m1 = evaluate(agent, env, AdviserGains(1.3, 0.1, 0.1), episodes=4, seed=9)
        m2 = evaluate(agent, env, AdviserGains(1.3, 0.1, 0.1), episodes=4, seed=9)
        assert m1.final_goal_error_median == m2.final_goal_error_median
        assert m1.mean_return == m2.mean_return

    def test_perfect_oracle_policy_scores_full_success(self):
        # Closed-form stabilising controller stands in for a trained network.
        class OraclePolicy:
            def sample_action(self, s_e, deterministic=False):
                x, v = s_e[0], s_e[1]
                goal_minus_x = -s_e[-1]  # third slot holds -(g - x)
                return np.clip([2.0 * goal_minus_x - 1.0 * v], -1.0, 1.0)

        env = make_env(EnvConfig(name="line1d", max_steps=200))
        metrics = evaluate(OraclePolicy(), env, None, episodes=5, seed=3)
        assert metrics.success_rate == 1.0
        assert metrics.final_goal_error_median < 0.01

    def test_run_episode_trajectory_rows(self):
        env, agent = self._mini()
        ep = run_episode(env, agent, None, deterministic=True, collect=False,
                         seed=4, record_trajectory=True)
        assert len(ep.trajectory_rows) == ep.steps
        row = ep.trajectory_rows[0]
        # t + obs(2) + action(1) + achieved(1) + desired(1) + reward + 2 flags
        assert len(row) == 1 + 2 + 1 + 1 + 1 + 1 + 2
