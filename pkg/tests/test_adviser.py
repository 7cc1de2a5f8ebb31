import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from aac.adviser import (AdviserGains, advise, fake_error, fake_goal,
                         make_adviser, reset)
from aac.core import GoalObservation, build_extended_observation, error


def obs(s, g_d, g_a):
    return GoalObservation(observation=s, desired_goal=g_d, achieved_goal=g_a)


class TestGains:
    def test_identity(self):
        g = AdviserGains.identity()
        assert g.as_tuple() == (1.0, 0.0, 0.0)
        assert g.is_identity()

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            AdviserGains(1.0, -0.1, 0.0)


class TestReset:
    def test_clears_integral_and_prev_error(self):
        state = make_adviser(AdviserGains(1.0, 0.5, 0.0), 1, dt=0.1)
        _, state = fake_error(state, [3.2])
        assert state.prev_error is not None
        state = reset(state)
        np.testing.assert_array_equal(state.integral, [0.0])
        assert state.prev_error is None

    def test_idempotent(self):
        state = make_adviser(AdviserGains(1.0, 0.5, 0.2), 2, dt=0.05)
        once = reset(state)
        twice = reset(once)
        np.testing.assert_array_equal(once.integral, twice.integral)
        assert once.prev_error is None and twice.prev_error is None
        assert once.gains == twice.gains and once.dt == twice.dt


class TestFakeError:
    def test_identity_gains_pass_error_through(self):
        state = make_adviser(AdviserGains.identity(), 1, dt=0.1)
        eps, _ = fake_error(state, [0.7])
        np.testing.assert_array_equal(eps, [-0.7])

    def test_pid_first_step(self):
        state = make_adviser(AdviserGains(1.3, 0.1, 0.1), 1, dt=0.1)
        eps, state = fake_error(state, [1.0])
        np.testing.assert_allclose(state.integral, [0.1])
        np.testing.assert_allclose(eps, [-1.31])
        np.testing.assert_array_equal(state.prev_error, [1.0])

    def test_zero_error_stays_zero(self):
        state = make_adviser(AdviserGains(1.3, 0.5, 0.2), 2, dt=0.1)
        for _ in range(10):
            eps, state = fake_error(state, [0.0, 0.0])
            np.testing.assert_array_equal(eps, [0.0, 0.0])

    def test_non_finite_rejected(self):
        state = make_adviser(AdviserGains.identity(), 1, dt=0.1)
        with pytest.raises(ValueError):
            fake_error(state, [np.inf])

    def test_dimension_mismatch_rejected(self):
        state = make_adviser(AdviserGains.identity(), 2, dt=0.1)
        with pytest.raises(ValueError):
            fake_error(state, [1.0])

    @settings(deadline=None)
    @given(st.floats(0.1, 10.0), st.integers(0, 2 ** 31 - 1), st.integers(1, 30))
    def test_linearity_without_clamp(self, scale, seed, steps):
        rng = np.random.default_rng(seed)
        errors = rng.normal(size=(steps, 2))
        gains = AdviserGains(1.3, 0.4, 0.2)
        a = make_adviser(gains, 2, dt=0.1, integral_clamp=1e12)
        b = make_adviser(gains, 2, dt=0.1, integral_clamp=1e12)
        for e in errors:
            eps_a, a = fake_error(a, e)
            eps_b, b = fake_error(b, scale * e)
            np.testing.assert_allclose(scale * eps_a, eps_b, rtol=1e-9, atol=1e-12)

    @given(st.integers(0, 2 ** 31 - 1), st.integers(1, 50), st.floats(0.5, 5.0))
    def test_integral_clamp_bound(self, seed, steps, clamp):
        rng = np.random.default_rng(seed)
        state = make_adviser(AdviserGains(1.0, 1.0, 0.0), 1, dt=0.5, integral_clamp=clamp)
        for _ in range(steps):
            _, state = fake_error(state, rng.normal(size=1) * 10.0)
            assert np.all(np.abs(state.integral) <= clamp)

    @given(st.integers(0, 2 ** 31 - 1))
    def test_p_term_is_stateless(self, seed):
        rng = np.random.default_rng(seed)
        gains = AdviserGains(2.0, 0.0, 0.0)
        history = make_adviser(gains, 1, dt=0.1)
        for e in rng.normal(size=5):
            _, history = fake_error(history, [e])
        fresh = make_adviser(gains, 1, dt=0.1)
        e_now = rng.normal(size=1)
        eps_hist, _ = fake_error(history, e_now)
        eps_fresh, _ = fake_error(fresh, e_now)
        np.testing.assert_array_equal(eps_hist, eps_fresh)


class TestAdvise:
    def test_identity_matches_plain_layout_bitwise(self):
        rng = np.random.default_rng(7)
        state = make_adviser(AdviserGains.identity(), 2, dt=0.02)
        for _ in range(20):
            o = obs(rng.normal(size=3), rng.normal(size=2), rng.normal(size=2))
            s_e, state = advise(state, o)
            plain = build_extended_observation(o, -error(o))
            assert np.array_equal(s_e, plain)

    def test_matched_goals_make_gains_irrelevant(self):
        rng = np.random.default_rng(8)
        state = make_adviser(AdviserGains(1.3, 0.7, 0.4), 1, dt=0.1)
        for _ in range(10):
            g = rng.normal(size=1)
            o = obs(rng.normal(size=2), g, g)
            s_e, state = advise(state, o)
            np.testing.assert_array_equal(s_e[-1:], [0.0])

    def test_pid_third_slot(self):
        state = make_adviser(AdviserGains(1.3, 0.1, 0.1), 1, dt=0.1)
        s_e, _ = advise(state, obs([0.0], [1.0], [0.0]))
        np.testing.assert_allclose(s_e, [0.0, 0.0, -1.31])


class TestFakeGoal:
    def test_identity_adviser_recovers_desired_goal(self):
        o = obs([0.0], [2.5], [1.0])
        eps = -error(o)
        np.testing.assert_array_equal(fake_goal(o, eps), [2.5])

    def test_definition(self):
        o = obs([0.0], [1.0], [0.0])
        np.testing.assert_allclose(fake_goal(o, [-1.31]), [1.31])

    def test_zero_synthetic_error(self):
        o = obs([0.0], [1.0], [0.3])
        np.testing.assert_array_equal(fake_goal(o, [0.0]), [0.3])

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            fake_goal(obs([0.0], [1.0], [1.0]), [0.0, 0.0])
