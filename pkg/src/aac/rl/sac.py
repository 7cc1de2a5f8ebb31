"""Soft actor-critic over extended observations.

Twin critics with minimum backup, a squashed-Gaussian policy head (mean and
log-std split from one network, log-std clamped), a learned temperature, and
polyak-averaged target critics. All gradients are assembled by hand through
:mod:`aac.nn`; the reparameterised policy gradient follows the standard
derivation: with fixed unit noise z and u = mean + std*z,

    d logpi / d mean    = 2*tanh(u)
    d logpi / d log_std = 2*tanh(u)*std*z - 1
    d action / d u      = half_range * (1 - tanh(u)^2)

The Gaussian density's direct dependence on the mean cancels under the
reparameterisation, leaving only the squash correction terms above.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

import numpy as np

from ..nn import AdamState, Mlp, adam_init, adam_step
from .buffer import ReplayBuffer

LOG_2PI = math.log(2.0 * math.pi)
LOG_2 = math.log(2.0)


@dataclass
class SacConfig:
    gamma: float = 0.995
    tau: float = 0.005
    batch_size: int = 64
    lr_actor: float = 3e-4
    lr_critic: float = 5e-4
    lr_alpha: float = 3e-4
    alpha_init: float = 0.2
    hidden_dim: int = 128
    hidden_layers: int = 3
    activation: str = "selu"
    buffer_capacity: int = 1_000_000
    min_buffer: int = 1000
    her: bool = False
    her_k: int = 4
    target_entropy: Optional[float] = None  # defaults to -action_dim
    log_std_min: float = -20.0
    log_std_max: float = 2.0


@dataclass
class UpdateReport:
    updated: bool
    critic_loss: float = float("nan")
    policy_loss: float = float("nan")
    alpha_loss: float = float("nan")
    alpha: float = float("nan")


class SacAgent:
    def __init__(self, obs_dim: int, action_low, action_high,
                 config: Optional[SacConfig] = None, seed: int = 0):
        self.config = config or SacConfig()
        cfg = self.config
        self.obs_dim = int(obs_dim)
        self.action_low = np.asarray(action_low, dtype=np.float64)
        self.action_high = np.asarray(action_high, dtype=np.float64)
        if self.action_low.shape != self.action_high.shape or self.action_low.ndim != 1:
            raise ValueError("action bounds must be matching 1-D arrays")
        self.action_dim = self.action_low.size
        self.center = (self.action_high + self.action_low) / 2.0
        self.half = (self.action_high - self.action_low) / 2.0
        self.target_entropy = (cfg.target_entropy if cfg.target_entropy is not None
                               else -float(self.action_dim))

        self.rng = np.random.default_rng(seed)
        hidden = [cfg.hidden_dim] * cfg.hidden_layers
        self.policy = Mlp([self.obs_dim] + hidden + [2 * self.action_dim],
                          cfg.activation, rng=self.rng)
        critic_sizes = [self.obs_dim + self.action_dim] + hidden + [1]
        self.q1 = Mlp(critic_sizes, cfg.activation, rng=self.rng)
        self.q2 = Mlp(critic_sizes, cfg.activation, rng=self.rng)
        self.q1_target = self.q1.copy()
        self.q2_target = self.q2.copy()

        self.log_alpha = np.array([math.log(cfg.alpha_init)])
        self.opt_policy = adam_init(self.policy.n_params, cfg.lr_actor)
        self.opt_q1 = adam_init(self.q1.n_params, cfg.lr_critic)
        self.opt_q2 = adam_init(self.q2.n_params, cfg.lr_critic)
        self.opt_alpha = adam_init(1, cfg.lr_alpha)

    @property
    def alpha(self) -> float:
        return float(np.exp(self.log_alpha[0]))

    # -- policy -----------------------------------------------------------------

    def _squash(self, u: np.ndarray) -> np.ndarray:
        return self.center + self.half * np.tanh(u)

    def _policy_heads(self, out: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        cfg = self.config
        mean = out[..., :self.action_dim]
        raw = out[..., self.action_dim:]
        return mean, np.clip(raw, cfg.log_std_min, cfg.log_std_max)

    def _log_prob(self, noise: np.ndarray, log_std: np.ndarray,
                  u: np.ndarray) -> np.ndarray:
        # Squashed-Gaussian density with the numerically stable tanh correction
        # log(1 - tanh(u)^2) = 2*(log 2 - u - softplus(-2u)).
        softplus = np.logaddexp(0.0, -2.0 * u)
        log_det = 2.0 * (LOG_2 - u - softplus) + np.log(self.half)
        gauss = -0.5 * noise * noise - 0.5 * LOG_2PI - log_std
        return np.sum(gauss - log_det, axis=-1)

    def sample_action(self, s_e, deterministic: bool = False) -> np.ndarray:
        s_e = np.asarray(s_e, dtype=np.float64)
        out = self.policy.forward(s_e)
        mean, log_std = self._policy_heads(out)
        if deterministic:
            return self._squash(mean)
        noise = self.rng.standard_normal(self.action_dim)
        return self._squash(mean + np.exp(log_std) * noise)

    def _sample_batch(self, obs: np.ndarray):
        """Stochastic actions and log-probs for a batch (no gradient caching)."""
        out = self.policy.forward(obs)
        mean, log_std = self._policy_heads(out)
        noise = self.rng.standard_normal(mean.shape)
        u = mean + np.exp(log_std) * noise
        actions = self._squash(u)
        return actions, self._log_prob(noise, log_std, u)

    # -- targets and updates -------------------------------------------------------

    def critic_target(self, batch: Dict[str, np.ndarray]) -> np.ndarray:
        """y = r + gamma * (1 - terminated) * (min target Q - alpha * logpi)."""
        next_actions, next_logp = self._sample_batch(batch["s_e_next"])
        xin = np.concatenate([batch["s_e_next"], next_actions], axis=1)
        q1t = self.q1_target.forward(xin)[:, 0]
        q2t = self.q2_target.forward(xin)[:, 0]
        soft_value = np.minimum(q1t, q2t) - self.alpha * next_logp
        return batch["reward"] + self.config.gamma * (1.0 - batch["terminated"]) * soft_value

    @staticmethod
    def critic_loss_grad(net: Mlp, xin: np.ndarray,
                         y: np.ndarray) -> Tuple[float, np.ndarray]:
        """Mean squared error to the targets and its flat parameter gradient."""
        q, cache = net.forward_cached(xin)
        diff = q[:, 0] - y
        loss = float(np.mean(diff * diff))
        upstream = (2.0 / diff.size) * diff[:, None]
        grad, _ = net.backward(cache, upstream)
        return loss, grad

    def policy_loss_grad(self, obs: np.ndarray,
                         noise: np.ndarray) -> Tuple[float, np.ndarray, np.ndarray]:
        """Reparameterised policy objective mean(alpha*logpi - min Q) at the
        given unit noise; returns (loss, flat policy gradient, log-probs)."""
        cfg = self.config
        B = obs.shape[0]
        out, cache = self.policy.forward_cached(obs)
        mean, log_std = self._policy_heads(out)
        raw = out[:, self.action_dim:]
        clamp_gate = ((raw > cfg.log_std_min) & (raw < cfg.log_std_max)).astype(np.float64)
        std = np.exp(log_std)
        u = mean + std * noise
        t = np.tanh(u)
        actions = self.center + self.half * t
        logp = self._log_prob(noise, log_std, u)

        xin_new = np.concatenate([obs, actions], axis=1)
        q1v, c1 = self.q1.forward_cached(xin_new)
        q2v, c2 = self.q2.forward_cached(xin_new)
        use_q1 = (q1v <= q2v).astype(np.float64)
        qmin = np.minimum(q1v, q2v)[:, 0]
        alpha = self.alpha
        loss = float(np.mean(alpha * logp - qmin))

        _, gin1 = self.q1.backward(c1, -use_q1 / B)
        _, gin2 = self.q2.backward(c2, -(1.0 - use_q1) / B)
        dL_da = (gin1 + gin2)[:, self.obs_dim:]

        dlogp_du = 2.0 * t
        da_du = self.half * (1.0 - t * t)
        d_mean = (alpha / B) * dlogp_du + dL_da * da_du
        sz = std * noise
        d_log_std = ((alpha / B) * (dlogp_du * sz - 1.0) + dL_da * da_du * sz) * clamp_gate
        upstream = np.concatenate([d_mean, d_log_std], axis=1)
        grad, _ = self.policy.backward(cache, upstream)
        return loss, grad, logp

    def update(self, buffer: ReplayBuffer) -> UpdateReport:
        cfg = self.config
        if len(buffer) < cfg.min_buffer:
            return UpdateReport(updated=False, alpha=self.alpha)
        batch = buffer.sample(cfg.batch_size, self.rng)

        y = self.critic_target(batch)
        xin = np.concatenate([batch["s_e"], batch["action"]], axis=1)
        loss1, grad1 = self.critic_loss_grad(self.q1, xin, y)
        theta, self.opt_q1 = adam_step(self.q1.theta, grad1, self.opt_q1)
        self.q1.set_theta(theta)
        loss2, grad2 = self.critic_loss_grad(self.q2, xin, y)
        theta, self.opt_q2 = adam_step(self.q2.theta, grad2, self.opt_q2)
        self.q2.set_theta(theta)

        noise = self.rng.standard_normal((cfg.batch_size, self.action_dim))
        policy_loss, grad_policy, logp = self.policy_loss_grad(batch["s_e"], noise)
        theta, self.opt_policy = adam_step(self.policy.theta, grad_policy, self.opt_policy)
        self.policy.set_theta(theta)

        # Temperature step toward the entropy target: stationary when
        # mean(logpi) settles at -target_entropy.
        alpha_grad = -np.mean(logp + self.target_entropy)
        alpha_loss = float(-self.log_alpha[0] * np.mean(logp + self.target_entropy))
        self.log_alpha, self.opt_alpha = adam_step(
            self.log_alpha, np.array([alpha_grad]), self.opt_alpha)

        self.polyak_update()
        return UpdateReport(updated=True, critic_loss=0.5 * (loss1 + loss2),
                            policy_loss=policy_loss, alpha_loss=alpha_loss,
                            alpha=self.alpha)

    def polyak_update(self) -> None:
        tau = self.config.tau
        self.q1_target.theta[:] = tau * self.q1.theta + (1.0 - tau) * self.q1_target.theta
        self.q2_target.theta[:] = tau * self.q2.theta + (1.0 - tau) * self.q2_target.theta

    # -- persistence ---------------------------------------------------------------

    def state_arrays(self) -> Dict[str, np.ndarray]:
        return {
            "policy": self.policy.theta,
            "q1": self.q1.theta,
            "q2": self.q2.theta,
            "q1_target": self.q1_target.theta,
            "q2_target": self.q2_target.theta,
            "log_alpha": self.log_alpha,
            "action_low": self.action_low,
            "action_high": self.action_high,
        }

    def load_state_arrays(self, arrays: Dict[str, np.ndarray]) -> None:
        self.policy.set_theta(arrays["policy"])
        self.q1.set_theta(arrays["q1"])
        self.q2.set_theta(arrays["q2"])
        self.q1_target.set_theta(arrays["q1_target"])
        self.q2_target.set_theta(arrays["q2_target"])
        self.log_alpha = np.asarray(arrays["log_alpha"], dtype=np.float64).copy()
