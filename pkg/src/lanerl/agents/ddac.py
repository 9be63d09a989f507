"""Deterministic actor-critic with continuous steer/accel/brake output.

The actor MLP ends in a linear layer; squashing (tanh on steer, sigmoid on
accel and brake) lives here so its derivative can be folded into the
chain-rule step: dJ/du = dQ/da|_{a=pi(s)} * dpi/du. The critic scores
(observation (+) action) and is trained on bootstrapped targets without a
target network. Exploration adds decayed Gaussian noise to the squashed
action, then clamps.
"""

from dataclasses import dataclass

import numpy as np

from lanerl import nn
from lanerl.agents.common import LinearSchedule, ObsEncoder, init_seeds, rng_streams
from lanerl.agents.replay import ReplayBuffer
from lanerl.simulator import CarAction

ACTION_DIM = 3  # steer, accel, brake
ACTION_LOW = np.array([-1.0, 0.0, 0.0])
ACTION_HIGH = np.array([1.0, 1.0, 1.0])


@dataclass
class DdacConfig:
    actor_hidden: tuple = (64, 64)
    critic_hidden: tuple = (64, 64)
    hidden_activation: str = "tanh"
    gamma: float = 0.99
    actor_lr: float = 1e-4
    critic_lr: float = 1e-3
    momentum: float = 0.9
    grad_clip: float = 10.0
    sigma_start: float = 0.3
    sigma_end: float = 0.02
    sigma_decay_steps: int = 50_000
    # uniform-random actions for the first N env steps so the critic sees
    # the whole action box before the actor starts chasing its gradient
    warmup_steps: int = 0
    batch_size: int = 32
    buffer_capacity: int = 100_000
    # pre-squash output bias: sigmoid(2) ~ 0.88 accel and sigmoid(-3) ~ 0.05
    # brake make the untrained car pull away instead of idling at the line
    actor_init_bias: tuple = (0.0, 2.0, -3.0)
    # shrink both output layers at init; a full-scale random actor head
    # rails the squash and its vanishing gradient locks the policy there
    final_init_scale: float = 0.01
    reward_scale: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError("gamma must be in [0, 1)")
        if self.final_init_scale <= 0.0:
            raise ValueError("final_init_scale must be positive")

    def to_dict(self):
        d = dict(self.__dict__)
        d["actor_hidden"] = list(self.actor_hidden)
        d["critic_hidden"] = list(self.critic_hidden)
        d["actor_init_bias"] = list(self.actor_init_bias)
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["actor_hidden"] = tuple(d["actor_hidden"])
        d["critic_hidden"] = tuple(d["critic_hidden"])
        d["actor_init_bias"] = tuple(d["actor_init_bias"])
        return cls(**d)


def squash(z):
    """Pre-squash actor output -> action in range. Works on (..., 3)."""
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    out[..., 0] = np.tanh(z[..., 0])
    out[..., 1:] = 1.0 / (1.0 + np.exp(-z[..., 1:]))
    return out


def squash_grad(action):
    """d(squash)/dz expressed through the squashed value."""
    grad = np.empty_like(action)
    grad[..., 0] = 1.0 - action[..., 0] ** 2
    grad[..., 1:] = action[..., 1:] * (1.0 - action[..., 1:])
    return grad


class DdacAgent:
    def __init__(self, obs_dim, cfg=None, encoder=None, seed=0):
        self.cfg = cfg if cfg is not None else DdacConfig()
        self.encoder = encoder if encoder is not None else ObsEncoder()
        self.obs_dim = obs_dim
        self.seed = seed
        c = self.cfg
        actor_seed, critic_seed = init_seeds(seed, 2)
        self._noise_rng, self._sample_rng = rng_streams(seed, 2)

        actor_sizes = [obs_dim, *c.actor_hidden, ACTION_DIM]
        actor_acts = [c.hidden_activation] * len(c.actor_hidden) + ["linear"]
        self.actor_net = nn.init_mlp(actor_sizes, activations=actor_acts, seed=actor_seed)
        self.actor_net.weights[-1] *= c.final_init_scale
        self.actor_net.biases[-1][:] = c.actor_init_bias
        self.actor_net.version += 1

        critic_sizes = [obs_dim + ACTION_DIM, *c.critic_hidden, 1]
        critic_acts = [c.hidden_activation] * len(c.critic_hidden) + ["linear"]
        self.critic_net = nn.init_mlp(critic_sizes, activations=critic_acts, seed=critic_seed)
        self.critic_net.weights[-1] *= c.final_init_scale
        self.critic_net.version += 1

        self.actor_sgd = nn.SgdConfig(
            learning_rate=c.actor_lr, momentum=c.momentum, clip_norm=c.grad_clip
        )
        self.critic_sgd = nn.SgdConfig(
            learning_rate=c.critic_lr, momentum=c.momentum, clip_norm=c.grad_clip
        )
        self.actor_state = nn.SgdState.for_params(self.actor_net)
        self.critic_state = nn.SgdState.for_params(self.critic_net)
        self.buffer = ReplayBuffer(c.buffer_capacity)
        self.sigma = LinearSchedule(c.sigma_start, c.sigma_end, c.sigma_decay_steps)
        self.train_steps = 0

    def policy(self, obs_vec):
        """Deterministic squashed action vector pi(s)."""
        z, _ = nn.forward(self.actor_net, np.asarray(obs_vec, dtype=np.float64))
        return squash(z)

    def select_action(self, obs_vec, step, explore=True):
        """CarAction from the policy, optionally with exploration noise."""
        if explore and step < self.cfg.warmup_steps:
            a = self._noise_rng.uniform(ACTION_LOW, ACTION_HIGH)
        else:
            a = self.policy(obs_vec)
            if explore:
                a = a + self._noise_rng.normal(
                    0.0, self.sigma.value(step), size=ACTION_DIM
                )
        a = np.clip(a, ACTION_LOW, ACTION_HIGH)
        return CarAction(steer=float(a[0]), accel=float(a[1]), brake=float(a[2]), gear=1)

    def critic_value(self, obs_vec, action_vec):
        x = np.concatenate([np.asarray(obs_vec), np.asarray(action_vec)])
        out, _ = nn.forward(self.critic_net, x)
        return float(out[0])

    def store(self, s, a, r, s_next, done):
        self.buffer.add(s, a, r * self.cfg.reward_scale, s_next, done)

    def train_step(self):
        """One critic descent step and one actor ascent step.

        Returns (critic_loss, actor_objective) or None when the buffer is
        still smaller than the batch size.
        """
        c = self.cfg
        if len(self.buffer) < c.batch_size:
            return None
        s, a, r, s_next, done = self.buffer.sample(c.batch_size, self._sample_rng)
        n = len(r)

        # critic: y = r + gamma * Q(s', pi(s')); done cuts the bootstrap
        z_next, _ = nn.forward(self.actor_net, s_next)
        a_next = squash(z_next)
        q_next, _ = nn.forward(self.critic_net, np.hstack([s_next, a_next]))
        if not np.all(np.isfinite(q_next)):
            raise nn.TrainingDivergenceError("non-finite critic bootstrap values")
        y = r + c.gamma * q_next[:, 0] * (~done)
        q_pred, cache = nn.forward(self.critic_net, np.hstack([s, a]))
        residual = q_pred[:, 0] - y
        critic_loss = float(np.mean(residual**2))
        gout = (2.0 * residual / n)[:, None]
        grads = nn.backward(self.critic_net, cache, gout)
        nn.sgd_step(self.critic_net, grads, self.critic_sgd, self.critic_state)

        # actor: ascend J = mean Q(s, pi(s)) through the updated critic
        actor_objective, actor_grads = self.actor_objective_and_gradient(s)
        nn.sgd_step(
            self.actor_net, actor_grads.scaled(-1.0), self.actor_sgd, self.actor_state
        )

        self.train_steps += 1
        return critic_loss, actor_objective

    def actor_objective_and_gradient(self, s):
        """J = mean_i Q(s_i, pi(s_i)) and dJ/du via the chain rule.

        The returned GradientSet points uphill; train_step negates it
        before handing it to the (descent) optimizer.
        """
        s = np.atleast_2d(np.asarray(s, dtype=np.float64))
        n = len(s)
        z, actor_cache = nn.forward(self.actor_net, s)
        a_pi = squash(z)
        q_pi, critic_cache = nn.forward(self.critic_net, np.hstack([s, a_pi]))
        objective = float(np.mean(q_pi[:, 0]))
        critic_grads = nn.backward(
            self.critic_net, critic_cache, np.full((n, 1), 1.0 / n)
        )
        dq_da = critic_grads.input_grad[:, self.obs_dim :]
        dj_dz = dq_da * squash_grad(a_pi)
        return objective, nn.backward(self.actor_net, actor_cache, dj_dz)
