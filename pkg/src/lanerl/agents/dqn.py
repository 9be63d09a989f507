"""DQN over the discrete action grid, with toggleable replay and target net."""

from dataclasses import dataclass

import numpy as np

from lanerl import nn
from lanerl.agents.actions import DiscreteActionSet
from lanerl.agents.common import LinearSchedule, ObsEncoder, init_seeds, rng_streams
from lanerl.agents.replay import ReplayBuffer


@dataclass
class DqnConfig:
    hidden_sizes: tuple = (64, 64)
    hidden_activation: str = "tanh"
    gamma: float = 0.99
    learning_rate: float = 1e-3
    momentum: float = 0.9
    grad_clip: float = 10.0
    eps_start: float = 1.0
    eps_end: float = 0.05
    eps_decay_steps: int = 50_000
    batch_size: int = 32
    buffer_capacity: int = 100_000
    target_sync_interval: int = 1000
    use_replay: bool = True
    use_target_net: bool = True
    reward_scale: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError("gamma must be in [0, 1)")

    def to_dict(self):
        d = dict(self.__dict__)
        d["hidden_sizes"] = list(self.hidden_sizes)
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["hidden_sizes"] = tuple(d["hidden_sizes"])
        return cls(**d)


def compute_dqn_target(r, s_next, done, gamma, net):
    """Bellman target y = r + gamma * max_a' Q(s_next, a'); r alone if done."""
    y = batch_dqn_targets(
        np.atleast_1d(np.asarray(r, dtype=np.float64)),
        np.atleast_2d(np.asarray(s_next, dtype=np.float64)),
        np.atleast_1d(done),
        gamma,
        net,
    )
    return float(y[0])


def batch_dqn_targets(r, s_next, done, gamma, net):
    out, _ = nn.forward(net, s_next)
    if not np.all(np.isfinite(out)):
        raise nn.TrainingDivergenceError("non-finite Q-values in target computation")
    best = out.max(axis=1)
    return r + gamma * best * (~np.asarray(done))


class DqnAgent:
    """Interface: select_action / store / train_step, one call per env step."""

    def __init__(self, obs_dim, cfg=None, action_set=None, encoder=None, seed=0):
        self.cfg = cfg if cfg is not None else DqnConfig()
        self.action_set = action_set if action_set is not None else DiscreteActionSet()
        self.encoder = encoder if encoder is not None else ObsEncoder()
        self.obs_dim = obs_dim
        self.seed = seed
        c = self.cfg
        net_seed, = init_seeds(seed, 1)
        self._explore_rng, self._sample_rng = rng_streams(seed, 2)
        sizes = [obs_dim, *c.hidden_sizes, self.action_set.count]
        acts = [c.hidden_activation] * len(c.hidden_sizes) + ["linear"]
        self.online_net = nn.init_mlp(sizes, activations=acts, seed=net_seed)
        self.target_net = self.online_net.copy() if c.use_target_net else None
        self.sgd_cfg = nn.SgdConfig(
            learning_rate=c.learning_rate, momentum=c.momentum, clip_norm=c.grad_clip
        )
        self.sgd_state = nn.SgdState.for_params(self.online_net)
        self.buffer = ReplayBuffer(c.buffer_capacity)
        self.epsilon = LinearSchedule(c.eps_start, c.eps_end, c.eps_decay_steps)
        self.train_steps = 0

    def q_values(self, obs_vec):
        out, _ = nn.forward(self.online_net, np.asarray(obs_vec, dtype=np.float64))
        return out

    def greedy_action(self, obs_vec):
        """Argmax of online Q; ties break toward the lowest index."""
        return int(np.argmax(self.q_values(obs_vec)))

    def select_action(self, obs_vec, step):
        """Epsilon-greedy over the action grid."""
        if self._explore_rng.random() < self.epsilon.value(step):
            return int(self._explore_rng.integers(self.action_set.count))
        return self.greedy_action(obs_vec)

    def store(self, s, a, r, s_next, done):
        self.buffer.add(s, a, r * self.cfg.reward_scale, s_next, done)

    def _training_batch(self):
        c = self.cfg
        if c.use_replay:
            if len(self.buffer) < c.batch_size:
                return None
            return self.buffer.sample(c.batch_size, self._sample_rng)
        return self.buffer.latest()

    def train_step(self):
        """One SGD step on the squared Bellman residual.

        Returns the pre-step loss, or None when not enough data yet.
        """
        batch = self._training_batch()
        if batch is None:
            return None
        s, a, r, s_next, done = batch
        a = a.astype(np.int64)
        target_src = self.target_net if self.cfg.use_target_net else self.online_net
        y = batch_dqn_targets(r, s_next, done, self.cfg.gamma, target_src)

        out, cache = nn.forward(self.online_net, s)
        n = len(a)
        q_sa = out[np.arange(n), a]
        residual = q_sa - y
        loss = float(np.mean(residual**2))
        # gradient flows only through the taken action's Q-value
        gout = np.zeros_like(out)
        gout[np.arange(n), a] = 2.0 * residual / n
        grads = nn.backward(self.online_net, cache, gout)
        nn.sgd_step(self.online_net, grads, self.sgd_cfg, self.sgd_state)

        self.train_steps += 1
        if (
            self.cfg.use_target_net
            and self.train_steps % self.cfg.target_sync_interval == 0
        ):
            self.target_net.copy_from(self.online_net)
        return loss
