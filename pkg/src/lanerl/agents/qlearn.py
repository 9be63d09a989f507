"""Tile-coded Q-learning over the discrete action grid.

Fully online: one tabular backup per environment step, no replay, no
network. The tile coder runs over the encoded observation vector.
"""

import math
from dataclasses import dataclass

from lanerl.agents.actions import DiscreteActionSet
from lanerl.agents.common import LinearSchedule, ObsEncoder, rng_streams
from lanerl.agents.tilecoding import QTable, TileCoder

# encoded observation is [trackPos, angle, speedX_scaled]
DEFAULT_BOUNDS = ((-1.5, 1.5), (-math.pi, math.pi), (0.0, 1.0))
DEFAULT_BOUNDS_NO_ANGLE = ((-1.5, 1.5), (0.0, 1.0))


@dataclass
class QLearnConfig:
    num_tilings: int = 8
    tiles_per_dim: tuple = (8, 8, 8)
    bounds_per_dim: tuple = DEFAULT_BOUNDS
    alpha: float = 0.5
    gamma: float = 0.99
    eps_start: float = 1.0
    eps_end: float = 0.05
    eps_decay_steps: int = 50_000
    reward_scale: float = 1.0

    def to_dict(self):
        d = dict(self.__dict__)
        d["tiles_per_dim"] = list(self.tiles_per_dim)
        d["bounds_per_dim"] = [list(b) for b in self.bounds_per_dim]
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["tiles_per_dim"] = tuple(d["tiles_per_dim"])
        d["bounds_per_dim"] = tuple(tuple(b) for b in d["bounds_per_dim"])
        return cls(**d)


class QLearningAgent:
    def __init__(self, obs_dim, cfg=None, action_set=None, encoder=None, seed=0):
        self.cfg = cfg if cfg is not None else QLearnConfig()
        self.action_set = action_set if action_set is not None else DiscreteActionSet()
        self.encoder = encoder if encoder is not None else ObsEncoder()
        if len(self.cfg.tiles_per_dim) != obs_dim:
            raise ValueError(
                f"tiles_per_dim covers {len(self.cfg.tiles_per_dim)} dims, "
                f"observations have {obs_dim}"
            )
        self.obs_dim = obs_dim
        self.seed = seed
        self.coder = TileCoder(
            tiles_per_dim=self.cfg.tiles_per_dim,
            bounds_per_dim=self.cfg.bounds_per_dim,
            num_tilings=self.cfg.num_tilings,
        )
        self.qtable = QTable(
            n_actions=self.action_set.count,
            num_tilings=self.cfg.num_tilings,
            alpha=self.cfg.alpha,
            gamma=self.cfg.gamma,
        )
        (self._explore_rng,) = rng_streams(seed, 1)
        self.epsilon = LinearSchedule(
            self.cfg.eps_start, self.cfg.eps_end, self.cfg.eps_decay_steps
        )
        self.train_steps = 0

    def greedy_action(self, obs_vec):
        return self.qtable.best_action(self.coder.encode(obs_vec))

    def select_action(self, obs_vec, step):
        if self._explore_rng.random() < self.epsilon.value(step):
            return int(self._explore_rng.integers(self.action_set.count))
        return self.greedy_action(obs_vec)

    def observe(self, s, a, r, s_next, done):
        """Online backup; returns the TD error."""
        self.train_steps += 1
        return self.qtable.update(
            self.coder.encode(s),
            a,
            r * self.cfg.reward_scale,
            self.coder.encode(s_next),
            done,
        )
