"""Tile coding over box-bounded inputs, and the sparse tile-indexed Q-table.

Each tiling shifts the grid by (tiling_index / num_tilings) of a tile width
in every dimension, so an extra boundary cell per dimension catches the
spill past the upper bound. Out-of-bounds inputs are clamped, never
rejected.
"""

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class TileCoder:
    tiles_per_dim: tuple
    bounds_per_dim: tuple  # ((low, high), ...) per dimension
    num_tilings: int = 8

    def __post_init__(self):
        if self.num_tilings <= 0:
            raise ValueError("num_tilings must be positive")
        if len(self.tiles_per_dim) != len(self.bounds_per_dim):
            raise ValueError("tiles_per_dim and bounds_per_dim lengths differ")
        for n in self.tiles_per_dim:
            if n <= 0:
                raise ValueError(f"tiles_per_dim entries must be positive, got {n}")
        for low, high in self.bounds_per_dim:
            if not high > low:
                raise ValueError(f"bad bounds ({low}, {high})")

    @property
    def dim(self):
        return len(self.tiles_per_dim)

    @property
    def tiles_total(self):
        """Size of the tile-id space (ids are < this)."""
        cells = 1
        for n in self.tiles_per_dim:
            cells *= n + 1
        return self.num_tilings * cells

    def tile_widths(self):
        return tuple(
            (high - low) / n for (low, high), n in zip(self.bounds_per_dim, self.tiles_per_dim)
        )

    def encode(self, x):
        """x -> tuple of num_tilings distinct tile ids."""
        if len(x) != self.dim:
            raise ValueError(f"input has dim {len(x)}, coder expects {self.dim}")
        widths = self.tile_widths()
        clamped = [
            min(max(float(v), low), high)
            for v, (low, high) in zip(x, self.bounds_per_dim)
        ]
        ids = []
        for t in range(self.num_tilings):
            frac = t / self.num_tilings
            idx = t
            for d in range(self.dim):
                low, _ = self.bounds_per_dim[d]
                w = widths[d]
                cell = math.floor((clamped[d] - low + frac * w) / w)
                # offsets shift the grid by < one width: cells run 0..n
                idx = idx * (self.tiles_per_dim[d] + 1) + cell
            ids.append(idx)
        return tuple(ids)

    def to_config(self):
        return {
            "tiles_per_dim": list(self.tiles_per_dim),
            "bounds_per_dim": [list(b) for b in self.bounds_per_dim],
            "num_tilings": self.num_tilings,
        }

    @classmethod
    def from_config(cls, cfg):
        return cls(
            tiles_per_dim=tuple(cfg["tiles_per_dim"]),
            bounds_per_dim=tuple(tuple(b) for b in cfg["bounds_per_dim"]),
            num_tilings=cfg["num_tilings"],
        )


class QTable:
    """Sparse (tile_id, action) -> value map.

    Reads average over the active tiles; updates spread alpha/num_tilings
    of the TD error over them, so the effective step on the averaged value
    is alpha/num_tilings.
    """

    def __init__(self, n_actions, num_tilings, alpha=0.5, gamma=0.99):
        if n_actions <= 0:
            raise ValueError("n_actions must be positive")
        if not 0.0 <= gamma < 1.0:
            raise ValueError("gamma must be in [0, 1)")
        if alpha <= 0:
            raise ValueError("alpha must be positive")
        self.n_actions = n_actions
        self.num_tilings = num_tilings
        self.alpha = alpha
        self.gamma = gamma
        self.table = {}

    def q_value(self, tiles, action):
        get = self.table.get
        total = 0.0
        for tile in tiles:
            total += get((tile, action), 0.0)
        return total / len(tiles)

    def q_values(self, tiles):
        return [self.q_value(tiles, a) for a in range(self.n_actions)]

    def best_action(self, tiles):
        """Greedy action; ties break toward the lowest index."""
        best_a = 0
        best_q = self.q_value(tiles, 0)
        for a in range(1, self.n_actions):
            q = self.q_value(tiles, a)
            if q > best_q:
                best_q = q
                best_a = a
        return best_a

    def update(self, tiles, action, reward, next_tiles, done, alpha=None):
        """One Q-learning backup; returns the TD error."""
        if alpha is None:
            alpha = self.alpha
        bootstrap = 0.0
        if not done:
            bootstrap = self.gamma * max(
                self.q_value(next_tiles, a) for a in range(self.n_actions)
            )
        delta = reward + bootstrap - self.q_value(tiles, action)
        per_tile = (alpha / self.num_tilings) * delta
        table = self.table
        for tile in tiles:
            key = (tile, action)
            table[key] = table.get(key, 0.0) + per_tile
        return delta

    def to_entries(self):
        """Flat [[tile, action, value], ...] for serialization."""
        return [[int(t), int(a), v] for (t, a), v in sorted(self.table.items())]

    def load_entries(self, entries):
        self.table = {(int(t), int(a)): float(v) for t, a, v in entries}
