"""Discrete action grid for the value-based agents."""

from dataclasses import dataclass

from lanerl.simulator import CarAction

DEFAULT_STEER_LEVELS = (-1.0, -0.5, 0.0, 0.5, 1.0)
# (accel, brake) pairs; combined so full-throttle-plus-full-brake never
# appears in the grid
DEFAULT_THROTTLE_LEVELS = ((1.0, 0.0), (0.3, 0.0), (0.0, 0.8))


@dataclass(frozen=True)
class DiscreteActionSet:
    steer_levels: tuple = DEFAULT_STEER_LEVELS
    throttle_levels: tuple = DEFAULT_THROTTLE_LEVELS

    def __post_init__(self):
        for s in self.steer_levels:
            if not -1.0 <= s <= 1.0:
                raise ValueError(f"steer level {s} outside [-1, 1]")
        for accel, brake in self.throttle_levels:
            if not (0.0 <= accel <= 1.0 and 0.0 <= brake <= 1.0):
                raise ValueError(f"throttle level ({accel}, {brake}) outside [0, 1]")

    @property
    def count(self):
        return len(self.steer_levels) * len(self.throttle_levels)

    def decode(self, index):
        """Action index -> CarAction (steer-major ordering, gear fixed at 1)."""
        if not 0 <= index < self.count:
            raise IndexError(f"action index {index} outside [0, {self.count})")
        n_throttle = len(self.throttle_levels)
        steer = self.steer_levels[index // n_throttle]
        accel, brake = self.throttle_levels[index % n_throttle]
        return CarAction(steer=steer, accel=accel, brake=brake, gear=1)

    def encode(self, action):
        """CarAction -> index of the exact grid point; raises if not on grid."""
        try:
            si = self.steer_levels.index(action.steer)
            ti = self.throttle_levels.index((action.accel, action.brake))
        except ValueError:
            raise ValueError(
                f"action (steer={action.steer}, accel={action.accel}, "
                f"brake={action.brake}) is not on the grid"
            ) from None
        return si * len(self.throttle_levels) + ti

    def to_config(self):
        return {
            "steer_levels": list(self.steer_levels),
            "throttle_levels": [list(t) for t in self.throttle_levels],
        }

    @classmethod
    def from_config(cls, cfg):
        return cls(
            steer_levels=tuple(cfg["steer_levels"]),
            throttle_levels=tuple(tuple(t) for t in cfg["throttle_levels"]),
        )
