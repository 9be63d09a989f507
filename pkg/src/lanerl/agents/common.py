"""Pieces shared by all three learners: schedules, observation encoding,
transitions, and per-run RNG stream derivation."""

from dataclasses import dataclass

import numpy as np

FULL_SPEED_KMH = 108.0  # 30 m/s, the dynamics default v_max


@dataclass(frozen=True)
class LinearSchedule:
    """Linear interpolation from start to end over decay_steps, then flat."""

    start: float
    end: float
    decay_steps: int

    def value(self, step):
        if step >= self.decay_steps:
            return self.end
        frac = step / self.decay_steps
        return self.start + (self.end - self.start) * frac


@dataclass(frozen=True)
class ObsEncoder:
    """Observation -> network input vector.

    speedX arrives in km/h; speed_scale maps it to ~[0,1] so it does not
    dwarf trackPos and angle. include_angle=False reproduces the strict
    two-sensor input variant.
    """

    include_angle: bool = True
    speed_scale: float = 1.0 / FULL_SPEED_KMH

    @property
    def dim(self):
        return 3 if self.include_angle else 2

    def encode(self, obs):
        if self.include_angle:
            return np.array([obs.trackPos, obs.angle, obs.speedX * self.speed_scale])
        return np.array([obs.trackPos, obs.speedX * self.speed_scale])

    def to_config(self):
        return {"include_angle": self.include_angle, "speed_scale": self.speed_scale}

    @classmethod
    def from_config(cls, cfg):
        return cls(include_angle=cfg["include_angle"], speed_scale=cfg["speed_scale"])


@dataclass
class Transition:
    s: np.ndarray
    a: object  # int index (discrete) or float vector (continuous)
    r: float
    s_next: np.ndarray
    done: bool


def rng_streams(seed, n):
    """n independent generators derived from one run seed."""
    seqs = np.random.SeedSequence(seed).spawn(n)
    return [np.random.default_rng(s) for s in seqs]


def init_seeds(seed, n):
    """n deterministic integer seeds derived from one run seed."""
    return [int(x) for x in np.random.SeedSequence(seed).generate_state(n)]
