"""Kinematic lane-keeping environment in track-relative coordinates.

State is (s, lateral, heading_err, speed): arc-length progress along the
centerline, signed offset from it (+ = left), heading relative to the
local tangent, and longitudinal speed. Explicit Euler with all right-hand
sides evaluated at the old state, so trajectories are exactly reproducible.

Observations mimic the TORCS/SCR sensors the agents consume: trackPos
(lateral normalized by half-width), angle (rad) and speedX (km/h).
"""

import math
from dataclasses import dataclass

from lanerl.track import wrap_angle

KMH_PER_MS = 3.6


class EpisodeFinishedError(RuntimeError):
    """step() called on an episode that already terminated."""


@dataclass(slots=True)
class DynamicsConfig:
    dt: float = 0.05
    v_max: float = 30.0
    max_accel: float = 5.0
    max_brake_decel: float = 10.0
    max_steer_rate: float = 0.8  # rad/s of heading change at full lock
    drag_coeff: float = 0.02  # 1/s

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.v_max <= 0:
            raise ValueError("v_max must be positive")


@dataclass(slots=True)
class TerminationPolicy:
    out_of_track_enabled: bool = False
    stuck_enabled: bool = False
    stuck_speed_threshold: float = 5.0  # km/h
    stuck_grace_steps: int = 100
    horizontal_angle_threshold: float = math.pi / 2.0  # always enforced

    def __post_init__(self):
        if self.stuck_speed_threshold <= 0:
            raise ValueError("stuck_speed_threshold must be positive")
        if self.horizontal_angle_threshold <= 0:
            raise ValueError("horizontal_angle_threshold must be positive")

    @classmethod
    def from_condition(cls, name, **kwargs):
        """Build from a study-condition name: none|out|stuck|both."""
        flags = {
            "none": (False, False),
            "out": (True, False),
            "stuck": (False, True),
            "both": (True, True),
        }
        if name not in flags:
            raise ValueError(f"unknown termination condition {name!r}")
        out, stuck = flags[name]
        return cls(out_of_track_enabled=out, stuck_enabled=stuck, **kwargs)

    @property
    def condition_name(self):
        return {
            (False, False): "none",
            (True, False): "out",
            (False, True): "stuck",
            (True, True): "both",
        }[(self.out_of_track_enabled, self.stuck_enabled)]


@dataclass(slots=True)
class RewardConfig:
    """r = v * (cos_coeff*cos(angle) - sin_coeff*|sin(angle)| - pos_coeff*|trackPos|)

    with v the speed in m/s; any termination replaces the shaping with
    -penalty.
    """

    cos_coeff: float = 1.0
    sin_coeff: float = 1.0
    pos_coeff: float = 1.0
    penalty: float = 200.0


@dataclass(slots=True)
class CarState:
    s: float = 0.0
    lateral: float = 0.0
    heading_err: float = 0.0
    speed: float = 0.0
    step_count: int = 0
    laps_completed: int = 0


@dataclass(slots=True)
class Observation:
    trackPos: float
    angle: float
    speedX: float


@dataclass(slots=True)
class CarAction:
    steer: float = 0.0
    accel: float = 0.0
    brake: float = 0.0
    gear: int = 1  # interface compatibility only; dynamics are single-gear


@dataclass(slots=True)
class StepResult:
    observation: Observation
    reward: float
    terminated: bool
    termination_reason: str  # none | out_of_track | stuck | horizontal
    lap_completed_this_step: bool


def _clamp(x, lo, hi):
    return lo if x < lo else hi if x > hi else x


def observe(state, track):
    return Observation(
        trackPos=state.lateral / (track.width / 2.0),
        angle=state.heading_err,
        speedX=state.speed * KMH_PER_MS,
    )


def compute_reward(obs, termination_reason, cfg=None):
    """Progress-shaping reward; any termination yields the flat penalty."""
    if cfg is None:
        cfg = RewardConfig()
    if termination_reason != "none":
        return -cfg.penalty
    v = obs.speedX / KMH_PER_MS
    return v * (
        cfg.cos_coeff * math.cos(obs.angle)
        - cfg.sin_coeff * abs(math.sin(obs.angle))
        - cfg.pos_coeff * abs(obs.trackPos)
    )


def check_termination(state, obs, term):
    """Reason string, honoring precedence horizontal > out_of_track > stuck."""
    if abs(obs.angle) > term.horizontal_angle_threshold:
        return "horizontal"
    if term.out_of_track_enabled and abs(obs.trackPos) > 1.0:
        return "out_of_track"
    if (
        term.stuck_enabled
        and state.step_count > term.stuck_grace_steps
        and obs.speedX < term.stuck_speed_threshold
    ):
        return "stuck"
    return "none"


def step(state, action, track, dyn=None, term=None, reward_cfg=None):
    """Advance one tick; returns (new CarState, StepResult).

    Out-of-range action fields are clamped, never rejected. All dynamics
    right-hand sides use the pre-step state.
    """
    if dyn is None:
        dyn = DynamicsConfig()
    if term is None:
        term = TerminationPolicy()
    steer = _clamp(action.steer, -1.0, 1.0)
    accel = _clamp(action.accel, 0.0, 1.0)
    brake = _clamp(action.brake, 0.0, 1.0)

    dt = dyn.dt
    speed = _clamp(
        state.speed
        + (accel * dyn.max_accel - brake * dyn.max_brake_decel - dyn.drag_coeff * state.speed)
        * dt,
        0.0,
        dyn.v_max,
    )
    kappa = track.curvature_at(state.s)
    cos_h = math.cos(state.heading_err)
    heading = wrap_angle(
        state.heading_err + steer * dyn.max_steer_rate * dt - kappa * state.speed * dt * cos_h
    )
    lateral = state.lateral + state.speed * math.sin(state.heading_err) * dt
    s_raw = state.s + state.speed * cos_h * dt
    lap = s_raw >= track.total_length  # forward wrap only
    new_state = CarState(
        s=s_raw % track.total_length,
        lateral=lateral,
        heading_err=heading,
        speed=speed,
        step_count=state.step_count + 1,
        laps_completed=state.laps_completed + (1 if lap else 0),
    )
    obs = observe(new_state, track)
    reason = check_termination(new_state, obs, term)
    reward = compute_reward(obs, reason, reward_cfg)
    return new_state, StepResult(
        observation=obs,
        reward=reward,
        terminated=reason != "none",
        termination_reason=reason,
        lap_completed_this_step=lap,
    )


def reset(track, seed=0):
    """Fresh episode: centered, aligned, standing still. The seed is part
    of the interface for forward compatibility; the start state is fixed."""
    state = CarState()
    return state, observe(state, track)


class LaneKeepingEnv:
    """Stateful convenience wrapper over the pure step/reset functions."""

    def __init__(self, track, dyn=None, term=None, reward_cfg=None):
        self.track = track
        self.dyn = dyn if dyn is not None else DynamicsConfig()
        self.term = term if term is not None else TerminationPolicy()
        self.reward_cfg = reward_cfg if reward_cfg is not None else RewardConfig()
        self.state = None
        self._done = False

    def reset(self, seed=0):
        self.state, obs = reset(self.track, seed)
        self._done = False
        return obs

    def step(self, action):
        if self.state is None:
            raise EpisodeFinishedError("reset() must be called before step()")
        if self._done:
            raise EpisodeFinishedError("episode already terminated; call reset()")
        self.state, result = step(
            self.state, action, self.track, self.dyn, self.term, self.reward_cfg
        )
        self._done = result.terminated
        return result

    @property
    def done(self):
        return self._done
