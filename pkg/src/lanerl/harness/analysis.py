"""Post-run analysis: convergence, steering smoothness, condition ordering."""

import csv
import json
import os
import statistics
from dataclasses import dataclass

import numpy as np

from lanerl.harness.experiment import AgentDriver, ConvergenceRecord, EpisodeLog
from lanerl.simulator import CarState, LaneKeepingEnv, TerminationPolicy, observe
from lanerl.track import Arc

# the qualitative claim under test: earlier conditions converge no later
CONDITION_ORDER = ("none", "stuck", "out", "both")


class MetricError(ValueError):
    pass


def convergence_episode(laps_per_episode, laps_required):
    """Smallest 0-based episode index reaching laps_required, else None."""
    for i, laps in enumerate(laps_per_episode):
        if laps >= laps_required:
            return i
    return None


def smoothness_metric(steers):
    """Mean |steer_t - steer_{t-1}| over a rollout. Needs >= 2 steps."""
    arr = np.asarray(steers, dtype=np.float64)
    if arr.size < 2:
        raise MetricError(f"smoothness needs at least 2 steps, got {arr.size}")
    return float(np.mean(np.abs(np.diff(arr))))


@dataclass
class RolloutResult:
    steps: int
    laps: int
    total_reward: float
    termination_reason: str
    steers: np.ndarray
    s_positions: np.ndarray

    @property
    def mean_dsteer(self):
        return smoothness_metric(self.steers)


def eval_rollout(agent, trk, *, termination="none", max_steps=20_000, target_laps=None,
                 start_speed=0.0):
    """Greedy rollout with exploration off; records the steer trace.

    start_speed > 0 gives a rolling start: same pose, car already moving.
    A discrete greedy policy can sit in a steer limit cycle at standstill
    (during training the exploration noise is what launches it), and a
    smoothness measurement cares about driving, not launching.
    """
    driver = AgentDriver(agent)
    env = LaneKeepingEnv(trk, term=TerminationPolicy.from_condition(termination))
    obs = env.reset()
    if start_speed:
        env.state = CarState(speed=float(start_speed))
        obs = observe(env.state, trk)
    vec = driver.encode(obs)
    steers = []
    positions = []
    laps = 0
    total_reward = 0.0
    reason = "max_steps"
    steps = 0
    for _ in range(max_steps):
        positions.append(env.state.s)
        action, _ = driver.act(vec, env.state, 0, explore=False)
        res = env.step(action)
        steers.append(action.steer)
        total_reward += res.reward
        steps += 1
        if res.lap_completed_this_step:
            laps += 1
        vec = driver.encode(res.observation)
        if res.terminated:
            reason = res.termination_reason
            break
        if target_laps is not None and laps >= target_laps:
            reason = "lap_target"
            break
    return RolloutResult(
        steps=steps,
        laps=laps,
        total_reward=total_reward,
        termination_reason=reason,
        steers=np.asarray(steers),
        s_positions=np.asarray(positions),
    )


def curved_smoothness(trk, rollout):
    """Smoothness restricted to steps taken on arc segments.

    Differences are only taken between consecutive steps that are both on
    a curve, so straights never dilute the measurement.
    """
    on_arc = np.array(
        [isinstance(trk.segments[trk.segment_index_at(s)], Arc) for s in rollout.s_positions]
    )
    steers = rollout.steers
    diffs = [
        abs(steers[i] - steers[i - 1])
        for i in range(1, len(steers))
        if on_arc[i] and on_arc[i - 1]
    ]
    if len(diffs) < 1:
        raise MetricError("rollout never spent two consecutive steps on a curve")
    return float(np.mean(diffs))


def censored_episode(record, max_episodes):
    """Convergence episode with censoring: non-converged counts as the cap."""
    if record.converged and record.convergence_episode is not None:
        return record.convergence_episode
    return max_episodes


def compare_terminations(records_by_condition, max_episodes):
    """Median convergence episodes per condition plus the ordering verdict.

    Non-converged (or diverged) seeds are censored at max_episodes; a
    condition with zero converged seeds is still ranked, as the largest
    possible value, but makes the verdict inconclusive.
    """
    conditions = {}
    inconclusive = False
    for cond in CONDITION_ORDER:
        records = records_by_condition.get(cond)
        if not records:
            inconclusive = True
            conditions[cond] = None
            continue
        values = [censored_episode(r, max_episodes) for r in records]
        n_converged = sum(1 for r in records if r.converged)
        median = float(statistics.median(values))
        conditions[cond] = {
            "n_seeds": len(records),
            "n_converged": n_converged,
            "median_episodes": median,
            "display": str(median) if n_converged else f">{max_episodes}",
        }
        if n_converged == 0:
            inconclusive = True
    violations = []
    present = [c for c in CONDITION_ORDER if conditions[c] is not None]
    for a, b in zip(present, present[1:]):
        if conditions[a]["median_episodes"] > conditions[b]["median_episodes"]:
            violations.append([a, b])
    if len(present) < len(CONDITION_ORDER):
        inconclusive = True
    return {
        "ordering": list(CONDITION_ORDER),
        "conditions": conditions,
        "ordering_holds": not violations,
        "violations": violations,
        "inconclusive": inconclusive,
        "max_episodes": max_episodes,
    }


def write_verdict(report, path):
    with open(path, "w") as f:
        json.dump(report, f, indent=2, sort_keys=True)
        f.write("\n")


def write_medians_csv(report, path):
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(("condition", "n_seeds", "n_converged", "median_episodes"))
        for cond in CONDITION_ORDER:
            info = report["conditions"].get(cond)
            if info is None:
                continue
            writer.writerow(
                (cond, info["n_seeds"], info["n_converged"], info["median_episodes"])
            )


def read_episode_csv(path):
    """Parse an episode log; tolerates a truncated final line (crash safety)."""
    logs = []
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        for row in reader:
            if len(row) != 6:
                break
            try:
                logs.append(
                    EpisodeLog(
                        episode=int(row[0]),
                        steps=int(row[1]),
                        total_reward=float(row[2]),
                        laps_completed=int(row[3]),
                        termination_reason=row[4],
                        mean_dsteer=float(row[5]),
                    )
                )
            except ValueError:
                break
    return logs


def read_convergence_csv(path, algorithm=None):
    """Convergence rows keyed (algorithm, termination, seed), last one wins.

    Returns {termination: [ConvergenceRecord, ...]} filtered to one
    algorithm when given.
    """
    rows = {}
    with open(path, newline="") as f:
        for row in csv.DictReader(f):
            key = (row["algorithm"], row["termination"], int(row["seed"]))
            rows[key] = row
    by_condition = {}
    for (algo, termination, seed), row in sorted(rows.items()):
        if algorithm is not None and algo != algorithm:
            continue
        record = ConvergenceRecord(
            seed=seed,
            converged=bool(int(row["converged"])),
            convergence_episode=(
                int(row["convergence_episode"]) if row["convergence_episode"] != "" else None
            ),
            episodes_run=int(row["episodes_run"]),
            wall_time=float(row["wall_time_s"]),
            failed=bool(int(row["failed"])),
        )
        by_condition.setdefault(termination, []).append(record)
    return by_condition
