"""Experiment harness: config, metrics, CSV handling, scripted runs, CLI."""

import json
import math
import os

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lanerl.harness import (
    TRACK_DEFAULTS,
    ConvergenceRecord,
    CurvatureFollower,
    ExperimentConfig,
    MetricError,
    RolloutResult,
    compare_terminations,
    convergence_episode,
    curved_smoothness,
    eval_rollout,
    read_convergence_csv,
    read_episode_csv,
    run_experiment,
    run_seed,
    smoothness_metric,
)
from lanerl.harness.cli import main, parse_override, parse_seeds, _overrides_dict
from lanerl.harness.experiment import (
    EPISODE_HEADER,
    append_convergence_row,
    checkpoint_name,
    episodes_csv_name,
)
from lanerl.simulator import DynamicsConfig
from lanerl.track import Arc, TrackSpec, build_track, load_builtin

CIRCLE_RADIUS = 60.0  # steer demand at v_max: 30/(60*0.8) = 0.625, legal


def circle_track():
    return build_track(
        TrackSpec(segments=(Arc(radius=CIRCLE_RADIUS, sweep=math.tau),), width=10.0)
    )


def write_circle_file(tmp_path):
    path = tmp_path / "circle.track"
    path.write_text("width 10\narc 60 360\n")
    return str(path)


class TestExperimentConfig:
    def test_json_round_trip(self):
        cfg = ExperimentConfig(
            algorithm="dqn",
            termination="out",
            seeds=(3, 9),
            max_episodes=7,
            agent={"gamma": 0.5},
        )
        assert ExperimentConfig.from_json(cfg.to_json()) == cfg

    def test_unknown_algorithm_rejected(self):
        with pytest.raises(ValueError, match="algorithm"):
            ExperimentConfig(algorithm="sarsa")

    def test_unknown_termination_rejected(self):
        with pytest.raises(ValueError, match="termination"):
            ExperimentConfig(termination="sometimes")

    def test_seeds_coerced_to_ints(self):
        cfg = ExperimentConfig(seeds=["4", "5"])
        assert cfg.seeds == (4, 5)

    def test_empty_seeds_rejected(self):
        with pytest.raises(ValueError, match="seed"):
            ExperimentConfig(seeds=())

    def test_overrides_layer_over_defaults(self):
        cfg = ExperimentConfig(algorithm="ddac", agent={"gamma": 0.5})
        merged = cfg.resolved_agent_overrides()
        assert merged["gamma"] == 0.5
        # untouched defaults still present
        assert merged["warmup_steps"] == TRACK_DEFAULTS["ddac"]["warmup_steps"]

    def test_run_tag(self):
        assert ExperimentConfig(algorithm="dqn", termination="none").run_tag == "dqn_none"


class TestConvergenceEpisode:
    def test_first_qualifying_index(self):
        assert convergence_episode([0, 3, 10, 12], 10) == 2

    def test_threshold_is_inclusive(self):
        assert convergence_episode([9, 10], 10) == 1

    def test_never_reaches(self):
        assert convergence_episode([0, 0, 0], 10) is None
        assert convergence_episode([], 10) is None

    def test_single_lap_requirement(self):
        assert convergence_episode([0, 1, 5], 1) == 1


class TestSmoothnessMetric:
    def test_constant_steer_is_zero(self):
        assert smoothness_metric([0.3] * 50) == 0.0

    def test_alternating_full_lock(self):
        assert smoothness_metric([1.0, -1.0] * 10) == pytest.approx(2.0)

    def test_linear_ramp(self):
        assert smoothness_metric(np.linspace(0.0, 1.0, 11)) == pytest.approx(0.1)

    def test_too_short_rejected(self):
        with pytest.raises(MetricError):
            smoothness_metric([0.5])


def lap_oracle(track_length, laps_required, accel=1.0, dyn=None):
    """Scalar recurrence the on-centerline follower must match exactly.

    With heading pinned at zero the full simulator collapses to a 1-D
    speed/progress recursion and the shaping reward to the new speed in
    m/s, so steps, laps and total reward all have closed forms.
    """
    dyn = dyn if dyn is not None else DynamicsConfig()
    v = s = total_reward = 0.0
    steps = laps = 0
    while laps < laps_required:
        steps += 1
        s_raw = s + v * dyn.dt
        if s_raw >= track_length:
            laps += 1
        s = s_raw % track_length
        v = min(
            dyn.v_max, v + (accel * dyn.max_accel - dyn.drag_coeff * v) * dyn.dt
        )
        total_reward += v
    return steps, total_reward


class TestScriptedOracle:
    def test_circle_laps_match_recurrence(self, tmp_path):
        trk = circle_track()
        cfg = ExperimentConfig(
            termination="none", seeds=(1,), max_episodes=3, out_dir=str(tmp_path)
        )
        record, logs = run_seed(
            cfg, 1, trk, agent_factory=lambda cfg, seed: CurvatureFollower(trk)
        )
        want_steps, want_reward = lap_oracle(trk.total_length, cfg.convergence_laps)
        assert record.converged
        assert record.convergence_episode == 0
        assert logs[0].steps == want_steps
        assert logs[0].laps_completed == 10
        assert logs[0].termination_reason == "lap_target"
        assert logs[0].total_reward == pytest.approx(want_reward, rel=1e-12)

    def test_figure1_laps_match_recurrence(self):
        # the follower holds the centerline on arbitrary curvature, so the
        # same 1-D oracle applies to the mixed track
        trk = load_builtin("figure1")
        rollout = eval_rollout(CurvatureFollower(trk), trk, target_laps=10)
        want_steps, want_reward = lap_oracle(trk.total_length, 10)
        assert rollout.laps == 10
        assert rollout.steps == want_steps
        assert rollout.total_reward == pytest.approx(want_reward, rel=1e-12)

    def test_rolling_start_skips_launch(self):
        trk = load_builtin("figure1")
        agent = CurvatureFollower(trk)
        standing = eval_rollout(agent, trk, max_steps=30)
        rolling = eval_rollout(agent, trk, max_steps=30, start_speed=12.0)
        # same pose, but the car is already moving on the first step
        assert standing.s_positions[1] == 0.0
        assert rolling.s_positions[1] == pytest.approx(12.0 * 0.05)
        assert rolling.s_positions[-1] > standing.s_positions[-1]

    def test_idle_agent_times_out(self, tmp_path):
        trk = circle_track()
        cfg = ExperimentConfig(
            termination="none",
            seeds=(1,),
            max_episodes=1,
            max_steps_per_episode=40,
            out_dir=str(tmp_path),
        )
        factory = lambda cfg, seed: CurvatureFollower(trk, accel=0.0, steer_override=0.0)
        record, logs = run_seed(cfg, 1, trk, agent_factory=factory)
        assert not record.converged
        assert record.convergence_episode is None
        assert record.episodes_run == 1
        log = logs[0]
        assert (log.steps, log.laps_completed) == (40, 0)
        assert log.termination_reason == "max_steps"
        assert log.total_reward == 0.0
        assert log.mean_dsteer == 0.0

    def test_idle_agent_trips_stuck(self, tmp_path):
        trk = circle_track()
        cfg = ExperimentConfig(
            termination="stuck",
            seeds=(1,),
            max_episodes=1,
            max_steps_per_episode=200,
            out_dir=str(tmp_path),
        )
        factory = lambda cfg, seed: CurvatureFollower(trk, accel=0.0, steer_override=0.0)
        record, logs = run_seed(cfg, 1, trk, agent_factory=factory)
        # grace period is 100 steps; the first check past it fires
        assert logs[0].termination_reason == "stuck"
        assert logs[0].steps == 101
        assert logs[0].total_reward == -200.0


class TestRunExperiment:
    def scripted_factory(self, cfg, seed):
        return CurvatureFollower(circle_track())

    def test_outputs_and_byte_identity(self, tmp_path):
        track_file = write_circle_file(tmp_path)
        outs = []
        for name in ("a", "b"):
            out = tmp_path / name
            cfg = ExperimentConfig(
                algorithm="ddac",
                termination="both",
                track=track_file,
                seeds=(1, 2),
                max_episodes=2,
                max_steps_per_episode=80,
                out_dir=str(out),
            )
            run_experiment(cfg, agent_factory=self.scripted_factory)
            outs.append(out)
        cfg_json = json.loads((outs[0] / "config_ddac_both.json").read_text())
        assert cfg_json["track"] == track_file
        assert tuple(cfg_json["seeds"]) == (1, 2)
        for seed in (1, 2):
            name = episodes_csv_name("ddac", "both", seed)
            first = (outs[0] / name).read_bytes()
            assert first == (outs[1] / name).read_bytes()
            assert first.splitlines()[0] == b"episode,steps,reward,laps,termination,mean_dsteer"
        # convergence.csv matches except the wall-time column
        rows = [
            [line.split(",")[:-1] for line in (out / "convergence.csv").read_text().splitlines()]
            for out in outs
        ]
        assert rows[0] == rows[1]

    def test_learned_run_writes_checkpoint(self, tmp_path):
        track_file = write_circle_file(tmp_path)
        cfg = ExperimentConfig(
            algorithm="qlearn",
            termination="both",
            track=track_file,
            seeds=(7,),
            max_episodes=2,
            max_steps_per_episode=50,
            out_dir=str(tmp_path / "out"),
        )
        result = run_experiment(cfg)
        assert os.path.exists(
            os.path.join(result.out_dir, checkpoint_name("qlearn", "both", 7))
        )
        by_cond = read_convergence_csv(os.path.join(result.out_dir, "convergence.csv"))
        assert [r.seed for r in by_cond["both"]] == [7]
        assert by_cond["both"][0].episodes_run == 2
        assert not by_cond["both"][0].converged

    def test_convergence_rows_last_one_wins(self, tmp_path):
        cfg = ExperimentConfig(algorithm="dqn", termination="out", out_dir=str(tmp_path))
        first = ConvergenceRecord(seed=3, converged=False, episodes_run=5)
        second = ConvergenceRecord(
            seed=3, converged=True, convergence_episode=11, episodes_run=12
        )
        append_convergence_row(str(tmp_path), cfg, first)
        append_convergence_row(str(tmp_path), cfg, second)
        by_cond = read_convergence_csv(tmp_path / "convergence.csv", algorithm="dqn")
        (rec,) = by_cond["out"]
        assert rec.converged and rec.convergence_episode == 11


class TestReadEpisodeCsv:
    def test_truncated_final_row_is_dropped(self, tmp_path):
        path = tmp_path / "episodes.csv"
        path.write_text(
            ",".join(EPISODE_HEADER)
            + "\n0,120,55.5,0,out_of_track,0.02\n1,400,300.25,2,lap_target,0.01\n2,77,1"
        )
        logs = read_episode_csv(path)
        assert [log.episode for log in logs] == [0, 1]
        assert logs[1].total_reward == 300.25
        assert logs[1].termination_reason == "lap_target"

    def test_half_written_number_is_dropped(self, tmp_path):
        path = tmp_path / "episodes.csv"
        path.write_text(
            ",".join(EPISODE_HEADER) + "\n0,120,55.5,0,stuck,0.02\n1,400,3.0e,2,x,0.01\n"
        )
        assert len(read_episode_csv(path)) == 1


def records_for(episodes, max_episodes=3000):
    """One ConvergenceRecord per entry; None means censored non-convergence."""
    out = []
    for i, ep in enumerate(episodes):
        if ep is None:
            out.append(ConvergenceRecord(seed=i + 1, episodes_run=max_episodes))
        else:
            out.append(
                ConvergenceRecord(
                    seed=i + 1, converged=True, convergence_episode=ep, episodes_run=ep + 1
                )
            )
    return out


class TestCompareTerminations:
    def test_paper_ordering_holds(self):
        report = compare_terminations(
            {
                "none": records_for([40]),
                "stuck": records_for([75]),
                "out": records_for([120]),
                "both": records_for([200]),
            },
            max_episodes=3000,
        )
        assert report["ordering_holds"] is True
        assert report["violations"] == []
        assert report["inconclusive"] is False
        assert report["conditions"]["none"]["median_episodes"] == 40.0
        assert report["conditions"]["none"]["display"] == "40.0"

    def test_violated_pair_is_named(self):
        report = compare_terminations(
            {
                "none": records_for([100]),
                "stuck": records_for([90]),
                "out": records_for([120]),
                "both": records_for([130]),
            },
            max_episodes=3000,
        )
        assert report["ordering_holds"] is False
        assert report["violations"] == [["none", "stuck"]]

    def test_censored_condition_ranks_last(self):
        report = compare_terminations(
            {
                "none": records_for([40]),
                "stuck": records_for([75]),
                "out": records_for([120]),
                "both": records_for([None, None]),
            },
            max_episodes=500,
        )
        both = report["conditions"]["both"]
        assert both["median_episodes"] == 500.0
        assert both["n_converged"] == 0
        assert both["display"] == ">500"
        assert report["ordering_holds"] is True
        assert report["inconclusive"] is True

    def test_missing_condition_is_inconclusive(self):
        report = compare_terminations({"both": records_for([100])}, max_episodes=3000)
        assert report["conditions"]["none"] is None
        assert report["inconclusive"] is True
        assert report["ordering_holds"] is True  # vacuously, on what exists

    def test_median_over_mixed_seeds(self):
        report = compare_terminations(
            {"out": records_for([100, 200, None])}, max_episodes=3000
        )
        assert report["conditions"]["out"]["median_episodes"] == 200.0
        assert report["conditions"]["out"]["n_converged"] == 2

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.integers(min_value=0, max_value=2999), min_size=4, max_size=4))
    def test_verdict_matches_sorted_check(self, eps):
        report = compare_terminations(
            {
                cond: records_for([ep])
                for cond, ep in zip(("none", "stuck", "out", "both"), eps)
            },
            max_episodes=3000,
        )
        assert report["ordering_holds"] == (sorted(eps) == eps)


class TestCurvedSmoothness:
    def rollout_at(self, positions, steers):
        return RolloutResult(
            steps=len(steers),
            laps=0,
            total_reward=0.0,
            termination_reason="max_steps",
            steers=np.asarray(steers, dtype=np.float64),
            s_positions=np.asarray(positions, dtype=np.float64),
        )

    def test_constant_steer_on_arc_is_zero(self):
        trk = load_builtin("figure1")
        # figure1 arc 1 spans s in (80, 150.69)
        rollout = self.rollout_at([85.0, 86.5, 88.0], [0.5, 0.5, 0.5])
        assert curved_smoothness(trk, rollout) == 0.0

    def test_straight_only_rollout_rejected(self):
        trk = load_builtin("figure1")
        rollout = self.rollout_at([0.0, 10.0, 20.0], [0.1, 0.9, 0.1])
        with pytest.raises(MetricError):
            curved_smoothness(trk, rollout)

    def test_only_consecutive_arc_pairs_count(self):
        trk = load_builtin("figure1")
        # straight -> arc transition step is excluded, arc -> arc is kept
        rollout = self.rollout_at([79.0, 81.0, 82.5], [0.0, 0.4, 0.1])
        assert curved_smoothness(trk, rollout) == pytest.approx(0.3)


class TestCliParsing:
    def test_seed_range(self):
        assert parse_seeds("1..5") == (1, 2, 3, 4, 5)

    def test_seed_list_and_single(self):
        assert parse_seeds("1,4,9") == (1, 4, 9)
        assert parse_seeds("7") == (7,)

    def test_empty_range_rejected(self):
        import argparse

        with pytest.raises(argparse.ArgumentTypeError):
            parse_seeds("5..3")

    def test_override_types(self):
        assert parse_override("gamma=0.95") == ("gamma", 0.95)
        assert parse_override("warmup_steps=500") == ("warmup_steps", 500)
        assert parse_override("hidden_activation=tanh") == ("hidden_activation", "tanh")
        key, value = parse_override("actor_hidden=[16, 16]")
        assert _overrides_dict([(key, value)]) == {"actor_hidden": (16, 16)}

    def test_override_requires_equals(self):
        import argparse

        with pytest.raises(argparse.ArgumentTypeError):
            parse_override("gamma")


class TestCliCommands:
    def train_tiny(self, tmp_path, out_name="out"):
        track_file = write_circle_file(tmp_path)
        out = tmp_path / out_name
        code = main(
            [
                "train",
                "--algo",
                "qlearn",
                "--termination",
                "both",
                "--track",
                track_file,
                "--seeds",
                "1",
                "--max-episodes",
                "1",
                "--max-steps",
                "40",
                "--out",
                str(out),
            ]
        )
        assert code == 0
        return track_file, out

    def test_train_writes_artifacts(self, tmp_path, capsys):
        _, out = self.train_tiny(tmp_path)
        assert (out / "config_qlearn_both.json").exists()
        assert (out / "convergence.csv").exists()
        assert (out / episodes_csv_name("qlearn", "both", 1)).exists()
        assert (out / checkpoint_name("qlearn", "both", 1)).exists()
        assert "no convergence in 1 episodes" in capsys.readouterr().out

    def test_eval_runs_checkpoint(self, tmp_path, capsys):
        track_file, out = self.train_tiny(tmp_path)
        capsys.readouterr()
        code = main(
            [
                "eval",
                "--checkpoint",
                str(out / checkpoint_name("qlearn", "both", 1)),
                "--track",
                track_file,
                "--laps",
                "0",
                "--max-steps",
                "40",
                "--start-speed",
                "12",
            ]
        )
        assert code == 0
        report = json.loads(capsys.readouterr().out)
        assert report["achieved"] is True
        assert report["steps"] >= 1
        assert report["start_speed"] == 12.0

    def test_compare_writes_verdict(self, tmp_path, capsys):
        for term, ep in (("none", 10), ("stuck", 20), ("out", 30), ("both", 40)):
            cfg = ExperimentConfig(algorithm="ddac", termination=term, out_dir=str(tmp_path))
            append_convergence_row(
                str(tmp_path),
                cfg,
                ConvergenceRecord(
                    seed=1, converged=True, convergence_episode=ep, episodes_run=ep + 1
                ),
            )
        code = main(["compare", "--in", str(tmp_path), "--algo", "ddac"])
        assert code == 0
        verdict = json.loads((tmp_path / "verdict.json").read_text())
        assert verdict["ordering_holds"] is True
        assert verdict["algorithm"] == "ddac"
        assert (tmp_path / "medians.csv").read_text().splitlines()[0] == (
            "condition,n_seeds,n_converged,median_episodes"
        )
        assert json.loads(capsys.readouterr().out)["ordering_holds"] is True

    def test_scr_client_drives_mock_server(self, tmp_path, capsys):
        from lanerl.scr import MockScrServer, SensorFrame

        _, out = self.train_tiny(tmp_path)
        capsys.readouterr()
        frames = [
            SensorFrame({"angle": (0.05,), "trackPos": (0.2,), "speedX": (30.0,)})
            for _ in range(3)
        ]
        with MockScrServer(frames) as server:
            code = main(
                [
                    "scr-client",
                    "--port",
                    str(server.port),
                    "--checkpoint",
                    str(out / checkpoint_name("qlearn", "both", 1)),
                    "--max-steps",
                    "3",
                ]
            )
        assert code == 0
        summary = json.loads(capsys.readouterr().out)
        assert summary["steps"] == 3
        assert len(server.actuators) == 3

    def test_bench_prints_table(self, capsys):
        code = main(["bench", "--backend", "python", "--train-steps", "25"])
        assert code == 0
        text = capsys.readouterr().out
        assert "forward" in text and "python" in text
