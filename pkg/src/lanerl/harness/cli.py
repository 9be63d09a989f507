"""Command line entry point: train / eval / compare / replay-ablation /
scr-client / bench."""

import argparse
import json
import os
import sys

from lanerl.harness import analysis
from lanerl.harness.config import ALGORITHMS, TERMINATIONS, ExperimentConfig
from lanerl.harness.experiment import load_track_arg, run_experiment


def parse_seeds(text):
    """'1..5' -> (1,2,3,4,5); '1,4,9' and single values also accepted."""
    text = text.strip()
    if ".." in text:
        lo, hi = text.split("..", 1)
        lo, hi = int(lo), int(hi)
        if hi < lo:
            raise argparse.ArgumentTypeError(f"empty seed range {text!r}")
        return tuple(range(lo, hi + 1))
    return tuple(int(part) for part in text.split(",") if part)


def parse_override(pair):
    if "=" not in pair:
        raise argparse.ArgumentTypeError(f"expected key=value, got {pair!r}")
    key, raw = pair.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw  # bare strings like tanh
    return key, value


def _overrides_dict(pairs):
    d = {}
    for key, value in pairs or ():
        d[key] = tuple(value) if isinstance(value, list) else value
    return d


def _echo(seed, log):
    print(
        f"  seed {seed} episode {log.episode}: steps={log.steps} "
        f"laps={log.laps_completed} reward={log.total_reward:.1f} "
        f"end={log.termination_reason}",
        flush=True,
    )


def cmd_train(args):
    agent_overrides = _overrides_dict(args.set)
    if args.no_replay:
        agent_overrides["use_replay"] = False
    if args.no_target_net:
        agent_overrides["use_target_net"] = False
    cfg = ExperimentConfig(
        algorithm=args.algo,
        termination=args.termination,
        track=args.track,
        seeds=args.seeds,
        max_episodes=args.max_episodes,
        max_steps_per_episode=args.max_steps,
        convergence_laps=args.convergence_laps,
        paper_exact_obs=args.paper_exact_obs,
        agent=agent_overrides,
        out_dir=args.out,
    )
    print(f"training {cfg.run_tag} on {cfg.track}, seeds {cfg.seeds} -> {cfg.out_dir}")
    result = run_experiment(cfg, echo=_echo if args.progress else None)
    for record in result.records:
        status = (
            "failed (divergence)"
            if record.failed
            else f"converged at episode {record.convergence_episode}"
            if record.converged
            else f"no convergence in {record.episodes_run} episodes"
        )
        print(f"seed {record.seed}: {status} ({record.wall_time:.1f}s)")
    return 0


def cmd_eval(args):
    from lanerl.agents import load_agent

    agent = load_agent(args.checkpoint)
    trk = load_track_arg(args.track)
    rollout = analysis.eval_rollout(
        agent,
        trk,
        termination=args.termination,
        max_steps=args.max_steps,
        target_laps=args.laps,
        start_speed=args.start_speed,
    )
    try:
        curved = analysis.curved_smoothness(trk, rollout)
    except analysis.MetricError:
        curved = None
    report = {
        "checkpoint": args.checkpoint,
        "track": args.track,
        "start_speed": args.start_speed,
        "laps": rollout.laps,
        "steps": rollout.steps,
        "reward": rollout.total_reward,
        "termination": rollout.termination_reason,
        "mean_dsteer": rollout.mean_dsteer if rollout.steps >= 2 else None,
        "curved_mean_dsteer": curved,
        "achieved": rollout.laps >= args.laps,
    }
    print(json.dumps(report, indent=2, sort_keys=True))
    return 0 if report["achieved"] else 1


def cmd_compare(args):
    path = os.path.join(args.in_dir, "convergence.csv")
    by_condition = analysis.read_convergence_csv(path, algorithm=args.algo)
    report = analysis.compare_terminations(by_condition, args.max_episodes)
    report["algorithm"] = args.algo
    analysis.write_verdict(report, os.path.join(args.in_dir, "verdict.json"))
    analysis.write_medians_csv(report, os.path.join(args.in_dir, "medians.csv"))
    print(json.dumps(report, indent=2, sort_keys=True))
    return 0


def cmd_replay_ablation(args):
    results = {}
    for label, use_replay in (("with_replay", True), ("without_replay", False)):
        cfg = ExperimentConfig(
            algorithm="dqn",
            termination=args.termination,
            track=args.track,
            seeds=args.seeds,
            max_episodes=args.max_episodes,
            max_steps_per_episode=args.max_steps,
            agent={**_overrides_dict(args.set), "use_replay": use_replay},
            out_dir=os.path.join(args.out, label),
        )
        print(f"running {label} ...")
        results[label] = run_experiment(cfg, echo=_echo if args.progress else None)
    per_seed = []
    for with_r, without_r in zip(
        results["with_replay"].records, results["without_replay"].records
    ):
        cw = analysis.censored_episode(with_r, args.max_episodes)
        cwo = analysis.censored_episode(without_r, args.max_episodes)
        per_seed.append(
            {
                "seed": with_r.seed,
                "with_replay": cw,
                "with_replay_converged": with_r.converged,
                "without_replay": cwo,
                "without_replay_converged": without_r.converged,
                "delta": cwo - cw,  # positive: replay converged earlier
            }
        )
    import statistics

    report = {
        "per_seed": per_seed,
        "median_delta": float(statistics.median(r["delta"] for r in per_seed)),
        "note": "delta = censored(no replay) - censored(replay); positive means replay converged earlier",
        "max_episodes": args.max_episodes,
    }
    out_path = os.path.join(args.out, "ablation.json")
    os.makedirs(args.out, exist_ok=True)
    with open(out_path, "w") as f:
        json.dump(report, f, indent=2, sort_keys=True)
        f.write("\n")
    print(json.dumps(report, indent=2, sort_keys=True))
    return 0


def cmd_scr_client(args):
    from lanerl.agents import load_agent
    from lanerl.harness.experiment import AgentDriver
    from lanerl.scr import ActuatorFrame, run_client

    agent = load_agent(args.checkpoint)
    driver = AgentDriver(agent)

    def callback(frame):
        vec = driver.encode(frame.to_observation())
        action, _ = driver.act(vec, None, 0, explore=False)
        return ActuatorFrame(
            steer=action.steer, accel=action.accel, brake=action.brake, gear=action.gear
        )

    summary = run_client(
        args.host,
        args.port,
        callback,
        timeout_ms=args.timeout_ms,
        client_id=args.client_id,
        max_steps=args.max_steps,
    )
    print(
        json.dumps(
            {"steps": summary.steps, "restarts": summary.restarts, "timeouts": summary.timeouts}
        )
    )
    return 0


def cmd_bench(args):
    from lanerl import bench

    backends = None if args.backend == "auto" else [args.backend]
    rows, used = bench.run_bench(backends, train_steps=args.train_steps)
    print(bench.format_table(rows, used))
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="lanerl", description="Lane-keeping RL experiments and tooling"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train one algorithm under one termination condition")
    p.add_argument("--algo", choices=ALGORITHMS, default="ddac")
    p.add_argument("--termination", choices=TERMINATIONS, default="both")
    p.add_argument("--track", default="figure1", help="track file or builtin name")
    p.add_argument("--seeds", type=parse_seeds, default=(1, 2, 3, 4, 5), help="e.g. 1..5 or 1,2,7")
    p.add_argument("--out", default="runs")
    p.add_argument("--max-episodes", type=int, default=3000)
    p.add_argument("--max-steps", type=int, default=20_000)
    p.add_argument("--convergence-laps", type=int, default=10)
    p.add_argument("--no-replay", action="store_true", help="DQN: learn from latest transition only")
    p.add_argument("--no-target-net", action="store_true", help="DQN: bootstrap from the online net")
    p.add_argument("--paper-exact-obs", action="store_true", help="drop angle from observations")
    p.add_argument("--set", action="append", type=parse_override, metavar="KEY=VALUE",
                   help="agent hyperparameter override, repeatable")
    p.add_argument("--progress", action="store_true", help="print one line per episode")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="greedy evaluation rollout from a checkpoint")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--track", default="figure1")
    p.add_argument("--laps", type=int, default=10)
    p.add_argument("--termination", choices=TERMINATIONS, default="none")
    p.add_argument("--max-steps", type=int, default=20_000)
    p.add_argument("--start-speed", type=float, default=0.0,
                   help="initial speed in m/s (rolling start) for the rollout")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("compare", help="termination-condition ordering verdict")
    p.add_argument("--in", dest="in_dir", required=True, help="directory with convergence.csv")
    p.add_argument("--algo", choices=ALGORITHMS, default="ddac")
    p.add_argument("--max-episodes", type=int, default=3000, help="censoring cap")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("replay-ablation", help="DQN with vs without replay memory")
    p.add_argument("--track", default="figure1")
    p.add_argument("--termination", choices=TERMINATIONS, default="both")
    p.add_argument("--seeds", type=parse_seeds, default=(1, 2, 3))
    p.add_argument("--out", default="ablation")
    p.add_argument("--max-episodes", type=int, default=3000)
    p.add_argument("--max-steps", type=int, default=20_000)
    p.add_argument("--set", action="append", type=parse_override, metavar="KEY=VALUE")
    p.add_argument("--progress", action="store_true")
    p.set_defaults(func=cmd_replay_ablation)

    p = sub.add_parser("scr-client", help="drive an SCR server from a checkpoint")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=3001)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--timeout-ms", type=float, default=1000.0)
    p.add_argument("--client-id", default="SCR")
    p.add_argument("--max-steps", type=int, default=None)
    p.set_defaults(func=cmd_scr_client)

    p = sub.add_parser("bench", help="kernel and training-step benchmarks")
    p.add_argument("--backend", choices=("auto", "python", "compiled"), default="auto")
    p.add_argument("--train-steps", type=int, default=1500)
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
