"""Experiment harness: seeded runs, CSV logs, analysis, CLI."""

from lanerl.harness.analysis import (
    CONDITION_ORDER,
    MetricError,
    RolloutResult,
    compare_terminations,
    convergence_episode,
    curved_smoothness,
    eval_rollout,
    read_convergence_csv,
    read_episode_csv,
    smoothness_metric,
    write_medians_csv,
    write_verdict,
)
from lanerl.harness.config import ALGORITHMS, TERMINATIONS, TRACK_DEFAULTS, ExperimentConfig
from lanerl.harness.experiment import (
    AgentDriver,
    ConvergenceRecord,
    CurvatureFollower,
    EpisodeLog,
    ExperimentResult,
    build_agent,
    checkpoint_name,
    episodes_csv_name,
    load_track_arg,
    run_experiment,
    run_seed,
    run_training_episode,
)

__all__ = [
    "ALGORITHMS",
    "CONDITION_ORDER",
    "TERMINATIONS",
    "TRACK_DEFAULTS",
    "AgentDriver",
    "ConvergenceRecord",
    "CurvatureFollower",
    "EpisodeLog",
    "ExperimentConfig",
    "ExperimentResult",
    "MetricError",
    "RolloutResult",
    "build_agent",
    "checkpoint_name",
    "compare_terminations",
    "convergence_episode",
    "curved_smoothness",
    "episodes_csv_name",
    "eval_rollout",
    "load_track_arg",
    "read_convergence_csv",
    "read_episode_csv",
    "run_experiment",
    "run_seed",
    "run_training_episode",
    "smoothness_metric",
    "write_medians_csv",
    "write_verdict",
]
