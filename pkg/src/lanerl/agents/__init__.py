"""The three learners plus their shared plumbing."""

from lanerl.agents.actions import DiscreteActionSet
from lanerl.agents.checkpoint import load_agent, save_agent
from lanerl.agents.common import LinearSchedule, ObsEncoder, Transition
from lanerl.agents.ddac import DdacAgent, DdacConfig
from lanerl.agents.dqn import DqnAgent, DqnConfig, compute_dqn_target
from lanerl.agents.qlearn import QLearnConfig, QLearningAgent
from lanerl.agents.replay import ReplayBuffer
from lanerl.agents.tilecoding import QTable, TileCoder

__all__ = [
    "DiscreteActionSet",
    "load_agent",
    "save_agent",
    "LinearSchedule",
    "ObsEncoder",
    "Transition",
    "DdacAgent",
    "DdacConfig",
    "DqnAgent",
    "DqnConfig",
    "compute_dqn_target",
    "QLearnConfig",
    "QLearningAgent",
    "ReplayBuffer",
    "QTable",
    "TileCoder",
]
