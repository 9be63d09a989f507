"""One-file agent checkpoints.

Layout: magic b"LKAGENT1", u32 little-endian header length, UTF-8 JSON
header, then the raw blobs back to back. The header carries the agent
kind, encoder constants, action-set description, hyperparameters and a
(name, length) list describing the blobs; networks use the nn-core binary
format, the Q-table is JSON entries. Eval can therefore reload an agent
without the original training config.
"""

import json
import struct

from lanerl import nn
from lanerl.agents.actions import DiscreteActionSet
from lanerl.agents.common import ObsEncoder
from lanerl.agents.ddac import DdacAgent, DdacConfig
from lanerl.agents.dqn import DqnAgent, DqnConfig
from lanerl.agents.qlearn import QLearningAgent, QLearnConfig

_MAGIC = b"LKAGENT1"


def _blobs_for(agent):
    if isinstance(agent, DqnAgent):
        blobs = [("online_net", nn.dumps_mlp(agent.online_net))]
        if agent.target_net is not None:
            blobs.append(("target_net", nn.dumps_mlp(agent.target_net)))
        return "dqn", blobs
    if isinstance(agent, DdacAgent):
        return "ddac", [
            ("actor_net", nn.dumps_mlp(agent.actor_net)),
            ("critic_net", nn.dumps_mlp(agent.critic_net)),
        ]
    if isinstance(agent, QLearningAgent):
        entries = json.dumps(agent.qtable.to_entries()).encode("utf-8")
        return "qlearn", [("qtable", entries)]
    raise TypeError(f"cannot checkpoint {type(agent).__name__}")


def save_agent(agent, path):
    kind, blobs = _blobs_for(agent)
    header = {
        "kind": kind,
        "obs_dim": agent.obs_dim,
        "seed": agent.seed,
        "train_steps": agent.train_steps,
        "encoder": agent.encoder.to_config(),
        "config": agent.cfg.to_dict(),
        "blobs": [[name, len(data)] for name, data in blobs],
    }
    if hasattr(agent, "action_set"):
        header["action_set"] = agent.action_set.to_config()
    raw_header = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", len(raw_header)))
        fh.write(raw_header)
        for _, data in blobs:
            fh.write(data)
    return kind


def _read(path):
    with open(path, "rb") as fh:
        data = fh.read()
    if data[: len(_MAGIC)] != _MAGIC:
        raise ValueError(f"{path} is not an agent checkpoint (bad magic)")
    (header_len,) = struct.unpack_from("<I", data, len(_MAGIC))
    start = len(_MAGIC) + 4
    header = json.loads(data[start : start + header_len].decode("utf-8"))
    blobs = {}
    pos = start + header_len
    for name, length in header["blobs"]:
        blobs[name] = data[pos : pos + length]
        pos += length
    if pos != len(data):
        raise ValueError(f"trailing bytes in checkpoint {path}")
    return header, blobs


def load_agent(path):
    """Rebuild an agent from a checkpoint. RNG streams restart from the
    stored seed; parameters and tables are restored exactly."""
    header, blobs = _read(path)
    kind = header["kind"]
    encoder = ObsEncoder.from_config(header["encoder"])
    if kind == "dqn":
        agent = DqnAgent(
            obs_dim=header["obs_dim"],
            cfg=DqnConfig.from_dict(header["config"]),
            action_set=DiscreteActionSet.from_config(header["action_set"]),
            encoder=encoder,
            seed=header["seed"],
        )
        agent.online_net, _ = nn.loads_mlp(blobs["online_net"])
        if "target_net" in blobs:
            agent.target_net, _ = nn.loads_mlp(blobs["target_net"])
        agent.sgd_state = nn.SgdState.for_params(agent.online_net)
    elif kind == "ddac":
        agent = DdacAgent(
            obs_dim=header["obs_dim"],
            cfg=DdacConfig.from_dict(header["config"]),
            encoder=encoder,
            seed=header["seed"],
        )
        agent.actor_net, _ = nn.loads_mlp(blobs["actor_net"])
        agent.critic_net, _ = nn.loads_mlp(blobs["critic_net"])
        agent.actor_state = nn.SgdState.for_params(agent.actor_net)
        agent.critic_state = nn.SgdState.for_params(agent.critic_net)
    elif kind == "qlearn":
        agent = QLearningAgent(
            obs_dim=header["obs_dim"],
            cfg=QLearnConfig.from_dict(header["config"]),
            action_set=DiscreteActionSet.from_config(header["action_set"]),
            encoder=encoder,
            seed=header["seed"],
        )
        agent.qtable.load_entries(json.loads(blobs["qtable"].decode("utf-8")))
    else:
        raise ValueError(f"unknown agent kind {kind!r}")
    agent.train_steps = header["train_steps"]
    return agent
