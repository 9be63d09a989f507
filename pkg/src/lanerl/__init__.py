"""Lane-keeping reinforcement learning lab.

Discrete (tile-coded Q-learning, DQN) and continuous (DDAC) agents on a
deterministic 2D track simulator with TORCS/SCR-style sensors, plus an SCR
protocol client for driving a real race server with a trained policy.
"""

from lanerl._backend import backend_name, use_backend

__version__ = "0.1.0"

__all__ = ["backend_name", "use_backend", "__version__"]
