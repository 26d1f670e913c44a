"""Transmission design for an amplifying-surface SWIPT downlink.

Library layout:

- `scenario`: experiment configuration, power budgeting, seeding
- `channel`: Rician channel synthesis and persistence
- `model`: SINR, rate, harvested power and constraint residuals
- `fp`: fractional-programming surrogate chain and auxiliary updates
- `conic`: real conic program IR with two solver engines
- `bf_stage` / `ris_stage`: the two convex subproblems
- `ao`: the alternating optimization driver
- `cli`: Monte-Carlo sweep harness (`riswipt` console script)
"""

from .ao import AoTrace, initialize, run
from .channel import ChannelSet, load_channels, path_loss, save_channels, synth_channels
from .model import Metrics, ReflectionVector, TxDesign, evaluate, wsr
from .scenario import (Budget, Scenario, default_scenario, load_config,
                       save_config, split_budget, trial_seed)

__version__ = "0.1.0"

__all__ = [
    "AoTrace", "Budget", "ChannelSet", "Metrics", "ReflectionVector",
    "Scenario", "TxDesign", "default_scenario", "evaluate", "initialize",
    "load_channels", "load_config", "path_loss", "run", "save_channels",
    "save_config", "split_budget", "synth_channels", "trial_seed", "wsr",
]
