"""Options with predecessor-conditioned initiation sets.

Modules
-------
options   initiation sets, masks, the episode loop and discounted returns
fsc       finite state controllers, their compilation into options, exact traces
policy    masked policy network, value baseline, policy gradient, Adam
envs      TreeMaze, modified DuplicatedInput, object gathering
harness   seeded multi-run experiments, aggregation, CSV output
"""
__version__ = "0.1.0"

from .options import (InitiationSet, Observation, OptionSpec, Trajectory, available_options,
                      build_mask, discounted_returns, run_episode, without_oois)

__all__ = [
    "InitiationSet", "Observation", "OptionSpec", "Trajectory", "available_options",
    "build_mask", "discounted_returns", "run_episode", "without_oois", "__version__",
]
