"""Benchmark environments and their option sets."""
from .dupinput import (DuplicatedInput, DupInputOracle, copy_only_return, dedup_oracle,
                       dupinput_options, oracle_options, random_tape)
from .gathering import GatheringExpert, ObjectGathering, gathering_options
from .treemaze import TreeMaze, TreeMazeOracle, shortest_paths, treemaze_options

__all__ = [
    "DuplicatedInput", "DupInputOracle", "copy_only_return", "dedup_oracle",
    "dupinput_options", "oracle_options", "random_tape",
    "GatheringExpert", "ObjectGathering", "gathering_options",
    "TreeMaze", "TreeMazeOracle", "shortest_paths", "treemaze_options",
]
