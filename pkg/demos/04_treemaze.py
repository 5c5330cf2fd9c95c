"""
TreeMaze with memory-state options
===================================

The goal bits are shown once, at the start. Options named after what is
known so far carry that knowledge forward.
"""

import numpy as np

from ooi.envs import TreeMaze, TreeMazeOracle, shortest_paths, treemaze_options
from ooi.harness import ExperimentConfig, run_single, trailing_mean
from ooi.options import run_episode

print("shortest path lengths:", sorted({len(p) for p in shortest_paths().values()}))

options = treemaze_options("full14")
oracle = TreeMazeOracle(options)
rng = np.random.default_rng(0)
for goal in (0, 5):
    traj = run_episode(TreeMaze(goal=goal), oracle, options, rng)
    width = len(options) + TreeMaze.action_count
    picks = [options[s.choice - width].name for s in traj.steps if s.context is None]
    print(f"goal {goal:03b}: options {picks}, return {traj.total_reward:.1f}")

# A short learning run; the full acceptance budget is 50000 episodes.
for variant in ("full14", "known4"):
    rec = run_single(ExperimentConfig(env="treemaze", variant=variant, episodes=6000, runs=1), 0)
    print(f"{variant}: trailing-1000 mean after 6000 episodes {trailing_mean(rec.returns, 1000)[-1]:.2f}")
