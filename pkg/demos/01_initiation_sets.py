"""
Options whose availability depends on the previous option
==========================================================

Object gathering, played by a fixed top level that never looks back.
"""

import numpy as np

from ooi.envs import GatheringExpert, ObjectGathering, gathering_options
from ooi.envs.gathering import OBS_GREEN_FULL, OBS_ROOT, OPTION_NAMES
from ooi.options import Observation, available_options, build_mask, run_episode, without_oois

options = gathering_options()
root = Observation(np.eye(5)[OBS_ROOT], OBS_ROOT)
green = Observation(np.eye(5)[OBS_GREEN_FULL], OBS_GREEN_FULL)

# The same observation offers different options depending on what just ran.
for prev in (None, 0, 1, 2, 3):
    label = "start" if prev is None else OPTION_NAMES[prev]
    names = [OPTION_NAMES[k] for k in available_options(root, prev, options)]
    print(f"at the root after {label:>5}: {names}")

print("at green after G3:", [OPTION_NAMES[k] for k in available_options(green, 6, options)])

# A top-level mask has ones only in the "continue" row and only for options.
mask = build_mask(available_options(root, 1, options), action_count=12, option_count=12)
print("mask rows (end, cont):", mask.reshape(2, -1).sum(axis=1))

# The expert is memoryless; the initiation sets remember which terminal was
# full. Over many episodes its mean return sits near 10.
rng = np.random.default_rng(0)
env, expert = ObjectGathering(), GatheringExpert()
returns = [run_episode(env, expert, options, rng).total_reward for _ in range(5000)]
print(f"expert mean return over 5000 episodes: {np.mean(returns):.3f}")

# Lifting the predecessor restriction keeps everything else as it was.
plain = without_oois(options)
print("after R2 without restrictions:", [OPTION_NAMES[k] for k in available_options(root, 1, plain)])
