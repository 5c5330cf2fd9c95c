"""
The masked policy network and its gradients
============================================
"""

import numpy as np

from ooi.envs import DuplicatedInput, dupinput_options
from ooi.options import build_mask, run_episode, step_returns
from ooi.policy import PolicyNet, ValueNet, grad_check, value_grad_check

rng = np.random.default_rng(0)
net = PolicyNet(feature_dim=4, option_count=2, action_count=3, hidden=8, rng=rng)

# Inside an option only actions may be chosen; both end and continue rows are open.
mask = build_mask((), action_count=3, option_count=2, top_level=False)
y = net(rng.normal(size=4), np.array([1.0, 0.0]), mask)
print("in-option distribution (end row, cont row):")
print(np.round(y.reshape(2, -1), 3))

# Gradients of the episode loss against central differences.
options = dupinput_options("designed")
env = DuplicatedInput("ABBCDDE")
small = PolicyNet(env.feature_dim, 2, env.action_count, hidden=4, rng=rng)
traj = run_episode(env, small, options, rng, step_limit=6)
steps = traj.learned_steps()
returns = step_returns(traj, 0.9, steps)
print(f"{len(steps)} decisions, policy gradient relative error:",
      f"{grad_check(small, traj, returns, rng.normal(size=len(steps))):.2e}")

vnet = ValueNet(3, 2, hidden=4, rng=rng)
print(f"value gradient relative error: {value_grad_check(vnet, rng.normal(size=(5, 5)), rng.normal(size=5)):.2e}")
