"""
Compiling a finite state controller into options
=================================================

The ABAB alternator needs one bit of memory. Its compilation into
single-step options with predecessor-restricted initiation sets reproduces
it exactly with a memoryless top level; the same options without the
restriction cannot.
"""

import numpy as np

from ooi.fsc import (action_distribution_trace, compile_fsc, make_alternator, memoryless_search,
                     random_fsc, trace_tree)
from ooi.options import without_oois

fsc = make_alternator()
ctrl = compile_fsc(fsc)
print(f"{fsc.node_count} nodes -> {len(ctrl.options)} options:", [o.name for o in ctrl.options])

trace = action_distribution_trace(ctrl, ["x0"] * 6)
print("compiled trace:", "".join(fsc.actions[int(np.argmax(row))] for row in trace))

# Deterministic memoryless tables over the unrestricted options get one step right at best.
target = action_distribution_trace(fsc, ["x0"] * 6)
best, table = memoryless_search(without_oois(ctrl.options), ctrl.observations, 2, target)
print(f"best unrestricted table {table} matches {best} step(s)")

# Random controllers: exact traces of the controller and its compilation agree.
rng = np.random.default_rng(0)
worst = 0.0
for _ in range(20):
    f = random_fsc(rng)
    _, a = trace_tree(f, 6)
    _, b = trace_tree(compile_fsc(f), 6)
    worst = max(worst, float(np.abs(a - b).max()))
print(f"largest trace gap over 20 random controllers: {worst:.2e}")
