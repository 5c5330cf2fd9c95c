"""
Learning curves across seeds
=============================

Runs a small object-gathering experiment with and without predecessor
restrictions and writes both curves as CSV, the same files ``ooi train``
produces.
"""

import dataclasses
import sys
from pathlib import Path

from ooi.harness import ExperimentConfig, aggregate, emit_csv, run_experiment

out = Path(sys.argv[1] if len(sys.argv) > 1 else "demo_results")
out.mkdir(exist_ok=True)

base = ExperimentConfig.load(Path(__file__).parent.parent / "configs" / "gathering_ooi.json")
base = dataclasses.replace(base, episodes=3000, runs=3)

for agent in ("ooi", "no_ooi"):
    cfg = dataclasses.replace(base, agent=agent)
    curve = aggregate(run_experiment(cfg), smoothing=100)
    path = emit_csv(curve, out / f"gathering_{agent}.csv")
    print(f"{agent:>6}: smoothed mean at episode {len(curve) - 1}: {curve.mean[-1]:.2f} -> {path}")
