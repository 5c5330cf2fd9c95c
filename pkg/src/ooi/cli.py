"""Command line entry point: ``ooi train | verify-fsc | oracle``."""
from __future__ import annotations

import argparse
import itertools
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import fsc as fsc_mod
from .envs import dupinput, gathering, treemaze
from .harness import ExperimentConfig, aggregate, emit_csv, run_experiment, write_metadata
from .options import run_episode

EXHAUSTIVE_LIMIT = 10**5
SAMPLED_SEQUENCES = 200


def _apply_overrides(config: ExperimentConfig, args) -> ExperimentConfig:
    doc = config.to_dict()
    for key, attr in (("base_seed", "seed"), ("runs", "runs"), ("episodes", "episodes")):
        value = getattr(args, attr, None)
        if value is not None:
            doc[key] = value
    return ExperimentConfig.from_dict(doc)


def cmd_train(args) -> int:
    config = _apply_overrides(ExperimentConfig.load(args.config), args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stem = Path(args.config).stem
    records = run_experiment(config)
    for r in records:
        if r.error:
            print(f"run {r.run_index} failed: {r.error}", file=sys.stderr)
    curve = aggregate(records, config.smoothing)
    csv_path = emit_csv(curve, out / f"{stem}.csv")
    write_metadata(config, records, out / f"{stem}.metadata.json")
    final = curve.mean[-1] if len(curve) else float("nan")
    print(f"{csv_path}: {len(curve)} episodes, {curve.runs} runs, final smoothed mean {final:.3f}")
    return 0


def verify_fsc(fsc: fsc_mod.Fsc, horizon: int = 10, rng=None):
    """Largest gap between the traces of ``fsc`` and of its compilation.

    Every observation sequence of length ``horizon`` is checked when there are
    at most 10^5 sequences of length <= horizon; otherwise 200 random ones.
    Returns ``(max_abs_difference, sequences_checked)``.
    """
    compiled = fsc_mod.compile_fsc(fsc)
    n_obs = fsc.observation_count
    total = sum(n_obs ** k for k in range(1, horizon + 1))
    if total <= EXHAUSTIVE_LIMIT:
        seqs = np.array(list(itertools.product(range(n_obs), repeat=horizon)), dtype=int)
    else:
        rng = np.random.default_rng(rng)
        seqs = rng.integers(n_obs, size=(SAMPLED_SEQUENCES, horizon))
    diff = np.abs(fsc_mod.trace_many(fsc, seqs) - fsc_mod.trace_many(compiled, seqs))
    return float(diff.max(initial=0.0)), len(seqs)


def cmd_verify_fsc(args) -> int:
    if args.config:
        fsc = fsc_mod.load_fsc(args.config)
        label = args.config
    else:
        fsc = fsc_mod.make_alternator()
        label = "alternator"
    gap, checked = verify_fsc(fsc, args.horizon, args.seed)
    n = fsc.node_count
    ok = gap <= 1e-9
    print(f"{label}: {n} nodes -> {n * n + n} options; {checked} sequences of length "
          f"{args.horizon}; max trace difference {gap:.3e} ({'equivalent' if ok else 'MISMATCH'})")
    return 0 if ok else 1


def oracle_report(config: ExperimentConfig, episodes: int, seed: int) -> dict:
    rng = np.random.default_rng(seed)
    if config.env == "treemaze":
        paths = treemaze.shortest_paths()
        steps = sorted({len(p) for p in paths.values()})
        env = treemaze.TreeMaze()
        options = treemaze.treemaze_options("full14")
        agent = treemaze.TreeMazeOracle(options)
        returns = [run_episode(env, agent, options, rng).total_reward for _ in range(episodes)]
        return {"env": "treemaze", "shortest_path_steps": steps,
                "optimal_return": 18 * treemaze.STEP_REWARD + treemaze.GOAL_REWARD,
                "scripted_mean_return": float(np.mean(returns))}
    if config.env == "dupinput":
        tapes = [dupinput.random_tape(rng) for _ in range(episodes)]
        return {"env": "dupinput",
                "expected_optimal_reward": float(np.mean([dupinput.dedup_oracle(t)[1] for t in tapes])),
                "expected_copy_only_reward": float(np.mean([dupinput.copy_only_return(t) for t in tapes])),
                "tapes": episodes}
    env = gathering.ObjectGathering()
    options = gathering.gathering_options()
    agent = gathering.GatheringExpert()
    returns = [run_episode(env, agent, options, rng).total_reward for _ in range(episodes)]
    return {"env": "gathering", "expert_mean_return": float(np.mean(returns)),
            "expert_std_return": float(np.std(returns)), "episodes": episodes}


def cmd_oracle(args) -> int:
    config = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    report = oracle_report(config, args.episodes or 1000, args.seed or 0)
    text = json.dumps(report, indent=2)
    print(text)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"oracle_{report['env']}.json").write_text(text + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ooi", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="run an experiment and write its learning curve")
    p.add_argument("--config", required=True, help="experiment JSON file")
    p.add_argument("--out", default="results", help="output directory")
    p.add_argument("--seed", type=int, help="override base_seed")
    p.add_argument("--runs", type=int)
    p.add_argument("--episodes", type=int)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("verify-fsc", help="check an FSC against its option compilation")
    p.add_argument("--config", help="FSC JSON file (default: the ABAB alternator)")
    p.add_argument("--horizon", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify_fsc)

    p = sub.add_parser("oracle", help="print reference values for an environment")
    p.add_argument("--config", help="experiment JSON file selecting the environment")
    p.add_argument("--out")
    p.add_argument("--seed", type=int)
    p.add_argument("--episodes", type=int)
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
