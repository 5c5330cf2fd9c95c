"""Multi-run training and evaluation with deterministic seeding.

Seeding scheme: every run ``r`` of an experiment with base seed ``s`` owns
independent generators, one per stream role, built as
``numpy.random.SeedSequence(s, spawn_key=(r, ROLE_INDEX[role]))``. The roles
are ``env`` (episode draws), ``init`` (network weights), ``policy`` (action
sampling) and ``ooi`` (random predecessor sets).
"""
from __future__ import annotations

import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .envs import dupinput, gathering, treemaze
from .exceptions import OOIError
from .options import run_episode, step_returns, without_oois
from .policy import (AdamState, PolicyNet, ValueNet, adam_step, batch_pg_loss_and_grads,
                     value_loss_and_grads)

__all__ = [
    "ExperimentConfig",
    "RunRecord",
    "Curve",
    "EmptyInput",
    "ROLE_INDEX",
    "run_rngs",
    "build_setup",
    "run_single",
    "run_experiment",
    "aggregate",
    "trailing_mean",
    "emit_csv",
    "read_csv",
    "write_metadata",
]

log = logging.getLogger(__name__)

ENVS = ("treemaze", "dupinput", "gathering")
AGENTS = ("ooi", "no_ooi", "expert", "scripted_oracle")
DEFAULT_VARIANT = {"treemaze": "full14", "dupinput": "designed", "gathering": ""}
ROLE_INDEX = {"env": 0, "init": 1, "policy": 2, "ooi": 3}


class EmptyInput(OOIError, ValueError):
    """Aggregation was asked to summarise zero runs."""


@dataclass
class ExperimentConfig:
    """Everything that determines an experiment.

    Loaded from JSON files whose keys are these field names; unknown keys are
    rejected. ``stop_at``, when set, ends a run as soon as its trailing
    ``eval_window`` mean return reaches that value.
    """

    env: str = "gathering"
    variant: str = ""
    agent: str = "ooi"
    episodes: int = 1000
    runs: int = 20
    gamma: float = 0.99
    hidden: int = 100
    learning_rate: float = 1e-3
    value_learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    entropy_coef: float = 0.0
    n_options: int = 16
    literal_successors: bool = False
    step_limit: int = 1000
    base_seed: int = 0
    eval_window: int = 1000
    smoothing: int = 100
    workers: int = 1
    stop_at: Optional[float] = None

    def __post_init__(self):
        self.env = self.env.lower()
        self.agent = self.agent.lower().replace("-", "_")
        self.variant = (self.variant or DEFAULT_VARIANT.get(self.env, "")).lower()
        self.validate()

    def validate(self):
        if self.env not in ENVS:
            raise ValueError(f"env must be one of {ENVS}, got {self.env!r}")
        if self.agent not in AGENTS:
            raise ValueError(f"agent must be one of {AGENTS}, got {self.agent!r}")
        if self.episodes < 1:
            raise ValueError("episodes must be >= 1")
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError("gamma must lie in [0, 1]")
        if self.env == "treemaze" and self.variant not in treemaze.VARIANTS:
            raise ValueError(f"TreeMaze variant must be one of {treemaze.VARIANTS}")
        if self.env == "dupinput" and self.variant not in ("designed", "random"):
            raise ValueError("DuplicatedInput variant must be 'designed' or 'random'")
        if self.agent == "expert" and self.env != "gathering":
            raise ValueError("the expert agent exists for the gathering task only")
        if self.step_limit < 1 or self.eval_window < 1 or self.workers < 1 or self.hidden < 1:
            raise ValueError("step_limit, eval_window, workers and hidden must be positive")

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**doc)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict:
        return asdict(self)

    @property
    def learns(self) -> bool:
        return self.agent in ("ooi", "no_ooi")


@dataclass
class RunRecord:
    returns: np.ndarray
    seed: int
    run_index: int
    wall_time: float = 0.0
    error: Optional[str] = None

    def same_as(self, other: "RunRecord") -> bool:
        return (self.seed == other.seed and self.run_index == other.run_index
                and self.error == other.error and np.array_equal(self.returns, other.returns))


@dataclass
class Curve:
    episode: np.ndarray
    mean: np.ndarray
    std: np.ndarray
    runs: int = 0

    def __len__(self):
        return len(self.episode)


def run_rngs(base_seed: int, run_index: int) -> dict:
    return {role: np.random.default_rng(np.random.SeedSequence(base_seed, spawn_key=(run_index, idx)))
            for role, idx in ROLE_INDEX.items()}


def build_setup(config: ExperimentConfig, rngs: dict):
    """Environment, option list and (non-learning) agent for one run."""
    agent = None
    if config.env == "treemaze":
        env = treemaze.TreeMaze()
        if config.agent == "scripted_oracle":
            options = treemaze.treemaze_options("full14")
            agent = treemaze.TreeMazeOracle(options)
        else:
            options = treemaze.treemaze_options(config.variant, config.literal_successors)
    elif config.env == "dupinput":
        env = dupinput.DuplicatedInput()
        if config.agent == "scripted_oracle":
            options = dupinput.oracle_options()
            agent = dupinput.DupInputOracle()
        elif config.variant == "random":
            options = dupinput.dupinput_options("random", config.n_options, rngs["ooi"])
        else:
            options = dupinput.dupinput_options("designed")
    else:
        env = gathering.ObjectGathering()
        options = gathering.gathering_options()
        if config.agent in ("expert", "scripted_oracle"):
            agent = gathering.GatheringExpert()
    if config.agent == "no_ooi":
        options = without_oois(options)
    return env, options, agent


def trailing_mean(returns, window: int) -> np.ndarray:
    """Mean of each full trailing window; element ``i`` covers ``returns[i : i + window]``."""
    r = np.asarray(returns, dtype=float)
    if len(r) < window:
        return np.zeros(0)
    c = np.concatenate([[0.0], np.cumsum(r)])
    return (c[window:] - c[:-window]) / window


def _learner(config, env, options, rngs):
    net = PolicyNet(env.feature_dim, len(options), env.action_count, config.hidden, rngs["init"])
    vnet = ValueNet(env.feature_dim, len(options), config.hidden, rngs["init"])
    adam = dict(beta1=config.beta1, beta2=config.beta2, epsilon=config.epsilon)
    return (net, vnet, AdamState(alpha=config.learning_rate, **adam),
            AdamState(alpha=config.value_learning_rate, **adam))


def train_episode(traj, net, vnet, opt_state, val_state, gamma, entropy_coef=0.0):
    """One Monte-Carlo policy-gradient update and one baseline update from ``traj``."""
    steps = traj.learned_steps()
    if not steps:
        return
    x, w, masks, choices = traj.inputs(steps)
    inputs = np.hstack([x, w])
    returns = step_returns(traj, gamma, steps)
    baselines = vnet.predict(inputs)
    _, grads = batch_pg_loss_and_grads(net.params, inputs, masks, choices, returns - baselines,
                                       entropy_coef)
    adam_step(net.params, grads, opt_state)
    _, vgrads = value_loss_and_grads(vnet, inputs, returns)
    adam_step(vnet.params, vgrads, val_state)


def run_single(config: ExperimentConfig, run_index: int) -> RunRecord:
    """Train (or just play) one run and log the raw return of every episode."""
    start = time.perf_counter()
    rngs = run_rngs(config.base_seed, run_index)
    returns = []
    error = None
    try:
        env, options, agent = build_setup(config, rngs)
        if config.learns:
            net, vnet, opt_state, val_state = _learner(config, env, options, rngs)
            agent = net
        window_sum = 0.0
        for ep in range(config.episodes):
            traj = run_episode(env, agent, options, rngs["policy"], config.step_limit, rngs["env"])
            if config.learns:
                train_episode(traj, net, vnet, opt_state, val_state, config.gamma,
                              config.entropy_coef)
            ret = traj.total_reward
            returns.append(ret)
            window_sum += ret
            if ep >= config.eval_window:
                window_sum -= returns[ep - config.eval_window]
            if (config.stop_at is not None and ep + 1 >= config.eval_window
                    and window_sum / config.eval_window >= config.stop_at):
                break
    except (OOIError, FloatingPointError, ValueError) as exc:
        error = f"{type(exc).__name__}: {exc}"
        log.warning("run %d failed: %s", run_index, error)
    return RunRecord(np.array(returns), config.base_seed, run_index,
                     time.perf_counter() - start, error)


def _run_star(args):
    return run_single(*args)


def run_experiment(config: ExperimentConfig) -> list:
    """All runs of ``config``, in run order regardless of worker scheduling."""
    jobs = [(config, r) for r in range(config.runs)]
    if config.workers > 1 and config.runs > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            return list(pool.map(_run_star, jobs))
    return [run_single(*job) for job in jobs]


def _smooth(a, width):
    c = np.concatenate([[0.0], np.cumsum(a)])
    idx = np.arange(1, len(a) + 1)
    lo = np.maximum(0, idx - width)
    return (c[idx] - c[lo]) / (idx - lo)


def aggregate(records: Sequence[RunRecord], smoothing: Optional[int] = None) -> Curve:
    """Per-episode mean and population standard deviation across runs.

    Failed runs are skipped; runs of unequal length are cut to the shortest.
    A trailing moving average of width ``smoothing`` is applied afterwards.
    """
    good = [r for r in records if r.error is None and len(r.returns)]
    if not good:
        raise EmptyInput("no successful run to aggregate")
    n = min(len(r.returns) for r in good)
    data = np.stack([np.asarray(r.returns[:n], dtype=float) for r in good])
    mean = data.mean(axis=0)
    std = data.std(axis=0)
    if smoothing and smoothing > 1:
        mean = _smooth(mean, smoothing)
        std = _smooth(std, smoothing)
    return Curve(np.arange(n), mean, std, len(good))


def _fmt(x) -> str:
    return np.format_float_positional(float(x), trim="-")


def emit_csv(curve: Curve, path) -> Path:
    path = Path(path)
    lines = ["episode,mean,std"]
    lines += [f"{int(e)},{_fmt(m)},{_fmt(s)}" for e, m, s in zip(curve.episode, curve.mean, curve.std)]
    path.write_text("\n".join(lines) + "\n")
    return path


def read_csv(path) -> Curve:
    rows = Path(path).read_text().splitlines()
    if not rows or rows[0] != "episode,mean,std":
        raise ValueError(f"{path}: not a learning-curve CSV")
    data = np.array([[float(v) for v in r.split(",")] for r in rows[1:]]).reshape(-1, 3)
    return Curve(data[:, 0].astype(int), data[:, 1], data[:, 2])


def write_metadata(config: ExperimentConfig, records: Sequence[RunRecord], path) -> Path:
    path = Path(path)
    doc = {
        "package_version": __version__,
        "config": config.to_dict(),
        "seeding": "SeedSequence(base_seed, spawn_key=(run_index, role))",
        "roles": ROLE_INDEX,
        "runs": [{"run_index": r.run_index, "episodes": int(len(r.returns)), "error": r.error}
                 for r in records],
    }
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path
