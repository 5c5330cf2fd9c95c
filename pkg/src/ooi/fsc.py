"""Finite state controllers and their compilation into options.

A controller ``Fsc(psi, eta, eta0)`` over ``N`` nodes, ``X`` observations and
``A`` actions stores

* ``psi[n, a]``: probability of emitting ``a`` in node ``n``,
* ``eta[n, x, m]``: probability of moving from ``n`` to ``m`` on observing ``x``,
* ``eta0[x, n]``: distribution of the first node given the first observation.

:func:`compile_fsc` turns a controller into an equivalent set of single-step
options plus a memoryless top-level table ``mu``. One option is created per
ordered node pair ``(n', n)`` and one per start node ``(None, n)``; option
``(n', n)`` may only follow an option that ended in ``n'``.

:func:`action_distribution_trace` computes exact per-step action marginals
for either kind of controller, which is how equivalence is checked.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .exceptions import NoAvailableOption, StateExplosion, UnknownObservation
from .options import InitiationSet, Observation, OptionSpec, available_options

__all__ = [
    "Fsc",
    "CompiledController",
    "fsc_step",
    "compile_fsc",
    "action_distribution_trace",
    "trace_tree",
    "make_alternator",
    "random_fsc",
    "memoryless_search",
    "load_fsc",
    "save_fsc",
]

ROW_TOL = 1e-9
DEFAULT_STATE_BOUND = 10**6


@dataclass(frozen=True, eq=False)
class Fsc:
    psi: np.ndarray
    eta: np.ndarray
    eta0: np.ndarray
    observations: tuple = ()
    actions: tuple = ()

    def __post_init__(self):
        psi = np.asarray(self.psi, dtype=float)
        eta = np.asarray(self.eta, dtype=float)
        eta0 = np.asarray(self.eta0, dtype=float)
        n, a = psi.shape
        if n < 1:
            raise ValueError("an FSC needs at least one node")
        if eta.ndim != 3 or eta.shape[0] != n or eta.shape[2] != n:
            raise ValueError(f"eta must have shape (N, X, N), got {eta.shape} for N={n}")
        x = eta.shape[1]
        if eta0.shape != (x, n):
            raise ValueError(f"eta0 must have shape ({x}, {n}), got {eta0.shape}")
        for name, table in (("psi", psi), ("eta", eta), ("eta0", eta0)):
            if (table < 0).any():
                raise ValueError(f"{name} has negative probabilities")
            if not np.allclose(table.sum(axis=-1), 1.0, rtol=0.0, atol=ROW_TOL):
                raise ValueError(f"{name} rows must sum to 1")
        object.__setattr__(self, "psi", psi)
        object.__setattr__(self, "eta", eta)
        object.__setattr__(self, "eta0", eta0)
        object.__setattr__(self, "observations", tuple(self.observations) or tuple(range(x)))
        object.__setattr__(self, "actions", tuple(self.actions) or tuple(range(a)))

    @property
    def node_count(self) -> int:
        return self.psi.shape[0]

    @property
    def observation_count(self) -> int:
        return self.eta.shape[1]

    @property
    def action_count(self) -> int:
        return self.psi.shape[1]

    def observation_index(self, obs) -> int:
        return _lookup(self.observations, obs)


def _lookup(labels, obs) -> int:
    if isinstance(obs, Observation):
        obs = obs.raw
    if obs in labels:
        return labels.index(obs)
    if isinstance(obs, (int, np.integer)) and 0 <= obs < len(labels):
        return int(obs)
    raise UnknownObservation(obs)


def fsc_step(fsc: Fsc, node: Optional[int], obs, rng: np.random.Generator):
    """Sample the next node from ``eta`` (``eta0`` when ``node`` is None), then an action."""
    x = fsc.observation_index(obs)
    dist = fsc.eta0[x] if node is None else fsc.eta[node, x]
    nxt = int(rng.choice(fsc.node_count, p=dist))
    action = int(rng.choice(fsc.action_count, p=fsc.psi[nxt]))
    return nxt, action


@dataclass(frozen=True, eq=False)
class CompiledController:
    """Options plus top-level table ``mu[x, option]``.

    ``pairs[k]`` is the ``(previous node or None, node)`` pair option ``k``
    stands for; it is informational only, behaviour is fully determined by
    ``options`` and ``mu``.
    """

    options: tuple
    mu: np.ndarray
    observations: tuple
    action_count: int
    pairs: tuple = ()

    def observation_index(self, obs) -> int:
        return _lookup(self.observations, obs)


def compile_fsc(fsc: Fsc, observation_alphabet: Optional[Sequence] = None) -> CompiledController:
    n = fsc.node_count
    observations = tuple(observation_alphabet) if observation_alphabet is not None else fsc.observations
    if len(observations) != fsc.observation_count:
        raise ValueError("observation alphabet does not match the controller's tables")

    pairs = [(p, q) for p in range(n) for q in range(n)] + [(None, q) for q in range(n)]
    index = {pair: k for k, pair in enumerate(pairs)}
    # option (n', n) can follow any option whose destination node is n'
    ending_in = {q: frozenset(index[(p, q)] for p in [None, *range(n)]) for q in range(n)}

    options = []
    for k, (p, q) in enumerate(pairs):
        emit = fsc.psi[q].copy()
        emit.setflags(write=False)
        preds = frozenset({None}) if p is None else ending_in[p]
        options.append(OptionSpec(
            id=k,
            initiation=InitiationSet(preds),
            policy=lambda obs, emit=emit: emit,
            termination=_always_stop,
            name=f"<{'-' if p is None else p},{q}>",
        ))

    mu = np.zeros((fsc.observation_count, len(pairs)))
    for k, (p, q) in enumerate(pairs):
        mu[:, k] = fsc.eta0[:, q] if p is None else fsc.eta[p, :, q]
    mu.setflags(write=False)
    return CompiledController(tuple(options), mu, observations, fsc.action_count, tuple(pairs))


def _always_stop(obs) -> float:
    return 1.0


def _compiled_matrices(ctrl: CompiledController, state_bound: int):
    """Per-observation transition and emission matrices of a compiled controller.

    Hidden state ``s`` is the option executed last (index ``K`` = episode
    start). ``trans[x][s, k]`` is the probability that option ``k`` emits at
    the next step given observation ``x``: either ``s`` continues
    (probability ``1 - beta``) or it stops and the top level picks ``k`` among
    the options available after ``s``.
    """
    k_opts = len(ctrl.options)
    if k_opts + 1 > state_bound:
        raise StateExplosion(f"{k_opts + 1} hidden states exceed the bound {state_bound}")
    n_obs = len(ctrl.observations)
    trans = np.zeros((n_obs, k_opts + 1, k_opts))
    emit = np.zeros((n_obs, k_opts, ctrl.action_count))
    for xi, label in enumerate(ctrl.observations):
        obs = Observation(np.zeros(0), label)
        for k, opt in enumerate(ctrl.options):
            emit[xi, k] = opt.policy(obs)
        for s in range(k_opts + 1):
            prev = None if s == k_opts else s
            stop = 1.0 if prev is None else float(ctrl.options[prev].termination(obs))
            if stop < 1.0:
                trans[xi, s, prev] += 1.0 - stop
            if stop > 0.0:
                avail = available_options(obs, prev, ctrl.options)
                weights = np.zeros(k_opts)
                weights[avail] = ctrl.mu[xi, avail]
                total = weights.sum()
                if total <= 0.0:
                    # unreachable predecessor/observation pairs are allowed to be dead ends
                    trans[xi, s] = np.nan
                    continue
                trans[xi, s] += stop * weights / total
    return trans, emit


def _fsc_trace_batch(fsc: Fsc, seqs: np.ndarray) -> np.ndarray:
    belief = fsc.eta0[seqs[:, 0]]
    out = [belief @ fsc.psi]
    for t in range(1, seqs.shape[1]):
        belief = np.einsum("bn,bnm->bm", belief, fsc.eta[:, seqs[:, t], :].transpose(1, 0, 2))
        out.append(belief @ fsc.psi)
    return np.stack(out, axis=1)


def _compiled_trace_batch(ctrl: CompiledController, seqs: np.ndarray, state_bound: int) -> np.ndarray:
    trans, emit = _compiled_matrices(ctrl, state_bound)
    k_opts = len(ctrl.options)
    state = np.zeros((len(seqs), k_opts + 1))
    state[:, k_opts] = 1.0
    out = []
    for t in range(seqs.shape[1]):
        x = seqs[:, t]
        active = np.einsum("bs,bsk->bk", state, _dead_ends_as_error(trans[x], state))
        out.append(np.einsum("bk,bka->ba", active, emit[x]))
        state = np.zeros_like(state)
        state[:, :k_opts] = active
    return np.stack(out, axis=1)


def _dead_ends_as_error(t, state):
    dead = np.isnan(t).any(axis=2)
    if (dead & (state > 0)).any():
        raise NoAvailableOption("compiled controller reached a decision with no available option")
    return np.nan_to_num(t, nan=0.0)


def _as_index_sequences(controller, obs_sequences) -> np.ndarray:
    seqs = [[controller.observation_index(o) for o in seq] for seq in obs_sequences]
    return np.array(seqs, dtype=int).reshape(len(seqs), -1)


def action_distribution_trace(controller, obs_sequence: Sequence,
                              state_bound: int = DEFAULT_STATE_BOUND) -> np.ndarray:
    """Exact marginal distribution of the action emitted at each step.

    ``controller`` is an :class:`Fsc` or a :class:`CompiledController`; the
    result has one row per observation in ``obs_sequence``. Hidden states
    (FSC nodes, or the option executed last) are propagated exhaustively.
    """
    seqs = _as_index_sequences(controller, [list(obs_sequence)])
    if seqs.shape[1] == 0:
        return np.zeros((0, controller.action_count))
    return trace_many(controller, seqs, state_bound)[0]


def trace_many(controller, seqs: np.ndarray, state_bound: int = DEFAULT_STATE_BOUND) -> np.ndarray:
    """Traces for a batch of equal-length sequences of observation indices."""
    seqs = np.asarray(seqs, dtype=int)
    if isinstance(controller, Fsc):
        if controller.node_count > state_bound:
            raise StateExplosion(f"{controller.node_count} nodes exceed the bound {state_bound}")
        return _fsc_trace_batch(controller, seqs)
    return _compiled_trace_batch(controller, seqs, state_bound)


def trace_tree(controller, horizon: int):
    """Traces for every observation sequence of length ``horizon``.

    Shorter sequences are prefixes of these, so the result covers all
    sequences of length ``<= horizon``. Returns ``(sequences, traces)``.
    """
    n_obs = len(controller.observations)
    seqs = np.array(list(itertools.product(range(n_obs), repeat=horizon)), dtype=int)
    return seqs, trace_many(controller, seqs)


def make_alternator() -> Fsc:
    """Two nodes, one uninformative observation, emits A, B, A, B, ..."""
    return Fsc(
        psi=[[1.0, 0.0], [0.0, 1.0]],
        eta=[[[0.0, 1.0]], [[1.0, 0.0]]],
        eta0=[[1.0, 0.0]],
        observations=("x0",),
        actions=("A", "B"),
    )


def random_fsc(rng: np.random.Generator, max_nodes=4, max_observations=3, max_actions=3,
               sparsity=0.3) -> Fsc:
    """Random controller; roughly ``sparsity`` of the rows are made deterministic."""
    n = int(rng.integers(1, max_nodes + 1))
    x = int(rng.integers(1, max_observations + 1))
    a = int(rng.integers(1, max_actions + 1))

    def rows(shape):
        t = rng.dirichlet(np.ones(shape[-1]), size=shape[:-1])
        flat = t.reshape(-1, shape[-1])
        for r in range(len(flat)):
            if rng.random() < sparsity:
                flat[r] = 0.0
                flat[r, rng.integers(shape[-1])] = 1.0
        return flat.reshape(shape)

    return Fsc(psi=rows((n, a)), eta=rows((n, x, n)), eta0=rows((x, n)))


def memoryless_search(options: Sequence[OptionSpec], observations: Sequence, action_count: int,
                      target: np.ndarray, horizon: Optional[int] = None):
    """Try every deterministic memoryless top-level policy over ``options``.

    Traces are computed on the constant sequence ``observations[0]`` repeated
    ``horizon`` times (the alternator's setting). Returns ``(best_prefix,
    best_policy)`` where ``best_prefix`` is the number of leading steps on
    which the policy's exact trace equals ``target``.
    """
    target = np.asarray(target, dtype=float)
    horizon = len(target) if horizon is None else horizon
    k_opts = len(options)
    n_obs = len(observations)
    best = (-1, None)
    for choice in itertools.product(range(k_opts), repeat=n_obs):
        mu = np.zeros((n_obs, k_opts))
        mu[np.arange(n_obs), choice] = 1.0
        ctrl = CompiledController(tuple(options), mu, tuple(observations), action_count)
        try:
            trace = action_distribution_trace(ctrl, [observations[0]] * horizon)
        except NoAvailableOption:
            continue
        close = np.all(np.abs(trace - target[:horizon]) <= 1e-9, axis=1)
        prefix = int(np.argmin(close)) if not close.all() else horizon
        if prefix > best[0]:
            best = (prefix, choice)
    return best


def _json_label(label):
    return int(label) if isinstance(label, (int, np.integer)) else str(label)


def save_fsc(fsc: Fsc, path) -> Path:
    """Write ``fsc`` as JSON with row-major nested probability lists."""
    path = Path(path)
    doc = {
        "nodes": fsc.node_count,
        "observations": [_json_label(o) for o in fsc.observations],
        "actions": [_json_label(a) for a in fsc.actions],
        "psi": fsc.psi.tolist(),
        "eta": fsc.eta.tolist(),
        "eta0": fsc.eta0.tolist(),
    }
    path.write_text(json.dumps(doc, indent=2) + "\n")
    return path


def load_fsc(path_or_doc) -> Fsc:
    doc = path_or_doc
    if not isinstance(doc, dict):
        doc = json.loads(Path(path_or_doc).read_text())
    fsc = Fsc(psi=doc["psi"], eta=doc["eta"], eta0=doc["eta0"],
              observations=doc.get("observations", ()), actions=doc.get("actions", ()))
    if "nodes" in doc and int(doc["nodes"]) != fsc.node_count:
        raise ValueError(f"declared {doc['nodes']} nodes but tables have {fsc.node_count}")
    return fsc
