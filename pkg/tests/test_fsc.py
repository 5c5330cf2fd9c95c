import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ooi.exceptions import StateExplosion, UnknownObservation
from ooi.fsc import (Fsc, action_distribution_trace, compile_fsc, fsc_step, load_fsc, make_alternator,
                     memoryless_search, random_fsc, save_fsc, trace_many, trace_tree)
from ooi.options import Observation, available_options, without_oois


# brute-force oracles: sum over every hidden path explicitly -------------------

def fsc_paths_oracle(fsc, seq):
    """Action marginals by enumerating every node sequence with its probability."""
    out = np.zeros((len(seq), fsc.action_count))
    for nodes in itertools.product(range(fsc.node_count), repeat=len(seq)):
        p = fsc.eta0[seq[0], nodes[0]]
        for t in range(1, len(seq)):
            p *= fsc.eta[nodes[t - 1], seq[t], nodes[t]]
        if p == 0:
            continue
        for t, n in enumerate(nodes):
            out[t] += p * fsc.psi[n]
    return out


def compiled_paths_oracle(ctrl, seq):
    """Same for a compiled controller, going only through available_options and mu."""
    out = np.zeros((len(seq), ctrl.action_count))

    def walk(t, prev, p):
        if t == len(seq) or p == 0:
            return
        obs = Observation(np.zeros(1), ctrl.observations[seq[t]])
        for k in available_options(obs, prev, ctrl.options):
            q = p * ctrl.mu[seq[t], k]
            if q:
                out[t] += q * ctrl.options[k].policy(obs)
                walk(t + 1, k, q)

    walk(0, None, 1.0)
    return out


def labelled(fsc):
    return Fsc(fsc.psi, fsc.eta, fsc.eta0, tuple(f"o{i}" for i in range(fsc.observation_count)))


# examples ----------------------------------------------------------------

def test_alternator_trace_is_abab():
    trace = action_distribution_trace(make_alternator(), ["x0"] * 6)
    np.testing.assert_array_equal(trace, [[1, 0], [0, 1]] * 3)


def test_alternator_compiles_to_six_single_step_options():
    ctrl = compile_fsc(make_alternator())
    assert len(ctrl.options) == 6
    obs = Observation(np.zeros(1), "x0")
    assert all(o.termination(obs) == 1.0 for o in ctrl.options)
    np.testing.assert_array_equal(action_distribution_trace(ctrl, ["x0"] * 6), [[1, 0], [0, 1]] * 3)


def test_one_node_controller_gives_two_options_and_constant_trace():
    fsc = Fsc(psi=[[0.2, 0.8]], eta=[[[1.0], [1.0]]], eta0=[[1.0], [1.0]], observations=("a", "b"))
    ctrl = compile_fsc(fsc)
    assert len(ctrl.options) == 2
    trace = action_distribution_trace(ctrl, ["a", "b", "b", "a"])
    np.testing.assert_allclose(trace, np.tile([0.2, 0.8], (4, 1)), atol=1e-15)


def test_identical_emission_rows_make_memory_irrelevant():
    rng = np.random.default_rng(5)
    base = random_fsc(rng, max_nodes=4)
    psi = np.tile([0.1, 0.6, 0.3], (base.node_count, 1))
    fsc = Fsc(psi, base.eta, base.eta0)
    seqs = rng.integers(fsc.observation_count, size=(20, 8))
    np.testing.assert_allclose(trace_many(fsc, seqs), np.broadcast_to(psi[0], (20, 8, 3)), atol=1e-12)


def test_pair_option_initiation_sets():
    ctrl = compile_fsc(random_fsc(np.random.default_rng(1), max_nodes=4))
    for k, (p, q) in enumerate(ctrl.pairs):
        allowed = ctrl.options[k].initiation.predecessors
        if p is None:
            assert allowed == {None}
        else:
            assert allowed == {j for j, (_, end) in enumerate(ctrl.pairs) if end == p}


def test_mu_is_zero_on_unreachable_pairs_at_the_start():
    ctrl = compile_fsc(random_fsc(np.random.default_rng(2), max_nodes=3))
    for x, label in enumerate(ctrl.observations):
        obs = Observation(np.zeros(1), label)
        avail = available_options(obs, None, ctrl.options)
        assert ctrl.mu[x, avail].sum() == pytest.approx(1.0)


def test_fsc_step_follows_deterministic_tables():
    fsc = make_alternator()
    rng = np.random.default_rng(0)
    node, actions = None, []
    for _ in range(4):
        node, a = fsc_step(fsc, node, "x0", rng)
        actions.append(fsc.actions[a])
    assert actions == ["A", "B", "A", "B"]


def test_unknown_observation():
    with pytest.raises(UnknownObservation):
        action_distribution_trace(make_alternator(), ["nope"])


def test_state_bound_is_enforced():
    with pytest.raises(StateExplosion):
        action_distribution_trace(compile_fsc(make_alternator()), ["x0"], state_bound=3)


def test_invalid_tables_are_rejected():
    with pytest.raises(ValueError):
        Fsc(psi=[[0.5, 0.4]], eta=[[[1.0]]], eta0=[[1.0]])
    with pytest.raises(ValueError):
        Fsc(psi=[[1.0]], eta=[[[1.0]]], eta0=[[1.0, 0.0]])


# memoryless search --------------------------------------------------------

def test_search_with_predecessor_sets_finds_no_dead_end_free_policy():
    ctrl = compile_fsc(make_alternator())
    target = np.array([[1, 0], [0, 1]] * 3, dtype=float)
    best, _ = memoryless_search(ctrl.options, ctrl.observations, 2, target)
    assert best == -1  # a deterministic table picks one option forever; its own successor set excludes it


def test_search_without_predecessor_sets_stops_after_one_step():
    ctrl = compile_fsc(make_alternator())
    target = np.array([[1, 0], [0, 1]] * 3, dtype=float)
    best, policy = memoryless_search(without_oois(ctrl.options), ctrl.observations, 2, target)
    assert best == 1
    assert policy is not None


# randomized equivalence ------------------------------------------------------

@given(st.integers(0, 2**32 - 1), st.integers(1, 5))
@settings(max_examples=40, deadline=None)
def test_traces_match_path_enumeration(seed, horizon):
    rng = np.random.default_rng(seed)
    fsc = labelled(random_fsc(rng))
    ctrl = compile_fsc(fsc)
    seq = list(rng.integers(fsc.observation_count, size=horizon))
    labels = [fsc.observations[i] for i in seq]
    expected = fsc_paths_oracle(fsc, seq)
    np.testing.assert_allclose(action_distribution_trace(fsc, labels), expected, atol=1e-12)
    np.testing.assert_allclose(action_distribution_trace(ctrl, labels), compiled_paths_oracle(ctrl, seq),
                               atol=1e-12)
    np.testing.assert_allclose(action_distribution_trace(ctrl, labels), expected, atol=1e-12)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=25, deadline=None)
def test_traces_are_distributions(seed):
    rng = np.random.default_rng(seed)
    fsc = random_fsc(rng)
    seqs, traces = trace_tree(compile_fsc(fsc), 4)
    assert traces.shape == (len(seqs), 4, fsc.action_count)
    assert traces.min() >= 0
    np.testing.assert_allclose(traces.sum(axis=2), 1.0, atol=1e-12)


def test_trace_tree_prefixes_agree_with_shorter_runs():
    fsc = random_fsc(np.random.default_rng(8), max_observations=3)
    seqs, long = trace_tree(fsc, 4)
    short = trace_many(fsc, seqs[:, :2])
    np.testing.assert_allclose(long[:, :2], short, atol=0)


def test_random_fsc_respects_bounds():
    rng = np.random.default_rng(3)
    for _ in range(50):
        f = random_fsc(rng)
        assert 1 <= f.node_count <= 4 and 1 <= f.observation_count <= 3 and 1 <= f.action_count <= 3


# serialization --------------------------------------------------------------

def test_json_round_trip(tmp_path):
    fsc = random_fsc(np.random.default_rng(4))
    path = save_fsc(fsc, tmp_path / "f.json")
    back = load_fsc(path)
    np.testing.assert_array_equal(back.psi, fsc.psi)
    np.testing.assert_array_equal(back.eta, fsc.eta)
    np.testing.assert_array_equal(back.eta0, fsc.eta0)
    assert back.observations == fsc.observations


def test_load_rejects_wrong_node_count():
    doc = {"nodes": 3, "psi": [[1.0]], "eta": [[[1.0]]], "eta0": [[1.0]]}
    with pytest.raises(ValueError):
        load_fsc(doc)
