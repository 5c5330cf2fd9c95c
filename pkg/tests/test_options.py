import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ooi.envs import dupinput_options, gathering_options
from ooi.envs.gathering import OBS_GREEN_FULL, OBS_ROOT
from ooi.envs.treemaze import TreeMaze
from ooi.exceptions import NoAvailableOption
from ooi.options import (InitiationSet, Observation, OptionSpec, available_options, build_mask,
                         discounted_returns, run_episode, step_returns, without_oois)


def obs(code=0, dim=5):
    return Observation(np.eye(dim)[code], code)


class UniformAgent:
    def __call__(self, features, onehot, mask):
        return mask / mask.sum()


# available_options ---------------------------------------------------------

def test_designed_dupinput_second_option_cannot_follow_itself():
    options = dupinput_options("designed")
    assert available_options(obs(), 1, options) == [0]
    assert available_options(obs(), 0, options) == [0, 1]
    assert available_options(obs(), None, options) == [0, 1]


def test_unrestricted_sets_make_everything_available():
    options = [OptionSpec(k, InitiationSet.universe(4)) for k in range(4)]
    for prev in [None, 0, 1, 2, 3]:
        assert available_options(obs(), prev, options) == [0, 1, 2, 3]


def test_gathering_return_options_follow_green_trips():
    options = gathering_options()
    at_green = obs(OBS_GREEN_FULL)
    assert available_options(at_green, 6, options) == [0, 1]  # after G3: R1, R2


@st.composite
def option_sets(draw):
    n_opt = draw(st.integers(1, 5))
    n_obs = draw(st.integers(1, 4))
    universe = [None, *range(n_opt)]
    specs, relations = [], []
    for k in range(n_opt):
        preds = draw(st.one_of(st.none(), st.sets(st.sampled_from(universe))))
        allowed = draw(st.one_of(st.none(), st.sets(st.integers(0, n_obs - 1))))
        pred = None if allowed is None else (lambda o, allowed=frozenset(allowed): o.raw in allowed)
        specs.append(OptionSpec(k, InitiationSet(None if preds is None else frozenset(preds), pred)))
        # explicit relation I_k as a set of (observation, predecessor) pairs
        relations.append({(x, p) for x in range(n_obs) for p in universe
                          if (preds is None or p in preds) and (allowed is None or x in allowed)})
    return specs, relations, n_obs, universe


@given(option_sets())
@settings(max_examples=200, deadline=None)
def test_availability_matches_brute_force_relation(data):
    specs, relations, n_obs, universe = data
    for x in range(n_obs):
        for prev in universe:
            expected = [k for k, rel in enumerate(relations) if (x, prev) in rel]
            assert available_options(obs(x, n_obs), prev, specs) == expected


# build_mask ---------------------------------------------------------------

def test_in_option_mask_layout():
    m = build_mask((), action_count=3, option_count=2, top_level=False)
    np.testing.assert_array_equal(m.reshape(2, 5), [[0, 0, 1, 1, 1], [0, 0, 1, 1, 1]])


def test_top_level_mask_layout():
    m = build_mask({0}, action_count=3, option_count=2)
    np.testing.assert_array_equal(m.reshape(2, 5), [[0, 0, 0, 0, 0], [1, 0, 0, 0, 0]])


def test_flat_agent_mask_has_no_option_columns():
    m = build_mask((), action_count=3, option_count=0, top_level=False)
    np.testing.assert_array_equal(m.reshape(2, 3), np.ones((2, 3)))


def test_empty_top_level_mask_is_rejected():
    with pytest.raises(NoAvailableOption):
        build_mask(set(), action_count=3, option_count=2)


@given(st.integers(1, 6), st.integers(1, 6), st.data())
def test_masks_are_binary_and_nonempty(n_opt, n_act, data):
    avail = data.draw(st.sets(st.integers(0, n_opt - 1), min_size=1))
    for m in (build_mask(avail, n_act, n_opt), build_mask((), n_act, n_opt, top_level=False)):
        assert set(np.unique(m)) <= {0.0, 1.0}
        assert m.sum() >= 1
    top = build_mask(avail, n_act, n_opt).reshape(2, -1)
    assert top[0].sum() == 0 and top[1, n_opt:].sum() == 0


# discounted_returns -------------------------------------------------------

def test_zero_discount_keeps_immediate_rewards():
    np.testing.assert_array_equal(discounted_returns([3.0, -1.0, 2.0], 0.0), [3.0, -1.0, 2.0])


def test_undiscounted_suffix_sums():
    np.testing.assert_array_equal(discounted_returns([1, 1, 1], 1.0), [3, 2, 1])


def test_half_discount():
    np.testing.assert_allclose(discounted_returns([0, 0, 4], 0.5), [1, 2, 4], atol=0)


@given(st.lists(st.floats(-100, 100), min_size=1, max_size=50), st.floats(0, 1))
def test_return_recursion(rewards, gamma):
    R = discounted_returns(rewards, gamma)
    nxt = np.append(R[1:], 0.0)
    np.testing.assert_allclose(R, np.asarray(rewards) + gamma * nxt, rtol=0, atol=1e-12 * (1 + np.abs(R).max()))


# run_episode --------------------------------------------------------------

class Counter:
    """Env whose reward is the step index; ends after ``length`` steps."""

    action_count = 2
    feature_dim = 2

    def __init__(self, length=7):
        self.length = length

    def reset(self, rng):
        self.t = 0
        return Observation(np.array([1.0, 0.0]), 0)

    def step(self, action):
        self.t += 1
        return Observation(np.array([0.0, 1.0]), 1), float(self.t), self.t >= self.length


def _one_step_option(k, n):
    return OptionSpec(k, InitiationSet.universe(n), lambda o: np.array([0.5, 0.5]), lambda o: 1.0)


def test_single_step_options_return_control_after_every_action():
    options = [_one_step_option(0, 1)]
    traj = run_episode(Counter(), UniformAgent(), options, np.random.default_rng(0))
    kinds = ["top" if s.context is None else "act" for s in traj.steps]
    assert kinds == ["top", "act"] * 7


def test_rewards_are_conserved_across_option_boundaries():
    env = Counter(9)
    options = [OptionSpec(0, InitiationSet.universe(2), lambda o: np.array([1.0, 0.0]), lambda o: 0.3),
               OptionSpec(1, InitiationSet.universe(2))]
    traj = run_episode(env, UniformAgent(), options, np.random.default_rng(3))
    assert traj.total_reward == sum(range(1, 10))
    assert sum(s.reward for s in traj.steps) == traj.total_reward
    assert all(s.reward == 0.0 for s in traj.steps if s.context is None)


def test_universe_sets_behave_like_plain_options():
    plain = [OptionSpec(k, InitiationSet(None), lambda o: np.array([0.2, 0.8]), lambda o: 0.5)
             for k in range(3)]
    universe = without_oois(plain)
    a = run_episode(Counter(30), UniformAgent(), plain, np.random.default_rng(11))
    b = run_episode(Counter(30), UniformAgent(), universe, np.random.default_rng(11))
    assert [(s.context, s.choice, s.time) for s in a.steps] == [(s.context, s.choice, s.time) for s in b.steps]


def test_step_limit_truncates_without_raising():
    options = [OptionSpec(0, InitiationSet.universe(1), lambda o: np.array([0.0, 1.0, 0.0]), lambda o: 0.0)]
    traj = run_episode(TreeMaze(goal=0), UniformAgent(), options, np.random.default_rng(0), step_limit=25)
    assert traj.truncated
    assert len(traj.rewards) == 25
    assert traj.total_reward == pytest.approx(-0.1 * 25)


def test_no_available_option_propagates():
    options = [OptionSpec(0, InitiationSet(frozenset({0})), lambda o: np.array([1.0, 0.0]), lambda o: 1.0)]
    with pytest.raises(NoAvailableOption):
        run_episode(Counter(), UniformAgent(), options, np.random.default_rng(0))


def test_step_returns_share_time_between_selection_and_first_action():
    options = [_one_step_option(0, 1)]
    traj = run_episode(Counter(4), UniformAgent(), options, np.random.default_rng(0))
    R = step_returns(traj, 1.0, traj.steps)
    # rewards 1..4; the selection at time t and the action at time t get the same return
    np.testing.assert_array_equal(R, [10, 10, 9, 9, 7, 7, 4, 4])


def test_learned_and_fixed_parts_must_match():
    with pytest.raises(ValueError):
        OptionSpec(0, policy=lambda o: np.ones(1))
