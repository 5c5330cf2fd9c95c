"""Options whose initiation sets depend on the previously executed option.

An option is the usual triple (policy, termination, initiation set), except that
the initiation set is a subset of ``observations x (options + {None})``: whether
an option may start depends on the current observation *and* on which option
has just terminated. ``None`` stands for "no option yet", i.e. the first
decision of an episode.

The network output layout shared by every agent is a ``2 x (O + A)`` matrix
flattened row-major. Row 0 is *end* and row 1 is *cont*; in each row the first
``O`` columns are options and the remaining ``A`` columns primitive actions.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any, Callable, Iterable, Optional, Sequence

import numpy as np

from .exceptions import DegenerateMask, NoAvailableOption

__all__ = [
    "Observation",
    "InitiationSet",
    "OptionSpec",
    "Step",
    "Trajectory",
    "available_options",
    "build_mask",
    "without_oois",
    "run_episode",
    "discounted_returns",
    "step_returns",
]

Policy = Callable[["Observation"], np.ndarray]
Termination = Callable[["Observation"], float]


@dataclass(frozen=True, eq=False)
class Observation:
    """What the agent sees: a feature vector plus the raw env record."""

    features: np.ndarray
    raw: Any = None


@dataclass(frozen=True)
class InitiationSet:
    """Predecessor-conditioned initiation set.

    ``predecessors`` is the set of options (and possibly ``None``) after which
    the option may start; ``None`` in place of the set means "any predecessor".
    ``predicate`` optionally restricts the observations as well.
    """

    predecessors: Optional[frozenset] = None
    predicate: Optional[Callable[[Observation], bool]] = None

    def __post_init__(self):
        if self.predecessors is not None and not isinstance(self.predecessors, frozenset):
            object.__setattr__(self, "predecessors", frozenset(self.predecessors))

    @classmethod
    def universe(cls, option_count: int, predicate=None) -> "InitiationSet":
        """Every option and the episode start are valid predecessors."""
        return cls(frozenset(range(option_count)) | {None}, predicate)

    def contains(self, obs: Observation, prev: Optional[int]) -> bool:
        if self.predecessors is not None and prev not in self.predecessors:
            return False
        return self.predicate is None or bool(self.predicate(obs))


@dataclass(frozen=True)
class OptionSpec:
    """One option.

    ``policy`` maps an observation to a distribution over primitive actions and
    ``termination`` maps an observation to a probability of stopping. Leaving
    both as ``None`` makes the option *learned*: its actions and end/continue
    flag then come from the agent's network.
    """

    id: int
    initiation: InitiationSet = field(default_factory=InitiationSet)
    policy: Optional[Policy] = None
    termination: Optional[Termination] = None
    name: str = ""

    def __post_init__(self):
        if (self.policy is None) != (self.termination is None):
            raise ValueError("policy and termination must both be fixed or both be learned")

    @property
    def learned(self) -> bool:
        return self.policy is None


def available_options(obs: Observation, prev: Optional[int],
                      options: Sequence[OptionSpec]) -> list[int]:
    """Ids of the options whose initiation set contains ``(obs, prev)``."""
    return [o.id for o in options if o.initiation.contains(obs, prev)]


def build_mask(available: Iterable[int], action_count: int, option_count: int,
               top_level: bool = True) -> np.ndarray:
    """Output mask for a top-level or an in-option decision.

    At top level only the *cont* entries of available options are allowed.
    Inside an option every primitive action is allowed, with either flag.
    """
    width = option_count + action_count
    mask = np.zeros(2 * width)
    if top_level:
        idx = [width + int(k) for k in available]
        if not idx:
            raise NoAvailableOption("no option is available at this decision point")
        mask[idx] = 1.0
    else:
        mask[option_count:width] = 1.0
        mask[width + option_count:] = 1.0
        if action_count == 0:
            raise DegenerateMask("in-option mask with no primitive actions")
    return mask


def without_oois(options: Sequence[OptionSpec]) -> list[OptionSpec]:
    """Same options with every predecessor restriction lifted.

    Observation predicates are kept; only the dependence on the previous
    option is removed.
    """
    n = len(options)
    return [replace(o, initiation=InitiationSet.universe(n, o.initiation.predicate))
            for o in options]


@dataclass(slots=True)
class Step:
    """One decision record.

    ``context`` is ``None`` for top-level selections and the executing option
    otherwise. ``time`` is the index of the environment transition the record
    belongs to; a top-level selection shares it with the first action of the
    option it starts. ``learned`` tells whether ``choice`` was sampled from the
    agent (and therefore enters the policy-gradient loss).
    """

    observation: Observation
    context: Optional[int]
    mask: np.ndarray
    choice: int
    reward: float
    time: int
    learned: bool


@dataclass
class Trajectory:
    steps: list = field(default_factory=list)
    rewards: list = field(default_factory=list)
    truncated: bool = False
    option_count: int = 0
    action_count: int = 0

    @property
    def total_reward(self) -> float:
        return float(sum(self.rewards))

    def __len__(self):
        return len(self.steps)

    def learned_steps(self) -> list:
        return [s for s in self.steps if s.learned]

    def inputs(self, steps=None):
        """Stacked ``(features, option one-hots, masks, choices)`` arrays."""
        steps = self.learned_steps() if steps is None else steps
        n_opt = self.option_count
        x = np.array([s.observation.features for s in steps], dtype=float)
        w = np.zeros((len(steps), n_opt))
        for i, s in enumerate(steps):
            if s.context is not None:
                w[i, s.context] = 1.0
        masks = np.array([s.mask for s in steps], dtype=float)
        choices = np.array([s.choice for s in steps], dtype=int)
        return x, w, masks, choices


def _sample(p: np.ndarray, rng: np.random.Generator) -> int:
    c = np.asarray(p, dtype=float).cumsum()
    k = int(c.searchsorted(rng.random() * c[-1], side="right"))
    return min(k, len(p) - 1)


def run_episode(env, agent, options: Sequence[OptionSpec], rng: np.random.Generator,
                step_limit: int = 1000, env_rng: Optional[np.random.Generator] = None) -> Trajectory:
    """Play one episode with call-and-return option execution.

    ``agent(features, option_onehot, mask)`` must return a distribution over
    the ``2 * (O + A)`` output entries. It picks options at top level (option
    one-hot all zero) and, for learned options, the primitive action together
    with the end/cont flag. Fixed options act from their own tables; their
    termination is tested on the observation reached after each action, so an
    option always executes at least one action.

    The episode stops when the environment reports ``done`` or after
    ``step_limit`` primitive steps, in which case ``truncated`` is set.
    """
    n_opt = len(options)
    n_act = env.action_count
    width = n_opt + n_act
    eye = np.eye(n_opt)
    top_ctx = np.zeros(n_opt)
    in_mask = build_mask((), n_act, n_opt, top_level=False) if n_act else None
    traj = Trajectory(option_count=n_opt, action_count=n_act)

    obs = env.reset(rng if env_rng is None else env_rng)
    prev = None
    current = None
    t = 0
    while True:
        if t >= step_limit:
            traj.truncated = True
            break
        if current is None:
            mask = build_mask(available_options(obs, prev, options), n_act, n_opt)
            choice = _sample(agent(obs.features, top_ctx, mask), rng)
            if mask[choice] == 0.0:
                raise ValueError(f"agent selected masked entry {choice}")
            current = choice - width
            traj.steps.append(Step(obs, None, mask, choice, 0.0, t, True))
        opt = options[current]
        if opt.learned:
            choice = _sample(agent(obs.features, eye[current], in_mask), rng)
            if in_mask[choice] == 0.0:
                raise ValueError(f"agent selected masked entry {choice}")
            end = choice < width
            action = choice % width - n_opt
            mask = in_mask
        else:
            action = _sample(opt.policy(obs), rng)
            choice = width + n_opt + action
            mask = in_mask
        next_obs, reward, done = env.step(action)
        traj.steps.append(Step(obs, current, mask, choice, float(reward), t, opt.learned))
        traj.rewards.append(float(reward))
        t += 1
        if done:
            break
        if not opt.learned:
            beta = opt.termination(next_obs)
            end = beta >= 1.0 or (beta > 0.0 and rng.random() < beta)
        obs = next_obs
        if end:
            prev = current
            current = None
    return traj


def discounted_returns(rewards: Sequence[float], gamma: float) -> np.ndarray:
    """``R_t = r_t + gamma * R_{t+1}`` for every t, with ``R_T+1 = 0``."""
    r = np.asarray(rewards, dtype=float)
    out = np.empty_like(r)
    acc = 0.0
    for t in range(len(r) - 1, -1, -1):
        acc = r[t] + gamma * acc
        out[t] = acc
    return out


def step_returns(traj: Trajectory, gamma: float, steps=None) -> np.ndarray:
    """Return of every (learned) decision record, indexed by its env time."""
    steps = traj.learned_steps() if steps is None else steps
    if not traj.rewards:
        return np.zeros(len(steps))
    ret = discounted_returns(traj.rewards, gamma)
    ret = np.append(ret, 0.0)
    return ret[[s.time for s in steps]]
