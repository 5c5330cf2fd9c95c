"""Object gathering between a root and two terminals, simulated at option level.

Each env action is one of the 12 options and runs to completion in a single
transition. ``R1..R4`` (ids 0-3) return to the root from a terminal; ``G1..G4``
(ids 4-7) and ``B1..B4`` (ids 8-11) go from the root to the green or blue
terminal. Arriving at a terminal that still holds objects pays +2 and takes
one; arriving at an empty one pays -2, refills the other terminal and counts
as an emptying. The episode ends after 2 or 3 emptyings.

Observations are one of five one-hot codes: root, green full, green empty,
blue full, blue empty, where full/empty is the state found on arrival.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..exceptions import StepAfterDone, UnavailableOption
from ..options import InitiationSet, Observation, OptionSpec

ROOT, GREEN, BLUE = "root", "green", "blue"
R_OPTIONS = (0, 1, 2, 3)
G_OPTIONS = (4, 5, 6, 7)
B_OPTIONS = (8, 9, 10, 11)
OPTION_NAMES = ("R1", "R2", "R3", "R4", "G1", "G2", "G3", "G4", "B1", "B2", "B3", "B4")
OBS_ROOT, OBS_GREEN_FULL, OBS_GREEN_EMPTY, OBS_BLUE_FULL, OBS_BLUE_EMPTY = range(5)
FEATURE_DIM = 5
FULL_REWARD = 2.0
EMPTY_REWARD = -2.0

_FEATURES = np.eye(5)
_FEATURES.setflags(write=False)


@dataclass
class GatherState:
    location: str
    green_count: int
    blue_count: int
    emptyings_target: int
    emptyings_done: int = 0
    last_full: bool = True
    done: bool = False


class ObjectGathering:
    """Option-level simulator; ``count_range`` and ``emptyings_choices`` are configurable for tests."""

    action_count = 12
    feature_dim = FEATURE_DIM

    def __init__(self, count_range=(2, 4), emptyings_choices=(2, 3)):
        self.count_range = tuple(count_range)
        self.emptyings_choices = tuple(emptyings_choices)
        self.state = None
        self._rng = None

    def _draw_count(self) -> int:
        lo, hi = self.count_range
        return int(self._rng.integers(lo, hi + 1))

    def reset(self, rng: np.random.Generator) -> Observation:
        self._rng = rng
        green = self._draw_count()
        blue = self._draw_count()
        target = int(self.emptyings_choices[int(rng.integers(len(self.emptyings_choices)))])
        self.state = GatherState(ROOT, green, blue, target)
        return self._observe()

    def _observe(self) -> Observation:
        s = self.state
        if s.location == ROOT:
            code = OBS_ROOT
        elif s.location == GREEN:
            code = OBS_GREEN_FULL if s.last_full else OBS_GREEN_EMPTY
        else:
            code = OBS_BLUE_FULL if s.last_full else OBS_BLUE_EMPTY
        return Observation(_FEATURES[code], code)

    def step(self, option: int):
        s = self.state
        if s is None or s.done:
            raise StepAfterDone("ObjectGathering episode is over")
        option = int(option)
        if option in R_OPTIONS:
            if s.location == ROOT:
                raise UnavailableOption(f"{OPTION_NAMES[option]} cannot start at the root")
            s.location = ROOT
            return self._observe(), 0.0, False
        if option not in G_OPTIONS and option not in B_OPTIONS:
            raise UnavailableOption(f"unknown option {option}")
        if s.location != ROOT:
            raise UnavailableOption(f"{OPTION_NAMES[option]} can only start at the root")
        s.location = GREEN if option in G_OPTIONS else BLUE
        count = s.green_count if s.location == GREEN else s.blue_count
        if count > 0:
            count -= 1
            reward = FULL_REWARD
            s.last_full = True
        else:
            reward = EMPTY_REWARD
            s.last_full = False
            s.emptyings_done += 1
            if s.location == GREEN:
                s.blue_count = self._draw_count()
            else:
                s.green_count = self._draw_count()
            s.done = s.emptyings_done >= s.emptyings_target
        if s.location == GREEN:
            s.green_count = count
        else:
            s.blue_count = count
        return self._observe(), reward, s.done


def _at_root(obs: Observation) -> bool:
    return obs.raw == OBS_ROOT


def _at_terminal(obs: Observation) -> bool:
    return obs.raw != OBS_ROOT


_POINT = np.eye(12)
_POINT.setflags(write=False)


def _always(obs) -> float:
    return 1.0


def gathering_options() -> list:
    """The 12 fixed options with their predecessor sets.

    R1, R2 follow any G option; R3, R4 follow any B option; Gi and Bi follow
    Ri. All G/B options may also start the episode. Each option's policy emits
    its own id as the env action and stops after it.
    """
    preds = {}
    for k in (0, 1):
        preds[k] = frozenset(G_OPTIONS)
    for k in (2, 3):
        preds[k] = frozenset(B_OPTIONS)
    for i in range(4):
        preds[G_OPTIONS[i]] = frozenset({R_OPTIONS[i], None})
        preds[B_OPTIONS[i]] = frozenset({R_OPTIONS[i], None})
    options = []
    for k in range(12):
        where = _at_terminal if k in R_OPTIONS else _at_root
        options.append(OptionSpec(k, InitiationSet(preds[k], where),
                                  lambda obs, k=k: _POINT[k], _always, OPTION_NAMES[k]))
    return options


class GatheringExpert:
    """Fixed top level: keep visiting a terminal until it is found empty, then switch.

    At a terminal it reports what it found (R1/R3 full, R2/R4 empty). At the
    root the predecessor sets leave exactly one of G1, B2, B3, G4 available,
    which it takes; at the start of an episode it goes green.
    """

    PREFERRED = (4, 9, 10, 7, 4)  # G1, B2, B3, G4, then G1 at episode start

    def __call__(self, features, option_onehot, mask):
        width = len(mask) // 2
        code = int(features.argmax())
        y = np.zeros(len(mask))
        if code == OBS_ROOT:
            pick = next(k for k in self.PREFERRED if mask[width + k] > 0)
        else:
            full = code in (OBS_GREEN_FULL, OBS_BLUE_FULL)
            green = code in (OBS_GREEN_FULL, OBS_GREEN_EMPTY)
            pick = (0 if full else 1) if green else (2 if full else 3)
        y[width + pick] = 1.0
        return y
