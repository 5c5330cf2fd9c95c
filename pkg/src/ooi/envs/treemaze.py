"""TreeMaze: a T-maze generalised to three consecutive binary junctions.

The maze is four corridors chained by three T junctions. Corridor ``j`` is
entered at cell 0 and its far end is cell ``SEGMENT_LENGTHS[j]``; at the far
end of corridors 0-2 the agent turns LEFT (bit 0) or RIGHT (bit 1) into the
next corridor, and the far end of corridor 3 is a leaf. The goal leaf is
given by three bits, shown one per step during the first three steps.

With corridor lengths 4, 4, 4, 3 every leaf is exactly 18 actions away from
the start, so the best return is ``17 * -0.1 + (10 - 0.1) = 8.2``.
"""
from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass

import numpy as np

from ..exceptions import StepAfterDone
from ..options import InitiationSet, Observation, OptionSpec

FORWARD, LEFT, RIGHT = 0, 1, 2
ACTION_NAMES = ("FORWARD", "LEFT", "RIGHT")
SEGMENT_LENGTHS = (4, 4, 4, 3)
STEP_REWARD = -0.1
GOAL_REWARD = 10.0
FEATURE_DIM = 5 + 4 + 3
BIT_NONE = 2


@dataclass
class TreeMazeState:
    goal_bits: tuple
    segment: int = 0
    position: int = 0
    turns: tuple = ()
    time: int = 1
    done: bool = False


def encode(position: int, segment: int, bit: int) -> np.ndarray:
    f = np.zeros(FEATURE_DIM)
    f[position] = 1.0
    f[5 + segment] = 1.0
    f[9 + bit] = 1.0
    return f


_FEATURES = {(p, s, b): encode(p, s, b) for p in range(5) for s in range(4) for b in range(3)}


class TreeMaze:
    """Environment with actions FORWARD, LEFT, RIGHT.

    ``Observation.raw`` is the tuple ``(position, junctions_crossed, bit)``
    where ``bit`` is 0 or 1 during the first three steps and ``BIT_NONE``
    afterwards.
    """

    action_count = 3
    feature_dim = FEATURE_DIM

    def __init__(self, goal=None):
        self.fixed_goal = goal
        self.state = None

    def reset(self, rng: np.random.Generator) -> Observation:
        goal = self.fixed_goal if self.fixed_goal is not None else int(rng.integers(8))
        bits = tuple((goal >> k) & 1 for k in (2, 1, 0))
        self.state = TreeMazeState(goal_bits=bits)
        return self._observe()

    def _observe(self) -> Observation:
        s = self.state
        bit = s.goal_bits[s.time - 1] if s.time <= 3 else BIT_NONE
        raw = (s.position, s.segment, bit)
        return Observation(_FEATURES[raw], raw)

    def step(self, action: int):
        s = self.state
        if s is None or s.done:
            raise StepAfterDone("TreeMaze episode is over")
        at_junction = s.segment < 3 and s.position == SEGMENT_LENGTHS[s.segment]
        if action == FORWARD:
            if s.position < SEGMENT_LENGTHS[s.segment]:
                s.position += 1
        elif action in (LEFT, RIGHT):
            if at_junction:
                s.turns = s.turns + (0 if action == LEFT else 1,)
                s.segment += 1
                s.position = 0
        else:
            raise ValueError(f"unknown TreeMaze action {action!r}")
        s.time += 1
        reward = STEP_REWARD
        if s.segment == 3 and s.position == SEGMENT_LENGTHS[3]:
            s.done = True
            if s.turns == s.goal_bits:
                reward += GOAL_REWARD
        return self._observe(), reward, s.done

    @property
    def goal(self) -> int:
        b = self.state.goal_bits
        return 4 * b[0] + 2 * b[1] + b[2]


def maze_graph():
    """Adjacency of the maze: node ``(segment, position, turns)`` -> {action: node}."""
    graph = {}
    for seg in range(4):
        for turns in itertools.product((0, 1), repeat=seg):
            for pos in range(SEGMENT_LENGTHS[seg] + 1):
                node = (seg, pos, turns)
                edges = {}
                if pos < SEGMENT_LENGTHS[seg]:
                    edges[FORWARD] = (seg, pos + 1, turns)
                elif seg < 3:
                    edges[LEFT] = (seg + 1, 0, turns + (0,))
                    edges[RIGHT] = (seg + 1, 0, turns + (1,))
                graph[node] = edges
    return graph


def shortest_paths():
    """Breadth-first search from the start to every leaf.

    Returns ``{leaf index: action list}``; leaves are numbered by their turn
    bits read as a binary number.
    """
    graph = maze_graph()
    start = (0, 0, ())
    parent = {start: None}
    queue = deque([start])
    while queue:
        node = queue.popleft()
        for action, nxt in graph[node].items():
            if nxt not in parent:
                parent[nxt] = (node, action)
                queue.append(nxt)
    paths = {}
    for turns in itertools.product((0, 1), repeat=3):
        node = (3, SEGMENT_LENGTHS[3], turns)
        actions = []
        while parent[node] is not None:
            node, action = parent[node]
            actions.append(action)
        paths[4 * turns[0] + 2 * turns[1] + turns[2]] = actions[::-1]
    return paths


# options -----------------------------------------------------------------

_POINT = np.eye(3)
_POINT.setflags(write=False)


def _walk_to(bits: str):
    """Fixed policy of a full-knowledge option: forward, turning per bit at junctions."""

    def policy(obs: Observation) -> np.ndarray:
        pos, seg, _ = obs.raw
        if seg < 3 and pos == SEGMENT_LENGTHS[seg]:
            return _POINT[LEFT if bits[seg] == "0" else RIGHT]
        return _POINT[FORWARD]

    return policy


def _forward(obs: Observation) -> np.ndarray:
    return _POINT[FORWARD]


def _always(obs) -> float:
    return 1.0


def _never(obs) -> float:
    return 0.0


def _early_cells(obs) -> float:
    # stop where bits 2 and 3 are shown so the top level sees them
    pos, seg, _ = obs.raw
    return 1.0 if seg == 0 and pos in (1, 2) else 0.0


PARTIAL = ("0--", "1--", "00-", "01-", "10-", "11-")
FULL = tuple("".join(b) for b in itertools.product("01", repeat=3))
KNOWN4 = ("000", "010", "100", "110")
VARIANTS = ("full14", "known8", "known4")


def refines(new: str, old: str) -> bool:
    """``new`` fills in exactly one unknown ('-') position of ``old``."""
    diff = [i for i in range(3) if new[i] != old[i]]
    return len(diff) == 1 and old[diff[0]] == "-"


def flips_to_one(new: str, old: str) -> bool:
    """``new`` is ``old`` with a single '0' or '-' turned into '1'."""
    diff = [i for i in range(3) if new[i] != old[i]]
    return len(diff) == 1 and new[diff[0]] == "1" and old[diff[0]] in "0-"


def option_names(variant: str) -> tuple:
    variant = variant.lower()
    if variant == "full14":
        return PARTIAL + FULL
    if variant == "known8":
        return FULL
    if variant == "known4":
        return KNOWN4
    raise ValueError(f"unknown TreeMaze variant {variant!r}; expected one of {VARIANTS}")


def treemaze_options(variant: str = "full14", literal_successors: bool = False) -> list:
    """Memory-state options and their predecessor rules.

    ``full14``: six partial-knowledge options (one FORWARD step, then stop) and
    eight full-knowledge options that walk to their leaf. An option may follow
    itself or an option it refines by one unknown bit; only one-bit options
    start an episode. With ``literal_successors`` the successor rule becomes
    :func:`flips_to_one` instead of :func:`refines`.

    ``known8``/``known4``: full-knowledge options only, stopping in the cells
    where the second and third bits are shown. Successors are self or a
    single 0 flipped to 1; every option may start an episode.
    """
    variant = variant.lower()
    names = option_names(variant)
    index = {n: k for k, n in enumerate(names)}
    options = []
    for k, name in enumerate(names):
        if variant == "full14":
            follows = flips_to_one if literal_successors else refines
            preds = {index[m] for m in names if m == name or follows(name, m)}
            if name.count("-") == 2:
                preds.add(None)
        else:
            preds = {index[m] for m in names if m == name or flips_to_one(name, m)}
            preds.add(None)
        if "-" in name:
            policy, termination = _forward, _always
        else:
            policy = _walk_to(name)
            termination = _never if variant == "full14" else _early_cells
        options.append(OptionSpec(k, InitiationSet(frozenset(preds)), policy, termination, name))
    return options


class TreeMazeOracle:
    """Scripted top level over the ``full14`` options.

    Memoryless: at step ``t`` it picks the available option whose ``t``-th
    character is the bit currently shown. The predecessor restrictions do the
    remembering.
    """

    def __init__(self, options):
        self.names = [o.name for o in options]
        self.option_count = len(options)

    def __call__(self, features, option_onehot, mask):
        width = len(mask) // 2
        bit = int(np.argmax(features[9:12]))
        avail = [k for k in range(self.option_count) if mask[width + k] > 0]
        if bit == BIT_NONE:
            raise ValueError("scripted TreeMaze controller asked to decide after the third step")
        # the wanted option is the most informed one on offer
        known = max(3 - self.names[k].count("-") for k in avail)
        for k in avail:
            n = self.names[k]
            filled = len(n) - n.count("-")
            if filled == known and n[filled - 1] == str(bit):
                y = np.zeros(len(mask))
                y[width + k] = 1.0
                return y
        raise ValueError(f"no available option matches bit {bit}")
