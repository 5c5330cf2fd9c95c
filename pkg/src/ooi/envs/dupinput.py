"""Modified DuplicatedInput: copy a tape while collapsing each BB to B and DD to D.

The agent sees only the symbol under the read head. Each of the 20 actions is
a triple (symbol, push?, move) encoded as ``4 * symbol + 2 * push + move``
with ``move`` 0 for increment and 1 for decrement. Writing the next symbol of
the de-duplicated tape earns +1; writing anything else earns -0.5 and ends
the episode. The episode also ends once the whole target has been written.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..exceptions import StepAfterDone
from ..options import InitiationSet, Observation, OptionSpec

SYMBOLS = "ABCDE"
PAIRED = "BD"
INC, DEC = 0, 1
CORRECT_REWARD = 1.0
WRONG_REWARD = -0.5
FEATURE_DIM = 5
ACTION_COUNT = 20
MIN_LENGTH, MAX_LENGTH = 20, 30

_FEATURES = np.eye(5)
_FEATURES.setflags(write=False)


def encode_action(symbol: str, push: bool, move: int) -> int:
    return 4 * SYMBOLS.index(symbol) + 2 * int(bool(push)) + int(move)


def decode_action(action: int):
    symbol, rest = divmod(int(action), 4)
    push, move = divmod(rest, 2)
    return SYMBOLS[symbol], bool(push), move


def random_tape(rng: np.random.Generator, length=None) -> str:
    """Tape of ``length`` symbols (uniform in [20, 30] by default).

    Symbols are drawn uniformly; a drawn B or D is written twice, and redrawn
    if only one cell is left.
    """
    n = int(rng.integers(MIN_LENGTH, MAX_LENGTH + 1)) if length is None else int(length)
    out = []
    while len(out) < n:
        c = SYMBOLS[rng.integers(5)]
        if c in PAIRED:
            if len(out) + 2 > n:
                continue
            out.append(c)
        out.append(c)
    return "".join(out)


def dedup_oracle(tape: str):
    """``(target, optimal_reward)``: each adjacent BB/DD pair collapsed to one symbol."""
    out = []
    i = 0
    while i < len(tape):
        c = tape[i]
        out.append(c)
        if c in PAIRED and i + 1 < len(tape) and tape[i + 1] == c:
            i += 2
        else:
            i += 1
    target = "".join(out)
    return target, float(len(target))


def copy_only_return(tape: str) -> float:
    """Return of the policy that writes every symbol it reads, in order."""
    target, _ = dedup_oracle(tape)
    total = 0.0
    for k, c in enumerate(tape):
        if k >= len(target) or c != target[k]:
            return total + WRONG_REWARD
        total += CORRECT_REWARD
        if k + 1 == len(target):
            return total
    return total


def stochastic_skip_return(tape: str, push_prob: float) -> float:
    """Exact expected return of a coin-flipping memoryless policy.

    The policy writes every A, C or E it reads and, on a B or D, writes it
    with probability ``push_prob`` or otherwise moves on without writing.
    Unlike copying everything it survives some pairs, so it is the natural
    reference for agents that cannot remember the previous symbol. A skip
    on the last cell leaves the head in place, so there the symbol is
    eventually written.
    """
    target, _ = dedup_oracle(tape)
    last = len(tape) - 1
    # probability mass over (head, symbols written so far); both only grow
    mass = {(0, 0): 1.0}
    total = 0.0
    while mass:
        nxt = {}
        for (head, k), pr in mass.items():
            c = tape[head]
            p = push_prob if c in PAIRED and head < last else 1.0
            if p > 0.0:
                if k < len(target) and target[k] == c:
                    total += pr * p * CORRECT_REWARD
                    if k + 1 < len(target):
                        key = (min(head + 1, last), k + 1)
                        nxt[key] = nxt.get(key, 0.0) + pr * p
                else:
                    total += pr * p * WRONG_REWARD
            if p < 1.0:
                key = (head + 1, k)
                nxt[key] = nxt.get(key, 0.0) + pr * (1.0 - p)
        mass = nxt
    return total


@dataclass
class DupInputState:
    tape: str
    target: str
    head: int = 0
    output: list = field(default_factory=list)
    time: int = 1
    done: bool = False


class DuplicatedInput:
    action_count = ACTION_COUNT
    feature_dim = FEATURE_DIM

    def __init__(self, tape=None):
        self.fixed_tape = tape
        self.state = None

    def reset(self, rng: np.random.Generator) -> Observation:
        tape = self.fixed_tape if self.fixed_tape is not None else random_tape(rng)
        self.state = DupInputState(tape=tape, target=dedup_oracle(tape)[0])
        return self._observe()

    def _observe(self) -> Observation:
        c = self.state.tape[self.state.head]
        k = SYMBOLS.index(c)
        return Observation(_FEATURES[k], c)

    def step(self, action: int):
        s = self.state
        if s is None or s.done:
            raise StepAfterDone("DuplicatedInput episode is over")
        symbol, push, move = decode_action(action)
        reward = 0.0
        if push:
            if len(s.output) < len(s.target) and symbol == s.target[len(s.output)]:
                s.output.append(symbol)
                reward = CORRECT_REWARD
                if len(s.output) == len(s.target):
                    s.done = True
            else:
                s.done = True
                reward = WRONG_REWARD
        if not s.done:
            s.head = min(s.head + 1, len(s.tape) - 1) if move == INC else max(s.head - 1, 0)
        s.time += 1
        return self._observe(), reward, s.done


def dupinput_options(mode: str = "designed", n_options: int = 16, rng=None) -> list:
    """Learned options with designed or random predecessor sets.

    ``designed``: two options; the second may not follow itself.
    ``random``: ``n_options`` options, each admitting ``n_options / 2``
    predecessors drawn without replacement (plus the episode start).
    """
    mode = mode.lower()
    if mode == "designed":
        everything = frozenset({None, 0, 1})
        return [
            OptionSpec(0, InitiationSet(everything), name="w1"),
            OptionSpec(1, InitiationSet(everything - {1}), name="w2"),
        ]
    if mode == "random":
        if n_options < 2 or n_options % 2:
            raise ValueError("random predecessor sets need an even number of options >= 2")
        rng = np.random.default_rng(rng)
        out = []
        for k in range(n_options):
            preds = rng.choice(n_options, size=n_options // 2, replace=False)
            out.append(OptionSpec(k, InitiationSet(frozenset(int(p) for p in preds) | {None}),
                                  name=f"w{k + 1}"))
        return out
    raise ValueError(f"unknown DuplicatedInput option mode {mode!r}")


def _fixed_copy(obs: Observation) -> np.ndarray:
    p = np.zeros(ACTION_COUNT)
    p[encode_action(obs.raw, True, INC)] = 1.0
    return p


def _fixed_skip(obs: Observation) -> np.ndarray:
    p = np.zeros(ACTION_COUNT)
    p[encode_action(obs.raw, False, INC)] = 1.0
    return p


def _always(obs) -> float:
    return 1.0


def oracle_options() -> list:
    """Hand-written copy and skip options under the designed predecessor sets."""
    learned = dupinput_options("designed")
    return [
        OptionSpec(0, learned[0].initiation, _fixed_copy, _always, "copy"),
        OptionSpec(1, learned[1].initiation, _fixed_skip, _always, "skip"),
    ]


class DupInputOracle:
    """Top level over :func:`oracle_options`: skip a B or D whenever skipping is allowed."""

    def __call__(self, features, option_onehot, mask):
        width = len(mask) // 2
        symbol = SYMBOLS[int(np.argmax(features))]
        y = np.zeros(len(mask))
        skip_ok = mask[width + 1] > 0
        y[width + (1 if symbol in PAIRED and skip_ok else 0)] = 1.0
        return y
