"""Trellis data model shared by all detectors, plus brute-force path enumeration.

A trellis here is the time-invariant transition structure of a deterministic
finite-state machine: every state has exactly one outgoing branch per input
label.  Sequence length is supplied at decode time by the callers.

Branch output vectors are ordered by generator/tap index, i.e. element j of a
branch output is the j-th output line of the underlying machine.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

from .errors import (
    DuplicateBranch,
    IndexOutOfRange,
    InvalidTrellis,
    MissingBranch,
    TooLarge,
)

# Enumeration refuses to expand more than 2**24 paths.
ENUMERATION_GUARD = 1 << 24


class Branch(NamedTuple):
    from_state: int
    input: object
    output: tuple
    to_state: int


@dataclass(frozen=True)
class Trellis:
    """Immutable transition structure; validated on construction.

    States are dense integers 0..num_states-1 and the initial state is 0 by
    convention.  `state_labels`, when present, carries a human-readable label
    per state (e.g. the ISI history tuple) and plays no role in decoding.
    """

    num_states: int
    input_alphabet: tuple
    branches: tuple[Branch, ...]
    outputs_per_branch: int
    initial_state: int = 0
    state_labels: tuple | None = None

    def __post_init__(self):
        if self.num_states < 1:
            raise InvalidTrellis("num_states must be positive")
        if len(set(self.input_alphabet)) != len(self.input_alphabet) or not self.input_alphabet:
            raise InvalidTrellis("input_alphabet must be nonempty and distinct")
        if not 0 <= self.initial_state < self.num_states:
            raise IndexOutOfRange(f"initial_state {self.initial_state} out of range")
        seen = {}
        for b in self.branches:
            if not (0 <= b.from_state < self.num_states and 0 <= b.to_state < self.num_states):
                raise IndexOutOfRange(f"branch {b} has state index out of [0, {self.num_states})")
            if b.input not in self.input_alphabet:
                raise InvalidTrellis(f"branch input {b.input!r} not in alphabet")
            if len(b.output) != self.outputs_per_branch:
                raise InvalidTrellis(
                    f"branch output {b.output!r} has length {len(b.output)}, "
                    f"expected {self.outputs_per_branch}")
            key = (b.from_state, b.input)
            if key in seen:
                raise DuplicateBranch(f"duplicate branch for state {b.from_state}, input {b.input!r}")
            seen[key] = b
        for s in range(self.num_states):
            for a in self.input_alphabet:
                if (s, a) not in seen:
                    raise MissingBranch(f"no branch for state {s}, input {a!r}")

    @property
    def num_branches(self):
        return len(self.branches)

    def branch(self, state, input_label) -> Branch:
        """The unique branch leaving `state` under `input_label`."""
        return _transition_map(self)[state, input_label]


@dataclass(frozen=True)
class PathRecord:
    """One enumerated path: inputs driven, outputs emitted, where it ended."""

    inputs: tuple
    outputs: tuple
    end_state: int
    cost: float = 0.0


def trellis_from_table(table, num_states, input_alphabet, initial_state=0,
                       state_labels=None) -> Trellis:
    """Build a Trellis from explicit (from_state, input, output, to_state) rows.

    Rows must cover every (state, input) pair exactly once; output vectors
    must share one length.  Raises MissingBranch / DuplicateBranch /
    IndexOutOfRange otherwise.
    """
    rows = [Branch(int(f), i, tuple(o), int(t)) for f, i, o, t in table]
    if not rows:
        raise MissingBranch("empty branch table")
    return Trellis(
        num_states=num_states,
        input_alphabet=tuple(input_alphabet),
        branches=tuple(rows),
        outputs_per_branch=len(rows[0].output),
        initial_state=initial_state,
        state_labels=tuple(state_labels) if state_labels is not None else None,
    )


@lru_cache(maxsize=4096)
def _transition_map(trellis: Trellis):
    return {(b.from_state, b.input): b for b in trellis.branches}


def enumerate_paths(trellis: Trellis, length: int, start=None, end=None,
                    branch_cost=None) -> list[PathRecord]:
    """All |alphabet|**length paths of `length` sections from `start`.

    Paths are returned in lexicographic order of their input sequences
    (alphabet order).  `end`, when given, keeps only paths ending there.
    `branch_cost(section, output_tuple)` accumulates an additive cost per
    branch; without it every cost is 0.

    This is the exhaustive maximum-likelihood oracle used to check the
    dynamic-programming detectors on small instances; it refuses to expand
    more than 2**24 paths (TooLarge).
    """
    if length < 0:
        raise InvalidTrellis("length must be >= 0")
    q = len(trellis.input_alphabet)
    if q ** length > ENUMERATION_GUARD:
        raise TooLarge(f"{q}**{length} paths exceeds the 2**24 enumeration guard")
    if start is None:
        start = trellis.initial_state
    step = _transition_map(trellis)
    records = []
    for inputs in itertools.product(trellis.input_alphabet, repeat=length):
        state = start
        outputs = []
        cost = 0.0 if branch_cost is not None else 0
        for t, a in enumerate(inputs):
            b = step[state, a]
            outputs.extend(b.output)
            if branch_cost is not None:
                cost += branch_cost(t, b.output)
            state = b.to_state
        if end is None or state == end:
            records.append(PathRecord(inputs, tuple(outputs), state, cost))
    return records
