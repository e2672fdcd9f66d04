"""Shared helpers for the test suite."""

import numpy as np

from trelliskit.trellis import trellis_from_table


def dicode_table():
    """2-state dicode trellis: state is the previous +/-1 symbol, output
    y = x_t - x_{t-1}.  State 0 holds previous symbol +1, state 1 holds -1."""
    prev = {0: 1.0, 1: -1.0}
    rows = []
    for s in (0, 1):
        for x in (1.0, -1.0):
            rows.append((s, x, (x - prev[s],), 0 if x > 0 else 1))
    return rows


def random_trellis(rng, num_states, alphabet=(0, 1), n_out=1, out_symbols=(0, 1)):
    """Random deterministic FSM trellis over the given alphabet."""
    rows = []
    for s in range(num_states):
        for a in alphabet:
            out = tuple(out_symbols[i] for i in rng.integers(0, len(out_symbols), n_out))
            rows.append((s, a, out, int(rng.integers(0, num_states))))
    return trellis_from_table(rows, num_states, alphabet)


def outputs_matrix(paths, n_out):
    """Stack enumerated PathRecord outputs into an array (num_paths, T*n)."""
    return np.array([p.outputs for p in paths])
