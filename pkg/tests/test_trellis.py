import numpy as np
import pytest

from trelliskit.convcode import ConvCode, code_trellis
from trelliskit.errors import (
    DuplicateBranch,
    IndexOutOfRange,
    MissingBranch,
    TooLarge,
)
from trelliskit.trellis import enumerate_paths, trellis_from_table
from trelliskit.viterbi import MetricSpec, branch_metric

from _support import dicode_table, random_trellis


def test_dicode_table_builds():
    t = trellis_from_table(dicode_table(), 2, (1.0, -1.0))
    assert t.num_states == 2
    assert t.num_branches == 4
    assert t.outputs_per_branch == 1


def test_missing_branch_rejected():
    rows = [r for r in dicode_table() if not (r[0] == 1 and r[1] == -1.0)]
    with pytest.raises(MissingBranch):
        trellis_from_table(rows, 2, (1.0, -1.0))


def test_duplicate_branch_rejected():
    rows = dicode_table() + [dicode_table()[0]]
    with pytest.raises(DuplicateBranch):
        trellis_from_table(rows, 2, (1.0, -1.0))


def test_state_index_out_of_range_rejected():
    rows = dicode_table()
    rows[0] = (0, 1.0, (0.0,), 5)
    with pytest.raises(IndexOutOfRange):
        trellis_from_table(rows, 2, (1.0, -1.0))


def test_conv_builder_rows_roundtrip():
    # the (7,5) trellis re-expressed as an explicit table stays valid
    t = code_trellis(ConvCode(2, (0o7, 0o5)))
    rows = [(b.from_state, b.input, b.output, b.to_state) for b in t.branches]
    rebuilt = trellis_from_table(rows, 4, (0, 1))
    assert rebuilt.num_branches == 8
    assert rebuilt == t


def test_enumerate_counts():
    t = trellis_from_table(dicode_table(), 2, (1.0, -1.0))
    assert len(enumerate_paths(t, 3)) == 8

    t75 = code_trellis(ConvCode(2, (0o7, 0o5)))
    only = enumerate_paths(t75, 2, start=0, end=0)
    assert len(only) == 1
    assert only[0].inputs == (0, 0)
    assert len(enumerate_paths(t75, 5, start=0, end=0)) == 8


def test_enumerate_count_matches_alphabet_power():
    rng = np.random.default_rng(7)
    for _ in range(20):
        t = random_trellis(rng, int(rng.integers(1, 5)))
        length = int(rng.integers(0, 6))
        assert len(enumerate_paths(t, length)) == 2 ** length


def test_enumerate_guard():
    t = trellis_from_table(dicode_table(), 2, (1.0, -1.0))
    with pytest.raises(TooLarge):
        enumerate_paths(t, 25)


def test_enumerate_lexicographic_order():
    t75 = code_trellis(ConvCode(2, (0o7, 0o5)))
    paths = enumerate_paths(t75, 3)
    assert [p.inputs for p in paths[:3]] == [(0, 0, 0), (0, 0, 1), (0, 1, 0)]


def test_incremental_cost_equals_branch_metric_sum():
    t75 = code_trellis(ConvCode(2, (0o7, 0o5)))
    spec = MetricSpec.hamming()
    rng = np.random.default_rng(3)
    obs = rng.integers(0, 2, size=(4, 2))
    paths = enumerate_paths(
        t75, 4, branch_cost=lambda k, out: branch_metric(spec, out, obs[k]))
    for p in paths:
        independent = sum(
            branch_metric(spec, p.outputs[2 * k:2 * k + 2], obs[k]) for k in range(4))
        assert p.cost == independent
