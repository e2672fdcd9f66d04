import heapq
import warnings

import numpy as np
import pytest

from trelliskit.convcode import (
    PRESETS,
    CatastrophicCodeWarning,
    ConvCode,
    code_from_config,
    code_trellis,
    encode,
    free_distance,
)
from trelliskit.errors import ConfigError, DepthTooSmall, InvalidBit, InvalidTrellis
from trelliskit.trellis import enumerate_paths


def naive_encode(code, bits):
    """Independent oracle: explicit tap-list convolution, no bit tricks."""
    m = code.memory
    taps = [[(g >> (m - j)) & 1 for j in range(m + 1)] for g in code.generators]
    out = []
    for t in range(len(bits)):
        for tap in taps:
            acc = 0
            for j in range(m + 1):
                u = bits[t - j] if t - j >= 0 else 0
                acc ^= tap[j] & u
            out.append(acc)
    return out


def test_encode_known_75():
    code = ConvCode(2, (0o7, 0o5))
    assert encode(code, [1, 0, 0], termination="none") == [1, 1, 1, 0, 1, 1]
    assert encode(code, [1, 1], termination="zero_tail") == [1, 1, 0, 1, 0, 1, 1, 1]


def test_encode_all_zero_is_all_zero():
    for code in (ConvCode(2, (0o7, 0o5)), PRESETS["nasa"]):
        assert set(encode(code, [0] * 20)) == {0}


def test_encode_matches_naive_convolution():
    rng = np.random.default_rng(11)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", CatastrophicCodeWarning)
        for _ in range(1000):
            m = int(rng.integers(0, 5))
            n = int(rng.integers(1, 4))
            gens = _random_generators(rng, m, n)
            code = ConvCode(m, gens)
            bits = list(rng.integers(0, 2, size=int(rng.integers(1, 17))))
            assert encode(code, bits, termination="none") == naive_encode(code, bits)


def test_encode_rejects_bad_bit():
    with pytest.raises(InvalidBit):
        encode(ConvCode(2, (0o7, 0o5)), [0, 2, 1])


def _random_generators(rng, m, n):
    while True:
        gens = tuple(int(rng.integers(0, 1 << (m + 1))) for _ in range(n))
        if any(g >> m for g in gens):
            return gens


def test_trellis_shape():
    assert code_trellis(ConvCode(2, (0o7, 0o5))).num_states == 4
    assert code_trellis(ConvCode(2, (0o7, 0o5))).num_branches == 8
    t0 = code_trellis(ConvCode(0, (0o1, 0o1)))
    assert t0.num_states == 1 and t0.num_branches == 2
    assert code_trellis(PRESETS["nasa"]).num_states == 64


def test_trellis_path_matches_encode():
    rng = np.random.default_rng(23)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", CatastrophicCodeWarning)
        for _ in range(1000):
            m = int(rng.integers(0, 5))
            code = ConvCode(m, _random_generators(rng, m, int(rng.integers(1, 4))))
            t = code_trellis(code)
            bits = list(rng.integers(0, 2, size=int(rng.integers(1, 17))))
            state, labels = 0, []
            for u in bits:
                b = t.branch(state, u)
                labels.extend(b.output)
                state = b.to_state
            assert labels == encode(code, bits, termination="none")


def test_zero_tail_ends_in_state_zero():
    rng = np.random.default_rng(5)
    code = PRESETS["gsm"]
    t = code_trellis(code)
    for _ in range(50):
        inputs = list(rng.integers(0, 2, 12)) + [0] * code.memory
        state = 0
        for u in inputs:
            state = t.branch(state, u).to_state
        assert state == 0


def test_free_distance_75_via_enumeration():
    code = ConvCode(2, (0o7, 0o5))
    t = code_trellis(code)
    best = min(
        sum(p.outputs)
        for p in enumerate_paths(t, 14, start=0, end=0)
        if any(p.inputs))
    assert best == 5
    assert free_distance(code, 20) == 5


def test_free_distance_memoryless():
    assert free_distance(ConvCode(0, (0o1, 0o1)), 3) == 2


def dijkstra_free_distance(code, cap=64):
    """Independent oracle: best-first search over (weight, state)."""
    t = code_trellis(code)
    step = {(b.from_state, b.input): b for b in t.branches}
    first = step[0, 1]
    heap = [(sum(first.output), first.to_state)]
    seen = {}
    while heap:
        w, s = heapq.heappop(heap)
        if s == 0:
            return w
        if s in seen and seen[s] <= w:
            continue
        seen[s] = w
        for u in (0, 1):
            b = step[s, u]
            nw = w + sum(b.output)
            if nw < cap:
                heapq.heappush(heap, (nw, b.to_state))
    raise AssertionError("no remerging path found")


def test_free_distance_nasa():
    code = PRESETS["nasa"]
    assert free_distance(code, 30) == 10
    assert dijkstra_free_distance(code) == 10


def test_free_distance_generator_order_invariant():
    a = free_distance(ConvCode(2, (0o7, 0o5)), 20)
    b = free_distance(ConvCode(2, (0o5, 0o7)), 20)
    assert a == b


def test_free_distance_depth_guard():
    with pytest.raises(DepthTooSmall):
        free_distance(ConvCode(2, (0o7, 0o5)), 8)


def test_preset_shapes():
    assert PRESETS["gsm"].num_states == 16 and PRESETS["gsm"].n == 2
    assert PRESETS["is95"].num_states == 256 and PRESETS["is95"].n == 3
    assert PRESETS["nasa"].num_states == 64 and PRESETS["nasa"].n == 2


def test_code_validation():
    with pytest.raises(InvalidTrellis):
        ConvCode(1, (0o7,))       # wider than constraint length
    with pytest.raises(InvalidTrellis):
        ConvCode(2, (0o3, 0o2))   # no current-input tap anywhere


def test_catastrophic_warning():
    with pytest.warns(CatastrophicCodeWarning):
        ConvCode(2, (0o6, 0o3))   # common factor D+1
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        ConvCode(2, (0o7, 0o5))   # gcd 1: no warning


def test_config_file(tmp_path):
    p = tmp_path / "code.ini"
    p.write_text("[code]\nmemory = 2\nn = 2\ngenerators_octal = 7, 5\n")
    assert code_from_config(p) == ConvCode(2, (0o7, 0o5))

    q = tmp_path / "preset.ini"
    q.write_text("[code]\npreset = nasa\n")
    assert code_from_config(q) == PRESETS["nasa"]


def test_config_bad_octal_names_line(tmp_path):
    p = tmp_path / "bad.ini"
    p.write_text("[code]\nmemory = 2\nn = 2\ngenerators_octal = 7, 8\n")
    with pytest.raises(ConfigError) as err:
        code_from_config(p)
    assert ":4:" in str(err.value)


def test_config_missing_key(tmp_path):
    p = tmp_path / "bad.ini"
    p.write_text("[code]\nmemory = 2\nn = 2\n")
    with pytest.raises(ConfigError):
        code_from_config(p)
