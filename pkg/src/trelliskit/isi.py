"""Intersymbol-interference channels and their maximum-likelihood detection.

An IsiChannel is an FIR filter over PAM levels: y_t = sum_i taps[i] * x_{t-i}
with x_t = 0 before the start.  isi_trellis unrolls it into the shared
Trellis model; the startup convention adds transient states whose history
still contains the zero level, so the trellis reproduces apply_fir exactly
from the very first sample.  mlse_detect is then just the Viterbi decoder
with squared-Euclidean branch costs.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass
from functools import lru_cache
from itertools import product

import numpy as np

from .errors import ConfigError, EmptyInput, InvalidLevel, InvalidTrellis, TooManyStates
from .trellis import Branch, Trellis
from .viterbi import MetricSpec, viterbi_decode_block

_STATE_GUARD = 1 << 20


@dataclass(frozen=True)
class IsiChannel:
    """FIR channel taps (h_0 first, h_0 != 0) over a PAM input alphabet."""

    taps: tuple[float, ...]
    input_alphabet: tuple[float, ...] = (1.0, -1.0)

    def __post_init__(self):
        if len(self.taps) < 1 or self.taps[0] == 0:
            raise InvalidTrellis("need taps with h_0 != 0")
        levels = self.input_alphabet
        if len(levels) < 2 or len(set(levels)) != len(levels):
            raise InvalidTrellis("alphabet needs at least 2 distinct levels")
        if 0.0 in levels:
            raise InvalidTrellis("level 0 is reserved for the pre-start history")

    @property
    def memory(self):
        return len(self.taps) - 1


PRESETS = {
    "dicode": IsiChannel((1.0, -1.0)),
    "class4": IsiChannel((1.0, 0.0, -1.0)),
    "duobinary": IsiChannel((1.0, 1.0)),
}


def apply_fir(channel: IsiChannel, symbols, flush=False) -> np.ndarray:
    """Filter a level sequence; flush appends the memory-length tail."""
    x = np.asarray(symbols, dtype=float)
    if x.size and not np.isin(x, channel.input_alphabet).all():
        raise InvalidLevel("symbols must come from the channel alphabet")
    if x.size == 0:
        return np.zeros(channel.memory if flush else 0)
    y = np.convolve(x, channel.taps)
    return y if flush else y[: x.size]


def _histories(channel: IsiChannel):
    """Reachable m-step histories, zero-padded at the old end; the all-zero
    start history comes first so it lands on state index 0."""
    m = channel.memory
    levels = channel.input_alphabet
    out = []
    for k in range(m + 1):
        for recent in product(levels, repeat=k):
            out.append(recent + (0.0,) * (m - k))
    return out


def isi_trellis(channel: IsiChannel) -> Trellis:
    """Trellis whose branch outputs are the noiseless channel samples.

    Interior states are the |alphabet|**m full histories; the remaining
    states are the startup transients reachable only during the first m
    sections.  state_labels carries each state's history tuple
    (x_{t-1}, ..., x_{t-m}).
    """
    m = channel.memory
    if len(channel.input_alphabet) ** m > _STATE_GUARD:
        raise TooManyStates(f"|alphabet|**{m} exceeds the 2**20 state guard")
    hist = _histories(channel)
    index = {h: i for i, h in enumerate(hist)}
    taps = channel.taps
    branches = []
    for h, s in index.items():
        for x in channel.input_alphabet:
            y = taps[0] * x + sum(taps[i + 1] * h[i] for i in range(m))
            to = index[(x,) + h[: m - 1]]
            branches.append(Branch(s, x, (y,), to))
    return Trellis(
        num_states=len(hist),
        input_alphabet=channel.input_alphabet,
        branches=tuple(branches),
        outputs_per_branch=1,
        initial_state=0,
        state_labels=tuple(hist),
    )


@lru_cache(maxsize=64)
def _cached_trellis(channel: IsiChannel) -> Trellis:
    return isi_trellis(channel)


def mlse_detect(channel: IsiChannel, samples, noise_variance=1.0,
                *, detail=False):
    """Maximum-likelihood level sequence from equalized samples plus AWGN.

    The noise variance scales only the reported Gaussian log-likelihood,
    never the decisions.  With detail=True returns (levels, DecodeResult,
    log_likelihood).
    """
    y = np.asarray(samples, dtype=float).reshape(-1)
    if y.size == 0:
        raise EmptyInput("no samples")
    if noise_variance <= 0:
        raise InvalidTrellis("noise variance must be positive")
    trellis = _cached_trellis(channel)
    result = viterbi_decode_block(
        trellis, y.reshape(-1, 1), MetricSpec.euclidean(map_bits=False),
        termination="free_end")
    levels = np.array(result.inputs, dtype=float)
    if not detail:
        return levels
    loglik = -result.final_cost / (2 * noise_variance) \
        - y.size / 2 * np.log(2 * np.pi * noise_variance)
    return levels, result, float(loglik)


def output_levels(channel: IsiChannel) -> np.ndarray:
    """Sorted noiseless output values of the steady-state channel
    (for 1-D^2 over +/-1 inputs: -2, 0, +2)."""
    trellis = _cached_trellis(channel)
    return np.unique(np.array([b.output[0] for b in trellis.branches
                               if 0.0 not in trellis.state_labels[b.from_state]]))


def slice_samples(channel: IsiChannel, samples) -> np.ndarray:
    """Per-sample threshold detection: each sample snaps to the nearest
    noiseless output value, thresholds at the midpoints (+/-1 for 1-D^2).

    This is the memoryless reference detector; its decision error rate is
    what a precoded symbol-by-symbol system would deliver, so the margin
    comparison scores these decisions directly without modeling precoding.
    """
    y = np.asarray(samples, dtype=float).reshape(-1)
    outs = output_levels(channel)
    return outs[np.argmin(np.abs(y[:, None] - outs[None, :]), axis=1)]


def threshold_detect(channel: IsiChannel, samples) -> np.ndarray:
    """Recover input levels from per-sample threshold decisions.

    Slices each sample with slice_samples, then inverts the FIR memory by
    decision feedback, clamping to the nearest alphabet level (earlier
    alphabet entry wins a tie).  Startup feedback uses the true zero
    pre-start history.  Errors propagate; this stays strictly weaker than
    mlse_detect at every SNR.
    """
    y = np.asarray(samples, dtype=float).reshape(-1)
    sliced = slice_samples(channel, y)
    levels = np.asarray(channel.input_alphabet, dtype=float)
    taps = channel.taps
    m = channel.memory
    decided = np.zeros(y.size + m)
    for t in range(y.size):
        residual = sliced[t] - sum(taps[i] * decided[t + m - i] for i in range(1, m + 1))
        decided[t + m] = levels[np.argmin(np.abs(levels - residual / taps[0]))]
    return decided[m:]


def channel_from_config(path) -> IsiChannel:
    """Load an IsiChannel from an INI file with a [channel] section.

    Keys: either `preset` (dicode, class4, duobinary) or comma-separated
    `taps` and optional `alphabet`.
    """
    parser = configparser.ConfigParser()
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except OSError as e:
        raise ConfigError(str(e), path=path) from None
    except configparser.Error as e:
        raise ConfigError(str(e), path=path,
                          line=getattr(e, "lineno", None)) from None
    if not parser.has_section("channel"):
        raise ConfigError("missing [channel] section", path=path)
    sec = parser["channel"]
    if "preset" in sec:
        name = sec["preset"].strip()
        if name not in PRESETS:
            raise ConfigError(f"unknown channel preset {name!r}", path=path,
                              line=_line_of(path, "preset"))
        return PRESETS[name]
    if "taps" not in sec:
        raise ConfigError("need `taps` or `preset` in [channel]", path=path)
    try:
        taps = tuple(float(tok) for tok in sec["taps"].split(","))
    except ValueError:
        raise ConfigError(f"bad taps {sec['taps']!r}", path=path,
                          line=_line_of(path, "taps")) from None
    alphabet = (1.0, -1.0)
    if "alphabet" in sec:
        try:
            alphabet = tuple(float(tok) for tok in sec["alphabet"].split(","))
        except ValueError:
            raise ConfigError(f"bad alphabet {sec['alphabet']!r}", path=path,
                              line=_line_of(path, "alphabet")) from None
    try:
        return IsiChannel(taps, alphabet)
    except InvalidTrellis as e:
        raise ConfigError(str(e), path=path) from None


def _line_of(path, key):
    try:
        with open(path) as fh:
            for i, line in enumerate(fh, start=1):
                if line.split("=")[0].split(":")[0].strip() == key:
                    return i
    except OSError:
        pass
    return None
