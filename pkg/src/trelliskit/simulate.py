"""Seeded channels, quantization, and Monte Carlo BER sweeps.

Randomness comes from numpy's Philox4x64 counter-based generator keyed by
(master seed, stream id); every frame of every sweep point derives its own
stream, so reports are bit-for-bit reproducible no matter how frames are
scheduled across workers.

Eb/N0 accounting charges the code rate: noise variance per channel sample
is 1 / (2 * R * 10^(EbN0_dB/10)) for unit-energy BPSK levels, which makes
coded and uncoded curves comparable per information bit.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .convcode import ConvCode, code_trellis, encode
from .errors import BadParams, BadRate, TargetNotBracketed
from .isi import IsiChannel, apply_fir, mlse_detect, slice_samples
from .viterbi import MetricSpec, viterbi_decode_block

_MASK64 = (1 << 64) - 1


def _philox(seed, stream_id):
    key = np.array([seed & _MASK64, stream_id & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _sid(point_idx, frame_idx, purpose):
    if not (0 <= point_idx < (1 << 20) and 0 <= frame_idx < (1 << 40)):
        raise BadParams("sweep too large for the stream-id packing")
    return (purpose << 60) | (point_idx << 40) | frame_idx


@dataclass(frozen=True)
class ChannelSpec:
    """One memoryless channel operating point."""

    kind: str                      # awgn | bsc
    ebn0_db: float | None = None
    rate: float = 1.0
    crossover: float | None = None

    def __post_init__(self):
        if self.kind == "awgn":
            if self.ebn0_db is None:
                raise BadParams("awgn needs ebn0_db")
            if not 0 < self.rate <= 1:
                raise BadRate(f"rate {self.rate} outside (0, 1]")
        elif self.kind == "bsc":
            if self.crossover is None or not 0 <= self.crossover <= 0.5:
                raise BadParams(f"crossover {self.crossover} outside [0, 0.5]")
        else:
            raise BadParams(f"unknown channel kind {self.kind!r}")

    def noise_sigma(self):
        if self.kind != "awgn":
            raise BadParams("noise_sigma applies to awgn only")
        if math.isinf(self.ebn0_db):
            return 0.0
        return math.sqrt(1.0 / (2.0 * self.rate * 10 ** (self.ebn0_db / 10.0)))


def awgn_transmit(bits, ebn0_db, rate, seed, stream_id=0) -> np.ndarray:
    """BPSK-map bits (b -> 1-2b, unit energy) and add seeded Gaussian noise.

    Fully determined by (seed, stream_id); ebn0_db=inf sends noise-free
    levels.  `rate` is the information bits per channel bit used in the
    Eb/N0 accounting.
    """
    if rate <= 0:
        raise BadRate(f"rate {rate} must be positive")
    b = np.asarray(bits, dtype=np.int64)
    levels = (1 - 2 * b).astype(float)
    if math.isinf(ebn0_db):
        return levels
    sigma = math.sqrt(1.0 / (2.0 * rate * 10 ** (ebn0_db / 10.0)))
    rng = _philox(seed, stream_id)
    return levels + sigma * rng.standard_normal(b.size)


def bsc_transmit(bits, crossover, seed, stream_id=0) -> np.ndarray:
    """Flip each bit independently with the given probability (seeded)."""
    spec = ChannelSpec("bsc", crossover=crossover)
    b = np.asarray(bits, dtype=np.int64)
    rng = _philox(seed, stream_id)
    flips = rng.random(b.size) < spec.crossover
    return b ^ flips


def quantize(samples, bits, step) -> np.ndarray:
    """Uniform midrise quantizer to 2**bits levels of width `step`.

    level = clamp(floor(s/step) + 2**(bits-1), 0, 2**bits - 1); with bits=1
    this reduces to the sign (level 1 = positive).
    """
    if bits < 1 or step <= 0:
        raise BadParams("need bits >= 1 and step > 0")
    s = np.asarray(samples, dtype=float)
    half = 1 << (bits - 1)
    return np.clip(np.floor(s / step) + half, 0, (1 << bits) - 1).astype(np.int64)


def default_quant_step(sigma) -> float:
    """Default soft-decision quantizer step: 0.25 * (noise sigma + 1)."""
    return 0.25 * (sigma + 1.0)


def gaussian_nll_table(bits, step, sigma) -> MetricSpec:
    """nll_table MetricSpec for quantized BPSK-over-AWGN observations.

    Cost of (bit symbol, quantizer level) is -log P(level | level mean
    1-2*bit, noise sigma), normalized per level.
    """
    if sigma <= 0:
        raise BadParams("sigma must be positive")
    nlevels = 1 << bits
    half = nlevels // 2
    edges = np.concatenate(([-np.inf], (np.arange(1, nlevels) - half) * step, [np.inf]))
    table = {}
    for bit, mean in ((0, 1.0), (1, -1.0)):
        p = ndtr((edges[1:] - mean) / sigma) - ndtr((edges[:-1] - mean) / sigma)
        table[bit] = -np.log(np.maximum(p, 1e-300))
    return MetricSpec.nll(table)


@dataclass(frozen=True)
class StopRule:
    """Stop a sweep point after min_errors bit errors or max_bits info bits."""

    min_errors: int = 100
    max_bits: int = 10_000_000

    def __post_init__(self):
        if self.min_errors < 1 or self.max_bits < 1:
            raise BadParams("min_errors and max_bits must be >= 1")


@dataclass(frozen=True)
class CodedSystem:
    """Convolutional code + Viterbi decoding over AWGN or a BSC.

    metric "hard" slices samples to bits and uses Hamming costs; "soft"
    quantizes to `quant_bits` levels (step 0.25*(sigma+1) unless overridden)
    and decodes with a Gaussian nll table; "euclidean" uses the unquantized
    squared-distance metric.  Frames are zero-tail terminated.
    """

    code: ConvCode
    metric: str = "soft"
    info_bits_per_frame: int = 1000
    quant_bits: int = 3
    quant_step: float | None = None

    def __post_init__(self):
        if self.metric not in ("hard", "soft", "euclidean"):
            raise BadParams(f"unknown metric {self.metric!r}")
        if self.info_bits_per_frame < 1:
            raise BadParams("info_bits_per_frame must be >= 1")


@dataclass(frozen=True)
class UncodedSystem:
    """BPSK with hard decisions; the coding-gain reference."""

    bits_per_frame: int = 100_000


@dataclass(frozen=True)
class IsiSystem:
    """ISI channel detection; snr_db means -10*log10(noise variance).

    detector "mlse" scores recovered input levels (the first `memory`
    warm-up symbols of each frame are excluded); "threshold" scores the
    per-sample slicer decisions against the noiseless channel outputs,
    which is what a precoded symbol-by-symbol receiver would deliver.
    """

    channel: IsiChannel
    detector: str = "mlse"
    symbols_per_frame: int = 10_000

    def __post_init__(self):
        if self.detector not in ("mlse", "threshold"):
            raise BadParams(f"unknown detector {self.detector!r}")
        if self.symbols_per_frame <= self.channel.memory:
            raise BadParams("frames must be longer than the channel memory")


@dataclass(frozen=True)
class BerRow:
    snr_db: float
    frames: int
    info_bits: int
    bit_errors: int
    ber: float
    ci95: float


@dataclass(frozen=True)
class BerReport:
    """Result rows (sorted by SNR) with the config echo and master seed."""

    rows: tuple
    config: tuple
    seed: int

    def to_csv(self) -> str:
        lines = [f"# seed: {self.seed}"]
        lines += [f"# config: {c}" for c in self.config]
        lines.append("snr_db,frames,info_bits,bit_errors,ber,ci95")
        for r in self.rows:
            lines.append(f"{r.snr_db!r},{r.frames},{r.info_bits},"
                         f"{r.bit_errors},{r.ber!r},{r.ci95!r}")
        return "\n".join(lines) + "\n"

    @staticmethod
    def from_csv(text) -> "BerReport":
        seed = 0
        config = []
        rows = []
        saw_header = False
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("seed:"):
                    seed = int(body.split(":", 1)[1])
                elif body.startswith("config:"):
                    config.append(body.split(":", 1)[1].strip())
                continue
            if not saw_header:
                saw_header = True
                continue
            f = line.split(",")
            rows.append(BerRow(float(f[0]), int(f[1]), int(f[2]), int(f[3]),
                               float(f[4]), float(f[5])))
        return BerReport(tuple(rows), tuple(config), seed)

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_csv())

    @staticmethod
    def load(path) -> "BerReport":
        with open(path) as fh:
            return BerReport.from_csv(fh.read())


def _coded_frame(system, channel_kind, point, point_idx, frame_idx, seed, spec):
    rng = _philox(seed, _sid(point_idx, frame_idx, 0))
    info = rng.integers(0, 2, system.info_bits_per_frame)
    coded = encode(system.code, info.tolist(), termination="zero_tail")
    n = system.code.n
    if channel_kind == "bsc":
        received = bsc_transmit(coded, point, seed, _sid(point_idx, frame_idx, 1))
        obs = np.asarray(received).reshape(-1, n)
        use = MetricSpec.hamming()
    else:
        samples = awgn_transmit(coded, point, 1.0 / n, seed,
                                _sid(point_idx, frame_idx, 1))
        if system.metric == "hard":
            obs = (samples < 0).astype(np.int64).reshape(-1, n)
            use = MetricSpec.hamming()
        elif system.metric == "euclidean":
            obs = samples.reshape(-1, n)
            use = MetricSpec.euclidean()
        else:
            sigma = ChannelSpec("awgn", ebn0_db=point, rate=1.0 / n).noise_sigma()
            step = system.quant_step or default_quant_step(sigma)
            obs = quantize(samples, system.quant_bits, step).reshape(-1, n)
            use = spec
    trellis = code_trellis(system.code)
    result = viterbi_decode_block(trellis, obs, use, termination="to_state_0")
    decided = np.array(result.inputs[: info.size])
    return info.size, int(np.sum(decided != info))


def _uncoded_frame(system, channel_kind, point, point_idx, frame_idx, seed, spec):
    rng = _philox(seed, _sid(point_idx, frame_idx, 0))
    bits = rng.integers(0, 2, system.bits_per_frame)
    if channel_kind == "bsc":
        received = bsc_transmit(bits, point, seed, _sid(point_idx, frame_idx, 1))
        return bits.size, int(np.sum(received != bits))
    samples = awgn_transmit(bits, point, 1.0, seed, _sid(point_idx, frame_idx, 1))
    decided = samples < 0
    return bits.size, int(np.sum(decided != bits))


def _isi_frame(system, channel_kind, point, point_idx, frame_idx, seed, spec):
    channel = system.channel
    rng = _philox(seed, _sid(point_idx, frame_idx, 0))
    levels = np.asarray(channel.input_alphabet, dtype=float)
    symbols = levels[rng.integers(0, levels.size, system.symbols_per_frame)]
    clean = apply_fir(channel, symbols)
    sigma = 10 ** (-point / 20.0)
    noise_rng = _philox(seed, _sid(point_idx, frame_idx, 1))
    samples = clean + sigma * noise_rng.standard_normal(clean.size)
    m = channel.memory
    if system.detector == "mlse":
        decided = mlse_detect(channel, samples, max(sigma, 1e-12) ** 2)
        return symbols.size - m, int(np.sum(decided[m:] != symbols[m:]))
    sliced = slice_samples(channel, samples)
    return symbols.size - m, int(np.sum(sliced[m:] != clean[m:]))


_FRAME_FNS = {
    CodedSystem: _coded_frame,
    UncodedSystem: _uncoded_frame,
    IsiSystem: _isi_frame,
}


def _frame_task(args):
    system, channel_kind, point, point_idx, frame_idx, seed, spec = args
    fn = _FRAME_FNS[type(system)]
    return fn(system, channel_kind, point, point_idx, frame_idx, seed, spec)


def _point_spec(system, channel_kind, point):
    if isinstance(system, CodedSystem) and system.metric == "soft" \
            and channel_kind == "awgn":
        sigma = ChannelSpec("awgn", ebn0_db=point, rate=1.0 / system.code.n).noise_sigma()
        if sigma > 0:
            step = system.quant_step or default_quant_step(sigma)
            return gaussian_nll_table(system.quant_bits, step, sigma)
    return None


def _config_echo(system, channel_kind, stop, workers):
    return (f"system: {system!r}", f"channel: {channel_kind}",
            f"stop: min_errors={stop.min_errors} max_bits={stop.max_bits}")


def run_sweep(system, points, stop=None, seed=None, *, channel_kind="awgn",
              workers=1) -> BerReport:
    """Monte Carlo BER sweep: independent frames per point until the stop
    rule is met, scanning frames in index order.

    The per-frame stream derivation (seed, point index, frame index) makes
    the report identical for any worker count.  `points` are Eb/N0 dB for
    awgn, crossover probabilities for bsc, and -10*log10(noise variance)
    for ISI systems.
    """
    if seed is None:
        raise BadParams("an explicit seed is required")
    if not points:
        raise BadParams("need at least one sweep point")
    if type(system) not in _FRAME_FNS:
        raise BadParams(f"unknown system {type(system).__name__}")
    stop = stop or StopRule()
    if channel_kind not in ("awgn", "bsc"):
        raise BadParams(f"unknown channel kind {channel_kind!r}")
    if channel_kind == "bsc":
        for p in points:
            ChannelSpec("bsc", crossover=p)
    ordered = sorted(float(p) for p in points)

    rows = []
    pool = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for point_idx, point in enumerate(ordered):
            spec = _point_spec(system, channel_kind, point)
            bits = errors = frames = 0
            next_frame = 0
            done = False
            while not done:
                # frames are consumed strictly in index order, so the stop
                # decision (and therefore the report) never depends on how
                # many workers computed them
                wave = [(system, channel_kind, point, point_idx, next_frame + j,
                         seed, spec)
                        for j in range(4 * workers if pool else 1)]
                next_frame += len(wave)
                results = pool.map(_frame_task, wave) if pool \
                    else map(_frame_task, wave)
                for nbits, nerr in results:
                    bits += nbits
                    errors += nerr
                    frames += 1
                    if errors >= stop.min_errors or bits >= stop.max_bits:
                        done = True
                        break
            ber = errors / bits
            ci = 1.96 * math.sqrt(max(ber * (1 - ber), 0.0) / bits)
            rows.append(BerRow(point, frames, bits, errors, ber, ci))
    finally:
        if pool is not None:
            pool.shutdown()
    return BerReport(tuple(rows), _config_echo(system, channel_kind, stop, workers),
                     seed)


def coding_gain(coded: BerReport, reference: BerReport, target_ber) -> float:
    """Eb/N0 gain of `coded` over `reference` at the target BER.

    Each curve is interpolated linearly in (snr_db, log10 BER); both must
    bracket the target or TargetNotBracketed is raised.
    """
    if not 0 < target_ber < 1:
        raise BadParams("target_ber must be in (0, 1)")
    return _crossing(reference, target_ber) - _crossing(coded, target_ber)


def _crossing(report: BerReport, target):
    pts = [(r.snr_db, math.log10(r.ber)) for r in report.rows if r.ber > 0]
    lt = math.log10(target)
    for (s1, l1), (s2, l2) in zip(pts, pts[1:]):
        if min(l1, l2) <= lt <= max(l1, l2):
            if l1 == l2:
                return s1
            return s1 + (lt - l1) * (s2 - s1) / (l2 - l1)
    raise TargetNotBracketed(f"BER {target} not bracketed by report rows")
