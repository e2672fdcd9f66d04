"""Command-line front end: file-based encode/decode, detection, and sweeps.

File formats are deliberately plain: bit files are ASCII 0/1 with all
whitespace ignored; sample files carry one decimal real per line; HMM symbol
files are whitespace-separated integers.  Output files are written to a
temporary name and renamed on success, so failures never leave partial
files.  All randomized subcommands require an explicit --seed and identical
invocations produce byte-identical outputs.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile

import numpy as np

from . import convcode, hmm, isi, simulate
from .errors import BadParams, ConfigError, TrellisKitError
from .viterbi import MetricSpec, viterbi_decode_block


def _write_atomic(path, text):
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _read_bits(path):
    with open(path) as fh:
        blob = "".join(fh.read().split())
    if set(blob) - {"0", "1"}:
        raise ConfigError("bit file may only contain 0, 1 and whitespace", path=path)
    return [int(c) for c in blob]


def _read_samples(path):
    with open(path) as fh:
        toks = fh.read().split()
    try:
        return np.array([float(t) for t in toks])
    except ValueError:
        raise ConfigError("sample file must contain decimal reals", path=path) from None


def _read_symbols(path):
    with open(path) as fh:
        toks = fh.read().split()
    try:
        return [int(t) for t in toks]
    except ValueError:
        raise ConfigError("symbol file must contain integers", path=path) from None


def _snr_points(text):
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise BadParams(f"range must be start:step:stop, got {text!r}")
        start, step, stop = (float(p) for p in parts)
        if step <= 0:
            raise BadParams("range step must be positive")
        points = []
        x = start
        while x <= stop + 1e-9:
            points.append(round(x, 12))
            x += step
        return points
    return [float(tok) for tok in text.split(",") if tok]


def _build_parser():
    top = argparse.ArgumentParser(
        prog="trelliskit",
        description="Trellis detection toolkit: encode/decode files, run ISI "
                    "and HMM inference, and produce BER sweep CSVs.")
    sub = top.add_subparsers(dest="command", required=True)

    p = sub.add_parser("encode", help="convolutionally encode a bit file")
    p.add_argument("--code", required=True, help="code config (INI) path")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--termination", choices=["zero_tail", "none"],
                   default="zero_tail")

    p = sub.add_parser("decode", help="Viterbi-decode a received file")
    p.add_argument("--code", required=True)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--metric", choices=["hard", "euclidean"], default="hard",
                   help="hard reads a bit file, euclidean a sample file")
    p.add_argument("--termination", choices=["to_state_0", "free_end"],
                   default="to_state_0",
                   help="to_state_0 also strips the zero tail from the output")

    p = sub.add_parser("isi-detect", help="MLSE-detect equalized samples")
    p.add_argument("--channel", required=True, help="channel config (INI) path")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--noise-variance", type=float, default=1.0)

    p = sub.add_parser("hmm-decode", help="most probable HMM state path")
    p.add_argument("--model", required=True, help="model JSON path")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("hmm-train", help="segmental (Viterbi) EM iterations")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True, nargs="+",
                   help="one or more symbol files")
    p.add_argument("--out", required=True)
    p.add_argument("--iterations", type=int, default=1)
    p.add_argument("--smoothing", type=float, default=1e-3)

    p = sub.add_parser("sweep", help="Monte Carlo BER sweep to CSV")
    kind = p.add_mutually_exclusive_group(required=True)
    kind.add_argument("--preset", choices=sorted(convcode.PRESETS),
                      help="coded system from a named code preset")
    kind.add_argument("--code", help="coded system from a code config file")
    kind.add_argument("--channel", help="ISI system from a channel config file")
    kind.add_argument("--uncoded", action="store_true",
                      help="uncoded BPSK reference")
    p.add_argument("--metric", choices=["hard", "soft", "euclidean"],
                   default="soft")
    p.add_argument("--detector", choices=["mlse", "threshold"], default="mlse",
                   help="for --channel systems")
    p.add_argument("--channel-kind", choices=["awgn", "bsc"], default="awgn",
                   help="for coded systems; with bsc the sweep points are "
                        "crossover probabilities")
    p.add_argument("--snr", required=True,
                   help="start:step:stop (stop inclusive) or comma list")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--min-errors", type=int, default=100)
    p.add_argument("--max-bits", type=int, default=10_000_000)
    p.add_argument("--frame-bits", type=int, default=None,
                   help="info bits (or ISI symbols) per frame")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True)

    p = sub.add_parser("gain", help="interpolated coding gain from two sweep CSVs")
    p.add_argument("coded")
    p.add_argument("reference")
    p.add_argument("--target-ber", type=float, required=True)
    return top


def _cmd_encode(args):
    code = convcode.code_from_config(args.code)
    bits = _read_bits(args.infile)
    out = convcode.encode(code, bits, termination=args.termination)
    _write_atomic(args.out, "".join(str(b) for b in out) + "\n")
    return 0


def _cmd_decode(args):
    code = convcode.code_from_config(args.code)
    trellis = convcode.code_trellis(code)
    if args.metric == "hard":
        data = np.array(_read_bits(args.infile))
        spec = MetricSpec.hamming()
    else:
        data = _read_samples(args.infile)
        spec = MetricSpec.euclidean()
    if data.size % code.n:
        raise ConfigError(f"input length {data.size} is not a multiple of n={code.n}",
                          path=args.infile)
    result = viterbi_decode_block(trellis, data.reshape(-1, code.n), spec,
                                  termination=args.termination)
    decided = list(result.inputs)
    if args.termination == "to_state_0" and code.memory:
        decided = decided[: -code.memory]
    _write_atomic(args.out, "".join(str(b) for b in decided) + "\n")
    return 0


def _cmd_isi_detect(args):
    channel = isi.channel_from_config(args.channel)
    samples = _read_samples(args.infile)
    levels = isi.mlse_detect(channel, samples, args.noise_variance)
    _write_atomic(args.out, "\n".join(f"{x:g}" for x in levels) + "\n")
    return 0


def _cmd_hmm_decode(args):
    model = hmm.load_model(args.model)
    obs = _read_symbols(args.infile)
    path, logp = hmm.hmm_viterbi(model, obs)
    _write_atomic(args.out, " ".join(str(s) for s in path) + "\n")
    print(f"log_joint_probability {logp!r}")
    return 0


def _cmd_hmm_train(args):
    model = hmm.load_model(args.model)
    dataset = [_read_symbols(p) for p in args.data]
    for _ in range(args.iterations):
        model = hmm.viterbi_training_step(model, dataset, smoothing=args.smoothing)
    _write_atomic(args.out, json.dumps(hmm.model_dict(model), indent=1) + "\n")
    return 0


def _cmd_sweep(args):
    points = _snr_points(args.snr)
    if args.uncoded:
        system = simulate.UncodedSystem(bits_per_frame=args.frame_bits or 100_000)
    elif args.channel:
        channel = isi.channel_from_config(args.channel)
        system = simulate.IsiSystem(channel, detector=args.detector,
                                    symbols_per_frame=args.frame_bits or 10_000)
    else:
        code = convcode.PRESETS[args.preset] if args.preset \
            else convcode.code_from_config(args.code)
        system = simulate.CodedSystem(code, metric=args.metric,
                                      info_bits_per_frame=args.frame_bits or 1000)
    stop = simulate.StopRule(min_errors=args.min_errors, max_bits=args.max_bits)
    report = simulate.run_sweep(system, points, stop, args.seed,
                                channel_kind=args.channel_kind,
                                workers=args.workers)
    _write_atomic(args.out, report.to_csv())
    return 0


def _cmd_gain(args):
    coded = simulate.BerReport.load(args.coded)
    reference = simulate.BerReport.load(args.reference)
    print(f"{simulate.coding_gain(coded, reference, args.target_ber):.2f}")
    return 0


_COMMANDS = {
    "encode": _cmd_encode,
    "decode": _cmd_decode,
    "isi-detect": _cmd_isi_detect,
    "hmm-decode": _cmd_hmm_decode,
    "hmm-train": _cmd_hmm_train,
    "sweep": _cmd_sweep,
    "gain": _cmd_gain,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, BadParams) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except TrellisKitError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
