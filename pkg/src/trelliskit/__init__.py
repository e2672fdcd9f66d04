"""Trellis-based sequence detection toolkit.

Core pieces: the Trellis data model, binary rate-1/n convolutional codes,
Viterbi block and streaming decoders, soft-output and forward-backward
relatives (SOVA, BCJR, min-sum), ISI channel MLSE, discrete-HMM inference,
and a seeded Monte Carlo BER harness.
"""

from .convcode import PRESETS, ConvCode, code_trellis, encode, free_distance
from .errors import TrellisKitError
from .hmm import HmmModel, hmm_forward_backward, hmm_viterbi, viterbi_training_step
from .forward_backward import PosteriorTable, SoftDecision, bcjr, min_sum, sova
from .isi import IsiChannel, apply_fir, isi_trellis, mlse_detect, threshold_detect
from .simulate import (
    BerReport,
    CodedSystem,
    IsiSystem,
    StopRule,
    UncodedSystem,
    awgn_transmit,
    coding_gain,
    quantize,
    run_sweep,
)
from .trellis import Branch, PathRecord, Trellis, enumerate_paths, trellis_from_table
from .viterbi import (
    DecodeResult,
    MetricSpec,
    branch_metric,
    path_metric,
    stream_flush,
    stream_init,
    stream_push,
    viterbi_decode_block,
)

__all__ = [
    "Branch", "Trellis", "PathRecord", "trellis_from_table", "enumerate_paths",
    "ConvCode", "PRESETS", "encode", "code_trellis", "free_distance",
    "MetricSpec", "DecodeResult", "branch_metric", "path_metric",
    "viterbi_decode_block", "stream_init", "stream_push", "stream_flush",
    "PosteriorTable", "SoftDecision", "bcjr", "min_sum", "sova",
    "IsiChannel", "apply_fir", "isi_trellis", "mlse_detect", "threshold_detect",
    "HmmModel", "hmm_viterbi", "hmm_forward_backward", "viterbi_training_step",
    "BerReport", "StopRule", "CodedSystem", "UncodedSystem", "IsiSystem",
    "awgn_transmit", "quantize", "run_sweep", "coding_gain",
    "TrellisKitError",
]

__version__ = "0.1.0"
