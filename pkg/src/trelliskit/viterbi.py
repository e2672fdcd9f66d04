"""Viterbi decoding on a Trellis: metrics, add-compare-select, survivors.

Tie-breaking is fixed everywhere: when two extensions into a state share the
minimum cost, the branch from the lower-numbered predecessor state wins (and
the earlier alphabet input on a further tie); among end states the lowest
index wins.  This makes every decode deterministic so the exhaustive oracle
can compare paths, not just costs.

Metrics accumulate in int64 for Hamming and float64 otherwise; per-section
renormalization (subtracting the section minimum) keeps the stored values
bounded, mirroring bounded-word ACS hardware.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import (
    BadParams,
    EmptyInput,
    LengthMismatch,
    NotInitialized,
    PushAfterFlush,
    TableMiss,
    UnreachableState,
)
from .trellis import Trellis

_INT_INF = np.int64(1) << np.int64(40)
# sections of branch metrics to build in one vectorized block
_CHUNK_ELEMS = 1 << 16


@dataclass(frozen=True)
class MetricSpec:
    """Branch-cost rule.

    kind "hamming": count of differing symbols.
    kind "euclidean": squared distance to branch levels; with map_bits the
        branch output bits map to levels via b -> 1-2b (0 -> +1, 1 -> -1),
        without it the branch outputs are used as levels directly (ISI).
    kind "nll_table": per-(output symbol, observation index) cost lookup,
        normalized so each observation index has minimum cost 0.
    """

    kind: str
    map_bits: bool = True
    table: tuple | None = None

    @staticmethod
    def hamming() -> "MetricSpec":
        return MetricSpec("hamming")

    @staticmethod
    def euclidean(map_bits=True) -> "MetricSpec":
        return MetricSpec("euclidean", map_bits=map_bits)

    @staticmethod
    def nll(table) -> "MetricSpec":
        """Build a normalized nll_table spec from {symbol: cost-per-obs-index}."""
        symbols = list(table)
        if not symbols:
            raise BadParams("empty nll table")
        width = len(next(iter(table.values())))
        mat = np.empty((len(symbols), width), dtype=float)
        for i, sym in enumerate(symbols):
            row = np.asarray(table[sym], dtype=float)
            if row.shape != (width,):
                raise BadParams("nll table rows must share one length")
            mat[i] = row
        if not np.all(np.isfinite(mat)):
            raise BadParams("nll table costs must be finite")
        mat -= mat.min(axis=0)
        return MetricSpec(
            "nll_table",
            table=tuple((sym, tuple(mat[i])) for i, sym in enumerate(symbols)),
        )


def branch_metric(spec: MetricSpec, branch_output, observation):
    """Cost of one branch against one observation vector."""
    out = tuple(branch_output)
    obs = tuple(observation)
    if len(out) != len(obs):
        raise LengthMismatch(f"branch has {len(out)} outputs, observation {len(obs)}")
    if spec.kind == "hamming":
        return sum(a != b for a, b in zip(out, obs))
    if spec.kind == "euclidean":
        levels = [1 - 2 * b for b in out] if spec.map_bits else out
        return float(sum((o - l) ** 2 for o, l in zip(obs, levels)))
    if spec.kind == "nll_table":
        rows = dict(spec.table)
        total = 0.0
        for sym, o in zip(out, obs):
            if sym not in rows:
                raise TableMiss(f"symbol {sym!r} not in nll table")
            row = rows[sym]
            idx = int(o)
            if idx != o or not 0 <= idx < len(row):
                raise TableMiss(f"observation {o!r} outside table range")
            total += row[idx]
        return total
    raise BadParams(f"unknown metric kind {spec.kind!r}")


@dataclass(frozen=True)
class DecodeResult:
    """Decided inputs, their recomputed path cost, and the winning end state.

    `dp_cost` is the accumulated ACS metric (renormalization offsets added
    back); it equals final_cost exactly for integer metrics and up to float
    rounding otherwise.
    """

    inputs: tuple
    final_cost: float
    winner_end_state: int
    dp_cost: float = 0.0


class _Compiled:
    """Per-trellis arrays shared by the detectors, in two branch orders."""

    def __init__(self, trellis: Trellis):
        S = trellis.num_states
        alpha_index = {a: i for i, a in enumerate(trellis.input_alphabet)}
        order = sorted(
            range(len(trellis.branches)),
            key=lambda i: (trellis.branches[i].to_state,
                           trellis.branches[i].from_state,
                           alpha_index[trellis.branches[i].input]))
        br = [trellis.branches[i] for i in order]
        self.trellis = trellis
        self.S = S
        self.nb = len(br)
        self.n = trellis.outputs_per_branch
        self.alpha_index = alpha_index
        self.labels = tuple(b.input for b in br)
        self.input_idx = np.array([alpha_index[b.input] for b in br])
        self.from_state = np.array([b.from_state for b in br])
        self.to_state = np.array([b.to_state for b in br])
        self.outputs = np.array([b.output for b in br])
        counts = np.bincount(self.to_state, minlength=S)
        bounds = np.concatenate(([0], np.cumsum(counts)))
        self.seg_start = bounds[:-1]
        self.seg_empty = counts == 0
        self.red_idx = np.minimum(self.seg_start, self.nb - 1)
        self.indegree = int(counts[0]) if np.all(counts == counts[0]) else None
        self._srange = np.arange(S)
        self._brange = np.arange(self.nb)
        # outgoing view: permutation of the to-ordered rows grouped by
        # (from_state, input); every state has exactly |alphabet| branches out
        self.out_perm = np.lexsort((self.input_idx, self.from_state))
        self.out_to = self.to_state[self.out_perm]
        # trans[state, input_index] -> row in the to-ordered arrays
        self.trans = self.out_perm.reshape(S, len(trellis.input_alphabet))

    def acs(self, metrics, bm):
        """One add-compare-select step.

        Returns (new_metrics, winner_branch_per_state); winner is -1 for
        states with no incoming branch.
        """
        cand = metrics[self.from_state] + bm
        if self.indegree is not None:
            v = cand.reshape(self.S, self.indegree)
            arg = v.argmin(axis=1)
            new = v[self._srange, arg]
            win = self.seg_start + arg
        else:
            new = np.minimum.reduceat(cand, self.red_idx)
            inf = _INT_INF if cand.dtype.kind == "i" else np.inf
            new[self.seg_empty] = inf
            pos = np.where(cand == new[self.to_state], self._brange, self.nb)
            win = np.minimum.reduceat(pos, self.red_idx)
            win = np.where(self.seg_empty, -1, win)
        return new, win


@lru_cache(maxsize=512)
def _compiled(trellis: Trellis) -> _Compiled:
    return _Compiled(trellis)


class _MetricKernel:
    """Vectorized branch costs for one (trellis, spec) pair."""

    def __init__(self, comp: _Compiled, spec: MetricSpec):
        self.spec = spec
        self.int_metric = spec.kind == "hamming"
        if spec.kind == "hamming":
            self.ref = comp.outputs
        elif spec.kind == "euclidean":
            out = comp.outputs.astype(float)
            self.ref = 1.0 - 2.0 * out if spec.map_bits else out
        elif spec.kind == "nll_table":
            rows = dict(spec.table)
            self.width = len(next(iter(rows.values())))
            sym_index = {}
            mat = []
            for sym, costs in rows.items():
                sym_index[sym] = len(mat)
                mat.append(costs)
            self.mat = np.asarray(mat, dtype=float)
            try:
                self.ref = np.array(
                    [[sym_index[s] for s in row] for row in comp.outputs.tolist()])
            except KeyError as e:
                raise TableMiss(f"trellis output symbol {e.args[0]!r} not in nll table") from None
        else:
            raise BadParams(f"unknown metric kind {spec.kind!r}")

    def costs(self, obs):
        """(C, n) observations -> (C, nb) branch costs."""
        if self.spec.kind == "hamming":
            return (obs[:, None, :] != self.ref[None, :, :]).sum(axis=2)
        if self.spec.kind == "euclidean":
            d = obs[:, None, :] - self.ref[None, :, :]
            return np.einsum("tbn,tbn->tb", d, d)
        idx = obs.astype(np.int64)
        if not np.array_equal(idx, obs) or idx.min() < 0 or idx.max() >= self.width:
            raise TableMiss("observations must be integers inside the table range")
        return self.mat[self.ref[None, :, :], idx[:, None, :]].sum(axis=2)

    def costs_rows(self, rows, obs):
        """Branch costs for one chosen branch row per section."""
        if self.spec.kind == "hamming":
            return (obs != self.ref[rows]).sum(axis=1)
        if self.spec.kind == "euclidean":
            d = obs - self.ref[rows]
            return np.einsum("tn,tn->t", d, d)
        idx = obs.astype(np.int64)
        if not np.array_equal(idx, obs) or idx.min() < 0 or idx.max() >= self.width:
            raise TableMiss("observations must be integers inside the table range")
        return self.mat[self.ref[rows], idx].sum(axis=1)


def _prepare(trellis, observations, spec):
    comp = _compiled(trellis)
    obs = np.asarray(observations)
    if obs.ndim == 1 and comp.n == 1:
        obs = obs.reshape(-1, 1)
    if obs.ndim != 2 or obs.shape[1] != comp.n:
        raise LengthMismatch(
            f"observations must be (T, {comp.n}), got shape {obs.shape}")
    if obs.shape[0] == 0:
        raise EmptyInput("no observations")
    return comp, _MetricKernel(comp, spec), obs


def path_metric(trellis: Trellis, observations, spec: MetricSpec, inputs):
    """Total branch-metric cost along the path driven by `inputs`."""
    comp, kernel, obs = _prepare(trellis, observations, spec)
    if len(inputs) != obs.shape[0]:
        raise LengthMismatch("inputs and observations differ in length")
    rows = _path_rows(comp, inputs)
    total = kernel.costs_rows(rows, obs).sum()
    return int(total) if kernel.int_metric else float(total)


def _path_rows(comp, inputs):
    """Branch rows (to-order indices) visited by driving `inputs`."""
    aidx = comp.alpha_index
    trans = comp.trans.tolist()
    to = comp.to_state.tolist()
    rows = np.empty(len(inputs), dtype=np.int64)
    s = comp.trellis.initial_state
    for t, a in enumerate(inputs):
        r = trans[s][aidx[a]]
        rows[t] = r
        s = to[r]
    return rows


def _metric_state(comp, int_metric):
    if int_metric:
        metrics = np.full(comp.S, _INT_INF, dtype=np.int64)
    else:
        metrics = np.full(comp.S, np.inf)
    metrics[comp.trellis.initial_state] = 0
    return metrics


def _unreachable(value, dtype):
    if dtype.kind == "i":
        return value >= (_INT_INF >> np.int64(1))
    return np.isinf(value)


def _pick_end(comp, metrics, termination):
    if termination == "to_state_0":
        end = 0
    elif termination == "free_end":
        end = int(np.argmin(metrics))
    else:
        raise BadParams(f"unknown termination {termination!r}")
    if _unreachable(metrics[end], metrics.dtype):
        raise UnreachableState(f"state {end} unreachable after this many sections")
    return end


def _traceback(comp, winners, end):
    T = len(winners)
    inputs = [None] * T
    s = end
    for t in range(T - 1, -1, -1):
        b = int(winners[t][s])
        inputs[t] = comp.labels[b]
        s = int(comp.from_state[b])
    return tuple(inputs)


def viterbi_decode_block(trellis: Trellis, observations, spec: MetricSpec,
                         termination="free_end", *, renormalize=True,
                         section_hook=None) -> DecodeResult:
    """Minimum-cost path through |observations| trellis sections.

    termination "to_state_0" requires the path to end in state 0 (the caller
    must have appended tail inputs); "free_end" returns the best end state.
    `section_hook(t, metrics, winners)`, when given, sees a copy of the
    survivor metrics and winning-branch table after each section.
    """
    comp, kernel, obs = _prepare(trellis, observations, spec)
    T = obs.shape[0]
    metrics = _metric_state(comp, kernel.int_metric)
    win_dtype = np.int8 if comp.nb <= 127 else (np.int16 if comp.nb <= 32767 else np.int64)
    winners = np.empty((T, comp.S), dtype=win_dtype)
    offset = 0
    chunk = max(1, _CHUNK_ELEMS // max(comp.nb, 1))
    for t0 in range(0, T, chunk):
        bm = kernel.costs(obs[t0:t0 + chunk])
        for i in range(bm.shape[0]):
            metrics, win = comp.acs(metrics, bm[i])
            if renormalize:
                low = metrics.min()
                metrics -= low
                offset += low
            winners[t0 + i] = win
            if section_hook is not None:
                section_hook(t0 + i, metrics.copy(), win.copy())
    end = _pick_end(comp, metrics, termination)
    inputs = _traceback(comp, winners, end)
    dp = metrics[end] + offset
    final = path_metric(trellis, obs, spec, inputs)
    return DecodeResult(inputs, final, end,
                        dp_cost=int(dp) if kernel.int_metric else float(dp))


class StreamState:
    """Single-owner state of the forward-only truncated-traceback decoder."""

    def __init__(self):
        self.initialized = False
        self.flushed = False


def stream_init(trellis: Trellis, spec: MetricSpec, depth: int) -> StreamState:
    """Start a streaming decode that keeps a `depth`-section path history."""
    if depth < 1:
        raise BadParams("depth must be >= 1")
    st = StreamState()
    st.comp = _compiled(trellis)
    st.kernel = _MetricKernel(st.comp, spec)
    st.depth = depth
    st.metrics = _metric_state(st.comp, st.kernel.int_metric)
    st.history = []          # winner arrays of the last depth+1 sections
    st.count = 0
    st.emitted = 0
    st.initialized = True
    return st


def survivor_count(st: StreamState) -> int:
    """Number of survivors currently retained (always num_states)."""
    if not getattr(st, "initialized", False):
        raise NotInitialized("stream_init has not been called")
    return len(st.metrics)


def stream_push(st: StreamState, observation):
    """Feed one observation vector; returns a decided input label once the
    path history is full (the label `depth` sections back, taken from the
    survivor of the currently best state), else None."""
    if not isinstance(st, StreamState) or not getattr(st, "initialized", False):
        raise NotInitialized("stream_init has not been called")
    if st.flushed:
        raise PushAfterFlush("stream already flushed")
    comp = st.comp
    obs = np.asarray(observation).reshape(1, -1)
    if obs.shape[1] != comp.n:
        raise LengthMismatch(f"observation must have {comp.n} values")
    bm = st.kernel.costs(obs)[0]
    st.metrics, win = comp.acs(st.metrics, bm)
    st.metrics = st.metrics - st.metrics.min()
    st.history.append(win)
    if len(st.history) > st.depth + 1:
        del st.history[0]
    st.count += 1
    if st.count <= st.depth:
        return None
    s = int(np.argmin(st.metrics))
    for arr in reversed(st.history[1:]):
        s = int(comp.from_state[arr[s]])
    st.emitted += 1
    return comp.labels[int(st.history[0][s])]


def stream_flush(st: StreamState, to_state_0=False) -> list:
    """Trace back from the best state (state 0 if `to_state_0`) and return
    all not-yet-emitted labels; the stream cannot be pushed afterwards."""
    if not isinstance(st, StreamState) or not getattr(st, "initialized", False):
        raise NotInitialized("stream_init has not been called")
    if st.flushed:
        raise PushAfterFlush("stream already flushed")
    st.flushed = True
    pending = st.count - st.emitted
    if pending == 0:
        return []
    comp = st.comp
    end = 0 if to_state_0 else int(np.argmin(st.metrics))
    if to_state_0 and _unreachable(st.metrics[0], st.metrics.dtype):
        raise UnreachableState("state 0 unreachable at flush")
    out = []
    s = end
    for arr in reversed(st.history[-pending:]):
        b = int(arr[s])
        out.append(comp.labels[b])
        s = int(comp.from_state[b])
    out.reverse()
    return out
