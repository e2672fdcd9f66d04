"""Two-pass relatives of the Viterbi decoder on the same Trellis model.

bcjr computes exact per-section symbol and state posteriors (sum-product on
the trellis, log domain throughout).  min_sum is the backward-forward
counterpart that reproduces the Viterbi result.  sova runs the normal
forward recursion and attaches a reliability to each decision: the smallest
metric gap to a discarded competitor that disagrees there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import (
    BadParams,
    EmptyInput,
    NonpositiveLikelihood,
    UnreachableState,
)
from .trellis import Trellis
from .viterbi import (
    _INT_INF,
    DecodeResult,
    MetricSpec,
    _compiled,
    _metric_state,
    _pick_end,
    _prepare,
    _traceback,
    _unreachable,
    path_metric,
)

_LOG_FLOOR = -300.0


@dataclass(frozen=True)
class PosteriorTable:
    """Exact posteriors from one BCJR pass.

    input_posteriors[t, a]: probability that section t carried input label
    `input_alphabet[a]`.  state_posteriors[t, s]: probability of being in
    state s after consuming section t.  Rows sum to 1.
    """

    input_alphabet: tuple
    input_posteriors: np.ndarray
    state_posteriors: np.ndarray
    log_likelihood: float


@dataclass(frozen=True)
class SoftDecision:
    decisions: tuple
    reliabilities: np.ndarray


def gaussian_likelihood(noise_variance, map_bits=True):
    """Symbol likelihood for AWGN observations of branch outputs.

    Returns likelihood(observation_vector, branch_output) = product of
    Gaussian densities, with bit outputs mapped to levels 1-2b when
    map_bits is set.  Lets bcjr run on the same data as the euclidean
    MetricSpec decoders.
    """
    if noise_variance <= 0:
        raise BadParams("noise variance must be positive")
    norm = 1.0 / math.sqrt(2 * math.pi * noise_variance)

    def like(obs, output):
        total = 1.0
        for o, sym in zip(np.atleast_1d(obs), output):
            level = 1 - 2 * sym if map_bits else sym
            total *= norm * math.exp(-((o - level) ** 2) / (2 * noise_variance))
        return total

    return like


def _log_gamma(comp, observations, likelihood, priors, floor):
    T = len(observations)
    if T == 0:
        raise EmptyInput("no observations")
    if priors is None:
        lp = np.full((T, len(comp.trellis.input_alphabet)),
                     -math.log(len(comp.trellis.input_alphabet)))
    else:
        pr = np.asarray(priors, dtype=float)
        if pr.shape != (T, len(comp.trellis.input_alphabet)):
            raise BadParams(f"priors must have shape ({T}, {len(comp.trellis.input_alphabet)})")
        if np.any(pr < 0) or np.any(np.abs(pr.sum(axis=1) - 1.0) > 1e-9):
            raise BadParams("priors must be distributions per section")
        with np.errstate(divide="ignore"):
            lp = np.log(pr)
    lgam = np.empty((T, comp.nb))
    outs = [tuple(row) for row in comp.outputs.tolist()]
    floor_value = math.exp(_LOG_FLOOR)
    for t in range(T):
        obs = observations[t]
        for k, out in enumerate(outs):
            ll = likelihood(obs, out)
            if ll < 0 or (ll <= 0 and not floor):
                raise NonpositiveLikelihood(
                    f"likelihood {ll!r} at section {t} for output {out!r}")
            lgam[t, k] = math.log(max(ll, floor_value)) + lp[t, comp.input_idx[k]]
    return lgam


def _lse_by_to(comp, vals):
    if comp.indegree is not None:
        return logsumexp(vals.reshape(comp.S, comp.indegree), axis=1)
    out = np.full(comp.S, -np.inf)
    bounds = np.append(comp.seg_start, comp.nb)
    for s in range(comp.S):
        seg = vals[bounds[s]:bounds[s + 1]]
        if seg.size:
            out[s] = logsumexp(seg)
    return out


def bcjr(trellis: Trellis, observations, likelihood, priors=None, *,
         floor=True) -> PosteriorTable:
    """Exact smoothing posteriors for the trellis-defined Markov model.

    `likelihood(observation, branch_output)` must be strictly positive;
    values below e^-300 are floored unless floor=False, in which case a
    nonpositive value raises NonpositiveLikelihood.  `priors` are
    per-section input distributions (uniform when omitted).  The end state
    is unconstrained.
    """
    comp = _compiled(trellis)
    lgam = _log_gamma(comp, observations, likelihood, priors, floor)
    T = lgam.shape[0]
    q = len(trellis.input_alphabet)

    lalpha = np.full((T + 1, comp.S), -np.inf)
    lalpha[0, trellis.initial_state] = 0.0
    for t in range(T):
        lalpha[t + 1] = _lse_by_to(comp, lalpha[t][comp.from_state] + lgam[t])

    lbeta = np.zeros((T + 1, comp.S))
    for t in range(T - 1, -1, -1):
        vals = lgam[t][comp.out_perm] + lbeta[t + 1][comp.out_to]
        lbeta[t] = logsumexp(vals.reshape(comp.S, q), axis=1)

    log_likelihood = float(logsumexp(lalpha[T]))

    label_rows = [np.flatnonzero(comp.input_idx == a) for a in range(q)]
    input_post = np.empty((T, q))
    state_post = np.empty((T, comp.S))
    for t in range(T):
        w = lalpha[t][comp.from_state] + lgam[t] + lbeta[t + 1][comp.to_state]
        per_label = np.array([logsumexp(w[rows]) for rows in label_rows])
        input_post[t] = np.exp(per_label - logsumexp(per_label))
        sp = lalpha[t + 1] + lbeta[t + 1]
        state_post[t] = np.exp(sp - logsumexp(sp))
    return PosteriorTable(trellis.input_alphabet, input_post, state_post,
                          log_likelihood)


def min_sum(trellis: Trellis, observations, spec: MetricSpec,
            termination="free_end") -> DecodeResult:
    """Backward-forward min-sum sweep; result-identical to the Viterbi
    decoder (same tie-break family: earlier alphabet input wins on ties
    along the forward walk)."""
    comp, kernel, obs = _prepare(trellis, observations, spec)
    T = obs.shape[0]
    bm = kernel.costs(obs)
    q = len(trellis.input_alphabet)

    if termination == "free_end":
        beta = np.zeros(comp.S, dtype=bm.dtype)
    elif termination == "to_state_0":
        beta = np.full(comp.S, _INT_INF, dtype=np.int64) if kernel.int_metric \
            else np.full(comp.S, np.inf)
        beta[0] = 0
    else:
        raise BadParams(f"unknown termination {termination!r}")

    cost_to_go = np.empty((T + 1, comp.S), dtype=beta.dtype)
    cost_to_go[T] = beta
    for t in range(T - 1, -1, -1):
        vals = bm[t][comp.out_perm] + cost_to_go[t + 1][comp.out_to]
        cost_to_go[t] = vals.reshape(comp.S, q).min(axis=1)

    start = trellis.initial_state
    if _unreachable(cost_to_go[0][start], cost_to_go.dtype):
        raise UnreachableState("requested end state unreachable")

    inputs = []
    s = start
    for t in range(T):
        rows = comp.trans[s]
        vals = bm[t][rows] + cost_to_go[t + 1][comp.to_state[rows]]
        r = int(rows[int(np.argmin(vals))])
        inputs.append(comp.labels[r])
        s = int(comp.to_state[r])
    dp = cost_to_go[0][start]
    final = path_metric(trellis, obs, spec, inputs)
    return DecodeResult(tuple(inputs), final, s,
                        dp_cost=int(dp) if kernel.int_metric else float(dp))


def sova(trellis: Trellis, observations, spec: MetricSpec,
         window=None) -> SoftDecision:
    """Soft-output Viterbi: hard decisions plus per-section reliabilities.

    Reliability at section t is the smallest survivor-vs-competitor metric
    difference among path merges within `window` sections of t whose
    competitor disagrees at t.  Sections never contradicted inside the
    window get a finite cap: the largest observed difference plus 1.
    """
    comp, kernel, obs = _prepare(trellis, observations, spec)
    T = obs.shape[0]
    if window is None:
        window = T
    if window < 1:
        raise BadParams("window must be >= 1")
    bm = kernel.costs(obs)

    metrics = _metric_state(comp, kernel.int_metric)
    winners = np.empty((T, comp.S), dtype=np.int64)
    cand = np.empty_like(bm)
    for t in range(T):
        cand[t] = metrics[comp.from_state] + bm[t]
        metrics, win = comp.acs(metrics, bm[t])
        low = metrics.min()
        metrics = metrics - low
        winners[t] = win

    end = _pick_end(comp, metrics, "free_end")
    decisions = _traceback(comp, winners, end)

    # states along the winning path: path_state[t] = state after section t
    path_state = np.empty(T + 1, dtype=np.int64)
    path_state[T] = end
    for t in range(T - 1, -1, -1):
        path_state[t] = comp.from_state[winners[t][path_state[t + 1]]]

    bounds = np.append(comp.seg_start, comp.nb)
    rel = np.full(T, np.inf)
    max_delta = 0.0
    for t in range(T):
        s = path_state[t + 1]
        win_row = winners[t][s]
        for r in range(bounds[s], bounds[s + 1]):
            if r == win_row:
                continue
            if _unreachable(cand[t][r], cand.dtype):
                continue
            delta = float(cand[t][r] - cand[t][win_row])
            max_delta = max(max_delta, delta)
            if comp.labels[r] != decisions[t] and delta < rel[t]:
                rel[t] = delta
            cs = int(comp.from_state[r])
            for j in range(t - 1, max(t - window, 0) - 1, -1):
                rb = winners[j][cs]
                if rb < 0:
                    break
                if comp.labels[rb] != decisions[j] and delta < rel[j]:
                    rel[j] = delta
                cs = int(comp.from_state[rb])
    rel[np.isinf(rel)] = max_delta + 1.0
    return SoftDecision(decisions, rel)
