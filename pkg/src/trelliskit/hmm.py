"""Discrete hidden Markov models: decoding, smoothing, segmental training.

All inference runs in the log domain with -inf standing for exact zeros; a
sequence no state path can explain raises ImpossibleObservation instead of
returning -inf results.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import (
    BadParams,
    ConfigError,
    EmptyInput,
    ImpossibleObservation,
    InvalidModel,
    InvalidSymbol,
)

_ROW_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class HmmModel:
    """Initial/transition/emission distributions over N states, M symbols."""

    initial: np.ndarray
    transition: np.ndarray
    emission: np.ndarray

    def __post_init__(self):
        initial = np.asarray(self.initial, dtype=float)
        transition = np.asarray(self.transition, dtype=float)
        emission = np.asarray(self.emission, dtype=float)
        n = initial.shape[0] if initial.ndim == 1 else 0
        if n < 1 or transition.shape != (n, n) or emission.ndim != 2 \
                or emission.shape[0] != n or emission.shape[1] < 1:
            raise InvalidModel("inconsistent parameter shapes")
        for name, arr in (("initial", initial[None, :]),
                          ("transition", transition), ("emission", emission)):
            if np.any(arr < 0):
                raise InvalidModel(f"{name} has negative entries")
            if np.any(np.abs(arr.sum(axis=1) - 1.0) > _ROW_TOL):
                raise InvalidModel(f"{name} rows must sum to 1 within {_ROW_TOL}")
        object.__setattr__(self, "initial", initial)
        object.__setattr__(self, "transition", transition)
        object.__setattr__(self, "emission", emission)
        with np.errstate(divide="ignore"):
            object.__setattr__(self, "log_initial", np.log(initial))
            object.__setattr__(self, "log_transition", np.log(transition))
            object.__setattr__(self, "log_emission", np.log(emission))

    @property
    def n_states(self):
        return self.initial.shape[0]

    @property
    def n_symbols(self):
        return self.emission.shape[1]


def _check_obs(model, obs):
    o = np.asarray(obs)
    if o.size == 0:
        raise EmptyInput("empty observation sequence")
    if o.ndim != 1 or o.dtype.kind not in "iu":
        o = np.asarray(obs, dtype=np.int64)
        if not np.array_equal(o, np.asarray(obs)):
            raise InvalidSymbol("observations must be integer symbols")
    if o.min() < 0 or o.max() >= model.n_symbols:
        raise InvalidSymbol(f"symbols must lie in [0, {model.n_symbols})")
    return o


def hmm_viterbi(model: HmmModel, obs):
    """Most probable state path and its log joint probability log P(path, obs).

    Ties break toward the lower state index at every step.
    """
    o = _check_obs(model, obs)
    T, N = o.size, model.n_states
    lA, lB = model.log_transition, model.log_emission
    delta = model.log_initial + lB[:, o[0]]
    back = np.empty((T, N), dtype=np.int64)
    for t in range(1, T):
        scores = delta[:, None] + lA
        prev = scores.argmax(axis=0)
        delta = scores[prev, np.arange(N)] + lB[:, o[t]]
        back[t] = prev
    if np.max(delta) == -np.inf:
        raise ImpossibleObservation("no state path has positive probability")
    path = np.empty(T, dtype=np.int64)
    path[T - 1] = int(np.argmax(delta))
    for t in range(T - 1, 0, -1):
        path[t - 1] = back[t][path[t]]
    return path, float(np.max(delta))


def hmm_forward_backward(model: HmmModel, obs):
    """Smoothing posteriors P(state_t | obs) and the total log-likelihood."""
    o = _check_obs(model, obs)
    T, N = o.size, model.n_states
    lA, lB = model.log_transition, model.log_emission
    la = np.empty((T, N))
    la[0] = model.log_initial + lB[:, o[0]]
    for t in range(1, T):
        la[t] = logsumexp(la[t - 1][:, None] + lA, axis=0) + lB[:, o[t]]
    loglik = float(logsumexp(la[T - 1]))
    if loglik == -np.inf:
        raise ImpossibleObservation("observation sequence has zero likelihood")
    lb = np.zeros((T, N))
    for t in range(T - 2, -1, -1):
        lb[t] = logsumexp(lA + (lB[:, o[t + 1]] + lb[t + 1])[None, :], axis=1)
    posteriors = np.exp(la + lb - loglik)
    return posteriors, loglik


def viterbi_training_step(model: HmmModel, dataset, smoothing=1e-3) -> HmmModel:
    """One segmental-EM step: decode every sequence with hmm_viterbi, then
    re-estimate all three distributions by add-delta smoothed counting
    along the decoded paths."""
    if smoothing <= 0:
        raise BadParams("smoothing must be > 0")
    seqs = list(dataset)
    if not seqs:
        raise BadParams("dataset must be nonempty")
    N, M = model.n_states, model.n_symbols
    init_c = np.zeros(N)
    trans_c = np.zeros((N, N))
    emis_c = np.zeros((N, M))
    for i, obs in enumerate(seqs):
        try:
            path, _ = hmm_viterbi(model, obs)
        except ImpossibleObservation as e:
            raise ImpossibleObservation(f"sequence {i}: {e}") from None
        o = np.asarray(obs, dtype=np.int64)
        init_c[path[0]] += 1
        np.add.at(trans_c, (path[:-1], path[1:]), 1)
        np.add.at(emis_c, (path, o), 1)
    init = init_c + smoothing
    trans = trans_c + smoothing
    emis = emis_c + smoothing
    return HmmModel(init / init.sum(),
                    trans / trans.sum(axis=1, keepdims=True),
                    emis / emis.sum(axis=1, keepdims=True))


def load_model(path) -> HmmModel:
    """Read the JSON model file: keys n_states, n_symbols, initial,
    transition, emission; probabilities are validated on load."""
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as e:
        raise ConfigError(str(e), path=path) from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"bad JSON: {e.msg}", path=path, line=e.lineno) from None
    try:
        model = HmmModel(np.asarray(data["initial"], dtype=float),
                         np.asarray(data["transition"], dtype=float),
                         np.asarray(data["emission"], dtype=float))
    except KeyError as e:
        raise ConfigError(f"missing key {e.args[0]!r}", path=path) from None
    except (InvalidModel, ValueError) as e:
        raise ConfigError(str(e), path=path) from None
    for key, value in (("n_states", model.n_states), ("n_symbols", model.n_symbols)):
        if key in data and data[key] != value:
            raise ConfigError(f"{key} is {data[key]} but matrices imply {value}",
                              path=path)
    return model


def save_model(model: HmmModel, path):
    with open(path, "w") as fh:
        json.dump(model_dict(model), fh, indent=1)
        fh.write("\n")


def model_dict(model: HmmModel) -> dict:
    return {
        "n_states": model.n_states,
        "n_symbols": model.n_symbols,
        "initial": model.initial.tolist(),
        "transition": model.transition.tolist(),
        "emission": model.emission.tolist(),
    }
