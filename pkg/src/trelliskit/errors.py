"""Exception types raised across the toolkit."""


class TrellisKitError(Exception):
    """Base class for all toolkit errors."""


# -- trellis construction / enumeration --

class MissingBranch(TrellisKitError):
    """A (state, input) pair has no branch."""


class DuplicateBranch(TrellisKitError):
    """A (state, input) pair has more than one branch."""


class IndexOutOfRange(TrellisKitError):
    """A state index lies outside [0, num_states)."""


class InvalidTrellis(TrellisKitError):
    """Structural problem not covered by a more specific error."""


class TooLarge(TrellisKitError):
    """Path enumeration would exceed the safety guard."""


# -- convolutional codes --

class InvalidBit(TrellisKitError):
    """Information sequence contains something other than 0/1."""


class DepthTooSmall(TrellisKitError):
    """Free-distance search depth below the required minimum."""


# -- detectors --

class LengthMismatch(TrellisKitError):
    """Observation vector length disagrees with outputs_per_branch."""


class EmptyInput(TrellisKitError):
    """No observations supplied."""


class TableMiss(TrellisKitError):
    """nll_table lookup failed for a (symbol, observation) pair."""


class UnreachableState(TrellisKitError):
    """Requested end state cannot be reached by any path."""


class NotInitialized(TrellisKitError):
    """Streaming decoder used before stream_init."""


class PushAfterFlush(TrellisKitError):
    """Streaming decoder pushed after stream_flush."""


class NonpositiveLikelihood(TrellisKitError):
    """A likelihood evaluated to <= 0 with flooring disabled."""


# -- ISI channels --

class InvalidLevel(TrellisKitError):
    """Symbol outside the channel input alphabet."""


class TooManyStates(TrellisKitError):
    """ISI trellis would exceed the state-count guard."""


# -- HMMs --

class InvalidSymbol(TrellisKitError):
    """Observation symbol outside [0, num_symbols)."""


class InvalidModel(TrellisKitError):
    """HMM parameter matrices fail validation."""


class ImpossibleObservation(TrellisKitError):
    """Every path has probability zero under the model."""


# -- simulation --

class BadRate(TrellisKitError):
    """Code rate must be positive (and at most 1 for Eb/N0 accounting)."""


class BadParams(TrellisKitError):
    """Invalid quantizer or sweep parameters."""


class TargetNotBracketed(TrellisKitError):
    """BER target outside the range covered by a report."""


# -- config files --

class ConfigError(TrellisKitError):
    """Problem in a config file; message names file and line when known."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}:" if line is None else f"{path}:{line}:"
            where += " "
        super().__init__(where + message)
