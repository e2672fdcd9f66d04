"""Binary rate-1/n feed-forward convolutional codes.

Generator convention: each generator is an octal-coded binary polynomial of
width at most m+1 bits; the most significant octal digit carries the newest
taps, so bit (m-j) of the parsed integer is the tap on input u_{t-j}.  With
memory m=2, octal 7 = 111 taps all of (u_t, u_{t-1}, u_{t-2}) and octal
5 = 101 taps u_t and u_{t-2}.

Encoder state is the last m input bits with the most recent bit in the
low-order position: state bit k holds u_{t-1-k}.
"""

from __future__ import annotations

import configparser
import warnings
from dataclasses import dataclass

from .errors import ConfigError, DepthTooSmall, InvalidBit, InvalidTrellis
from .trellis import Branch, Trellis


class CatastrophicCodeWarning(UserWarning):
    """All generators share a nontrivial common polynomial factor."""


@dataclass(frozen=True)
class ConvCode:
    """Feed-forward convolutional code, one input bit per step (rate 1/n)."""

    memory: int
    generators: tuple[int, ...]

    def __post_init__(self):
        if self.memory < 0:
            raise InvalidTrellis("memory must be >= 0")
        if len(self.generators) < 1:
            raise InvalidTrellis("need at least one generator")
        width = self.memory + 1
        for g in self.generators:
            if g < 0 or g.bit_length() > width:
                raise InvalidTrellis(
                    f"generator {g:o} (octal) wider than constraint length {width}")
        if not any(g >> self.memory for g in self.generators):
            raise InvalidTrellis("no generator taps the current input bit")
        nonzero = [g for g in self.generators if g]
        if nonzero and _poly_gcd_all(nonzero) != 1:
            warnings.warn(
                f"generators {tuple(oct(g) for g in self.generators)} share a "
                "common factor; the code is catastrophic",
                CatastrophicCodeWarning, stacklevel=2)

    @property
    def n(self):
        """Output bits per input bit."""
        return len(self.generators)

    @property
    def constraint_length(self):
        return self.memory + 1

    @property
    def num_states(self):
        return 1 << self.memory


def _poly_gcd(a: int, b: int) -> int:
    # GF(2)[D] Euclid on bit-packed polynomials
    while b:
        while a.bit_length() >= b.bit_length():
            a ^= b << (a.bit_length() - b.bit_length())
        a, b = b, a
    return a


def _poly_gcd_all(polys):
    g = 0
    for p in polys:
        g = p if g == 0 else _poly_gcd(g, p)
    return g


# State counts follow the systems these codes model: 16-state rate-1/2,
# 256-state rate-1/3, 64-state rate-1/2.  Generator values are the common
# industry choices for those sizes.
PRESETS = {
    "gsm": ConvCode(4, (0o23, 0o33)),
    "is95": ConvCode(8, (0o557, 0o663, 0o711)),
    "nasa": ConvCode(6, (0o133, 0o171)),
}


def encode(code: ConvCode, info, termination="zero_tail") -> list[int]:
    """Encode an information bit sequence.

    zero_tail appends `memory` zero input bits so the encoder ends in state 0;
    none emits exactly n*len(info) bits.  Output bit j of each step is the
    parity of generator j ANDed with the input window (u_t, ..., u_{t-m}).
    """
    if termination not in ("zero_tail", "none"):
        raise ValueError(f"unknown termination {termination!r}")
    bits = list(info)
    for u in bits:
        if u not in (0, 1):
            raise InvalidBit(f"info bit {u!r} not 0/1")
    if termination == "zero_tail":
        bits = bits + [0] * code.memory
    m = code.memory
    out = []
    w = 0
    for u in bits:
        w = (w >> 1) | (u << m)
        for g in code.generators:
            out.append((g & w).bit_count() & 1)
    return out


def code_trellis(code: ConvCode) -> Trellis:
    """Trellis with 2**memory states whose branch labels reproduce encode()."""
    m = code.memory
    mask = (1 << m) - 1
    # Split each generator into its current-input tap and a mask over state
    # bits (state bit i-1 holds u_{t-i}).
    cur = [(g >> m) & 1 for g in code.generators]
    state_masks = []
    for g in code.generators:
        sm = 0
        for i in range(1, m + 1):
            if (g >> (m - i)) & 1:
                sm |= 1 << (i - 1)
        state_masks.append(sm)
    branches = []
    for s in range(1 << m):
        for u in (0, 1):
            out = tuple(
                ((c & u) ^ ((sm & s).bit_count() & 1))
                for c, sm in zip(cur, state_masks))
            branches.append(Branch(s, u, out, ((s << 1) | u) & mask))
    return Trellis(
        num_states=1 << m,
        input_alphabet=(0, 1),
        branches=tuple(branches),
        outputs_per_branch=code.n,
        initial_state=0,
    )


def free_distance(code: ConvCode, search_depth: int) -> int:
    """Minimum Hamming weight over nonzero paths that leave state 0 and
    return to it within `search_depth` steps.

    The first branch is forced to input 1; a forward DP then tracks the
    cheapest weight into every state.  If the minimum is first achieved only
    at the depth boundary the value is a lower-confidence estimate; increase
    search_depth to confirm it.
    """
    if search_depth < 3 * (code.memory + 1):
        raise DepthTooSmall(
            f"search_depth {search_depth} < 3*(m+1) = {3 * (code.memory + 1)}")
    trellis = code_trellis(code)
    step = {(b.from_state, b.input): b for b in trellis.branches}
    inf = float("inf")

    first = step[0, 1]
    dist = [inf] * trellis.num_states
    dist[first.to_state] = sum(first.output)
    best = dist[0]
    for _ in range(search_depth - 1):
        nxt = [inf] * trellis.num_states
        for s, d in enumerate(dist):
            if d == inf:
                continue
            for u in (0, 1):
                b = step[s, u]
                w = d + sum(b.output)
                if w < nxt[b.to_state]:
                    nxt[b.to_state] = w
        dist = nxt
        if dist[0] < best:
            best = dist[0]
    return int(best)


def preset(name: str) -> ConvCode:
    try:
        return PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


def code_from_config(path) -> ConvCode:
    """Load a ConvCode from an INI file with a [code] section.

    Keys: either `preset`, or `memory`, `n` and comma-separated
    `generators_octal`.  Errors name the offending file line.
    """
    parser = configparser.ConfigParser()
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except OSError as e:
        raise ConfigError(str(e), path=path) from None
    except configparser.Error as e:
        line = getattr(e, "lineno", None)
        if line is None and getattr(e, "errors", None):
            line = e.errors[0][0]
        raise ConfigError(str(e.message if hasattr(e, "message") else e),
                          path=path, line=line) from None
    if not parser.has_section("code"):
        raise ConfigError("missing [code] section", path=path)
    sec = parser["code"]
    if "preset" in sec:
        extra = set(sec) - {"preset"}
        if extra:
            raise ConfigError(f"preset conflicts with keys {sorted(extra)}",
                              path=path, line=_line_of(path, "preset"))
        name = sec["preset"].strip()
        if name not in PRESETS:
            raise ConfigError(f"unknown preset {name!r}", path=path,
                              line=_line_of(path, "preset"))
        return PRESETS[name]
    for key in ("memory", "n", "generators_octal"):
        if key not in sec:
            raise ConfigError(f"missing key {key!r} in [code]", path=path)
    try:
        memory = int(sec["memory"])
    except ValueError:
        raise ConfigError(f"bad integer for memory: {sec['memory']!r}",
                          path=path, line=_line_of(path, "memory")) from None
    try:
        n = int(sec["n"])
    except ValueError:
        raise ConfigError(f"bad integer for n: {sec['n']!r}",
                          path=path, line=_line_of(path, "n")) from None
    gens = []
    for tok in sec["generators_octal"].split(","):
        tok = tok.strip()
        try:
            gens.append(int(tok, 8))
        except ValueError:
            raise ConfigError(f"bad octal generator {tok!r}", path=path,
                              line=_line_of(path, "generators_octal")) from None
    if len(gens) != n:
        raise ConfigError(f"n={n} but {len(gens)} generators given", path=path,
                          line=_line_of(path, "generators_octal"))
    try:
        return ConvCode(memory, tuple(gens))
    except InvalidTrellis as e:
        raise ConfigError(str(e), path=path,
                          line=_line_of(path, "generators_octal")) from None


def _line_of(path, key):
    # configparser does not track key line numbers; scan the raw text.
    try:
        with open(path) as fh:
            for i, line in enumerate(fh, start=1):
                if line.split("=")[0].split(":")[0].strip() == key:
                    return i
    except OSError:
        pass
    return None
