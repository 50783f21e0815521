"""The deletion channel with counter-based, reproducible randomness.

Every random bit is a pure function of (seed, draw_index, position), so
batches are bit-identical regardless of call order or how a batch might
be partitioned across workers.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .model import DomainError, Population, check_bits

_MASK = (1 << 64) - 1
_TWO64 = 1 << 64
# position tag for the "which support string" draw, beyond any bit index
_STRING_DRAW_TAG = 1 << 40


def _splitmix(z: int) -> int:
    z = (z + 0x9E3779B97F4A7C15) & _MASK
    z ^= z >> 30
    z = (z * 0xBF58476D1CE4E5B9) & _MASK
    z ^= z >> 27
    z = (z * 0x94D049BB133111EB) & _MASK
    z ^= z >> 31
    return z


def counter_rand64(seed: int, draw_index: int, position: int) -> int:
    """Uniform 64-bit value, a pure function of its three arguments."""
    return _splitmix(seed ^ _splitmix(draw_index ^ _splitmix(position)))


@dataclass(frozen=True)
class ChannelParams:
    """Deletion probability and seed.

    ``delta`` may be a float or anything Fraction accepts; the exact
    rational value actually used by the sampler is kept in
    ``delta_exact`` so analytic modules can match it bit-for-bit.
    """

    delta: object
    seed: int
    delta_exact: Fraction = None

    def __post_init__(self):
        object.__setattr__(self, "delta_exact", Fraction(self.delta))
        if not 0 <= self.delta_exact <= 1:
            raise DomainError("delta must lie in [0, 1]")
        if not 0 <= self.seed < _TWO64:
            raise DomainError("seed must be an unsigned 64-bit integer")


@dataclass(frozen=True)
class TraceBatch:
    n: int
    params: ChannelParams
    traces: tuple  # tuple of str

    def __post_init__(self):
        if any(len(t) > self.n for t in self.traces):
            raise DomainError("trace longer than source length n")


def apply_deletion(x: str, params: ChannelParams, draw_index: int) -> str:
    """Delete each bit of x independently with probability delta.

    Bit i survives iff counter_rand64(seed, draw_index, i)/2^64 >= delta,
    an exact-rational comparison.
    """
    check_bits(x)
    delta = params.delta_exact
    kept = [
        ch
        for i, ch in enumerate(x)
        if counter_rand64(params.seed, draw_index, i) * delta.denominator >= delta.numerator * _TWO64
    ]
    return "".join(kept)


def _pick_string(X: Population, params: ChannelParams, draw_index: int) -> str:
    u = Fraction(counter_rand64(params.seed, draw_index, _STRING_DRAW_TAG), _TWO64)
    acc = Fraction(0)
    for s, w in X.support:
        acc += w
        if u < acc:
            return s
    return X.support[-1][0]


def sample_traces(X: Population, params: ChannelParams, count: int) -> TraceBatch:
    """Draw ``count`` i.i.d. traces: pick a support string, then delete bits."""
    if count < 0:
        raise DomainError("count must be nonnegative")
    traces = tuple(
        apply_deletion(_pick_string(X, params, j), params, j) for j in range(count)
    )
    return TraceBatch(n=X.n, params=params, traces=traces)


def write_traces(path, batch: TraceBatch) -> None:
    delta_text = repr(float(batch.params.delta_exact))
    with open(path, "w") as fh:
        fh.write(
            f"#deckrec-traces n={batch.n} delta={delta_text} "
            f"seed={batch.params.seed} count={len(batch.traces)}\n"
        )
        for t in batch.traces:
            fh.write(t + "\n")


def read_traces(path) -> TraceBatch:
    with open(path) as fh:
        header = fh.readline().rstrip("\n")
        if not header.startswith("#deckrec-traces "):
            raise DomainError(f"bad trace file header: {header!r}")
        fields = dict(kv.split("=", 1) for kv in header.split()[1:])
        n = int(fields["n"])
        seed = int(fields["seed"])
        count = int(fields["count"])
        params = ChannelParams(delta=float(fields["delta"]), seed=seed)
        traces = []
        for _ in range(count):
            line = fh.readline()
            if line == "":
                raise DomainError("trace file truncated")
            traces.append(check_bits(line.rstrip("\n")))
    return TraceBatch(n=n, params=params, traces=tuple(traces))
