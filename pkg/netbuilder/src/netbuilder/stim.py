"""Engine-compatible stimulus streams.

Reimplements the engine's documented stimulus contract so generated
files match the reference generator byte for byte: splitmix-style
derived streams, 53-bit uniforms, Knuth Poisson sampling.
"""

from __future__ import annotations

import math

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
STIM_STREAM_TAG = 0x7


def mix64(z: int) -> int:
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, *keys: int) -> int:
    s = seed & MASK64
    for k in keys:
        s = mix64((s + GOLDEN_GAMMA) ^ mix64(k + GOLDEN_GAMMA))
    return s


class Stream:
    """Counter stream; draw(width) is the top bits of the mixed counter."""

    __slots__ = ("seed", "_count")

    def __init__(self, seed: int):
        self.seed = seed & MASK64
        self._count = 0

    def draw(self, width: int) -> int:
        self._count += 1
        return mix64((self.seed + GOLDEN_GAMMA * self._count) & MASK64) >> (64 - width)

    def uniform(self) -> float:
        return self.draw(53) / float(1 << 53)


def poisson(stream: Stream, lam: float) -> int:
    limit = math.exp(-lam)
    k, p = 0, 1.0
    while True:
        p *= stream.uniform()
        if p <= limit:
            return k
        k += 1


def sweep_stimulus(
    channels: int,
    hypercolumns: int,
    seed: int,
    source_addr,
    sweep_ms: int = 10,
    repeats: int = 10,
    rate_hz: float = 1000.0,
    sources_per_channel: int = 10,
) -> list[tuple[int, int, tuple[int, ...]]]:
    """The swept-tone stimulus: each channel's sources fire Poisson counts
    at ``rate_hz`` during the channel's window of every sweep.

    ``source_addr(channel, k)`` maps a source to its packed address.
    """
    lam = rate_hz / 1000.0
    events = []
    for c in range(channels):
        for k in range(sources_per_channel):
            stream = Stream(derive_seed(seed, STIM_STREAM_TAG, c, k))
            addr = source_addr(c, k)
            for rep in range(repeats):
                t0 = (rep * channels + c) * sweep_ms
                for dt in range(sweep_ms):
                    n = poisson(stream, lam)
                    if n:
                        events.append((t0 + dt, addr, (min(n, 15), 0, 0, 0, 0, 0, 0, 0)))
    events.sort(key=lambda e: (e[0], e[1]))
    return events
