"""Deterministic seeded random streams.

Every stochastic component of the simulator (dithered decay, delay-class
selection, destination shuffles, stimulus sampling) draws from an
:class:`RngStream`.  The generator is a splitmix-style counter mixer: a
64-bit state advances by a fixed odd gamma and the output is a finalizing
hash of the state.  This gives cheap, fully reproducible streams that can
be derived hierarchically (master seed -> per-slot, per-step streams)
without any shared mutable state between workers.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
_MIX_A = 0xBF58476D1CE4E5B9
_MIX_B = 0x94D049BB133111EB

_GAMMA_U64 = np.uint64(GOLDEN_GAMMA)


def mix64(z: int) -> int:
    """Finalizing hash of a 64-bit value (scalar path)."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _MIX_A) & MASK64
    z = ((z ^ (z >> 27)) * _MIX_B) & MASK64
    return z ^ (z >> 31)


def mix64_array(z: np.ndarray) -> np.ndarray:
    """Finalizing hash applied elementwise to a uint64 array."""
    z = z.astype(np.uint64, copy=True)
    z ^= z >> np.uint64(30)
    z *= np.uint64(_MIX_A)
    z ^= z >> np.uint64(27)
    z *= np.uint64(_MIX_B)
    z ^= z >> np.uint64(31)
    return z


def derive_seed(seed: int, *keys: int) -> int:
    """Derive a child seed from a parent seed and a key path.

    The fold is order-sensitive: derive_seed(s, a, b) != derive_seed(s, b, a).
    """
    s = seed & MASK64
    for k in keys:
        s = mix64((s + GOLDEN_GAMMA) ^ mix64(k + GOLDEN_GAMMA))
    return s


def derive_seed_array(seed: int, keys: np.ndarray) -> np.ndarray:
    """Vectorized single-level derive: one child seed per entry of ``keys``."""
    mixed = mix64_array(keys.astype(np.uint64) + _GAMMA_U64)
    base = np.uint64((seed + GOLDEN_GAMMA) & MASK64)
    return mix64_array(base ^ mixed)


def dither_matrix(seeds: np.ndarray, n_draws: int, width: int) -> np.ndarray:
    """Batch of draws: row i holds the first ``n_draws`` ``width``-bit draws
    of ``RngStream(seeds[i])``.  Used by the vectorized neuron kernel; must
    stay bit-identical to the scalar draw sequence."""
    counters = seeds.astype(np.uint64)[:, None] + _GAMMA_U64 * np.arange(
        1, n_draws + 1, dtype=np.uint64
    )
    return (mix64_array(counters) >> np.uint64(64 - width)).astype(np.int64)


LANES_PER_WORD = 12  # 5-bit dither lanes carved out of one 64-bit draw


def dither_block(seeds: np.ndarray, n_draws: int) -> np.ndarray:
    """Packed 5-bit dithers: draw j of row i is bits [5*(j%12), 5*(j%12)+5)
    of the stream's (j//12)-th 64-bit word.  One mix per twelve dithers
    keeps the batch path cheap; ``RngStream.dither_run`` is the scalar
    equivalent."""
    n_words = -(-n_draws // LANES_PER_WORD)
    counters = seeds.astype(np.uint64)[:, None] + _GAMMA_U64 * np.arange(
        1, n_words + 1, dtype=np.uint64
    )
    words = mix64_array(counters)
    out = np.empty((len(seeds), n_words * LANES_PER_WORD), dtype=np.int16)
    mask = np.uint64(31)
    for lane in range(LANES_PER_WORD):
        out[:, lane::LANES_PER_WORD] = ((words >> np.uint64(5 * lane)) & mask).astype(
            np.int16
        )
    return out[:, :n_draws]


class RngStream:
    """Single-owner stream of uniform fixed-width draws.

    Equal seeds yield equal sequences.  ``draw(width)`` returns the top
    ``width`` bits of the next mixed counter value, uniform over
    ``[0, 2**width)``.
    """

    __slots__ = ("seed", "_count")

    def __init__(self, seed: int):
        self.seed = seed & MASK64
        self._count = 0

    def draw(self, width: int) -> int:
        self._count += 1
        state = (self.seed + GOLDEN_GAMMA * self._count) & MASK64
        return mix64(state) >> (64 - width)

    def draw_array(self, width: int, n: int) -> np.ndarray:
        """Next ``n`` draws as an int64 array (same values ``draw`` would give)."""
        counters = np.uint64(self.seed) + _GAMMA_U64 * np.arange(
            self._count + 1, self._count + n + 1, dtype=np.uint64
        )
        self._count += n
        return (mix64_array(counters) >> np.uint64(64 - width)).astype(np.int64)

    def uniform(self) -> float:
        """Float in [0, 1) with 53-bit resolution."""
        return self.draw(53) / float(1 << 53)

    def dither_run(self, n_draws: int) -> np.ndarray:
        """Packed 5-bit dithers, identical to one row of ``dither_block``."""
        n_words = -(-n_draws // LANES_PER_WORD)
        out = np.empty(n_words * LANES_PER_WORD, dtype=np.int16)
        for w in range(n_words):
            word = self.draw(64)
            for lane in range(LANES_PER_WORD):
                out[w * LANES_PER_WORD + lane] = (word >> (5 * lane)) & 31
        return out[:n_draws]

    def derive(self, *keys: int) -> "RngStream":
        """Child stream; does not advance this stream."""
        return RngStream(derive_seed(self.seed, *keys))
