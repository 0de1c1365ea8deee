"""Fixed-point codes, address arithmetic and the stochastic decay primitive.

All neuron state is held in signed 4-bit two's-complement codes
(``value = code / 8``, range [-1.0, +0.875]).  Gains are unsigned 8-bit
codes with ``value = code / 16`` and per-step leakage is an 8-bit rate L
with decay factor ``L / 256`` per 1 ms step.  Exponential decay is
realized by truncating the product ``code * L`` to its top byte after a
5-bit dither has been added to the discarded low byte, which makes the
truncation unbiased to within 1/32 of a code.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

CODE4_MIN = -8
CODE4_MAX = 7
CODE4_SCALE = 8  # value represented by a code: code / 8

GAIN_MIN = 1
GAIN_MAX = 255
GAIN_SCALE = 16  # gain represented by a code: code / 16

LEAK_MAX = 255
TAU_MAX_MS = 30.0

HYPER_BITS = 20
MINI_BITS = 7
ADDR_BITS = HYPER_BITS + MINI_BITS
HYPER_MASK = (1 << HYPER_BITS) - 1
MINI_MASK = (1 << MINI_BITS) - 1
ADDR_MASK = (1 << ADDR_BITS) - 1

COUNT4_MAX = 15


def clamp_code4(v: int) -> int:
    if v < CODE4_MIN:
        return CODE4_MIN
    if v > CODE4_MAX:
        return CODE4_MAX
    return v


def code4_from_value(x: float) -> int:
    """Nearest 4-bit code for a real value in [-1, 7/8]."""
    return clamp_code4(math.floor(x * CODE4_SCALE + 0.5))


def gain_code(g: float) -> int:
    """8-bit gain code for a real gain; representable range [1/16, 255/16]."""
    code = math.floor(g * GAIN_SCALE + 0.5)
    if code < GAIN_MIN:
        code = GAIN_MIN
    if code > GAIN_MAX:
        code = GAIN_MAX
    return code


def leak_code(tau_ms: float) -> int:
    """Leakage rate L with L/256 ~= tau/(tau+1), round-half-up, capped at 255.

    The truncation scheme supports time constants up to 30 ms.
    """
    if not tau_ms > 0 or tau_ms > TAU_MAX_MS:
        raise ValueError(f"time constant must be in (0, {TAU_MAX_MS}] ms, got {tau_ms}")
    code = math.floor(256.0 * tau_ms / (tau_ms + 1.0) + 0.5)
    return min(code, LEAK_MAX)


def decay_stochastic(x: int, leak: int, r: int) -> int:
    """One dithered decay step: clamp(floor((x*leak + 8*r) / 256), -8, 7).

    ``r`` is a 5-bit uniform draw; 8*r dithers the low byte of the product
    before it is shifted away, so the expectation over all 32 draws stays
    within 1/32 of the exact x*leak/256.
    """
    if not 0 <= r <= 31:
        raise ValueError(f"dither draw must be a 5-bit value, got {r}")
    return clamp_code4((x * leak + 8 * r) >> 8)


def addr_wrap_add(hyper: int, offset: int) -> int:
    """Hypercolumn address plus offset, wrapping modulo 2**20."""
    return (hyper + offset) & HYPER_MASK


@dataclass(frozen=True, slots=True)
class MiniAddr:
    """27-bit minicolumn address: 20-bit hypercolumn, 7-bit minicolumn index."""

    hyper: int
    mini: int

    def __post_init__(self):
        if not 0 <= self.hyper <= HYPER_MASK:
            raise ValueError(f"hypercolumn address out of range: {self.hyper:#x}")
        if not 0 <= self.mini <= MINI_MASK:
            raise ValueError(f"minicolumn index out of range: {self.mini}")

    @property
    def packed(self) -> int:
        return (self.hyper << MINI_BITS) | self.mini

    @classmethod
    def from_packed(cls, addr: int) -> "MiniAddr":
        if not 0 <= addr <= ADDR_MASK:
            raise ValueError(f"address out of 27-bit range: {addr:#x}")
        return cls(addr >> MINI_BITS, addr & MINI_MASK)

    def __str__(self) -> str:
        return f"{self.packed:07x}"
