"""The physical-minicolumn kernel: 100 stochastic fixed-point LIF neurons.

A minicolumn holds 100 neurons in 25 groups of four; each group is
assigned one of up to eight neuron types.  Per 1 ms step every neuron
updates its post-synaptic current from the accumulated per-type synaptic
input, then integrates it into the membrane, spiking on overflow.  Both
updates use the dithered truncation decay, so two neurons with identical
parameters but different dither streams diverge, which keeps the
population heterogeneous.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .fixedpoint import (
    CODE4_MAX,
    CODE4_MIN,
    COUNT4_MAX,
    clamp_code4,
    decay_stochastic,
    gain_code,
    leak_code,
)
from .rng import GOLDEN_GAMMA, RngStream, dither_block

try:
    import numba as _numba
except ImportError:  # pragma: no cover - numba is an optional speedup
    _numba = None

NEURONS_PER_MINICOLUMN = 100
GROUPS_PER_MINICOLUMN = 25
NEURONS_PER_GROUP = 4
NUM_TYPES = 8
STATE_BYTES = NEURONS_PER_MINICOLUMN  # one packed byte per neuron

_DITHERS_PER_STEP = 2 * NEURONS_PER_MINICOLUMN  # psc draws then soma draws


@dataclass(frozen=True, slots=True)
class NeuronTypeParams:
    """Per-type codes: leak rates, gains and membrane anchor points.

    ``v_reset`` is where the membrane lands after an overflow/underflow
    reset; it must not exceed ``v_init``, the resting level the membrane
    decays back to.
    """

    leak_epsc: int
    leak_ipsc: int
    leak_mem: int
    leak_rfc: int
    g_syn: int
    g_psc: int
    v_init: int = 0
    v_reset: int = -4

    def __post_init__(self):
        if self.v_reset > self.v_init:
            raise ValueError(
                f"v_reset ({self.v_reset}) must not exceed v_init ({self.v_init})"
            )
        for name in ("v_init", "v_reset"):
            v = getattr(self, name)
            if not CODE4_MIN <= v <= CODE4_MAX:
                raise ValueError(f"{name} out of 4-bit code range: {v}")

    @classmethod
    def from_biological(
        cls,
        tau_epsc_ms: float,
        tau_ipsc_ms: float,
        tau_mem_ms: float,
        tau_rfc_ms: float,
        g_syn: float,
        g_psc: float,
        v_init: int = 0,
        v_reset: int = -4,
    ) -> "NeuronTypeParams":
        """Quantize time constants (ms) and real gains into codes."""
        return cls(
            leak_epsc=leak_code(tau_epsc_ms),
            leak_ipsc=leak_code(tau_ipsc_ms),
            leak_mem=leak_code(tau_mem_ms),
            leak_rfc=leak_code(tau_rfc_ms),
            g_syn=gain_code(g_syn),
            g_psc=gain_code(g_psc),
            v_init=v_init,
            v_reset=v_reset,
        )


DEFAULT_PARAMS = NeuronTypeParams(
    leak_epsc=218, leak_ipsc=218, leak_mem=218, leak_rfc=192, g_syn=16, g_psc=16
)


@dataclass(frozen=True, slots=True)
class MinicolumnLayout:
    """Assignment of the 25 four-neuron groups to neuron types (0-7)."""

    group_type: tuple[int, ...]

    def __post_init__(self):
        if len(self.group_type) != GROUPS_PER_MINICOLUMN:
            raise ValueError(f"layout needs 25 group entries, got {len(self.group_type)}")
        if any(not 0 <= t < NUM_TYPES for t in self.group_type):
            raise ValueError("group type indices must be 0-7")

    @classmethod
    def from_counts(cls, counts: tuple[int, ...] | list[int]) -> "MinicolumnLayout":
        """Layout from per-type neuron counts (each a multiple of 4, sum 100)."""
        if len(counts) != NUM_TYPES:
            raise ValueError("need 8 per-type counts")
        if any(c % NEURONS_PER_GROUP for c in counts):
            raise ValueError(f"type counts must be multiples of 4, got {counts}")
        if sum(counts) != NEURONS_PER_MINICOLUMN:
            raise ValueError(f"type counts must sum to 100, got {sum(counts)}")
        groups: list[int] = []
        for t, c in enumerate(counts):
            groups.extend([t] * (c // NEURONS_PER_GROUP))
        return cls(tuple(groups))

    def counts(self) -> tuple[int, ...]:
        out = [0] * NUM_TYPES
        for t in self.group_type:
            out[t] += NEURONS_PER_GROUP
        return tuple(out)


def psc_step(psc: int, w: int, p: NeuronTypeParams, r: int) -> int:
    """Post-synaptic current update for one neuron and one step.

    The decay constant tracks the current's sign (EPSC vs IPSC); the
    accumulated synaptic input enters through the synaptic gain with the
    product truncated toward -inf.
    """
    leak = p.leak_epsc if psc >= 0 else p.leak_ipsc
    return clamp_code4(decay_stochastic(psc, leak, r) + ((p.g_syn * w) >> 4))


def soma_step(vmem: int, psc_new: int, p: NeuronTypeParams, r: int) -> tuple[int, bool]:
    """Membrane update; returns (new vmem, spiked).

    The membrane decays toward its initial value.  In the active state
    (vmem >= v_init) the fresh PSC is integrated and an overflow with a
    positive PSC emits a spike; below v_init the neuron is refractory and
    the PSC is discarded.  Any overflow or underflow resets to v_reset.
    """
    d = vmem - p.v_init
    if vmem >= p.v_init:
        v_raw = p.v_init + decay_stochastic(d, p.leak_mem, r) + ((p.g_psc * psc_new) >> 4)
        spiked = v_raw > CODE4_MAX and psc_new > 0
    else:
        v_raw = p.v_init + decay_stochastic(d, p.leak_rfc, r)
        spiked = False
    if v_raw > CODE4_MAX or v_raw < CODE4_MIN:
        return p.v_reset, spiked
    return v_raw, spiked


@dataclass(frozen=True)
class CompiledMinicolumn:
    """Per-neuron parameter vectors for the vectorized kernel."""

    layout: MinicolumnLayout
    params: tuple[NeuronTypeParams, ...]
    type_idx: np.ndarray  # (100,) int16
    leak_epsc: np.ndarray
    leak_ipsc: np.ndarray
    leak_mem: np.ndarray
    leak_rfc: np.ndarray
    g_syn: np.ndarray
    g_psc: np.ndarray
    v_init: np.ndarray
    v_reset: np.ndarray
    type_members: tuple[np.ndarray, ...]  # neuron indices per type


@lru_cache(maxsize=256)
def compile_minicolumn(
    layout: MinicolumnLayout, params: tuple[NeuronTypeParams, ...]
) -> CompiledMinicolumn:
    if len(params) != NUM_TYPES:
        raise ValueError("need parameters for all 8 type slots")
    type_idx = np.repeat(np.asarray(layout.group_type, dtype=np.int16), NEURONS_PER_GROUP)

    def per_type(field: str) -> np.ndarray:
        return np.asarray([getattr(p, field) for p in params], dtype=np.int16)[type_idx]

    members = tuple(
        np.nonzero(type_idx == t)[0].astype(np.int64) for t in range(NUM_TYPES)
    )
    return CompiledMinicolumn(
        layout=layout,
        params=params,
        type_idx=type_idx,
        leak_epsc=per_type("leak_epsc"),
        leak_ipsc=per_type("leak_ipsc"),
        leak_mem=per_type("leak_mem"),
        leak_rfc=per_type("leak_rfc"),
        g_syn=per_type("g_syn"),
        g_psc=per_type("g_psc"),
        v_init=per_type("v_init"),
        v_reset=per_type("v_reset"),
        type_members=members,
    )


def rest_state(compiled: CompiledMinicolumn) -> tuple[np.ndarray, np.ndarray]:
    """Fresh state: zero PSC, membrane at its initial value."""
    return (
        np.zeros(NEURONS_PER_MINICOLUMN, dtype=np.int16),
        compiled.v_init.astype(np.int16, copy=True),
    )


def _kernel(
    psc: np.ndarray,
    vmem: np.ndarray,
    w_types: np.ndarray,
    c: CompiledMinicolumn,
    r_psc: np.ndarray,
    r_soma: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized step over (..., 100) state arrays.

    ``w_types`` has shape (..., 8): the flushed per-type synaptic input.
    Returns (psc', vmem', counts, spikes, at_rest).
    """
    w_n = w_types.astype(np.int16)[:, c.type_idx]

    leak = np.where(psc >= 0, c.leak_epsc, c.leak_ipsc)
    decayed = (psc * leak + 8 * r_psc) >> 8
    np.clip(decayed, CODE4_MIN, CODE4_MAX, out=decayed)
    psc_new = decayed + ((c.g_syn * w_n) >> 4)
    np.clip(psc_new, CODE4_MIN, CODE4_MAX, out=psc_new)

    active = vmem >= c.v_init
    d = vmem - c.v_init
    leak_soma = np.where(active, c.leak_mem, c.leak_rfc)
    dd = (d * leak_soma + 8 * r_soma) >> 8
    np.clip(dd, CODE4_MIN, CODE4_MAX, out=dd)
    v_raw = c.v_init + dd + np.where(active, (c.g_psc * psc_new) >> 4, 0)

    spikes = active & (v_raw > CODE4_MAX) & (psc_new > 0)
    v_next = np.where((v_raw > CODE4_MAX) | (v_raw < CODE4_MIN), c.v_reset, v_raw)
    v_next = v_next.astype(np.int16)

    counts = np.empty(spikes.shape[:-1] + (NUM_TYPES,), dtype=np.int16)
    for t in range(NUM_TYPES):
        idx = c.type_members[t]
        if idx.size:
            counts[..., t] = np.minimum(spikes[..., idx].sum(axis=-1), COUNT4_MAX)
        else:
            counts[..., t] = 0

    at_rest = (psc_new == 0).all(axis=-1) & (v_next == c.v_init).all(axis=-1)
    return psc_new, v_next, counts, spikes, at_rest


def minicolumn_step(
    psc: np.ndarray,
    vmem: np.ndarray,
    compiled: CompiledMinicolumn,
    w_types: np.ndarray,
    rng: RngStream,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """One step of a single minicolumn.

    Consumes 200 packed five-bit dither draws from ``rng`` (100 for the
    PSC pass, then 100 for the soma pass).  Returns (psc', vmem',
    per-type counts, per-neuron spike flags).
    """
    dithers = rng.dither_run(_DITHERS_PER_STEP)
    r_psc = dithers[:NEURONS_PER_MINICOLUMN]
    r_soma = dithers[NEURONS_PER_MINICOLUMN:]
    psc2, vmem2, counts, spikes, _ = _kernel(
        psc.astype(np.int16)[None, :],
        vmem.astype(np.int16)[None, :],
        np.asarray(w_types, dtype=np.int16)[None, :],
        compiled,
        r_psc[None, :],
        r_soma[None, :],
    )
    return psc2[0], vmem2[0], counts[0], spikes[0]


def batch_step_numpy(
    psc: np.ndarray,
    vmem: np.ndarray,
    w_types: np.ndarray,
    compiled: CompiledMinicolumn,
    seeds: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Reference vectorized batch path (always available)."""
    dithers = dither_block(seeds, _DITHERS_PER_STEP)
    r_psc = np.ascontiguousarray(dithers[:, :NEURONS_PER_MINICOLUMN])
    r_soma = np.ascontiguousarray(dithers[:, NEURONS_PER_MINICOLUMN:])
    return _kernel(
        psc.astype(np.int16, copy=False),
        vmem.astype(np.int16, copy=False),
        w_types,
        compiled,
        r_psc,
        r_soma,
    )


if _numba is not None:

    @_numba.njit(cache=True, parallel=True)
    def _kernel_jit(psc, vmem, w_types, type_idx, leak_epsc, leak_ipsc, leak_mem,
                    leak_rfc, g_syn, g_psc, v_init, v_reset, seeds):
        n = psc.shape[0]
        m = psc.shape[1]
        n_words = (2 * m + 11) // 12
        psc2 = np.empty((n, m), dtype=np.int16)
        vmem2 = np.empty((n, m), dtype=np.int16)
        counts = np.zeros((n, 8), dtype=np.int16)
        spikes = np.zeros((n, m), dtype=np.bool_)
        at_rest = np.empty(n, dtype=np.bool_)
        gamma = np.uint64(GOLDEN_GAMMA)
        for i in _numba.prange(n):
            words = np.empty(n_words, dtype=np.uint64)
            seed = seeds[i]
            for k in range(n_words):
                z = seed + gamma * np.uint64(k + 1)
                z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
                z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
                words[k] = z ^ (z >> np.uint64(31))
            rest = True
            for j in range(m):
                r1 = np.int64((words[j // 12] >> np.uint64(5 * (j % 12))) & np.uint64(31))
                j2 = m + j
                r2 = np.int64((words[j2 // 12] >> np.uint64(5 * (j2 % 12))) & np.uint64(31))
                t = type_idx[j]
                p = np.int64(psc[i, j])
                leak = np.int64(leak_epsc[j]) if p >= 0 else np.int64(leak_ipsc[j])
                decayed = (p * leak + 8 * r1) >> 8
                if decayed < -8:
                    decayed = -8
                elif decayed > 7:
                    decayed = 7
                p_new = decayed + ((np.int64(g_syn[j]) * np.int64(w_types[i, t])) >> 4)
                if p_new < -8:
                    p_new = -8
                elif p_new > 7:
                    p_new = 7
                v = np.int64(vmem[i, j])
                vi = np.int64(v_init[j])
                active = v >= vi
                d = v - vi
                leak_s = np.int64(leak_mem[j]) if active else np.int64(leak_rfc[j])
                dd = (d * leak_s + 8 * r2) >> 8
                if dd < -8:
                    dd = -8
                elif dd > 7:
                    dd = 7
                v_raw = vi + dd
                if active:
                    v_raw += (np.int64(g_psc[j]) * p_new) >> 4
                    if v_raw > 7 and p_new > 0:
                        spikes[i, j] = True
                        if counts[i, t] < 15:
                            counts[i, t] += 1
                v_next = v_raw
                if v_raw > 7 or v_raw < -8:
                    v_next = np.int64(v_reset[j])
                psc2[i, j] = p_new
                vmem2[i, j] = v_next
                if p_new != 0 or v_next != vi:
                    rest = False
            at_rest[i] = rest
        return psc2, vmem2, counts, spikes, at_rest

    def batch_step(psc, vmem, w_types, compiled, seeds):
        """Step many minicolumns sharing one parameter record at once.

        ``seeds[i]`` is the per-slot stream seed; draw order matches
        ``minicolumn_step`` exactly, so batch, scalar and compiled paths
        are bit-identical for the same seeds.
        """
        c = compiled
        return _kernel_jit(
            np.ascontiguousarray(psc, dtype=np.int16),
            np.ascontiguousarray(vmem, dtype=np.int16),
            np.ascontiguousarray(w_types, dtype=np.int16),
            c.type_idx, c.leak_epsc, c.leak_ipsc, c.leak_mem, c.leak_rfc,
            c.g_syn, c.g_psc, c.v_init, c.v_reset,
            np.ascontiguousarray(seeds, dtype=np.uint64),
        )
else:
    batch_step = batch_step_numpy


def pack_state(psc: np.ndarray, vmem: np.ndarray) -> bytes:
    """Pack one minicolumn into 100 bytes: high nibble PSC, low nibble vmem."""
    b = ((psc.astype(np.int64) & 0xF) << 4) | (vmem.astype(np.int64) & 0xF)
    return b.astype(np.uint8).tobytes()


def unpack_state(raw: bytes) -> tuple[np.ndarray, np.ndarray]:
    b = np.frombuffer(raw, dtype=np.uint8).astype(np.int16)
    psc = (b >> 4) & 0xF
    vmem = b & 0xF
    # sign-extend 4-bit two's complement
    psc = np.where(psc >= 8, psc - 16, psc).astype(np.int16)
    vmem = np.where(vmem >= 8, vmem - 16, vmem).astype(np.int16)
    return psc, vmem


def spike_bitmap(spikes: np.ndarray) -> int:
    """100-bit monitoring bitmap with bit n set for a spike of neuron n."""
    packed = np.packbits(spikes.astype(np.uint8), bitorder="little")
    return int.from_bytes(packed.tobytes(), "little")
