"""Destination mapping, weight modulation and dynamic slot assignment.

Incoming delayed events are expanded into per-destination contributions:
the destination hypercolumn comes from a wrapping offset add, destination
minicolumns from a seeded shuffle prefix (stable per source and slot),
and the eight per-type weights from a masked weighted sum of the event's
spike counts, saturated to 4-bit codes per event.

Contributions are then folded into time-multiplexed minicolumn slots by
sixteen independent arbiters, partitioned on the top four address bits.
Each arbiter binds 20-bit group keys (one key covers eight consecutive
minicolumn addresses) to groups of eight slots, allocated from a wrapping
cursor.  Accumulation is widened to avoid order-dependent saturation; the
single clamp to 4-bit codes happens at flush.
"""

from __future__ import annotations

from bisect import bisect_left, insort
from dataclasses import dataclass

import numpy as np

from .fixedpoint import ADDR_MASK, CODE4_MAX, CODE4_MIN, MINI_BITS, addr_wrap_add
from .rng import RngStream, derive_seed
from .tables import ConnectionRule

ARBITER_COUNT = 16
ARBITER_SHIFT = 23  # top 4 bits of the 27-bit address select the arbiter
KEY_MASK = (1 << 20) - 1
SLOTS_PER_GROUP = 8
DEFAULT_GROUPS_PER_ARBITER = 8192


@dataclass(frozen=True, slots=True)
class PreSynapticContribution:
    """Per-destination synaptic input, one entry per destination type."""

    dest: int  # packed 27-bit address
    w: tuple[int, ...]  # eight codes, each in [-8, 7]


class ArbiterFull(RuntimeError):
    """An arbiter ran out of groups: the dynamic-assignment activity bound
    was exceeded and the run must halt rather than drop input."""

    def __init__(self, arbiter: int, groups: int):
        super().__init__(
            f"arbiter {arbiter} has no free slot group ({groups} groups, "
            f"{groups * SLOTS_PER_GROUP} slots); active-minicolumn bound exceeded"
        )
        self.arbiter = arbiter


class DestinationMapper:
    """Stable pseudo-random destination selection.

    The destination minicolumns for a given (destination hypercolumn,
    source minicolumn index, slot) triple are the first ``fanout_size``
    entries of a shuffle of [0, dest_hc_size) seeded only by the network
    seed and that triple, so the same source always reaches the same
    destinations across calls and runs.
    """

    def __init__(self, network_seed: int):
        self.network_seed = network_seed
        self._cache: dict[tuple[int, int, int, int, int], tuple[int, ...]] = {}

    def destinations(self, source: int, slot: int, rule: ConnectionRule) -> tuple[int, ...]:
        """Packed destination addresses for one event replica."""
        dest_hyper = addr_wrap_add(source >> MINI_BITS, rule.offset)
        src_mini = source & ((1 << MINI_BITS) - 1)
        key = (dest_hyper, src_mini, slot, rule.fanout_size, rule.dest_hc_size)
        cached = self._cache.get(key)
        if cached is None:
            minis = self._shuffle_prefix(
                dest_hyper, src_mini, slot, rule.fanout_size, rule.dest_hc_size
            )
            base = dest_hyper << MINI_BITS
            cached = tuple(base | m for m in minis)
            self._cache[key] = cached
        return cached

    def _shuffle_prefix(
        self, dest_hyper: int, src_mini: int, slot: int, fanout: int, hc_size: int
    ) -> list[int]:
        rng = RngStream(derive_seed(self.network_seed, dest_hyper, src_mini, slot))
        pool = list(range(hc_size))
        for i in range(fanout):
            j = i + rng.draw(32) % (hc_size - i)
            pool[i], pool[j] = pool[j], pool[i]
        return pool[:fanout]


def map_destinations(ev, rule: ConnectionRule, mapper: DestinationMapper) -> tuple[int, ...]:
    """Destinations of a delayed event under its connection rule."""
    return mapper.destinations(ev.source, ev.slot, rule)


def modulate(counts, rule: ConnectionRule) -> tuple[int, ...]:
    """Masked weighted sum of spike counts, saturated per destination type."""
    out = []
    for d in range(8):
        mask = rule.masks[d]
        raw = 0
        for s in range(8):
            if (mask >> s) & 1:
                raw += counts[s] * rule.weights[s]
        out.append(min(CODE4_MAX, max(CODE4_MIN, raw)))
    return tuple(out)


class RuleKernel:
    """Cached matrix form of one rule's masked modulation."""

    __slots__ = ("matrix",)

    def __init__(self, rule: ConnectionRule):
        m = np.zeros((8, 8), dtype=np.int16)
        for d in range(8):
            for s in range(8):
                if (rule.masks[d] >> s) & 1:
                    m[d, s] = rule.weights[s]
        self.matrix = m

    def modulate_batch(self, counts: np.ndarray) -> np.ndarray:
        """counts (n, 8) -> per-type inputs (n, 8), clamped per event."""
        raw = counts.astype(np.int16) @ self.matrix.T
        return np.clip(raw, CODE4_MIN, CODE4_MAX)


class ArbiterBank:
    """Sixteen arbiters binding active minicolumn addresses to TM slots."""

    def __init__(
        self,
        groups_per_arbiter: int = DEFAULT_GROUPS_PER_ARBITER,
        bypass_enabled: bool = True,
    ):
        if groups_per_arbiter < 1:
            raise ValueError("need at least one slot group per arbiter")
        self.groups = groups_per_arbiter
        self.span = groups_per_arbiter * SLOTS_PER_GROUP
        self.total_slots = ARBITER_COUNT * self.span
        self.bypass_enabled = bypass_enabled

        self.acc = np.zeros((self.total_slots, 8), dtype=np.int32)
        self.bound = np.zeros(self.total_slots, dtype=bool)
        self.group_key = np.full(ARBITER_COUNT * groups_per_arbiter, -1, dtype=np.int64)
        self._key2group: list[dict[int, int]] = [dict() for _ in range(ARBITER_COUNT)]
        self._free: list[list[int]] = [
            list(range(groups_per_arbiter)) for _ in range(ARBITER_COUNT)
        ]
        self._cursor = [0] * ARBITER_COUNT
        self._last_key = [None] * ARBITER_COUNT
        self._last_group = [0] * ARBITER_COUNT
        self._slot_cache: dict[int, int] = {}
        self.cam_lookups = 0
        self.bypass_hits = 0
        self.release_epoch = 0  # bumps whenever a binding is dropped

    # -- binding ----------------------------------------------------------

    def _allocate(self, arbiter: int, key: int) -> int:
        free = self._free[arbiter]
        if not free:
            raise ArbiterFull(arbiter, self.groups)
        i = bisect_left(free, self._cursor[arbiter])
        if i == len(free):
            i = 0  # wrap past the end of the group space
        g = free.pop(i)
        self._cursor[arbiter] = (g + 1) % self.groups
        self._key2group[arbiter][key] = g
        self.group_key[arbiter * self.groups + g] = key
        return g

    def _resolve(self, dest: int) -> int:
        """Slot id for a destination address, binding its group if new."""
        arbiter = dest >> ARBITER_SHIFT
        key = (dest >> 3) & KEY_MASK
        if self.bypass_enabled and key == self._last_key[arbiter]:
            self.bypass_hits += 1
            g = self._last_group[arbiter]
        else:
            self.cam_lookups += 1
            g = self._key2group[arbiter].get(key)
            if g is None:
                g = self._allocate(arbiter, key)
        self._last_key[arbiter] = key
        self._last_group[arbiter] = g
        return arbiter * self.span + g * SLOTS_PER_GROUP + (dest & 7)

    def accumulate(self, c: PreSynapticContribution) -> int:
        """Fold one contribution into its slot; returns the slot id."""
        if not 0 <= c.dest <= ADDR_MASK:
            raise ValueError(f"destination out of 27-bit range: {c.dest:#x}")
        sid = self._slot_cache.get(c.dest)
        if sid is None:
            sid = self._resolve(c.dest)
            self._slot_cache[c.dest] = sid
        self.bound[sid] = True
        self.acc[sid] += np.asarray(c.w, dtype=np.int32)
        return sid

    def resolve_ids(self, dests) -> np.ndarray:
        """Slot ids for destination addresses, binding new groups as needed."""
        cache = self._slot_cache
        sids = np.empty(len(dests), dtype=np.int64)
        seq = dests.tolist() if isinstance(dests, np.ndarray) else dests
        for i, dest in enumerate(seq):
            sid = cache.get(dest)
            if sid is None:
                sid = self._resolve(dest)
                cache[dest] = sid
            sids[i] = sid
        return sids

    def accumulate_flat(self, sids: np.ndarray, w: np.ndarray) -> None:
        """Scatter-add contribution rows onto already-resolved slot ids."""
        self.bound[sids] = True
        order = np.argsort(sids, kind="stable")
        s = sids[order]
        ws = w.astype(np.int32)[order]
        starts = np.flatnonzero(np.diff(s)) + 1
        starts = np.concatenate(([0], starts))
        self.acc[s[starts]] += np.add.reduceat(ws, starts, axis=0)

    def batch_accumulate(self, dests: np.ndarray, w: np.ndarray) -> np.ndarray:
        """Vectorized accumulate for many contributions; returns slot ids."""
        sids = self.resolve_ids(dests)
        self.accumulate_flat(sids, w)
        return sids

    # -- reading back ------------------------------------------------------

    def address_of(self, slot_id: int) -> int:
        arbiter, local = divmod(slot_id, self.span)
        g, s3 = divmod(local, SLOTS_PER_GROUP)
        key = int(self.group_key[arbiter * self.groups + g])
        if key < 0:
            raise AssertionError(f"slot {slot_id} belongs to an unallocated group")
        return (arbiter << ARBITER_SHIFT) | (key << 3) | s3

    def flush(self, slot_id: int) -> tuple[int, tuple[int, ...]]:
        """Clamp, return and clear a slot's accumulators; keeps the binding."""
        if not self.bound[slot_id]:
            raise AssertionError(f"flush of unbound slot {slot_id}")
        addr = self.address_of(slot_id)
        w = tuple(int(min(CODE4_MAX, max(CODE4_MIN, v))) for v in self.acc[slot_id])
        self.acc[slot_id] = 0
        return addr, w

    def batch_flush(self, slot_ids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Flush many slots: returns (addresses, clamped W matrix)."""
        w = np.clip(self.acc[slot_ids], CODE4_MIN, CODE4_MAX).astype(np.int16)
        self.acc[slot_ids] = 0
        arbiter, local = np.divmod(slot_ids, self.span)
        g, s3 = np.divmod(local, SLOTS_PER_GROUP)
        keys = self.group_key[arbiter * self.groups + g]
        addrs = (arbiter << ARBITER_SHIFT) | (keys << 3) | s3
        return addrs, w

    def accumulators_zero(self, slot_ids: np.ndarray) -> np.ndarray:
        return ~self.acc[slot_ids].any(axis=1)

    # -- release -----------------------------------------------------------

    def release(self, slot_id: int) -> None:
        """Unbind a quiescent slot; frees the group once all eight are unbound."""
        if not self.bound[slot_id]:
            raise AssertionError(f"release of unbound slot {slot_id}")
        addr = self.address_of(slot_id)
        self.bound[slot_id] = False
        self.acc[slot_id] = 0
        self._slot_cache.pop(addr, None)
        arbiter, local = divmod(slot_id, self.span)
        g = local // SLOTS_PER_GROUP
        base = arbiter * self.span + g * SLOTS_PER_GROUP
        if not self.bound[base : base + SLOTS_PER_GROUP].any():
            # the group returns to the pool and may rebind to a new key, so
            # externally cached slot ids for these addresses go stale
            self.release_epoch += 1
            key = int(self.group_key[arbiter * self.groups + g])
            self.group_key[arbiter * self.groups + g] = -1
            del self._key2group[arbiter][key]
            insort(self._free[arbiter], g)
            if self._last_key[arbiter] == key:
                self._last_key[arbiter] = None
            for s3 in range(SLOTS_PER_GROUP):
                self._slot_cache.pop((arbiter << ARBITER_SHIFT) | (key << 3) | s3, None)

    # -- introspection -----------------------------------------------------

    def bound_slots_in(self, lo: int, hi: int) -> np.ndarray:
        return np.nonzero(self.bound[lo:hi])[0] + lo

    def bound_count(self) -> int:
        return int(self.bound.sum())

    def occupancy(self) -> tuple[int, ...]:
        return tuple(int(x) for x in self.bound.reshape(ARBITER_COUNT, self.span).sum(axis=1))
