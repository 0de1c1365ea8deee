"""Range-keyed parameter and connection tables.

A sorted list of at most 512 threshold addresses partitions the 27-bit
minicolumn address space into ranges; each range resolves through two
independent indirections to (a) a neuron-parameter record and (b) the
connection records that route its events.  Tables are immutable after
construction and freely shared between readers.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass

from .fixedpoint import ADDR_MASK, CODE4_MAX, CODE4_MIN, HYPER_MASK
from .neuron import MinicolumnLayout, NeuronTypeParams

MAX_RANGES = 512
MAX_SLOTS = 16
MAX_DELAY_CLASS = 16
MAX_HC_SIZE = 128


class TableError(ValueError):
    """Structural violation in network tables."""


@dataclass(frozen=True, slots=True)
class RangeCam:
    """Sorted ascending thresholds; range i covers [A[i], A[i+1])."""

    thresholds: tuple[int, ...]

    def __post_init__(self):
        a = self.thresholds
        if not a:
            raise TableError("range CAM needs at least one threshold")
        if len(a) > MAX_RANGES:
            raise TableError(f"range CAM capacity is {MAX_RANGES}, got {len(a)}")
        if a[0] != 0:
            raise TableError("first threshold must cover address 0")
        if any(a[i] >= a[i + 1] for i in range(len(a) - 1)):
            raise TableError("thresholds must be strictly increasing")
        if a[-1] > ADDR_MASK:
            raise TableError("threshold exceeds the 27-bit address space")

    def lookup(self, addr: int) -> int:
        """Largest i with thresholds[i] <= addr."""
        return bisect_right(self.thresholds, addr) - 1


def cam_lookup(cam: RangeCam, addr: int) -> int:
    return cam.lookup(addr)


@dataclass(frozen=True, slots=True)
class PostConnection:
    """Up to 16 outgoing slots; entry is the delay class (1-16 ms) or None."""

    delays: tuple[int | None, ...]

    def __post_init__(self):
        if len(self.delays) != MAX_SLOTS:
            raise TableError("post-connection record needs 16 slot entries")
        for d in self.delays:
            if d is not None and not 1 <= d <= MAX_DELAY_CLASS:
                raise TableError(f"delay class out of range: {d}")

    def enabled_slots(self) -> tuple[tuple[int, int], ...]:
        return tuple((s, d) for s, d in enumerate(self.delays) if d is not None)


EMPTY_POST = PostConnection((None,) * MAX_SLOTS)


@dataclass(frozen=True, slots=True)
class ConnectionRule:
    """One (source range, slot) routing rule.

    ``masks[d]`` bit ``s`` enables the source-type-s to destination-type-d
    synapse, giving up to 64 type pairs between two minicolumns.
    """

    offset: int
    fanout_size: int
    dest_hc_size: int
    weights: tuple[int, ...]
    masks: tuple[int, ...]

    def __post_init__(self):
        if not 0 <= self.offset <= HYPER_MASK:
            raise TableError(f"offset out of 20-bit range: {self.offset:#x}")
        if not 1 <= self.dest_hc_size <= MAX_HC_SIZE:
            raise TableError(f"destination hypercolumn size out of range: {self.dest_hc_size}")
        if not 1 <= self.fanout_size <= self.dest_hc_size:
            raise TableError(
                f"fan-out {self.fanout_size} exceeds destination size {self.dest_hc_size}"
            )
        if len(self.weights) != 8 or any(
            not CODE4_MIN <= w <= CODE4_MAX for w in self.weights
        ):
            raise TableError(f"need 8 signed 4-bit weights, got {self.weights}")
        if len(self.masks) != 8 or any(not 0 <= m <= 0xFF for m in self.masks):
            raise TableError(f"need 8 mask bytes, got {self.masks}")


@dataclass(frozen=True)
class ParamTable:
    """Validated, immutable lookup tables for one loaded network."""

    cam: RangeCam
    range_param_type: tuple[int, ...]
    range_conn: tuple[int, ...]
    param_records: dict[int, tuple[MinicolumnLayout, tuple[NeuronTypeParams, ...]]]
    post_records: dict[int, PostConnection]
    pre_records: dict[tuple[int, int], ConnectionRule]
    network_seed: int = 0

    def __post_init__(self):
        n = len(self.cam.thresholds)
        if len(self.range_param_type) != n or len(self.range_conn) != n:
            raise TableError("every range needs a parameter-type id and a connection id")
        for i, pt in enumerate(self.range_param_type):
            if pt not in self.param_records:
                raise TableError(f"range {i} references undefined parameter type {pt}")
        for i, cid in enumerate(self.range_conn):
            if cid not in self.post_records:
                raise TableError(f"range {i} references undefined connection id {cid}")
        for cid, post in self.post_records.items():
            for slot, _delay in post.enabled_slots():
                if (cid, slot) not in self.pre_records:
                    raise TableError(
                        f"connection {cid} slot {slot} is enabled but has no rule"
                    )
        for ptype, (layout, params) in self.param_records.items():
            if len(params) != 8:
                raise TableError(f"parameter type {ptype} needs 8 type slots")
            counts = layout.counts()
            if sum(counts) != 100:
                raise TableError(f"parameter type {ptype} has {sum(counts)} neurons")

    def range_of(self, addr: int) -> int:
        return self.cam.lookup(addr)

    def minicolumn_params(
        self, addr: int
    ) -> tuple[MinicolumnLayout, tuple[NeuronTypeParams, ...]]:
        return self.param_records[self.range_param_type[self.cam.lookup(addr)]]

    def param_type_of(self, addr: int) -> int:
        return self.range_param_type[self.cam.lookup(addr)]

    def post_connections(self, addr: int) -> PostConnection:
        return self.post_records[self.range_conn[self.cam.lookup(addr)]]

    def pre_connection(self, addr: int, slot: int) -> ConnectionRule:
        cid = self.range_conn[self.cam.lookup(addr)]
        try:
            return self.pre_records[(cid, slot)]
        except KeyError:
            raise TableError(
                f"no rule for connection {cid} slot {slot} (address {addr:#09x})"
            ) from None
