"""Programmatic network construction.

A builder assembles populations (address ranges with per-type neuron
parameters) and projections (per-slot connection rules) and exports them
as engine network/stimulus files.  The builder never simulates anything:
it is strictly a producer of the engine's file formats and validates the
same rules the engine's loader enforces, so exported files load with
exit 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import wire

MAX_RANGES = 512


class BuildError(ValueError):
    pass


@dataclass(frozen=True)
class TypeParams:
    """Per-type biological parameters; quantized to codes on export."""

    tau_epsc_ms: float
    tau_ipsc_ms: float
    tau_mem_ms: float
    tau_rfc_ms: float
    g_syn: float
    g_psc: float
    v_init: int = 0
    v_reset: int = -4

    def codes(self) -> dict:
        if self.v_reset > self.v_init:
            raise BuildError(f"v_reset {self.v_reset} above v_init {self.v_init}")
        for name in ("v_init", "v_reset"):
            if not wire.CODE4_MIN <= getattr(self, name) <= wire.CODE4_MAX:
                raise BuildError(f"{name} out of 4-bit range")
        return {
            "leak_epsc": wire.leak_code(self.tau_epsc_ms),
            "leak_ipsc": wire.leak_code(self.tau_ipsc_ms),
            "leak_mem": wire.leak_code(self.tau_mem_ms),
            "leak_rfc": wire.leak_code(self.tau_rfc_ms),
            "g_syn": wire.gain_code(self.g_syn),
            "g_psc": wire.gain_code(self.g_psc),
            "v_init": self.v_init,
            "v_reset": self.v_reset,
        }


@dataclass(frozen=True)
class PopulationSpec:
    """An address range bound to a minicolumn layout and its parameters."""

    start_addr: int
    param_type: int
    conn_id: int
    counts: tuple[int, ...] = ()  # empty: the param_type is defined elsewhere
    params: dict[int, TypeParams] = field(default_factory=dict)


@dataclass(frozen=True)
class ProjectionSpec:
    """One outgoing connection slot of a connection record."""

    conn_id: int
    slot: int
    delay_ms: int
    offset: int
    fanout: int
    dest_hc_size: int
    weights: tuple[int, ...]
    masks: tuple[int, ...]


class NetworkBuilder:
    def __init__(self, seed: int = 0):
        self.seed = seed
        self._ranges: list[tuple[int, int, int]] = []
        self._types: dict[tuple[int, int], tuple[int, dict]] = {}
        self._posts: dict[tuple[int, int], int] = {}
        self._pres: dict[tuple[int, int], dict] = {}
        self._stimulus: list[tuple[int, int, tuple[int, ...]]] = []

    # -- construction --------------------------------------------------------

    def add_population(self, spec: PopulationSpec) -> None:
        if any(start == spec.start_addr for start, _, _ in self._ranges):
            raise BuildError(f"duplicate range start {spec.start_addr:#09x}")
        if not 0 <= spec.start_addr < wire.ADDR_SPAN:
            raise BuildError(f"range start outside the address space: {spec.start_addr:#x}")
        self._ranges.append((spec.start_addr, spec.param_type, spec.conn_id))
        if spec.counts or spec.params:
            self.define_types(spec.param_type, spec.counts, spec.params)

    def define_types(
        self, param_type: int, counts: tuple[int, ...], params: dict[int, TypeParams]
    ) -> None:
        if len(counts) != 8:
            raise BuildError("need 8 per-type counts")
        if any(c % 4 for c in counts):
            raise BuildError(f"type counts must be multiples of 4, got {counts}")
        if sum(counts) != 100:
            raise BuildError(f"type counts must sum to 100, got {sum(counts)}")
        for slot in range(8):
            if counts[slot] == 0:
                continue
            if slot not in params:
                raise BuildError(f"type slot {slot} has neurons but no parameters")
            key = (param_type, slot)
            entry = (counts[slot], params[slot].codes())
            if key in self._types and self._types[key] != entry:
                raise BuildError(f"conflicting definitions for type {key}")
            self._types[key] = entry

    def add_projection(self, spec: ProjectionSpec) -> None:
        key = (spec.conn_id, spec.slot)
        if key in self._pres:
            raise BuildError(f"duplicate projection for {key}")
        if not 0 <= spec.slot <= 15:
            raise BuildError(f"slot must be 0-15, got {spec.slot}")
        if not 1 <= spec.delay_ms <= 16:
            raise BuildError(f"delay must be 1-16 ms, got {spec.delay_ms}")
        if not 1 <= spec.dest_hc_size <= 128:
            raise BuildError(f"destination size out of range: {spec.dest_hc_size}")
        if not 1 <= spec.fanout <= spec.dest_hc_size:
            raise BuildError(
                f"fan-out {spec.fanout} exceeds destination size {spec.dest_hc_size}"
            )
        if len(spec.weights) != 8 or any(
            not wire.CODE4_MIN <= w <= wire.CODE4_MAX for w in spec.weights
        ):
            raise BuildError("need 8 signed 4-bit weight codes")
        if len(spec.masks) != 8 or any(not 0 <= m <= 0xFF for m in spec.masks):
            raise BuildError("need 8 mask bytes")
        self._posts[key] = spec.delay_ms
        self._pres[key] = {
            "offset": spec.offset % wire.HYPER_SPAN,
            "fanout": spec.fanout,
            "dest_hc_size": spec.dest_hc_size,
            "weights": tuple(spec.weights),
            "masks": tuple(spec.masks),
        }

    def add_events(self, events: list[tuple[int, int, tuple[int, ...]]]) -> None:
        self._stimulus.extend(events)

    # -- validation and export -------------------------------------------------

    def validate(self) -> None:
        if not self._ranges:
            raise BuildError("network defines no ranges; address 0 must be covered")
        starts = sorted(s for s, _, _ in self._ranges)
        if starts[0] != 0:
            raise BuildError("the first range must start at address 0")
        if len(self._ranges) > MAX_RANGES:
            raise BuildError(f"too many ranges: capacity is {MAX_RANGES}")
        defined_types = {pt for pt, _ in self._types}
        for start, ptype, conn in self._ranges:
            if ptype not in defined_types:
                raise BuildError(f"range {start:#09x} uses undefined parameter type {ptype}")
            if not any(c == conn for (c, _s) in self._posts):
                raise BuildError(f"range {start:#09x} uses undefined connection {conn}")
        last_t = None
        for t, addr, counts in self._stimulus:
            if last_t is not None and t < last_t:
                raise BuildError(f"stimulus timestamps out of order at t={t}")
            last_t = t
            if any(not 0 <= c <= 15 for c in counts):
                raise BuildError("stimulus counts must be in [0, 15]")

    def network_text(self) -> str:
        self.validate()
        return wire.serialize_network(
            self.seed, self._ranges, self._types, self._posts, self._pres
        )

    def stimulus_text(self) -> str:
        return wire.serialize_stimulus(self._stimulus)

    def build(self, net_path: str, stim_path: str | None = None) -> None:
        """Write the network (and stimulus) files; validation runs first."""
        text = self.network_text()
        with open(net_path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        if stim_path is not None:
            with open(stim_path, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(self.stimulus_text())
