"""Step coordinator: segmented time multiplexing over dynamically
assigned minicolumn slots.

A logical step always completes.  Within a step the phases are strict:

1. axon read opportunities (one gated burst per segment) route delayed
   events into the arbiters;
2. the set of bound slots is snapshotted per segment;
3. segments are computed (parallelizable, pure given the snapshot): each
   bound slot flushes its accumulated synaptic input and runs the
   minicolumn kernel with a stream derived from (seed, slot, step);
4. results merge in segment order: states write to the back buffer,
   fresh events transmit into the delay queues (stalling on backpressure
   while extra read opportunities drain them), monitors record;
5. external events injected for this step transmit after the internal
   ones;
6. slots that were quiescent this step and gathered no new input are
   released back to the pool.

Per-slot dither streams are derived from (master seed, slot id, step), so
results do not depend on worker count or scheduling.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .axon import (
    DEFAULT_CLASS_CAPACITY,
    ClassFull,
    DelayGenerator,
    DelayStore,
    Event,
    rx_opportunity,
    tx_enqueue,
    tx_enqueue_many,
)
from .fixedpoint import ADDR_MASK
from .neuron import (
    NEURONS_PER_MINICOLUMN,
    CompiledMinicolumn,
    batch_step,
    compile_minicolumn,
    spike_bitmap,
)
from .rng import RngStream, derive_seed, derive_seed_array
from .synapse import ArbiterBank, ArbiterFull, DestinationMapper, RuleKernel
from .tables import ParamTable

SEGMENT_SIZE = 1024
MAX_TM_MINICOLUMNS = 1 << 20
_AXON_STREAM = 0xA  # key tags for derived streams
_STEP_STREAM = 0x5


def hw_time_model(tm_minicolumns: int, slot_cycles: int = 200, clock_ns: float = 5.0) -> float:
    """Modeled hardware wall time per update cycle, in nanoseconds.

    Each 1024-slot segment costs its burst plus the axon access slot:
    (tm/1024) * (1024 + slot_cycles) * clock_ns.
    """
    return (tm_minicolumns / SEGMENT_SIZE) * (SEGMENT_SIZE + slot_cycles) * clock_ns


@dataclass(frozen=True)
class EngineConfig:
    tm_minicolumns: int = 176 * 1024
    axon_burst: int = 64
    gate_f: int = 0
    master_seed: int = 0
    monitor: tuple[tuple[int, int], ...] = ((0, ADDR_MASK + 1),)
    class_capacity: int = DEFAULT_CLASS_CAPACITY
    workers: int = 1
    opportunities_per_segment: int = 1
    arbiter_bypass: bool = True

    def __post_init__(self):
        if self.tm_minicolumns % SEGMENT_SIZE:
            raise ValueError("tm_minicolumns must be a multiple of 1024")
        if not SEGMENT_SIZE <= self.tm_minicolumns <= MAX_TM_MINICOLUMNS:
            raise ValueError("tm_minicolumns must be between 1024 and 2**20")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")
        for lo, hi in self.monitor:
            if not 0 <= lo < hi <= ADDR_MASK + 1:
                raise ValueError(f"bad monitor range [{lo:#x}, {hi:#x})")


class StateStore:
    """Double-buffered per-slot neuron state (100 packed-byte neurons).

    Reads come from the front buffer, writebacks go to the back buffer and
    the buffers swap at end of step, so a segment being computed never
    aliases the segment being written back.
    """

    def __init__(self, tm_minicolumns: int):
        shape = (tm_minicolumns, NEURONS_PER_MINICOLUMN)
        self._psc = [np.zeros(shape, dtype=np.int8), np.zeros(shape, dtype=np.int8)]
        self._vmem = [np.zeros(shape, dtype=np.int8), np.zeros(shape, dtype=np.int8)]
        self._front = 0
        self.valid = np.zeros(tm_minicolumns, dtype=bool)

    def read(self, slot_ids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        f = self._front
        return (
            self._psc[f][slot_ids].astype(np.int16),
            self._vmem[f][slot_ids].astype(np.int16),
        )

    def write(self, slot_ids: np.ndarray, psc: np.ndarray, vmem: np.ndarray) -> None:
        b = 1 - self._front
        self._psc[b][slot_ids] = psc.astype(np.int8)
        self._vmem[b][slot_ids] = vmem.astype(np.int8)
        self.valid[slot_ids] = True

    def swap(self) -> None:
        self._front = 1 - self._front


@dataclass(frozen=True)
class StepStats:
    timestep: int
    active_tm_minicolumns: int
    arbiter_occupancy: tuple[int, ...]
    events_tx: int
    events_rx: int
    spikes_monitored: int


@dataclass
class RunSummary:
    steps: int = 0
    neuron_updates: int = 0
    events_tx: int = 0
    events_rx: int = 0
    spikes_total: int = 0
    wall_seconds: float = 0.0

    @property
    def updates_per_second(self) -> float:
        return self.neuron_updates / self.wall_seconds if self.wall_seconds > 0 else 0.0


class EngineAbort(RuntimeError):
    """Unrecoverable condition; carries a diagnostic snapshot."""

    def __init__(self, message: str, diagnostics: dict):
        super().__init__(message + " | " + ", ".join(f"{k}={v}" for k, v in diagnostics.items()))
        self.diagnostics = diagnostics


@dataclass
class _SegmentResult:
    slot_ids: np.ndarray
    addrs: np.ndarray
    psc: np.ndarray
    vmem: np.ndarray
    counts: np.ndarray
    spikes: np.ndarray
    quiescent: np.ndarray


def _merge_results(chunks: list["_SegmentResult"]) -> "_SegmentResult":
    return _SegmentResult(*(np.concatenate([getattr(r, f) for r in chunks])
                            for f in _SegmentResult.__dataclass_fields__))


class _RouteBucket:
    """Events sharing one rule kernel and fan-out, batched per step."""

    __slots__ = ("kernel", "fanout", "dest_rows", "sid_rows", "n_rows",
                 "rows", "counts", "sid_epoch")

    def __init__(self, kernel: RuleKernel, fanout: int):
        self.kernel = kernel
        self.fanout = fanout
        self.dest_rows = np.empty((16, fanout), dtype=np.int64)
        self.sid_rows = np.full((16, fanout), -1, dtype=np.int64)
        self.n_rows = 0
        self.rows: list[int] = []
        self.counts: list[bytes] = []
        self.sid_epoch = -1

    def add_route(self, dests: tuple[int, ...]) -> int:
        if self.n_rows == len(self.dest_rows):
            self.dest_rows = np.vstack([self.dest_rows, np.empty_like(self.dest_rows)])
            self.sid_rows = np.vstack([self.sid_rows, np.full_like(self.sid_rows, -1)])
        self.dest_rows[self.n_rows] = dests
        self.sid_rows[self.n_rows] = -1
        self.n_rows += 1
        return self.n_rows - 1


class Engine:
    """One simulation instance over a loaded network."""

    def __init__(self, table: ParamTable, config: EngineConfig | None = None):
        self.table = table
        self.config = config or EngineConfig()
        cfg = self.config
        groups = cfg.tm_minicolumns // (16 * 8)
        self.bank = ArbiterBank(groups_per_arbiter=groups, bypass_enabled=cfg.arbiter_bypass)
        self.store = StateStore(cfg.tm_minicolumns)
        self.delay = DelayStore(cfg.class_capacity)
        self.gen = DelayGenerator(cfg.gate_f)
        self.mapper = DestinationMapper(table.network_seed)
        self.axon_rng = RngStream(derive_seed(cfg.master_seed, _AXON_STREAM))
        self.t = -1

        self._n_segments = cfg.tm_minicolumns // SEGMENT_SIZE
        self._compiled: dict[int, CompiledMinicolumn] = {}
        self._route_cache: dict[int, tuple[_RouteBucket, int]] = {}
        self._buckets: dict[tuple[int, int], _RouteBucket] = {}
        self._kernel_cache: dict[object, RuleKernel] = {}
        self._slot_ptype = np.full(cfg.tm_minicolumns, -1, dtype=np.int32)
        self._addr_ptype: dict[int, int] = {}
        self._post_cache: dict[int, object] = {}
        self._pending: dict[int, list[Event]] = {}
        self._step_rx = 0
        self._monitor_lo = np.asarray([lo for lo, _ in cfg.monitor], dtype=np.int64)
        self._monitor_hi = np.asarray([hi for _, hi in cfg.monitor], dtype=np.int64)
        self._pool = (
            ThreadPoolExecutor(max_workers=cfg.workers) if cfg.workers > 1 else None
        )
        self.summary = RunSummary()

    # -- input ---------------------------------------------------------------

    def inject(self, events: list[tuple[int, int, bytes]]) -> None:
        """Queue external events: (step, packed source address, 8 counts)."""
        last_t = None
        for t, source, counts in events:
            if last_t is not None and t < last_t:
                raise ValueError(f"stimulus timestamps out of order at t={t}")
            last_t = t
            if not 0 <= source <= ADDR_MASK:
                raise ValueError(f"source address out of range: {source:#x}")
            if len(counts) != 8 or any(c > 15 for c in counts):
                raise ValueError("counts must be eight values in [0, 15]")
            self._pending.setdefault(t, []).append(Event(source, bytes(counts)))

    # -- routing (axon RX -> synapse -> arbiters) ------------------------------

    def _lookup_route(self, key: int, source: int, slot: int) -> tuple[_RouteBucket, int]:
        rule = self.table.pre_connection(source, slot)
        kernel = self._kernel_cache.get(rule)
        if kernel is None:
            kernel = self._kernel_cache.setdefault(rule, RuleKernel(rule))
        dests = self.mapper.destinations(source, slot, rule)
        bucket = self._buckets.get((id(kernel), rule.fanout_size))
        if bucket is None:
            bucket = _RouteBucket(kernel, rule.fanout_size)
            self._buckets[(id(kernel), rule.fanout_size)] = bucket
        row = bucket.add_route(dests)
        hit = (bucket, row)
        self._route_cache[key] = hit
        return hit

    def _route_events(self, events: list) -> None:
        rc = self._route_cache
        touched: list[_RouteBucket] = []
        for ev in events:
            key = (ev.source << 4) | ev.slot
            hit = rc.get(key)
            if hit is None:
                hit = self._lookup_route(key, ev.source, ev.slot)
            bucket, row = hit
            if not bucket.rows:
                touched.append(bucket)
            bucket.rows.append(row)
            bucket.counts.append(ev.counts)
        epoch = self.bank.release_epoch
        for bucket in touched:
            rows = np.asarray(bucket.rows, dtype=np.int64)
            counts = np.frombuffer(b"".join(bucket.counts), dtype=np.uint8).reshape(-1, 8)
            bucket.rows.clear()
            bucket.counts.clear()
            w = bucket.kernel.modulate_batch(counts)
            if bucket.sid_epoch != epoch:
                bucket.sid_rows[: bucket.n_rows] = -1
                bucket.sid_epoch = epoch
            sids = bucket.sid_rows[rows]
            fresh = np.flatnonzero(sids[:, 0] < 0)
            if len(fresh):
                try:
                    for i in np.unique(rows[fresh]).tolist():
                        bucket.sid_rows[i] = self.bank.resolve_ids(
                            bucket.dest_rows[i].tolist()
                        )
                except ArbiterFull as exc:
                    raise EngineAbort(
                        "dynamic-assignment capacity exceeded",
                        {
                            "step": self.t,
                            "arbiter": exc.arbiter,
                            "occupancy": self.bank.occupancy(),
                            "bound": self.bank.bound_count(),
                        },
                    ) from exc
                sids = bucket.sid_rows[rows]
            w_flat = np.repeat(w, bucket.fanout, axis=0)
            self.bank.accumulate_flat(sids.ravel(), w_flat)

    def _opportunity(self) -> int:
        events = rx_opportunity(self.gen, self.delay, self.axon_rng, self.config.axon_burst)
        if events:
            self._route_events(events)
        self._step_rx += len(events)
        return len(events)

    # -- segment compute -------------------------------------------------------

    def _compiled_for(self, ptype: int) -> CompiledMinicolumn:
        c = self._compiled.get(ptype)
        if c is None:
            layout, params = self.table.param_records[ptype]
            c = compile_minicolumn(layout, params)
            self._compiled[ptype] = c
        return c

    def _ptypes_of(self, slot_ids: np.ndarray, addrs: np.ndarray) -> np.ndarray:
        ptypes = self._slot_ptype[slot_ids]
        missing = np.flatnonzero(ptypes < 0)
        if len(missing):
            lookup = self._addr_ptype
            table = self.table
            for i in missing.tolist():
                a = int(addrs[i])
                pt = lookup.get(a)
                if pt is None:
                    pt = table.param_type_of(a)
                    lookup[a] = pt
                ptypes[i] = pt
            self._slot_ptype[slot_ids[missing]] = ptypes[missing]
        return ptypes

    def _process_segment(self, slot_ids: np.ndarray, step_seed: int) -> _SegmentResult:
        addrs, w = self.bank.batch_flush(slot_ids)
        ptypes = self._ptypes_of(slot_ids, addrs)

        n = len(slot_ids)
        psc_out = np.empty((n, NEURONS_PER_MINICOLUMN), dtype=np.int16)
        vmem_out = np.empty_like(psc_out)
        counts_out = np.empty((n, 8), dtype=np.int16)
        spikes_out = np.empty((n, NEURONS_PER_MINICOLUMN), dtype=bool)
        quiescent = np.empty(n, dtype=bool)

        seeds = derive_seed_array(step_seed, slot_ids.astype(np.uint64))
        for pt in np.unique(ptypes):
            sel = np.flatnonzero(ptypes == pt)
            ids = slot_ids[sel]
            compiled = self._compiled_for(int(pt))
            psc, vmem = self.store.read(ids)
            fresh = ~self.store.valid[ids]
            if fresh.any():
                psc[fresh] = 0
                vmem[fresh] = compiled.v_init
            p2, v2, cts, spk, rest = batch_step(psc, vmem, w[sel], compiled, seeds[sel])
            psc_out[sel] = p2
            vmem_out[sel] = v2
            counts_out[sel] = cts
            spikes_out[sel] = spk
            quiescent[sel] = rest & ~w[sel].any(axis=1)
        return _SegmentResult(slot_ids, addrs, psc_out, vmem_out, counts_out, spikes_out, quiescent)

    # -- transmit with backpressure --------------------------------------------

    def _stall_until_clear(self) -> None:
        while self.delay.backpressure:
            self._opportunity()

    def _tx(self, ev: Event, post) -> int:
        self._stall_until_clear()
        try:
            return len(tx_enqueue(ev, post, self.delay))
        except ClassFull as exc:
            raise EngineAbort(
                "delay queue at capacity despite stalling",
                {"step": self.t, "delay_class": exc.delay_class, "capacity": exc.capacity},
            ) from exc

    def _tx_many(self, sources: list[int], counts: list[bytes], post) -> int:
        self._stall_until_clear()
        try:
            return tx_enqueue_many(sources, counts, post, self.delay)
        except ClassFull as exc:
            raise EngineAbort(
                "delay queue at capacity despite stalling",
                {"step": self.t, "delay_class": exc.delay_class, "capacity": exc.capacity},
            ) from exc

    def _post_for(self, addr: int):
        post = self._post_cache.get(addr)
        if post is None:
            post = self.table.post_connections(addr)
            self._post_cache[addr] = post
        return post

    # -- the step ---------------------------------------------------------------

    def run_step(
        self, t: int, spike_sink=None, event_sink=None, stats_sink=None
    ) -> StepStats:
        if t != self.t + 1:
            raise ValueError(f"steps must advance by 1 (got {t} after {self.t})")
        self.t = t
        self._step_rx = 0
        for _seg in range(self._n_segments):
            for _ in range(self.config.opportunities_per_segment):
                self._opportunity()

        segments: list[np.ndarray] = []
        for seg in range(self._n_segments):
            ids = self.bank.bound_slots_in(seg * SEGMENT_SIZE, (seg + 1) * SEGMENT_SIZE)
            if len(ids):
                segments.append(ids)
        active = int(sum(len(s) for s in segments))

        step_seed = derive_seed(self.config.master_seed, _STEP_STREAM, t)
        if self._pool is not None and len(segments) > 1:
            chunks = list(self._pool.map(lambda s: self._process_segment(s, step_seed), segments))
            res = _merge_results(chunks)
        elif segments:
            # same math and the same merged ordering as the pooled path
            res = self._process_segment(np.concatenate(segments), step_seed)
        else:
            res = None

        events_tx = 0
        spikes_monitored = 0
        spikes_total = 0
        if res is not None:
            self.store.write(res.slot_ids, res.psc, res.vmem)
            spikes_total = int(res.spikes.sum())
            emitting = np.flatnonzero(res.counts.any(axis=1))
            if len(emitting):
                raw = res.counts[emitting].astype(np.uint8).tobytes()
                by_post: dict[int, tuple[object, list[int], list[bytes]]] = {}
                for j, i in enumerate(emitting.tolist()):
                    addr = int(res.addrs[i])
                    post = self._post_for(addr)
                    group = by_post.get(id(post))
                    if group is None:
                        group = (post, [], [])
                        by_post[id(post)] = group
                    group[1].append(addr)
                    group[2].append(raw[j * 8 : j * 8 + 8])
                for post, sources, counts_list in by_post.values():
                    events_tx += self._tx_many(sources, counts_list, post)
            if event_sink is not None or spike_sink is not None:
                monitored = self._monitored_mask(res.addrs)
                if monitored.any():
                    if event_sink is not None:
                        rows = np.flatnonzero(monitored & res.counts.any(axis=1))
                        if len(rows):
                            sel_counts = res.counts[rows]
                            a_idx, t_idx = np.nonzero(sel_counts)
                            event_sink.write_events(
                                t,
                                res.addrs[rows][a_idx],
                                t_idx,
                                sel_counts[a_idx, t_idx],
                            )
                    if spike_sink is not None:
                        rows = np.flatnonzero(monitored & res.spikes.any(axis=1))
                        for i in rows.tolist():
                            spike_sink.write_spikes(
                                t, int(res.addrs[i]), spike_bitmap(res.spikes[i])
                            )
                    spikes_monitored += int(res.spikes[monitored].sum())

        for ev in self._pending.pop(t, []):
            events_tx += self._tx(ev, self._post_for(ev.source))

        if res is not None:
            cand = res.slot_ids[res.quiescent]
            if len(cand):
                quiet = self.bank.accumulators_zero(cand)
                for sid in cand[quiet].tolist():
                    self.bank.release(sid)
                    self.store.valid[sid] = False
                    self._slot_ptype[sid] = -1

        self.store.swap()
        self.summary.steps += 1
        self.summary.neuron_updates += active * NEURONS_PER_MINICOLUMN
        self.summary.events_tx += events_tx
        self.summary.events_rx += self._step_rx
        self.summary.spikes_total += spikes_total

        stats = StepStats(
            timestep=t,
            active_tm_minicolumns=active,
            arbiter_occupancy=self.bank.occupancy(),
            events_tx=events_tx,
            events_rx=self._step_rx,
            spikes_monitored=spikes_monitored,
        )
        if stats_sink is not None:
            stats_sink.write_stats(t, active)
        return stats

    def _monitored_mask(self, addrs: np.ndarray) -> np.ndarray:
        a = addrs[:, None]
        return ((a >= self._monitor_lo[None, :]) & (a < self._monitor_hi[None, :])).any(axis=1)

    def active_addresses(self) -> np.ndarray:
        """Addresses of currently bound slots (diagnostic)."""
        ids = np.nonzero(self.bank.bound)[0]
        if not len(ids):
            return ids
        arbiter, local = np.divmod(ids, self.bank.span)
        g, s3 = np.divmod(local, 8)
        keys = self.bank.group_key[arbiter * self.bank.groups + g]
        return (arbiter << 23) | (keys << 3) | s3

    def run(
        self,
        steps: int,
        stimulus: list[tuple[int, int, bytes]] | None = None,
        spike_sink=None,
        event_sink=None,
        stats_sink=None,
    ) -> RunSummary:
        """Run ``steps`` logical milliseconds, streaming records to sinks."""
        if stimulus:
            self.inject(stimulus)
        start = time.perf_counter()
        for t in range(self.t + 1, self.t + 1 + steps):
            self.run_step(t, spike_sink=spike_sink, event_sink=event_sink, stats_sink=stats_sink)
        self.summary.wall_seconds += time.perf_counter() - start
        for sink in (spike_sink, event_sink, stats_sink):
            flush = getattr(sink, "flush", None)
            if flush is not None:
                flush()
        return self.summary

    def close(self) -> None:
        if self._pool is not None:
            self._pool.shutdown()
