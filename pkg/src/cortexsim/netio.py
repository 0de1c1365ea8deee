"""Network/stimulus file formats, streaming record sinks, the auditory
network generator and figure-data emitters.

All formats are line-oriented UTF-8 text with LF newlines and '#'
comments.  Numeric fields are decimal except addresses, offsets and mask
bytes, which are hex.  Network files must parse into fully validated
tables; every diagnostic carries the offending line number.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fixedpoint import ADDR_MASK, HYPER_MASK, MINI_BITS
from .neuron import MinicolumnLayout, NeuronTypeParams
from .rng import RngStream, derive_seed
from .tables import (
    MAX_RANGES,
    ConnectionRule,
    ParamTable,
    PostConnection,
    RangeCam,
    TableError,
)

_STIM_STREAM = 0x7


class NetworkFormatError(ValueError):
    """Parse or validation failure, pointing at the offending line."""

    def __init__(self, path: str, line: int | None, message: str):
        where = f"{path}:{line}" if line is not None else path
        super().__init__(f"{where}: {message}")
        self.path = path
        self.line = line


_FILLER_PARAMS = NeuronTypeParams(0, 0, 0, 0, 1, 1, 0, 0)


# ---------------------------------------------------------------------------
# network files
# ---------------------------------------------------------------------------

def parse_network(path: str) -> ParamTable:
    """Parse and fully validate a network description file."""
    seed = 0
    ranges: list[tuple[int, int, int, int, int]] = []  # line, idx, start, ptype, conn
    types: dict[tuple[int, int], tuple[int, int, NeuronTypeParams]] = {}
    posts: dict[tuple[int, int], tuple[int, int]] = {}  # (conn, slot) -> (line, delay)
    pres: dict[tuple[int, int], tuple[int, int, int, int]] = {}
    weights: dict[tuple[int, int], tuple[int, tuple[int, ...]]] = {}
    masks: dict[tuple[int, int], tuple[int, tuple[int, ...]]] = {}

    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            text = raw.split("#", 1)[0].strip()
            if not text:
                continue
            fields = text.split()
            kind, args = fields[0], fields[1:]

            def fail(msg: str):
                raise NetworkFormatError(path, lineno, msg)

            def want(n: int):
                if len(args) != n:
                    fail(f"'{kind}' line needs {n} fields, got {len(args)}")

            try:
                if kind == "seed":
                    want(1)
                    seed = int(args[0])
                elif kind == "range":
                    want(4)
                    ranges.append(
                        (lineno, int(args[0]), int(args[1], 16), int(args[2]), int(args[3]))
                    )
                elif kind == "type":
                    want(11)
                    ptype, slot, count = int(args[0]), int(args[1]), int(args[2])
                    if not 0 <= slot <= 7:
                        fail(f"type slot must be 0-7, got {slot}")
                    if (ptype, slot) in types:
                        fail(f"duplicate type line for ({ptype}, {slot})")
                    params = NeuronTypeParams.from_biological(
                        float(args[3]), float(args[4]), float(args[5]), float(args[6]),
                        float(args[7]), float(args[8]),
                        v_init=int(args[9]), v_reset=int(args[10]),
                    )
                    types[(ptype, slot)] = (lineno, count, params)
                elif kind == "post":
                    want(3)
                    conn, slot, delay = int(args[0]), int(args[1]), int(args[2])
                    if not 0 <= slot <= 15:
                        fail(f"post slot must be 0-15, got {slot}")
                    if (conn, slot) in posts:
                        fail(f"duplicate post line for ({conn}, {slot})")
                    posts[(conn, slot)] = (lineno, delay)
                elif kind == "pre":
                    want(5)
                    conn, slot = int(args[0]), int(args[1])
                    if (conn, slot) in pres:
                        fail(f"duplicate pre line for ({conn}, {slot})")
                    pres[(conn, slot)] = (lineno, int(args[2], 16), int(args[3]), int(args[4]))
                elif kind == "weights":
                    want(10)
                    conn, slot = int(args[0]), int(args[1])
                    weights[(conn, slot)] = (lineno, tuple(int(a) for a in args[2:]))
                elif kind == "masks":
                    want(10)
                    conn, slot = int(args[0]), int(args[1])
                    masks[(conn, slot)] = (lineno, tuple(int(a, 16) for a in args[2:]))
                else:
                    fail(f"unknown record kind '{kind}'")
            except NetworkFormatError:
                raise
            except ValueError as exc:
                raise NetworkFormatError(path, lineno, f"bad field: {exc}") from None

    if not ranges:
        raise NetworkFormatError(path, None, "network defines no ranges")
    if len(ranges) > MAX_RANGES:
        extra = ranges[MAX_RANGES][0]
        raise NetworkFormatError(
            path, extra, f"too many ranges: capacity is {MAX_RANGES}"
        )
    ranges.sort(key=lambda r: r[1])
    for pos, (lineno, idx, _start, _pt, _conn) in enumerate(ranges):
        if idx != pos:
            raise NetworkFormatError(
                path, lineno, f"range index {idx} does not match sorted position {pos}"
            )
    starts = [r[2] for r in ranges]
    if starts[0] != 0:
        raise NetworkFormatError(path, ranges[0][0], "first range must start at address 0")
    for i in range(1, len(starts)):
        if starts[i] <= starts[i - 1]:
            raise NetworkFormatError(
                path, ranges[i][0], f"range start {starts[i]:#09x} overlaps previous range"
            )

    # assemble parameter records
    param_records: dict[int, tuple[MinicolumnLayout, tuple[NeuronTypeParams, ...]]] = {}
    for ptype in sorted({pt for (pt, _s) in types}):
        counts = [0] * 8
        params: list[NeuronTypeParams] = [_FILLER_PARAMS] * 8
        first_line = None
        for slot in range(8):
            rec = types.get((ptype, slot))
            if rec is not None:
                lineno, count, p = rec
                first_line = first_line or lineno
                counts[slot] = count
                params[slot] = p
        try:
            layout = MinicolumnLayout.from_counts(tuple(counts))
        except ValueError as exc:
            raise NetworkFormatError(path, first_line, str(exc)) from None
        param_records[ptype] = (layout, tuple(params))

    # assemble connection records
    post_records: dict[int, PostConnection] = {}
    for (conn, slot), (lineno, delay) in sorted(posts.items()):
        delays = list(post_records.get(conn, PostConnection((None,) * 16)).delays)
        if not 1 <= delay <= 16:
            raise NetworkFormatError(path, lineno, f"delay must be 1-16 ms, got {delay}")
        delays[slot] = delay
        post_records[conn] = PostConnection(tuple(delays))

    pre_records: dict[tuple[int, int], ConnectionRule] = {}
    for (conn, slot), (lineno, offset, fanout, hc_size) in pres.items():
        wrec = weights.get((conn, slot))
        mrec = masks.get((conn, slot))
        if wrec is None:
            raise NetworkFormatError(path, lineno, f"pre ({conn},{slot}) has no weights line")
        if mrec is None:
            raise NetworkFormatError(path, lineno, f"pre ({conn},{slot}) has no masks line")
        try:
            pre_records[(conn, slot)] = ConnectionRule(
                offset=offset,
                fanout_size=fanout,
                dest_hc_size=hc_size,
                weights=wrec[1],
                masks=mrec[1],
            )
        except TableError as exc:
            raise NetworkFormatError(path, lineno, str(exc)) from None
    for (conn, slot), (lineno, _w) in weights.items():
        if (conn, slot) not in pres:
            raise NetworkFormatError(path, lineno, f"weights ({conn},{slot}) has no pre line")
    for (conn, slot), (lineno, _m) in masks.items():
        if (conn, slot) not in pres:
            raise NetworkFormatError(path, lineno, f"masks ({conn},{slot}) has no pre line")
    for (conn, slot), (lineno, _delay) in posts.items():
        if (conn, slot) not in pres:
            raise NetworkFormatError(
                path, lineno, f"post ({conn},{slot}) enabled but has no pre rule"
            )

    try:
        return ParamTable(
            cam=RangeCam(tuple(starts)),
            range_param_type=tuple(r[3] for r in ranges),
            range_conn=tuple(r[4] for r in ranges),
            param_records=param_records,
            post_records=post_records,
            pre_records=pre_records,
            network_seed=seed,
        )
    except TableError as exc:
        raise NetworkFormatError(path, None, str(exc)) from None


def _fmt_real(x: float) -> str:
    return f"{x:g}"


def serialize_network(table: ParamTable) -> str:
    """Canonical text form; parse(serialize(t)) == t for generated tables."""
    lines = [f"seed {table.network_seed}"]
    for i, start in enumerate(table.cam.thresholds):
        lines.append(
            f"range {i} {start:07x} {table.range_param_type[i]} {table.range_conn[i]}"
        )
    for ptype in sorted(table.param_records):
        layout, params = table.param_records[ptype]
        counts = layout.counts()
        for slot in range(8):
            if counts[slot] == 0:
                continue
            p = params[slot]
            tau_epsc = _leak_to_tau(p.leak_epsc)
            tau_ipsc = _leak_to_tau(p.leak_ipsc)
            tau_mem = _leak_to_tau(p.leak_mem)
            tau_rfc = _leak_to_tau(p.leak_rfc)
            lines.append(
                f"type {ptype} {slot} {counts[slot]} "
                f"{_fmt_real(tau_epsc)} {_fmt_real(tau_ipsc)} {_fmt_real(tau_mem)} "
                f"{_fmt_real(tau_rfc)} {_fmt_real(p.g_syn / 16)} {_fmt_real(p.g_psc / 16)} "
                f"{p.v_init} {p.v_reset}"
            )
    for conn in sorted(table.post_records):
        for slot, delay in table.post_records[conn].enabled_slots():
            lines.append(f"post {conn} {slot} {delay}")
    for conn, slot in sorted(table.pre_records):
        rule = table.pre_records[(conn, slot)]
        lines.append(
            f"pre {conn} {slot} {rule.offset:05x} {rule.fanout_size} {rule.dest_hc_size}"
        )
        lines.append(
            f"weights {conn} {slot} " + " ".join(str(w) for w in rule.weights)
        )
        lines.append(
            f"masks {conn} {slot} " + " ".join(f"{m:02x}" for m in rule.masks)
        )
    return "\n".join(lines) + "\n"


def _leak_to_tau(leak: int) -> float:
    """Smallest-representation time constant that quantizes back to ``leak``."""
    if leak <= 0:
        return 0.01
    tau = leak / (256.0 - leak) if leak < 256 else 30.0
    # search a short decimal that round-trips
    for digits in range(0, 6):
        cand = round(tau, digits)
        if cand > 0 and cand <= 30.0 and math.floor(256 * cand / (cand + 1) + 0.5) == min(
            255, leak
        ):
            return cand
    return min(tau, 30.0)


def write_network(table: ParamTable, path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(serialize_network(table))


# ---------------------------------------------------------------------------
# stimulus files
# ---------------------------------------------------------------------------

def parse_stimulus(path: str) -> list[tuple[int, int, bytes]]:
    events: list[tuple[int, int, bytes]] = []
    last_t = None
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            text = raw.split("#", 1)[0].strip()
            if not text:
                continue
            fields = text.split()
            if fields[0] != "ev" or len(fields) != 11:
                raise NetworkFormatError(path, lineno, "stimulus lines are 'ev t addr c0..c7'")
            try:
                t = int(fields[1])
                addr = int(fields[2], 16)
                counts = tuple(int(c) for c in fields[3:])
            except ValueError as exc:
                raise NetworkFormatError(path, lineno, f"bad field: {exc}") from None
            if last_t is not None and t < last_t:
                raise NetworkFormatError(path, lineno, f"timestamps out of order at t={t}")
            last_t = t
            if not 0 <= addr <= ADDR_MASK:
                raise NetworkFormatError(path, lineno, f"address out of range: {addr:#x}")
            if any(not 0 <= c <= 15 for c in counts):
                raise NetworkFormatError(path, lineno, "counts must be in [0, 15]")
            events.append((t, addr, bytes(counts)))
    return events


def serialize_stimulus(events: list[tuple[int, int, bytes]]) -> str:
    lines = [
        f"ev {t} {addr:07x} " + " ".join(str(c) for c in counts)
        for t, addr, counts in events
    ]
    return "\n".join(lines) + ("\n" if lines else "")


def write_stimulus(events: list[tuple[int, int, bytes]], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(serialize_stimulus(events))


# ---------------------------------------------------------------------------
# record sinks
# ---------------------------------------------------------------------------

class SpikeFileSink:
    """CSV records: time_ms,minicolumn_addr_hex,bitmap_hex25."""

    def __init__(self, path: str):
        self._fh = open(path, "w", encoding="utf-8", newline="\n")

    def write_spikes(self, t: int, addr: int, bitmap: int) -> None:
        self._fh.write(f"{t},{addr:07x},{bitmap:025x}\n")

    def flush(self) -> None:
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()


class EventFileSink:
    """CSV records: time_ms,minicolumn_addr_hex,type,count."""

    def __init__(self, path: str):
        self._fh = open(path, "w", encoding="utf-8", newline="\n")

    def write_events(self, t, addrs, types, counts) -> None:
        self._fh.write(
            "".join(
                f"{t},{a:07x},{ty},{c}\n"
                for a, ty, c in zip(addrs.tolist(), types.tolist(), counts.tolist())
            )
        )

    def flush(self) -> None:
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()


class StatsFileSink:
    """CSV records: time_ms,active_tm_minicolumns."""

    def __init__(self, path: str):
        self._fh = open(path, "w", encoding="utf-8", newline="\n")

    def write_stats(self, t: int, active: int) -> None:
        self._fh.write(f"{t},{active}\n")

    def flush(self) -> None:
        self._fh.flush()

    def close(self) -> None:
        self._fh.close()


class EventCollector:
    """In-memory event sink for analysis without file I/O."""

    def __init__(self):
        self.records: list[tuple[int, int, int, int]] = []

    def write_events(self, t, addrs, types, counts) -> None:
        self.records.extend(
            (t, int(a), int(ty), int(c))
            for a, ty, c in zip(addrs.tolist(), types.tolist(), counts.tolist())
        )


class SpikeCollector:
    def __init__(self):
        self.records: list[tuple[int, int, int]] = []

    def write_spikes(self, t: int, addr: int, bitmap: int) -> None:
        self.records.append((t, addr, bitmap))


class StatsCollector:
    def __init__(self):
        self.records: list[tuple[int, int]] = []

    def write_stats(self, t: int, active: int) -> None:
        self.records.append((t, active))


class ChannelPresenceSink:
    """Aggregates event records into a per-channel emission timeline.

    Keeps a channels-by-steps presence matrix instead of raw records, so
    long runs stay cheap to monitor.
    """

    def __init__(self, channels: int, steps: int):
        self.channels = channels
        self.presence = np.zeros((channels, steps), dtype=bool)
        self._stride = channel_stride(channels)

    def write_events(self, t, addrs, types, counts) -> None:
        ch = (addrs >> MINI_BITS) // self._stride
        ok = ch < self.channels
        self.presence[ch[ok], t] = True

    def longest_run(self, channel: int) -> int:
        row = self.presence[channel]
        best = cur = 0
        for v in row:
            cur = cur + 1 if v else 0
            if cur > best:
                best = cur
        return best

    def first_emission(self, channel: int) -> int | None:
        hits = np.flatnonzero(self.presence[channel])
        return int(hits[0]) if len(hits) else None


# ---------------------------------------------------------------------------
# auditory-cortex generator
# ---------------------------------------------------------------------------

# Six neuron types implement three laminar groups, excitatory/inhibitory:
# 0 upper-E, 1 upper-I, 2 input-E, 3 input-I, 4 deep-E, 5 deep-I.
AUDITORY_COUNTS = (32, 8, 16, 4, 32, 8, 0, 0)
EXC_TYPES = (0, 2, 4)
INH_TYPES = (1, 3, 5)
SOURCES_PER_CHANNEL = 10
MINIS_PER_HYPER = 100

def masks_from_sets(listens: dict[int, tuple[int, ...]]) -> tuple[int, ...]:
    """Mask bytes from {destination type: (source types...)}."""
    out = [0] * 8
    for d, sources in listens.items():
        for s in sources:
            out[d] |= 1 << s
    return tuple(out)


# Laminar connection motif, intra-hypercolumn: the input layer ignites the
# upper group, the upper group drives the deep group and the deep group
# feeds back; every excitatory type also recruits inhibitory types whose
# summed drive overtakes the excitation once the column runs hot, which is
# what lets a channel fall back to silence after a stimulus burst.
DEFAULT_INTRA = masks_from_sets({
    0: (2, 4, 1, 3, 5),  # upper-E <- input-E, deep-E, all three I types
    1: (0, 2),           # upper-I <- upper-E, input-E
    2: (0, 1, 3),        # input-E <- upper-E, gated by upper-I and input-I
    3: (0,),             # input-I <- upper-E
    4: (0, 3, 5),        # deep-E <- upper-E, gated by input-I and deep-I
    5: (0, 4),           # deep-I <- upper-E, deep-E
})
# Between neighbouring hypercolumns the spread is excitatory: the upper
# group recruits the neighbour's input layer and the deep groups couple
# directly, which keeps a stimulated channel reverberating well past the
# burst while the within-column inhibition holds rates down.
DEFAULT_INTER = masks_from_sets({
    2: (0,),
    4: (4,),
})
# Neighbour links are slower than the local loop; the spread of arrival
# times is what stops the whole channel from quenching in lockstep.
DEFAULT_DELAYS = (3, 13, 16)
_SOURCE_MASKS = (0x00, 0x00, 0x01, 0x00, 0x00, 0x00, 0x00, 0x00)

_EXC_W = 3   # nearest code to 0.4
_INH_W = -8  # nearest code to -1.0
_CORTEX_WEIGHTS = (_EXC_W, _INH_W, _EXC_W, _INH_W, _EXC_W, _INH_W, 0, 0)
_SOURCE_WEIGHTS = (_EXC_W, 0, 0, 0, 0, 0, 0, 0)


def channel_stride(channels: int) -> int:
    return (HYPER_MASK + 1) // channels


def channel_of(addr: int, channels: int) -> int:
    return (addr >> MINI_BITS) // channel_stride(channels)


@dataclass(frozen=True)
class AuditoryGeometry:
    channels: int
    hypercolumns: int
    stride: int

    def cortex_hyper(self, channel: int, h: int) -> int:
        return channel * self.stride + h

    def source_hyper(self, channel: int, k: int) -> int:
        return channel * self.stride + self.hypercolumns + k

    def source_addr(self, channel: int, k: int) -> int:
        return self.source_hyper(channel, k) << MINI_BITS

    def channel_addr_range(self, channel: int) -> tuple[int, int]:
        lo = self.cortex_hyper(channel, 0) << MINI_BITS
        hi = (self.cortex_hyper(channel, self.hypercolumns - 1) + 1) << MINI_BITS
        return lo, hi


def auditory_geometry(channels: int, hypercolumns: int) -> AuditoryGeometry:
    if channels < 1:
        raise ValueError("need at least one channel")
    if hypercolumns < 3:
        raise ValueError("need at least three hypercolumns per channel (two neighbours)")
    if channels * hypercolumns * MINIS_PER_HYPER > (ADDR_MASK + 1):
        raise ValueError("network exceeds the 27-bit address space")
    stride = channel_stride(channels)
    if stride < hypercolumns + SOURCES_PER_CHANNEL:
        raise ValueError(
            f"channel block of {hypercolumns}+{SOURCES_PER_CHANNEL} hypercolumns does "
            f"not fit the per-channel address stride {stride}"
        )
    source_groups = -(-SOURCES_PER_CHANNEL // hypercolumns)  # ceil
    n_ranges = channels * (3 + source_groups)
    if n_ranges > MAX_RANGES:
        raise ValueError(
            f"{channels} channels x {hypercolumns} hypercolumns needs {n_ranges} "
            f"address ranges, beyond the {MAX_RANGES}-range capacity"
        )
    return AuditoryGeometry(channels, hypercolumns, stride)


def gen_auditory_network(
    channels: int,
    hypercolumns: int,
    seed: int,
    intra_masks: tuple[int, ...] = DEFAULT_INTRA,
    inter_masks: tuple[int, ...] = DEFAULT_INTER,
    delays: tuple[int, int, int] = DEFAULT_DELAYS,
) -> ParamTable:
    """Tonotopic multi-channel network: per channel, a chain of hypercolumns
    with recurrent and nearest-neighbour projections, plus ten dedicated
    stimulus-source hypercolumns feeding the input layer; channels never
    connect to each other."""
    geo = auditory_geometry(channels, hypercolumns)
    h = hypercolumns
    wrap = HYPER_MASK + 1

    params = tuple(
        NeuronTypeParams.from_biological(5.8, 5.8, 5.8, 3.0, 1.0, 1.0, v_init=0, v_reset=-4)
        if AUDITORY_COUNTS[slot]
        else _FILLER_PARAMS
        for slot in range(8)
    )
    layout = MinicolumnLayout.from_counts(AUDITORY_COUNTS)
    param_records = {1: (layout, params)}

    starts: list[int] = []
    range_pt: list[int] = []
    range_conn: list[int] = []
    post_records: dict[int, PostConnection] = {}
    pre_records: dict[tuple[int, int], ConnectionRule] = {}

    def cortex_rule(offset: int, slot: int) -> ConnectionRule:
        masks = intra_masks if slot == 0 else inter_masks
        return ConnectionRule(
            offset=offset % wrap,
            fanout_size=8,
            dest_hc_size=MINIS_PER_HYPER,
            weights=_CORTEX_WEIGHTS,
            masks=masks,
        )

    three_slots = PostConnection(tuple(delays) + (None,) * 13)
    one_slot = PostConnection((1,) + (None,) * 15)

    source_groups = -(-SOURCES_PER_CHANNEL // h)  # sources sharing one offset
    conns_per_channel = 3 + source_groups
    for c in range(channels):
        base = geo.cortex_hyper(c, 0)
        cid = conns_per_channel * c
        # first hypercolumn: the "previous" neighbour wraps to the far end
        starts.append(base << MINI_BITS)
        range_pt.append(1)
        range_conn.append(cid + 1)
        post_records[cid + 1] = three_slots
        pre_records[(cid + 1, 0)] = cortex_rule(0, 0)
        pre_records[(cid + 1, 1)] = cortex_rule(1, 1)
        pre_records[(cid + 1, 2)] = cortex_rule(h - 1, 2)
        # interior hypercolumns: plain +/-1 neighbours
        starts.append((base + 1) << MINI_BITS)
        range_pt.append(1)
        range_conn.append(cid + 2)
        post_records[cid + 2] = three_slots
        pre_records[(cid + 2, 0)] = cortex_rule(0, 0)
        pre_records[(cid + 2, 1)] = cortex_rule(1, 1)
        pre_records[(cid + 2, 2)] = cortex_rule(-1, 2)
        # last hypercolumn: the "next" neighbour wraps to the start
        starts.append((base + h - 1) << MINI_BITS)
        range_pt.append(1)
        range_conn.append(cid + 3)
        post_records[cid + 3] = three_slots
        pre_records[(cid + 3, 0)] = cortex_rule(0, 0)
        pre_records[(cid + 3, 1)] = cortex_rule(1 - h, 1)
        pre_records[(cid + 3, 2)] = cortex_rule(-1, 2)
        # stimulus sources: source k drives hypercolumn k mod h of its
        # channel; sources sharing floor(k/h) share one offset and range
        for j in range(source_groups):
            starts.append(geo.source_hyper(c, j * h) << MINI_BITS)
            range_pt.append(1)
            range_conn.append(cid + 4 + j)
            post_records[cid + 4 + j] = one_slot
            pre_records[(cid + 4 + j, 0)] = ConnectionRule(
                offset=(-h * (1 + j)) % wrap,
                fanout_size=8,
                dest_hc_size=MINIS_PER_HYPER,
                weights=_SOURCE_WEIGHTS,
                masks=_SOURCE_MASKS,
            )

    return ParamTable(
        cam=RangeCam(tuple(starts)),
        range_param_type=tuple(range_pt),
        range_conn=tuple(range_conn),
        param_records=param_records,
        post_records=post_records,
        pre_records=pre_records,
        network_seed=seed,
    )


def poisson_draw(stream: RngStream, lam: float) -> int:
    """Knuth's product method on the stream's 53-bit uniforms."""
    limit = math.exp(-lam)
    k = 0
    p = 1.0
    while True:
        p *= stream.uniform()
        if p <= limit:
            return k
        k += 1


def gen_auditory_stimulus(
    channels: int,
    hypercolumns: int,
    seed: int,
    sweep_ms: int = 10,
    repeats: int = 10,
    rate_hz: float = 1000.0,
) -> list[tuple[int, int, bytes]]:
    """Swept stimulus: during channel c's window of each sweep, its ten
    sources emit Poisson spike counts at ``rate_hz`` (the canonical
    100-channel sweep makes that a ~10 Hz average once the 1% duty cycle
    is folded in)."""
    geo = auditory_geometry(channels, hypercolumns)
    lam = rate_hz / 1000.0
    events: list[tuple[int, int, bytes]] = []
    for c in range(channels):
        for k in range(SOURCES_PER_CHANNEL):
            stream = RngStream(derive_seed(seed, _STIM_STREAM, c, k))
            addr = geo.source_addr(c, k)
            for rep in range(repeats):
                t0 = (rep * channels + c) * sweep_ms
                for dt in range(sweep_ms):
                    n = poisson_draw(stream, lam)
                    if n:
                        counts = bytes((min(n, 15), 0, 0, 0, 0, 0, 0, 0))
                        events.append((t0 + dt, addr, counts))
    events.sort(key=lambda e: (e[0], e[1]))
    return events


def gen_auditory(
    channels: int,
    hypercolumns: int,
    seed: int,
    net_path: str,
    stim_path: str,
    sweep_ms: int = 10,
    repeats: int = 10,
    rate_hz: float = 1000.0,
) -> None:
    """Write the generated network and stimulus files."""
    table = gen_auditory_network(channels, hypercolumns, seed)
    write_network(table, net_path)
    write_stimulus(
        gen_auditory_stimulus(channels, hypercolumns, seed, sweep_ms, repeats, rate_hz),
        stim_path,
    )


# ---------------------------------------------------------------------------
# figure data
# ---------------------------------------------------------------------------

def emit_figures(
    events_path: str | None,
    stats_path: str | None,
    channels: int,
    out_prefix: str,
    steps: int | None = None,
) -> list[str]:
    """Channel-by-time activity grids and the active-slot trace, as CSV.

    The excitatory and inhibitory grids are normalized separately to their
    own peak counts.  Returns the list of files written.
    """
    written: list[str] = []
    if events_path is not None:
        recs = []
        with open(events_path, encoding="utf-8") as fh:
            for line in fh:
                t_s, addr_s, ty_s, c_s = line.rstrip("\n").split(",")
                recs.append((int(t_s), int(addr_s, 16), int(ty_s), int(c_s)))
        t_max = steps if steps is not None else (max((r[0] for r in recs), default=0) + 1)
        grid_exc = np.zeros((channels, t_max))
        grid_inh = np.zeros((channels, t_max))
        for t, addr, ty, count in recs:
            ch = channel_of(addr, channels)
            if not 0 <= ch < channels or t >= t_max:
                continue
            if ty in EXC_TYPES:
                grid_exc[ch, t] += count
            elif ty in INH_TYPES:
                grid_inh[ch, t] += count
        for grid, name in ((grid_exc, "exc"), (grid_inh, "inh")):
            peak = grid.max()
            if peak > 0:
                grid = grid / peak
            path = f"{out_prefix}_grid_{name}.csv"
            np.savetxt(path, grid, delimiter=",", fmt="%.6g")
            written.append(path)
    if stats_path is not None:
        rows = []
        with open(stats_path, encoding="utf-8") as fh:
            for line in fh:
                t_s, a_s = line.rstrip("\n").split(",")
                rows.append((int(t_s), int(a_s)))
        path = f"{out_prefix}_active_trace.csv"
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for t, a in rows:
                fh.write(f"{t},{a}\n")
        written.append(path)
    return written
