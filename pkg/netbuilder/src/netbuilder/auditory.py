"""The swept-tone multi-channel cortex model, built through the generic API.

Reproduces the engine generator's canonical output byte for byte given
the same seed: same address layout (channels on a 2^20//C hypercolumn
stride), same laminar motif, same delays and the same Poisson sweep.
"""

from __future__ import annotations

from .model import NetworkBuilder, PopulationSpec, ProjectionSpec, TypeParams
from .stim import sweep_stimulus

COUNTS = (32, 8, 16, 4, 32, 8, 0, 0)
SOURCES_PER_CHANNEL = 10
MINIS_PER_HYPER = 100
HYPER_SPAN = 1 << 20

# Laminar motif bytes: masks[d] bit s routes source type s to dest type d.
# Within a hypercolumn the input layer ignites the upper group, the upper
# group drives the deep group and feeds every inhibitory type; between
# neighbours the spread is excitatory (upper-E -> input-E, deep-E -> deep-E).
INTRA_MASKS = (0x3E, 0x05, 0x0B, 0x01, 0x29, 0x11, 0x00, 0x00)
INTER_MASKS = (0x00, 0x00, 0x01, 0x00, 0x10, 0x00, 0x00, 0x00)
SOURCE_MASKS = (0x00, 0x00, 0x01, 0x00, 0x00, 0x00, 0x00, 0x00)

CORTEX_WEIGHTS = (3, -8, 3, -8, 3, -8, 0, 0)  # 0.4 / -1.0 quantized
SOURCE_WEIGHTS = (3, 0, 0, 0, 0, 0, 0, 0)
DELAYS = (3, 13, 16)  # recurrent slot, +1 neighbour, -1 neighbour

TABLE_PARAMS = TypeParams(
    tau_epsc_ms=5.8, tau_ipsc_ms=5.8, tau_mem_ms=5.8, tau_rfc_ms=3.0,
    g_syn=1.0, g_psc=1.0, v_init=0, v_reset=-4,
)


def channel_stride(channels: int) -> int:
    return HYPER_SPAN // channels


def source_addr(channels: int, hypercolumns: int, c: int, k: int) -> int:
    return (c * channel_stride(channels) + hypercolumns + k) << 7


def build_auditory(
    channels: int,
    hypercolumns: int,
    seed: int,
    sweep_ms: int = 10,
    repeats: int = 10,
    rate_hz: float = 1000.0,
) -> NetworkBuilder:
    if hypercolumns < 3:
        raise ValueError("need at least three hypercolumns per channel")
    stride = channel_stride(channels)
    if stride < hypercolumns + SOURCES_PER_CHANNEL:
        raise ValueError("channel block does not fit the per-channel stride")
    h = hypercolumns
    b = NetworkBuilder(seed=seed)
    b.define_types(1, COUNTS, {slot: TABLE_PARAMS for slot in range(6)})

    source_groups = -(-SOURCES_PER_CHANNEL // h)
    conns_per_channel = 3 + source_groups

    def cortex(conn_id: int, slot: int, delay: int, offset: int) -> None:
        b.add_projection(ProjectionSpec(
            conn_id=conn_id, slot=slot, delay_ms=delay, offset=offset % HYPER_SPAN,
            fanout=8, dest_hc_size=MINIS_PER_HYPER,
            weights=CORTEX_WEIGHTS,
            masks=INTRA_MASKS if slot == 0 else INTER_MASKS,
        ))

    for c in range(channels):
        base = c * stride
        cid = conns_per_channel * c
        # edge hypercolumn 0: the -1 neighbour wraps to the channel's far end
        b.add_population(PopulationSpec(base << 7, 1, cid + 1))
        cortex(cid + 1, 0, DELAYS[0], 0)
        cortex(cid + 1, 1, DELAYS[1], 1)
        cortex(cid + 1, 2, DELAYS[2], h - 1)
        # interior hypercolumns
        b.add_population(PopulationSpec((base + 1) << 7, 1, cid + 2))
        cortex(cid + 2, 0, DELAYS[0], 0)
        cortex(cid + 2, 1, DELAYS[1], 1)
        cortex(cid + 2, 2, DELAYS[2], -1)
        # edge hypercolumn h-1: the +1 neighbour wraps to the start
        b.add_population(PopulationSpec((base + h - 1) << 7, 1, cid + 3))
        cortex(cid + 3, 0, DELAYS[0], 0)
        cortex(cid + 3, 1, DELAYS[1], 1 - h)
        cortex(cid + 3, 2, DELAYS[2], -1)
        # stimulus sources, grouped so each group shares one offset
        for j in range(source_groups):
            b.add_population(PopulationSpec((base + h + j * h) << 7, 1, cid + 4 + j))
            b.add_projection(ProjectionSpec(
                conn_id=cid + 4 + j, slot=0, delay_ms=1,
                offset=(-h * (1 + j)) % HYPER_SPAN,
                fanout=8, dest_hc_size=MINIS_PER_HYPER,
                weights=SOURCE_WEIGHTS, masks=SOURCE_MASKS,
            ))

    b.add_events(sweep_stimulus(
        channels, hypercolumns, seed,
        source_addr=lambda c, k: source_addr(channels, hypercolumns, c, k),
        sweep_ms=sweep_ms, repeats=repeats, rate_hz=rate_hz,
    ))
    return b
