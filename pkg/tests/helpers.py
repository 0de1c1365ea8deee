"""Shared builders for small test networks."""

from cortexsim.neuron import MinicolumnLayout, NeuronTypeParams
from cortexsim.tables import ConnectionRule, ParamTable, PostConnection, RangeCam

UNIFORM_LAYOUT = MinicolumnLayout.from_counts((100, 0, 0, 0, 0, 0, 0, 0))
DRIVER_PARAMS = NeuronTypeParams.from_biological(5.8, 5.8, 5.8, 3.0, 1.0, 1.0,
                                                 v_init=0, v_reset=-4)


def self_loop_table(weight=7, fanout=1, dest_hc_size=1, delay=1, seed=0,
                    g_syn=1.0, g_psc=1.0) -> ParamTable:
    """One parameter record covering all addresses; every minicolumn projects
    back into its own hypercolumn."""
    params = (NeuronTypeParams.from_biological(5.8, 5.8, 5.8, 3.0, g_syn, g_psc,
                                               v_init=0, v_reset=-4),) * 8
    return ParamTable(
        cam=RangeCam((0,)),
        range_param_type=(1,),
        range_conn=(1,),
        param_records={1: (UNIFORM_LAYOUT, params)},
        post_records={1: PostConnection((delay,) + (None,) * 15)},
        pre_records={
            (1, 0): ConnectionRule(
                offset=0,
                fanout_size=fanout,
                dest_hc_size=dest_hc_size,
                weights=(weight, 0, 0, 0, 0, 0, 0, 0),
                masks=(0x01, 0, 0, 0, 0, 0, 0, 0),
            )
        },
        network_seed=seed,
    )


def burst_stimulus(source=0, t0=0, n_steps=1, count=15):
    return [(t0 + i, source, bytes((count, 0, 0, 0, 0, 0, 0, 0))) for i in range(n_steps)]


def calibrated_gate(tm_minicolumns: int, opportunities_per_segment: int = 1) -> int:
    """Gate value making the class-1 mean delay about one step: scale the
    per-step class-1 selection rate down to one."""
    from cortexsim.axon import delay_thresholds

    r, _ = delay_thresholds()
    p1 = r[0] / 2**20
    opportunities = (tm_minicolumns // 1024) * opportunities_per_segment
    open_frac = min(1.0, 1.0 / (opportunities * p1))
    return max(0, min(1023, round(1024 * (1 - open_frac))))
