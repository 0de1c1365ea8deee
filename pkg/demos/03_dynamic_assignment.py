#!/usr/bin/env python3
"""Dynamic assignment: billions of addressable minicolumns, thousands of
live slots.

The arbiters bind a 27-bit minicolumn address to a time-multiplexed slot
only while it is receiving input or its neurons are away from rest.  This
demo drives a single recurrent hypercolumn, watches slots bind, then lets
the burst die away and watches every slot return to the pool.
"""

from cortexsim.engine import Engine, EngineConfig
from cortexsim.neuron import MinicolumnLayout, NeuronTypeParams
from cortexsim.tables import ConnectionRule, ParamTable, PostConnection, RangeCam

# a single parameter record covering the whole address space; every
# minicolumn scatters inhibition into its own hypercolumn, so stimulated
# columns light up, never spike, and drift back to rest
params = (NeuronTypeParams.from_biological(5.8, 5.8, 5.8, 3.0, 1.0, 1.0),) * 8
table = ParamTable(
    cam=RangeCam((0,)),
    range_param_type=(1,),
    range_conn=(1,),
    param_records={1: (MinicolumnLayout.from_counts((100, 0, 0, 0, 0, 0, 0, 0)), params)},
    post_records={1: PostConnection((1,) + (None,) * 15)},
    pre_records={
        (1, 0): ConnectionRule(
            offset=0,
            fanout_size=32,
            dest_hc_size=100,
            weights=(-8, 0, 0, 0, 0, 0, 0, 0),
            masks=(0x01, 0, 0, 0, 0, 0, 0, 0),
        )
    },
    network_seed=9,
)

engine = Engine(table, EngineConfig(tm_minicolumns=4096, master_seed=1))
stimulus = [(t, 0, bytes((15, 0, 0, 0, 0, 0, 0, 0))) for t in range(3)]
engine.inject(stimulus)

print(f"{'t':>4} {'bound slots':>12} {'arbiter occupancy (first 4)':>30}")
for t in range(150):
    stats = engine.run_step(t)
    if t < 10 or t % 10 == 0 or stats.active_tm_minicolumns == 0:
        occ = stats.arbiter_occupancy[:4]
        print(f"{t:4d} {stats.active_tm_minicolumns:12d} {str(occ):>30}")
    if t > 10 and stats.active_tm_minicolumns == 0:
        print(f"\nall slots released by t={t}: the pool is fully recycled")
        break
engine.close()
