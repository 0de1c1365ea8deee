#!/usr/bin/env python3
"""Build the swept-tone cortex model through the builder API, run it on
the engine, and plot the results.

The exported files are byte-identical to `cortexsim gen-auditory` with
the same seed; the plots show the tonotopic diagonal: each channel wakes
as the sweep reaches its window and keeps reverberating afterwards.
"""

from netbuilder import build_auditory, run_and_load
from netbuilder.plots import plot_active_trace, plot_heatmap, plot_raster

CHANNELS, HYPERS, SEED, STEPS = 10, 10, 1, 300

builder = build_auditory(CHANNELS, HYPERS, seed=SEED, repeats=3)
builder.build("auditory_net.txt", "auditory_stim.txt")
print("wrote auditory_net.txt / auditory_stim.txt")

tables = run_and_load(
    "auditory_net.txt", "auditory_stim.txt",
    steps=STEPS, seed=0, tm_minicolumns=32768, f_gate=916, burst=1 << 20,
    monitor="0000000:0032000",  # raster: channel 0's cortex block only
)
print(tables.stdout.strip())
print(f"spike records: {len(tables.spikes)}, event records: {len(tables.events)}")

print(plot_raster(tables.spikes, "auditory_raster.png"))
print(plot_heatmap(tables.events, CHANNELS, STEPS, "auditory_heatmap.png"))
print(plot_active_trace(tables.stats, "auditory_active.png"))
