"""Builder API, run harness and plotting client for the cortexsim engine."""

from .auditory import build_auditory
from .model import BuildError, NetworkBuilder, PopulationSpec, ProjectionSpec, TypeParams
from .runner import EngineError, RunTables, run_and_load
from .plots import plot_active_trace, plot_heatmap, plot_raster

__all__ = [
    "build_auditory",
    "BuildError",
    "NetworkBuilder",
    "PopulationSpec",
    "ProjectionSpec",
    "TypeParams",
    "EngineError",
    "RunTables",
    "run_and_load",
    "plot_active_trace",
    "plot_heatmap",
    "plot_raster",
]
