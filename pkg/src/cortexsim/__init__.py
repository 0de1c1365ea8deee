"""Time-multiplexed, dynamically assigned minicolumn network simulator."""

from .engine import Engine, EngineConfig, RunSummary, StepStats, hw_time_model
from .fixedpoint import MiniAddr, addr_wrap_add, decay_stochastic, leak_code
from .neuron import MinicolumnLayout, NeuronTypeParams
from .rng import RngStream
from .tables import ConnectionRule, ParamTable, PostConnection, RangeCam

__all__ = [
    "Engine",
    "EngineConfig",
    "RunSummary",
    "StepStats",
    "hw_time_model",
    "MiniAddr",
    "addr_wrap_add",
    "decay_stochastic",
    "leak_code",
    "MinicolumnLayout",
    "NeuronTypeParams",
    "RngStream",
    "ConnectionRule",
    "ParamTable",
    "PostConnection",
    "RangeCam",
]
