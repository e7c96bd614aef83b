"""
heavytail-async
===============

Deterministic simulator of buffered asynchronous optimisation with
clipped local and server steps under heavy-tailed gradient noise.
"""

from .aggregator import AggregationPolicy, PolicyKind, ServerState, aggregate
from .clipping import PowerSchedule, PresetName, ScheduleSet, SchedulePreset, clip, resolve_preset
from .config import Config, config
from .experiment import Mode, RunConfig, load_config
from .metrics import RunResult, delay_histogram, rate_slope, read_run, write_run
from .noise import NoiseKind, NoiseSpec, sample_noise
from .problems import ProblemKind, ProblemSpec, build_problem
from .runtimes import ClientGroup, RuntimeClass, client_mix
from .simulation import run_simulation
from .sweep import SweepSpec, published_grid, run_sweep
from .worker import ClientUpdate, run_local

__version__ = "0.1.0"

__all__ = [
    "AggregationPolicy",
    "ClientGroup",
    "ClientUpdate",
    "Config",
    "Mode",
    "NoiseKind",
    "NoiseSpec",
    "PolicyKind",
    "PowerSchedule",
    "PresetName",
    "ProblemKind",
    "ProblemSpec",
    "RunConfig",
    "RunResult",
    "RuntimeClass",
    "ScheduleSet",
    "SchedulePreset",
    "ServerState",
    "SweepSpec",
    "aggregate",
    "build_problem",
    "client_mix",
    "clip",
    "config",
    "delay_histogram",
    "load_config",
    "published_grid",
    "rate_slope",
    "read_run",
    "resolve_preset",
    "run_local",
    "run_simulation",
    "run_sweep",
    "sample_noise",
    "write_run",
]
