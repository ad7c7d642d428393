"""Hybrid quantum-classical solver for the drone delivery packing problem."""

__version__ = "0.1.0"

from .correction import FeasiblePool, build_pool, enforce_budget, enforce_is
from .embedding import AtomRegister, HardwareLimits, embed_graph, validate_register
from .emulator import evolve, sample
from .errors import DdppError, LimitError
from .instances import DdppInstance, Delivery, generate_instance, load_instance, save_instance
from .partition import PartitionSolution, enumerate_exact, greedy_baseline, metrics, solve_partition
from .pipeline import PipelineConfig, run_pipeline
from .pulses import PulseSchedule, make_schedule, tune_delta_max
from .sampler import SamplerConfig, sample_classical
from .samples import SamplePool
from .schedgraph import SchedGraph, build_graph, is_independent_set

__all__ = [
    "AtomRegister", "DdppError", "DdppInstance", "Delivery", "FeasiblePool", "HardwareLimits", "LimitError",
    "PartitionSolution", "PipelineConfig", "PulseSchedule", "SamplePool", "SamplerConfig", "SchedGraph",
    "build_graph", "build_pool", "embed_graph", "enforce_budget", "enforce_is", "enumerate_exact", "evolve",
    "generate_instance", "greedy_baseline", "is_independent_set", "load_instance", "make_schedule", "metrics",
    "run_pipeline", "sample", "sample_classical", "save_instance", "solve_partition", "tune_delta_max",
    "validate_register",
]
