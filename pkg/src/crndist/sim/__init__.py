"""Stochastic simulation and verification."""

from .rng import CounterRNG, mix64, stream_key
from .simulate import (
    OccupancyEstimate,
    Perturbation,
    PerturbationWarning,
    SimConfig,
    SimulationResult,
    VerifyReport,
    estimate_limit,
    occupancy_tsv,
    read_occupancy_tsv,
    read_trajectory_tsv,
    simulate,
    trajectory_tsv,
    tune_delta,
    verify,
    warmup,
)

__all__ = [
    "CounterRNG",
    "OccupancyEstimate",
    "Perturbation",
    "PerturbationWarning",
    "SimConfig",
    "SimulationResult",
    "VerifyReport",
    "estimate_limit",
    "mix64",
    "occupancy_tsv",
    "read_occupancy_tsv",
    "read_trajectory_tsv",
    "simulate",
    "stream_key",
    "trajectory_tsv",
    "tune_delta",
    "verify",
    "warmup",
]
