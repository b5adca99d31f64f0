"""Stationary-law computation, certificates and bounds."""

from .bounds import (
    MixingBound,
    UniformBound,
    birth_threshold,
    bound_mixing_birth,
    bound_mixing_decay,
    exact_point_mass_stationary,
    unif_error_bound,
    uniform_D,
)
from .detailed_balance import (
    DB_TOL,
    DetailedBalanceCertificate,
    certificate_residual,
    db_stationary,
    reachability_class,
    reversible_pairs,
    solve_detailed_balance,
)
from .oracle import closed_classes, oracle_stationary, truncated_generator
from .tables import StationaryTable

__all__ = [
    "DB_TOL",
    "DetailedBalanceCertificate",
    "MixingBound",
    "StationaryTable",
    "UniformBound",
    "birth_threshold",
    "bound_mixing_birth",
    "bound_mixing_decay",
    "certificate_residual",
    "closed_classes",
    "db_stationary",
    "exact_point_mass_stationary",
    "oracle_stationary",
    "reachability_class",
    "reversible_pairs",
    "solve_detailed_balance",
    "truncated_generator",
    "unif_error_bound",
    "uniform_D",
]
