"""Discrete stochastic calculus on lattices.

Configs are either ``key = value`` text or a dict; list values are passed as
Python lists.
"""

from ._latkin import (
    BoundaryReached,
    ConfigError,
    DimensionError,
    DomainViolation,
    EvolutionExhausted,
    LatkinError,
    LimitNotFound,
    OffLattice,
    SingularMatrix,
    UnsupportedInput,
    classify_generator,
    converge,
    identity_suite,
    kramers_gauge,
    kramers_gauge_solve,
    scaling_diagnose,
    simulate,
)

__all__ = [
    "BoundaryReached",
    "ConfigError",
    "DimensionError",
    "DomainViolation",
    "EvolutionExhausted",
    "LatkinError",
    "LimitNotFound",
    "OffLattice",
    "SingularMatrix",
    "UnsupportedInput",
    "classify_generator",
    "converge",
    "identity_suite",
    "kramers_gauge",
    "kramers_gauge_solve",
    "scaling_diagnose",
    "simulate",
]
