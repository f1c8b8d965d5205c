"""Kinetic Kuramoto model: particle, quantile and finite-volume solvers plus
verification experiments for its synchronization estimates."""
from .core import (
    FrequencyDensity,
    GridDensity,
    PhaseEnsemble,
    QuantileField,
    build_cdf,
    make_frequency_density,
    pseudo_inverse,
    quantile_field_from_density,
    support_box,
)
from .errors import KineticError, PreconditionViolated
from .fvsolver import fv_simulate
from .metrics import lemma_cal_check, modified_wp, w1_empirical
from .particle import ParticleParams, simulate
from .quantile import KineticParams, evolve

__version__ = "0.1.0"

__all__ = [
    "FrequencyDensity",
    "GridDensity",
    "KineticError",
    "KineticParams",
    "ParticleParams",
    "PhaseEnsemble",
    "PreconditionViolated",
    "QuantileField",
    "build_cdf",
    "evolve",
    "fv_simulate",
    "lemma_cal_check",
    "make_frequency_density",
    "modified_wp",
    "pseudo_inverse",
    "quantile_field_from_density",
    "simulate",
    "support_box",
    "w1_empirical",
]
