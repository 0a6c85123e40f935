"""Exact two-level propagation and adiabatic-theorem consistency diagnostics."""

from .diagnostics import (
    DiagnosticsRecord,
    EnsembleMember,
    EnsembleSpec,
    avron_fidelity,
    ensemble_f0,
    ensemble_q,
    evaluate,
    inconsistency_demo,
    overlap_f0,
    q_analytic,
    survival_q,
)
from .errors import (
    AdiaCheckError,
    ConfigError,
    DegenerateSpectrumError,
    IntegrationDivergedError,
    InvalidArgumentError,
    UnsupportedModelError,
)
from .hamiltonians import (
    Constant,
    Counterexample,
    LandauZener,
    RotatingField,
    SpectralFrame,
    Tabulated,
    spectral_frame,
)
from .propagation import (
    IntegratorConfig,
    TimeGrid,
    Trajectory,
    adiabatic_propagator,
    integrate_schrodinger,
    propagate_model,
)
from .tolerances import TOL

__version__ = "0.1.0"

__all__ = [
    "DiagnosticsRecord",
    "EnsembleMember",
    "EnsembleSpec",
    "avron_fidelity",
    "ensemble_f0",
    "ensemble_q",
    "evaluate",
    "inconsistency_demo",
    "overlap_f0",
    "q_analytic",
    "survival_q",
    "AdiaCheckError",
    "ConfigError",
    "DegenerateSpectrumError",
    "IntegrationDivergedError",
    "InvalidArgumentError",
    "UnsupportedModelError",
    "Constant",
    "Counterexample",
    "LandauZener",
    "RotatingField",
    "SpectralFrame",
    "Tabulated",
    "spectral_frame",
    "IntegratorConfig",
    "TimeGrid",
    "Trajectory",
    "adiabatic_propagator",
    "integrate_schrodinger",
    "propagate_model",
    "TOL",
]
