"""Phase reduction toolkit for limit-cycle oscillators.

Pipeline: define an oscillator model, locate its limit cycle, compute the
asymptotic phase map and phase sensitivity along the cycle, average pairwise
interactions into coupling functions on the torus, and compare the reduced
phase dynamics against the full state-space network.
"""

from .models import (
    BASIN_RADIUS,
    OscillatorModel,
    Perturbation,
    PhaselessStateError,
    make_model,
    relaxation_model,
    sinusoidal_forcing,
)
from .ode import (
    DEFAULT_TOL,
    IntegrationError,
    NoCrossingError,
    Section,
    TangentialCrossingError,
    Trajectory,
    find_crossing,
    flow,
    integrate,
)
from .cycles import (
    LimitCycle,
    PeriodicInterpolant,
    ShootingError,
    UnstableCycleError,
    find_limit_cycle,
    floquet_exponent,
    gamma_at,
)
from .phase import (
    Isochron,
    IsochronError,
    PhaseConvergenceError,
    PhaseSensitivity,
    asymptotic_phase,
    compute_isochron,
    phase_sensitivity,
)
from .reduction import (
    CouplingFunction,
    LockResult,
    MeanValueError,
    average_periodic,
    forced_rhs,
    gamma_instantaneous,
    lock_analysis,
    mean_value,
    simulate_averaged,
    simulate_reduced,
)
from .network import (
    COUPLING_NAMES,
    ComparisonReport,
    NetworkSpec,
    NetworkTrajectory,
    PhaseModel,
    SUBHARMONIC_KAPPA,
    SUBHARMONIC_WEIGHTS,
    build_phase_model,
    compare_full_vs_reduced,
    get_cycle,
    network_phases,
    simulate_full,
    simulate_phase_model,
    sl_prescribed_pair,
    subharmonic_bracket,
    subharmonic_pair,
    subharmonic_strobe,
)
from .diagnostics import (
    CouplingRangeError,
    CriticalCouplingResult,
    ScalingFit,
    SyncReport,
    critical_coupling,
    lock_psi_series,
    order_ratio,
    scaling_fit,
    sync_measure,
)

__version__ = "0.1.0"

__all__ = [
    "BASIN_RADIUS",
    "OscillatorModel",
    "Perturbation",
    "PhaselessStateError",
    "make_model",
    "relaxation_model",
    "sinusoidal_forcing",
    "DEFAULT_TOL",
    "IntegrationError",
    "NoCrossingError",
    "Section",
    "TangentialCrossingError",
    "Trajectory",
    "find_crossing",
    "flow",
    "integrate",
    "LimitCycle",
    "PeriodicInterpolant",
    "ShootingError",
    "UnstableCycleError",
    "find_limit_cycle",
    "floquet_exponent",
    "gamma_at",
    "Isochron",
    "IsochronError",
    "PhaseConvergenceError",
    "PhaseSensitivity",
    "asymptotic_phase",
    "compute_isochron",
    "phase_sensitivity",
    "CouplingFunction",
    "LockResult",
    "MeanValueError",
    "average_periodic",
    "forced_rhs",
    "gamma_instantaneous",
    "lock_analysis",
    "mean_value",
    "simulate_averaged",
    "simulate_reduced",
    "COUPLING_NAMES",
    "ComparisonReport",
    "NetworkSpec",
    "NetworkTrajectory",
    "PhaseModel",
    "SUBHARMONIC_KAPPA",
    "SUBHARMONIC_WEIGHTS",
    "build_phase_model",
    "compare_full_vs_reduced",
    "get_cycle",
    "network_phases",
    "simulate_full",
    "simulate_phase_model",
    "sl_prescribed_pair",
    "subharmonic_bracket",
    "subharmonic_pair",
    "subharmonic_strobe",
    "CouplingRangeError",
    "CriticalCouplingResult",
    "ScalingFit",
    "SyncReport",
    "critical_coupling",
    "lock_psi_series",
    "order_ratio",
    "scaling_fit",
    "sync_measure",
    "__version__",
]
