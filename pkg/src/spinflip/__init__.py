"""Nonadiabatic (Majorana) spin-flip dynamics in a reversing magnetic field.

The package computes the population distribution over the magnetic
sublevels of a spin J after the axial field component sweeps through zero,
both from closed-form expressions (Landau-Zener asymptote composed with the
multilevel rotation probabilities) and by direct integration of the
time-dependent Schrodinger equation, and provides sweep/trace drivers plus
a CLI for reproducing the standard turn-off-time experiments.
"""

from .analytic import (
    ThetaParam,
    analytic_distribution,
    asymptotic_flip_probability,
    default_k_coefficient,
    majorana_two_level,
    multilevel_matrix,
    theta_from_p,
    transition_window,
)
from .core import (
    BOHR_MAGNETON,
    HBAR,
    FieldMode,
    FieldModel,
    NoReversal,
    SpinState,
    SpinSystem,
    TransitionMatrix,
    ZeroField,
    angular_momentum_ops,
    field_at,
    field_derivative,
    larmor_frequency,
    reversal_time,
    rotation_frequency,
)
from .experiments import (
    ComparisonReport,
    Engines,
    SweepConfig,
    SweepRecord,
    SweepResult,
    compare_engines,
    numeric_two_level_flip,
    sweep_tau_i,
    transition_activity_window,
    wigner_d_oracle,
)
from .propagator import (
    Basis,
    Propagation,
    PropagationSettings,
    StepSizeUnderflow,
    TimeTrace,
    final_populations,
    hamiltonian,
    field_aligned_states,
    initial_state,
    integrate_dynamics,
    propagate,
    time_trace,
)

__version__ = "0.1.0"

__all__ = [
    "BOHR_MAGNETON",
    "HBAR",
    "Basis",
    "ComparisonReport",
    "Engines",
    "FieldMode",
    "FieldModel",
    "NoReversal",
    "Propagation",
    "PropagationSettings",
    "SpinState",
    "SpinSystem",
    "StepSizeUnderflow",
    "SweepConfig",
    "SweepRecord",
    "SweepResult",
    "ThetaParam",
    "TimeTrace",
    "TransitionMatrix",
    "ZeroField",
    "analytic_distribution",
    "angular_momentum_ops",
    "asymptotic_flip_probability",
    "compare_engines",
    "default_k_coefficient",
    "field_aligned_states",
    "field_at",
    "field_derivative",
    "final_populations",
    "hamiltonian",
    "initial_state",
    "integrate_dynamics",
    "larmor_frequency",
    "majorana_two_level",
    "multilevel_matrix",
    "numeric_two_level_flip",
    "propagate",
    "reversal_time",
    "rotation_frequency",
    "sweep_tau_i",
    "theta_from_p",
    "time_trace",
    "transition_activity_window",
    "transition_window",
    "wigner_d_oracle",
]
