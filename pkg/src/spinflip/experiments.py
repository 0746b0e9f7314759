"""Turn-off-time sweeps and analytic-vs-numeric cross validation.

A sweep varies the Ioffe turn-off time tau_i at fixed quadrupole turn-off
time and records, per point, the analytic population distribution, the
directly integrated one, and the derived diagnostics (rotation frequency at
the reversal, two-level flip probability, transition-window estimate).
Points where the field never reverses are flagged and recorded as
no-transition results rather than aborting the sweep.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

from .analytic import analytic_distribution, asymptotic_flip_probability, transition_window
from .core import (
    FieldModel,
    NoReversal,
    SpinSystem,
    TransitionMatrix,
    angular_momentum_ops,
    reversal_time,
    rotation_frequency,
)
from .propagator import (
    DEFAULT_WINDOW_RATIO,
    Basis,
    PropagationSettings,
    StepSizeUnderflow,
    TimeTrace,
    final_populations,
)

DISCREPANCY_THRESHOLD = 1e-2


class Engines(enum.Enum):
    """Which calculation paths a sweep evaluates."""

    ANALYTIC = "analytic"
    NUMERIC = "numeric"
    BOTH = "both"


@dataclass(frozen=True)
class SweepConfig:
    """One turn-off-time sweep: system, base field model and grid."""

    sys: SpinSystem
    base_model: FieldModel
    m0: float
    tau_i_values: tuple[float, ...]
    k: float | None = None
    engines: Engines = Engines.BOTH
    settings: PropagationSettings | None = None  # None: auto window per point
    window_ratio: float = DEFAULT_WINDOW_RATIO
    rel_tol: float = 1e-11
    abs_tol: float = 1e-13

    def __post_init__(self) -> None:
        values = tuple(float(v) for v in self.tau_i_values)
        if not values:
            raise ValueError("tau_i_values must not be empty")
        if any(v <= 0 for v in values):
            raise ValueError("all tau_i values must be positive")
        object.__setattr__(self, "tau_i_values", values)
        self.sys.index_of_m(self.m0)  # raises for invalid m0


@dataclass(frozen=True)
class SweepRecord:
    """Result for a single tau_i point."""

    tau_i: float
    analytic: np.ndarray | None
    numeric: np.ndarray | None
    f_rot_at_reversal: float
    flip_p: float
    window: float
    no_reversal: bool = False
    error: str | None = None


@dataclass(frozen=True)
class SweepResult:
    records: tuple[SweepRecord, ...]
    config: SweepConfig


@dataclass(frozen=True)
class ComparisonEntry:
    tau_i: float
    max_abs_diff: float
    flagged: bool
    error: str | None = None


@dataclass(frozen=True)
class ComparisonReport:
    entries: tuple[ComparisonEntry, ...]
    threshold: float
    sweep: SweepResult

    @property
    def worst(self) -> float:
        finite = [e.max_abs_diff for e in self.entries if math.isfinite(e.max_abs_diff)]
        return max(finite) if finite else math.nan

    @property
    def flagged(self) -> tuple[ComparisonEntry, ...]:
        return tuple(e for e in self.entries if e.flagged)


def _unit_distribution(sys: SpinSystem, m0: float) -> np.ndarray:
    dist = np.zeros(sys.dimension)
    dist[sys.index_of_m(m0)] = 1.0
    return dist


def _point_settings(config: SweepConfig, model: FieldModel) -> PropagationSettings:
    if config.settings is not None:
        return config.settings
    return PropagationSettings.around_reversal(
        config.sys,
        model,
        ratio=config.window_ratio,
        rel_tol=config.rel_tol,
        abs_tol=config.abs_tol,
        basis_out=Basis.FIELD_ALIGNED,
    )


def sweep_tau_i(config: SweepConfig) -> SweepResult:
    """Evaluate the configured engines at every tau_i, in input order.

    Per-point failures (no reversal, integrator trouble) are recorded on
    the individual record and never abort the remaining points.
    """
    sys = config.sys
    records = []
    for tau_i in config.tau_i_values:
        model = config.base_model.with_tau_i(tau_i)
        try:
            t_star = reversal_time(model)
        except NoReversal:
            unit = _unit_distribution(sys, config.m0)
            want_a = config.engines in (Engines.ANALYTIC, Engines.BOTH)
            want_n = config.engines in (Engines.NUMERIC, Engines.BOTH)
            records.append(
                SweepRecord(
                    tau_i=tau_i,
                    analytic=unit.copy() if want_a else None,
                    numeric=unit.copy() if want_n else None,
                    f_rot_at_reversal=math.nan,
                    flip_p=0.0,
                    window=math.nan,
                    no_reversal=True,
                )
            )
            continue

        f_rot = rotation_frequency(model, t_star)
        flip_p = asymptotic_flip_probability(sys, model, config.k)
        window = transition_window(sys, model)

        analytic = None
        if config.engines in (Engines.ANALYTIC, Engines.BOTH):
            analytic = analytic_distribution(sys, model, config.m0, config.k)

        numeric = None
        error = None
        if config.engines in (Engines.NUMERIC, Engines.BOTH):
            try:
                numeric = final_populations(sys, model, config.m0, _point_settings(config, model))
            except StepSizeUnderflow as exc:
                error = str(exc)

        records.append(
            SweepRecord(
                tau_i=tau_i,
                analytic=analytic,
                numeric=numeric,
                f_rot_at_reversal=f_rot,
                flip_p=flip_p,
                window=window,
                error=error,
            )
        )
    return SweepResult(records=tuple(records), config=config)


def compare_engines(
    config: SweepConfig, threshold: float = DISCREPANCY_THRESHOLD
) -> ComparisonReport:
    """Run a both-engines sweep and report entrywise discrepancies per point."""
    if config.engines is not Engines.BOTH:
        raise ValueError("engine comparison requires engines=BOTH")
    sweep = sweep_tau_i(config)
    entries = []
    for rec in sweep.records:
        if rec.analytic is None or rec.numeric is None:
            entries.append(
                ComparisonEntry(rec.tau_i, math.nan, flagged=True, error=rec.error or "missing")
            )
            continue
        diff = float(np.abs(rec.analytic - rec.numeric).max())
        entries.append(ComparisonEntry(rec.tau_i, diff, flagged=diff > threshold))
    return ComparisonReport(entries=tuple(entries), threshold=threshold, sweep=sweep)


def wigner_d_oracle(two_j: int, theta: float) -> TransitionMatrix:
    """Squared rotation matrix |exp(-i*theta*F_y/hbar)|^2 by eigendecomposition.

    Independent check for the factorial-sum probabilities: F_y is
    diagonalized and the rotation applied in its eigenbasis, so no code is
    shared with the closed-form path.
    """
    sys = SpinSystem(two_j=two_j)
    _, f_y, _ = angular_momentum_ops(sys)
    eigvals, eigvecs = np.linalg.eigh(f_y / sys.hbar)
    d = (eigvecs * np.exp(-1j * theta * eigvals)) @ eigvecs.conj().T
    return TransitionMatrix(np.abs(d) ** 2)


def numeric_two_level_flip(
    sys: SpinSystem,
    model: FieldModel,
    settings: PropagationSettings | None = None,
    window_ratio: float = DEFAULT_WINDOW_RATIO,
) -> float:
    """Flip probability of a two-level spin under the same field parameters.

    Integrates a two_j=1 copy of the system (same g-factor and constants)
    and returns the field-aligned population transferred to m=-1/2. This is
    the reference value that fixes the rotation angle for the multilevel
    distribution.
    """
    two_level = replace(sys, two_j=1)
    if settings is None:
        settings = PropagationSettings.around_reversal(two_level, model, ratio=window_ratio)
    pops = final_populations(two_level, model, m0=0.5, settings=settings)
    return float(pops[two_level.index_of_m(-0.5)])


def transition_activity_window(trace: TimeTrace, threshold: float = 0.01) -> float:
    """Span of time over which any population moves faster than ``threshold``
    per sample; 0.0 when every consecutive-sample change stays below it."""
    deltas = np.abs(np.diff(trace.populations, axis=0)).max(axis=1)
    active = np.flatnonzero(deltas > threshold)
    if active.size == 0:
        return 0.0
    return float(trace.times[active[-1] + 1] - trace.times[active[0]])
