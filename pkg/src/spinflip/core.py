"""Core domain types: spin systems, coil-discharge field models, spin states.

Everything here is immutable after construction and all operations are pure
functions, so instances can be shared freely between threads.

Conventions used throughout the package:

* SI units everywhere (tesla, seconds, Hz, joules).
* The magnetic-moment basis is ordered by *descending* m, i.e. m = +J first.
* Angular momentum operators carry units of hbar.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

# CODATA 2018 values
BOHR_MAGNETON = 9.2740100783e-24  # J/T
HBAR = 1.054571817e-34  # J*s


class NoReversal(Exception):
    """The axial field component never crosses zero for these coil parameters."""


class ZeroField(Exception):
    """The field magnitude vanishes where a finite value is required."""


class FieldMode(enum.Enum):
    """How the discharging-coil field is evaluated in time."""

    EXPONENTIAL = "exponential"
    LINEARIZED = "linearized"


@dataclass(frozen=True)
class SpinSystem:
    """A spin-J degree of freedom with its coupling constants.

    Parameters
    ----------
    two_j : int
        Twice the spin quantum number, so half-integer spins are exact
        (two_j=1 is a two-level system, two_j=4 is spin 2).
    g_factor : float
        Dimensionless Lande factor. Default 0.5 (e.g. the F=2 ground
        hyperfine manifold of a d-line alkali).
    mu_b : float
        Bohr magneton in J/T.
    hbar : float
        Reduced Planck constant in J*s.
    """

    two_j: int
    g_factor: float = 0.5
    mu_b: float = BOHR_MAGNETON
    hbar: float = HBAR

    def __post_init__(self) -> None:
        if not isinstance(self.two_j, int) or self.two_j < 1:
            raise ValueError(f"two_j must be a positive integer, got {self.two_j!r}")
        if self.mu_b <= 0 or self.hbar <= 0:
            raise ValueError("mu_b and hbar must be positive")

    @property
    def j(self) -> float:
        return self.two_j / 2

    @property
    def dimension(self) -> int:
        return self.two_j + 1

    @property
    def m_values(self) -> np.ndarray:
        """Magnetic quantum numbers in basis order (descending, +J first)."""
        return (self.two_j - 2 * np.arange(self.dimension)) / 2

    def index_of_m(self, m: float) -> int:
        """Basis index of quantum number m (accepts 2, -0.5, 3/2, ...)."""
        two_m = round(2 * m)
        if abs(2 * m - two_m) > 1e-9:
            raise ValueError(f"m={m} is not a multiple of 1/2")
        if (self.two_j - two_m) % 2 != 0 or abs(two_m) > self.two_j:
            raise ValueError(f"m={m} is not a valid level for 2J={self.two_j}")
        return (self.two_j - two_m) // 2

    def larmor_frequency_at(self, b_magnitude: float) -> float:
        """Spin precession frequency g*mu_B*|B| / (2*pi*hbar) in Hz."""
        return abs(self.g_factor) * self.mu_b * b_magnitude / (2 * math.pi * self.hbar)


def angular_momentum_ops(sys: SpinSystem) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Matrices (F_x, F_y, F_z) in units of hbar, basis ordered by descending m.

    Built from the ladder operators, <m+1|F_+|m> = hbar*sqrt(J(J+1)-m(m+1)),
    so that [F_x, F_y] = i*hbar*F_z holds to rounding error.
    """
    dim = sys.dimension
    j = sys.j
    m = sys.m_values
    f_plus = np.zeros((dim, dim), dtype=complex)
    for k in range(1, dim):
        # row k-1 holds m[k]+1; raising acts on column k
        f_plus[k - 1, k] = sys.hbar * math.sqrt(j * (j + 1) - m[k] * (m[k] + 1))
    f_minus = f_plus.conj().T
    f_x = (f_plus + f_minus) / 2
    f_y = (f_plus - f_minus) / 2j
    f_z = sys.hbar * np.diag(m).astype(complex)
    return f_x, f_y, f_z


@dataclass(frozen=True)
class FieldModel:
    """Magnetic field at the atoms while two coil sets discharge.

    The Ioffe coil contributes +z and the quadrupole pair -z, so unequal
    decay times make B_z sweep through zero while the transverse component
    stays finite (avoided crossing). Both coils start discharging at t=0.

    Parameters
    ----------
    b_y_ioffe, b_y_quad : float
        Initial transverse (y) field of each coil set at the atoms, tesla.
    b_z_ioffe, b_z_quad : float
        Initial axial (z) field magnitudes; the quadrupole part enters B_z
        with a minus sign.
    tau_i, tau_q : float
        1/e turn-off times of the Ioffe and quadrupole coils, seconds.
    mode : FieldMode
        EXPONENTIAL evaluates the discharge curves directly; LINEARIZED is
        the tangent model at t=0 (constant B_y, linear B_z ramp) that the
        closed-form transition formulas assume.
    """

    b_y_ioffe: float
    b_y_quad: float
    b_z_ioffe: float
    b_z_quad: float
    tau_i: float
    tau_q: float
    mode: FieldMode = FieldMode.LINEARIZED

    def __post_init__(self) -> None:
        if self.tau_i <= 0 or self.tau_q <= 0:
            raise ValueError("turn-off times tau_i and tau_q must be positive")
        for name in ("b_y_ioffe", "b_y_quad", "b_z_ioffe", "b_z_quad"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    @property
    def transverse_field(self) -> float:
        """Total y field at t=0 (constant in the linearized model), tesla."""
        return self.b_y_ioffe + self.b_y_quad

    @property
    def axial_field(self) -> float:
        """Net z field at t=0, tesla."""
        return self.b_z_ioffe - self.b_z_quad

    @property
    def sweep_rate(self) -> float:
        """-dB_z/dt at t=0, tesla/second (the linear-ramp slope)."""
        return self.b_z_ioffe / self.tau_i - self.b_z_quad / self.tau_q

    def with_tau_i(self, tau_i: float) -> "FieldModel":
        return replace(self, tau_i=tau_i)

    @classmethod
    def from_ramp(
        cls,
        transverse_field: float,
        sweep_rate: float,
        tau_i: float = 1e-6,
        mode: FieldMode = FieldMode.LINEARIZED,
    ) -> "FieldModel":
        """Synthesize a model with given constant B_y and linear B_z slope.

        Useful when a run is specified by a rotation frequency instead of
        coil amplitudes; the zero crossing sits at t = tau_i.
        """
        if transverse_field <= 0:
            raise ValueError("transverse_field must be positive")
        if sweep_rate <= 0:
            raise ValueError("sweep_rate must be positive")
        return cls(
            b_y_ioffe=0.0,
            b_y_quad=transverse_field,
            b_z_ioffe=sweep_rate * tau_i,
            b_z_quad=0.0,
            tau_i=tau_i,
            tau_q=1.0,
            mode=mode,
        )


def field_at(model: FieldModel, t: float) -> tuple[float, float, float]:
    """Field vector (B_x, B_y, B_z) at time t in tesla. B_x is always 0."""
    if model.mode is FieldMode.EXPONENTIAL:
        if t < 0:
            raise ValueError("exponential mode is defined for t >= 0 (discharge starts at t=0)")
        ei = math.exp(-t / model.tau_i)
        eq = math.exp(-t / model.tau_q)
        return (
            0.0,
            model.b_y_ioffe * ei + model.b_y_quad * eq,
            model.b_z_ioffe * ei - model.b_z_quad * eq,
        )
    return 0.0, model.transverse_field, model.axial_field - model.sweep_rate * t


def field_derivative(model: FieldModel, t: float) -> tuple[float, float, float]:
    """Time derivative of the field vector at time t, tesla/second."""
    if model.mode is FieldMode.EXPONENTIAL:
        if t < 0:
            raise ValueError("exponential mode is defined for t >= 0 (discharge starts at t=0)")
        ei = math.exp(-t / model.tau_i)
        eq = math.exp(-t / model.tau_q)
        return (
            0.0,
            -model.b_y_ioffe / model.tau_i * ei - model.b_y_quad / model.tau_q * eq,
            -model.b_z_ioffe / model.tau_i * ei + model.b_z_quad / model.tau_q * eq,
        )
    return 0.0, 0.0, -model.sweep_rate


def reversal_time(model: FieldModel) -> float:
    """Time t* at which B_z crosses zero.

    Raises
    ------
    NoReversal
        If the axial component never changes sign (e.g. both coils decay
        with the same time constant, or the ramp slope is not positive).
    """
    if model.mode is FieldMode.EXPONENTIAL:
        if model.b_z_quad <= 0 or model.b_z_ioffe <= model.b_z_quad or model.tau_i >= model.tau_q:
            raise NoReversal(
                "axial field does not reverse: need b_z_ioffe > b_z_quad > 0 and tau_i < tau_q"
            )
        return math.log(model.b_z_ioffe / model.b_z_quad) / (1 / model.tau_i - 1 / model.tau_q)
    if model.sweep_rate <= 0 or model.axial_field <= 0:
        raise NoReversal(
            "axial field does not reverse: linearized model needs sweep_rate > 0 and axial_field > 0"
        )
    return model.axial_field / model.sweep_rate


def rotation_frequency(model: FieldModel, t: float) -> float:
    """Rotation rate of the field *direction* in the y-z plane, in Hz.

    This is |d/dt atan2(B_y, B_z)| / (2*pi); for the linearized model at the
    reversal it reduces to sweep_rate / (2*pi*transverse_field).
    """
    _, b_y, b_z = field_at(model, t)
    mag_sq = b_y * b_y + b_z * b_z
    if mag_sq == 0.0:
        raise ZeroField(f"field magnitude is zero at t={t}")
    _, db_y, db_z = field_derivative(model, t)
    return abs(db_y * b_z - b_y * db_z) / (2 * math.pi * mag_sq)


def larmor_frequency(sys: SpinSystem, model: FieldModel, t: float) -> float:
    """Spin precession frequency about the local field at time t, in Hz."""
    _, b_y, b_z = field_at(model, t)
    mag = math.hypot(b_y, b_z)
    if mag == 0.0:
        raise ZeroField(f"field magnitude is zero at t={t}")
    return sys.larmor_frequency_at(mag)


@dataclass(frozen=True)
class SpinState:
    """Complex amplitude vector over m = J..-J (descending) with a time stamp."""

    amplitudes: np.ndarray
    time: float = 0.0

    def __post_init__(self) -> None:
        amps = np.array(self.amplitudes, dtype=complex)
        if amps.ndim != 1 or amps.size < 2:
            raise ValueError("amplitudes must be a vector of length >= 2")
        norm_sq = float(np.sum(np.abs(amps) ** 2))
        if abs(norm_sq - 1.0) > 1e-9:
            raise ValueError(f"state not normalized: sum |c_m|^2 = {norm_sq!r}")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def basis_state(cls, sys: SpinSystem, m: float, time: float = 0.0) -> "SpinState":
        amps = np.zeros(sys.dimension, dtype=complex)
        amps[sys.index_of_m(m)] = 1.0
        return cls(amps, time)

    @classmethod
    def from_unnormalized(cls, amplitudes: np.ndarray, time: float = 0.0) -> "SpinState":
        amps = np.asarray(amplitudes, dtype=complex)
        norm = float(np.linalg.norm(amps))
        if norm == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return cls(amps / norm, time)

    @property
    def populations(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


@dataclass(frozen=True)
class TransitionMatrix:
    """Doubly stochastic matrix of transition probabilities P[m, m'].

    Rows are indexed by the initial m and columns by the final m', both in
    descending order. Construction checks stochasticity and the m <-> m',
    (m, m') <-> (-m, -m') symmetries to a loose internal tolerance; the
    tight 1e-12 claims are asserted in the test suite over the J <= 4 grid.
    """

    entries: np.ndarray

    _TOL = 1e-9

    def __post_init__(self) -> None:
        p = np.array(self.entries, dtype=float)
        if p.ndim != 2 or p.shape[0] != p.shape[1] or p.shape[0] < 2:
            raise ValueError("entries must be a square matrix of dimension >= 2")
        if p.min() < -self._TOL or p.max() > 1 + self._TOL:
            raise ValueError("transition probabilities must lie in [0, 1]")
        if np.abs(p.sum(axis=1) - 1).max() > self._TOL or np.abs(p.sum(axis=0) - 1).max() > self._TOL:
            raise ValueError("transition matrix must be doubly stochastic")
        if np.abs(p - p.T).max() > self._TOL or np.abs(p - p[::-1, ::-1]).max() > self._TOL:
            raise ValueError("transition matrix must satisfy P[m,m']=P[m',m]=P[-m,-m']")
        p.setflags(write=False)
        object.__setattr__(self, "entries", p)

    @property
    def dimension(self) -> int:
        return self.entries.shape[0]

    def row(self, index: int) -> np.ndarray:
        return self.entries[index].copy()
