"""Closed-form nonadiabatic (Majorana) transition formulas.

The chain is: a linear sweep of B_z through zero at rate ``sweep_rate`` with
constant transverse field B_y flips a two-level spin with probability

    p = exp(-k * B_y**2 / sweep_rate),

the Landau-Zener asymptote when k takes its default value
pi*g*mu_B/(2*hbar). The two-level probability fixes a rotation angle theta
through sin^2(theta/2) = p, and the full multilevel distribution for any
spin J is the squared rotation matrix element |d^J_{m',m}(theta)|^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    FieldModel,
    NoReversal,
    SpinSystem,
    TransitionMatrix,
    reversal_time,
)


@dataclass(frozen=True)
class ThetaParam:
    """Rotation angle theta in [0, pi] tied to its two-level probability.

    The pair satisfies sin^2(theta/2) = p_half exactly (to 1e-15), so either
    member determines the other.
    """

    theta: float
    p_half: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.theta <= math.pi:
            raise ValueError(f"theta must lie in [0, pi], got {self.theta}")
        if abs(math.sin(self.theta / 2) ** 2 - self.p_half) > 1e-15:
            raise ValueError("theta and p_half are inconsistent: need sin^2(theta/2) = p_half")

    @classmethod
    def from_angle(cls, theta: float) -> "ThetaParam":
        return cls(theta, math.sin(theta / 2) ** 2)


def theta_from_p(p_half: float) -> ThetaParam:
    """Rotation angle with sin^2(theta/2) = p_half; theta = 2*asin(sqrt(p))."""
    if not 0.0 <= p_half <= 1.0:
        raise ValueError(f"probability must lie in [0, 1], got {p_half}")
    return ThetaParam(2 * math.asin(math.sqrt(p_half)), p_half)


def majorana_two_level(f_lar: float, f_rot: float) -> float:
    """Classic frequency-ratio estimate exp(-f_lar/f_rot) for the spin flip.

    This is the textbook rule of thumb comparing the Larmor precession
    frequency against the field rotation frequency. Note it is *not*
    identical to :func:`asymptotic_flip_probability`: at the reversal the
    exact linear-sweep exponent is (pi/2) * f_lar/f_rot, so the two differ
    by a constant factor in the exponent. Both are exposed; the asymptotic
    form is the one validated against direct integration.
    """
    if f_rot <= 0:
        raise ValueError(f"f_rot must be positive, got {f_rot}")
    if f_lar < 0:
        raise ValueError(f"f_lar must be non-negative, got {f_lar}")
    return math.exp(-f_lar / f_rot)


def default_k_coefficient(sys: SpinSystem) -> float:
    """Sweep-rate coefficient pi*g*mu_B/(2*hbar), units 1/(T*s).

    With this value the flip probability exp(-k*B_y^2/sweep_rate) is the
    exact Landau-Zener asymptote of the two-level dynamics under the
    linearized field ramp (validated against the numeric propagator in the
    acceptance suite).
    """
    return math.pi * abs(sys.g_factor) * sys.mu_b / (2 * sys.hbar)


def asymptotic_flip_probability(
    sys: SpinSystem, model: FieldModel, k: float | None = None
) -> float:
    """Two-level flip probability of the full sweep, exp(-k*B_y^2/rate).

    Parameters
    ----------
    k : float, optional
        Exponent coefficient in 1/(T*s); defaults to
        :func:`default_k_coefficient`, the Landau-Zener value.

    Raises
    ------
    NoReversal
        If the linearized sweep rate is not positive.
    """
    c_z = model.sweep_rate
    if c_z <= 0:
        raise NoReversal("flip probability undefined: sweep rate is not positive")
    if k is None:
        k = default_k_coefficient(sys)
    return math.exp(-k * model.transverse_field**2 / c_z)


def multilevel_matrix(sys: SpinSystem, theta: ThetaParam) -> TransitionMatrix:
    """Transition probabilities P[m, m'] = |d^J_{m',m}(theta)|^2 for spin J.

    Evaluated from the factorial sum for the rotation matrix elements, with
    each summand computed in log space (sign tracked separately) so that
    two_j up to 40 stays inside float64 range. Summands whose factorial
    arguments would be negative vanish, and the cos/sin powers are kept
    factored (never as tan) so both theta = 0 and theta = pi are exact.
    """
    th = theta.theta
    c = math.cos(th / 2)
    s = math.sin(th / 2)
    two_j = sys.two_j
    dim = sys.dimension
    log_fact = [math.lgamma(n + 1) for n in range(two_j + 1)]
    log_c = math.log(c) if c > 0 else 0.0
    log_s = math.log(s) if s > 0 else 0.0

    p = np.zeros((dim, dim))
    for a in range(dim):
        two_m = two_j - 2 * a
        j_plus_m = (two_j + two_m) // 2
        j_minus_m = (two_j - two_m) // 2
        for b in range(dim):
            two_mp = two_j - 2 * b
            j_plus_mp = (two_j + two_mp) // 2
            j_minus_mp = (two_j - two_mp) // 2
            dm = (two_mp - two_m) // 2  # m' - m
            log_pref = (
                log_fact[j_plus_m]
                + log_fact[j_minus_m]
                + log_fact[j_plus_mp]
                + log_fact[j_minus_mp]
            )
            amp = 0.0
            for nu in range(max(0, -dm), min(j_plus_m, j_minus_mp) + 1):
                c_exp = two_j - dm - 2 * nu
                s_exp = dm + 2 * nu
                if (c_exp > 0 and c == 0.0) or (s_exp > 0 and s == 0.0):
                    continue
                log_mag = (
                    0.5 * log_pref
                    + c_exp * log_c
                    + s_exp * log_s
                    - log_fact[nu]
                    - log_fact[dm + nu]
                    - log_fact[j_plus_m - nu]
                    - log_fact[j_minus_mp - nu]
                )
                amp += (-1) ** nu * math.exp(log_mag)
            p[a, b] = amp * amp
    return TransitionMatrix(p)


def transition_window(sys: SpinSystem, model: FieldModel) -> float:
    """Duration for which the field direction rotates faster than the spin precesses.

    For the linear ramp this is
    2*sqrt((B_y*hbar/(g*mu_B))^(2/3) * rate^(-4/3) - B_y^2 * rate^(-2)),
    returning 0 when the radicand is non-positive (rotation never overtakes
    precession; the sweep is adiabatic throughout). The radicand changes
    sign at rate = g*mu_B*B_y^2/hbar.
    """
    c_z = model.sweep_rate
    if c_z <= 0:
        raise NoReversal("transition window undefined: sweep rate is not positive")
    b_y = model.transverse_field
    if b_y <= 0:
        raise ValueError("transition window requires a positive transverse field")
    g_mu = abs(sys.g_factor) * sys.mu_b
    if g_mu == 0:
        raise ValueError("transition window requires a non-zero g-factor")
    # Factored radicand: (b_y/c_z)^2 * ((c_z/rate_boundary)^(2/3) - 1), so the
    # sign is decided by one comparison instead of a cancellation-prone
    # subtraction of near-equal cube roots.
    rate_boundary = g_mu * b_y**2 / sys.hbar
    if c_z <= rate_boundary:
        return 0.0
    radicand = (b_y / c_z) ** 2 * ((c_z / rate_boundary) ** (2 / 3) - 1.0)
    return 2 * math.sqrt(radicand)


def analytic_distribution(
    sys: SpinSystem, model: FieldModel, m0: float, k: float | None = None
) -> np.ndarray:
    """Final population distribution over m' for a spin starting in m0.

    Row m0 of the multilevel matrix built from the asymptotic two-level flip
    probability. If the field never reverses, the spin follows adiabatically
    and the distribution is the unit vector at m0.
    """
    idx = sys.index_of_m(m0)
    try:
        reversal_time(model)
        p = asymptotic_flip_probability(sys, model, k)
    except NoReversal:
        dist = np.zeros(sys.dimension)
        dist[idx] = 1.0
        return dist
    return multilevel_matrix(sys, theta_from_p(p)).row(idx)
