import math

import numpy as np
import pytest

from spinflip import (
    FieldMode,
    FieldModel,
    NoReversal,
    SpinState,
    SpinSystem,
    ZeroField,
    angular_momentum_ops,
    field_at,
    field_derivative,
    larmor_frequency,
    reversal_time,
    rotation_frequency,
)


def default_model(**overrides):
    kwargs = dict(
        b_y_ioffe=0.040e-4,
        b_y_quad=0.034e-4,
        b_z_ioffe=2.0e-4,
        b_z_quad=1.5e-4,
        tau_i=30.3e-6,
        tau_q=117.7e-6,
    )
    kwargs.update(overrides)
    return FieldModel(**kwargs)


class TestSpinSystem:
    def test_pauli_case(self):
        s = SpinSystem(two_j=1)
        fx, fy, fz = angular_momentum_ops(s)
        h = s.hbar / 2
        assert np.allclose(fx, h * np.array([[0, 1], [1, 0]]))
        assert np.allclose(fy, h * np.array([[0, -1j], [1j, 0]]))
        assert np.allclose(fz, h * np.array([[1, 0], [0, -1]]))

    def test_fz_diagonal_descending(self):
        s = SpinSystem(two_j=4)
        _, _, fz = angular_momentum_ops(s)
        assert np.allclose(fz, s.hbar * np.diag([2, 1, 0, -1, -2]))
        assert np.array_equal(s.m_values, [2, 1, 0, -1, -2])

    @pytest.mark.parametrize("two_j", range(1, 9))
    def test_commutators_and_hermiticity(self, two_j):
        s = SpinSystem(two_j=two_j)
        fx, fy, fz = angular_momentum_ops(s)
        scale = s.hbar**2
        for a, b, c in ((fx, fy, fz), (fy, fz, fx), (fz, fx, fy)):
            err = np.abs(a @ b - b @ a - 1j * s.hbar * c).max() / scale
            assert err < 1e-12
        for f in (fx, fy, fz):
            assert np.abs(f - f.conj().T).max() == 0.0

    def test_index_of_m(self):
        s = SpinSystem(two_j=4)
        assert s.index_of_m(2) == 0
        assert s.index_of_m(-2) == 4
        with pytest.raises(ValueError):
            s.index_of_m(0.5)
        half = SpinSystem(two_j=1)
        assert half.index_of_m(0.5) == 0
        assert half.index_of_m(-0.5) == 1

    def test_invalid_two_j(self):
        with pytest.raises(ValueError):
            SpinSystem(two_j=0)


class TestFieldModel:
    def test_derived_coefficients(self):
        m = default_model()
        assert m.transverse_field == pytest.approx(0.074e-4, rel=1e-15)
        assert m.axial_field == pytest.approx(0.5e-4, rel=1e-15)
        assert m.sweep_rate == pytest.approx(2e-4 / 30.3e-6 - 1.5e-4 / 117.7e-6, rel=1e-15)

    def test_linearized_field_values(self):
        m = default_model()
        assert field_at(m, 0.0) == (0.0, m.transverse_field, m.axial_field)
        t_zero = m.axial_field / m.sweep_rate
        bx, by, bz = field_at(m, t_zero)
        assert bx == 0.0
        assert by == m.transverse_field
        assert abs(bz) < 1e-15 * m.b_z_ioffe

    def test_exponential_field_hand_values(self):
        # b_zi = 2*b_zq and tau_i = tau_q/2 evaluated at t = tau_q*ln2:
        # the exponentials are exactly 1/4 and 1/2
        m = default_model(
            b_y_ioffe=3e-5,
            b_y_quad=4e-5,
            b_z_ioffe=2e-4,
            b_z_quad=1e-4,
            tau_i=50e-6,
            tau_q=100e-6,
            mode=FieldMode.EXPONENTIAL,
        )
        _, by, bz = field_at(m, 100e-6 * math.log(2))
        assert by == pytest.approx(2.75e-05, rel=1e-12)
        assert abs(bz) < 1e-15 * m.b_z_ioffe

    def test_exponential_rejects_negative_time(self):
        m = default_model(mode=FieldMode.EXPONENTIAL)
        with pytest.raises(ValueError):
            field_at(m, -1e-9)

    def test_linearized_matches_exponential_at_start(self):
        kwargs = dict(
            b_y_ioffe=3e-5, b_y_quad=4e-5, b_z_ioffe=2e-4, b_z_quad=1e-4,
            tau_i=10e-6, tau_q=100e-6,
        )
        lin = FieldModel(**kwargs, mode=FieldMode.LINEARIZED)
        exp = FieldModel(**kwargs, mode=FieldMode.EXPONENTIAL)
        assert field_at(exp, 0.0)[1] == field_at(lin, 0.0)[1]
        assert field_at(exp, 0.0)[2] == field_at(lin, 0.0)[2]
        # z slopes agree at t=0: Richardson-extrapolated difference quotient
        h = 1e-9 * exp.tau_i
        d1 = (field_at(exp, 2 * h)[2] - field_at(exp, 0.0)[2]) / (2 * h)
        d2 = (field_at(exp, h)[2] - field_at(exp, 0.0)[2]) / h
        slope = 2 * d2 - d1
        assert slope == pytest.approx(-lin.sweep_rate, rel=1e-6)
        assert field_derivative(exp, 0.0)[2] == pytest.approx(-lin.sweep_rate, rel=1e-15)

    def test_validation(self):
        with pytest.raises(ValueError):
            default_model(tau_i=0.0)
        with pytest.raises(ValueError):
            default_model(b_z_quad=-1e-5)


class TestReversalTime:
    def test_linearized_ratio(self):
        m = default_model(b_z_ioffe=1e-4, b_z_quad=0.0, tau_i=1e-4)
        # axial_field = 1e-4 T, sweep_rate = 1 T/s
        assert reversal_time(m) == pytest.approx(1e-4, rel=1e-15)

    def test_exponential_closed_form(self):
        m = default_model(
            b_z_ioffe=2e-4, b_z_quad=1e-4, tau_i=10e-6, tau_q=100e-6,
            mode=FieldMode.EXPONENTIAL,
        )
        t_star = reversal_time(m)
        assert t_star == pytest.approx(7.70163533955495e-06, rel=1e-12)
        # plugging back in: the axial component vanishes
        assert abs(field_at(m, t_star)[2]) < 1e-15 * m.b_z_ioffe

    def test_equal_turnoff_times_never_reverse(self):
        m = default_model(tau_i=117.7e-6, mode=FieldMode.EXPONENTIAL)
        assert m.b_z_ioffe > m.b_z_quad
        with pytest.raises(NoReversal):
            reversal_time(m)

    def test_negative_sweep_rate_never_reverses(self):
        m = default_model(tau_i=157.6e-6)
        assert m.sweep_rate < 0
        with pytest.raises(NoReversal):
            reversal_time(m)


class TestFrequencies:
    def test_rotation_frequency_at_reversal(self):
        m = default_model()
        t_star = reversal_time(m)
        expected = m.sweep_rate / (2 * math.pi * m.transverse_field)
        assert rotation_frequency(m, t_star) == pytest.approx(expected, rel=1e-12)

    def test_constant_field_does_not_rotate(self):
        m = default_model(b_z_ioffe=1e-4, b_z_quad=1e-4, tau_i=50e-6, tau_q=50e-6)
        assert m.sweep_rate == 0.0
        assert rotation_frequency(m, 3e-5) == 0.0

    def test_larmor_frequency_value(self):
        # g = 1/2, |B| = 1 gauss: 0.5 * mu_B * 1e-4 / (2*pi*hbar)
        s = SpinSystem(two_j=4, g_factor=0.5)
        m = default_model(b_y_ioffe=0.0, b_y_quad=0.0, b_z_ioffe=1e-4, b_z_quad=0.0)
        assert larmor_frequency(s, m, 0.0) == pytest.approx(699812.2472324236, rel=1e-12)

    def test_zero_field_raises(self):
        m = default_model(b_y_ioffe=0.0, b_y_quad=0.0, b_z_ioffe=1e-4, b_z_quad=0.0, tau_i=1e-4)
        t_star = reversal_time(m)
        s = SpinSystem(two_j=1)
        with pytest.raises(ZeroField):
            rotation_frequency(m, t_star)
        with pytest.raises(ZeroField):
            larmor_frequency(s, m, t_star)

    def test_rotation_frequency_peaks_at_reversal(self):
        m = default_model()
        t_star = reversal_time(m)
        peak = rotation_frequency(m, t_star)
        offsets = np.linspace(-5e-6, 5e-6, 41)
        values = [rotation_frequency(m, t_star + dt) for dt in offsets]
        assert max(values) <= peak + 1e-9 * peak
        assert values[0] < peak and values[-1] < peak


class TestSpinState:
    def test_basis_state(self):
        s = SpinSystem(two_j=4)
        st = SpinState.basis_state(s, 2)
        assert st.populations[0] == 1.0
        assert st.populations.sum() == 1.0

    def test_rejects_unnormalized(self):
        with pytest.raises(ValueError):
            SpinState(np.array([1.0, 1.0]))

    def test_from_unnormalized(self):
        st = SpinState.from_unnormalized(np.array([3.0, 4.0j]))
        assert st.populations == pytest.approx([0.36, 0.64])

    def test_amplitudes_read_only(self):
        st = SpinState.basis_state(SpinSystem(two_j=1), 0.5)
        with pytest.raises(ValueError):
            st.amplitudes[0] = 0.0
