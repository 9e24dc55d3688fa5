import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from corramsey.model import DDProtocol, RamseyProtocol, SignalParams
from corramsey.phase import (dd_phase, dd_phase_detuned, dd_phase_gradient,
                             dd_phase_values, phase_quadrature_oracle, ramsey_filter_function,
                             ramsey_max_frequency, ramsey_max_residual, ramsey_phase,
                             ramsey_phase_values, sinc, sinc_prime, survival_probability)

# Frozen from the 40-digit reference in tests/_oracle.py.
RAMSEY_REF = 0.1447820144446879580  # omega=0.7, xi=1.3, phi=0.4, tau_r=0.5, t_start=1.1
DD_MATCHED_REF = 0.5273930875790494530  # M=2, tau=1, omega=pi/2, phi=pi/2
DD_REF = 0.3283481060020168101  # M=3, tau=0.9, omega=2.1, xi=0.8, phi=1.0

omegas = st.floats(0, 4 * math.pi)
phis = st.floats(0, 2 * math.pi, exclude_max=True)
xis = st.floats(0, 5)
durations = st.floats(0.05, 5)


def test_sinc_series_joins_closed_form():
    x = np.array([0.0, 0.5e-4, 0.99e-4, 1.01e-4, 0.3])
    np.testing.assert_allclose(sinc(x), [1.0] + list(np.sin(x[1:]) / x[1:]), rtol=1e-15)
    assert sinc_prime(0.0) == 0.0
    import mpmath as mp
    for x in (1e-6, 1e-4, 0.049, 0.051, 0.5):
        ref = float(mp.diff(lambda v: mp.sin(v) / v, mp.mpf(x)))
        assert sinc_prime(x) == pytest.approx(ref, rel=1e-13)


def test_frozen_values():
    assert ramsey_phase(SignalParams(0.7, 1.3, 0.4), 0.5, 1.1) == pytest.approx(RAMSEY_REF, rel=1e-14)
    sig = SignalParams(math.pi / 2, 1.0, math.pi / 2)
    assert dd_phase(sig, DDProtocol(2, 1.0)) == pytest.approx(DD_MATCHED_REF, rel=1e-14)
    assert dd_phase(SignalParams(2.1, 0.8, 1.0), DDProtocol(3, 0.9)) == pytest.approx(DD_REF, rel=1e-14)


def test_hahn_echo_matched():
    # single pulse, omega = pi/tau, phi = 0: 2 xi tau / pi
    assert dd_phase(SignalParams(math.pi, 1.0, 0.0), DDProtocol(1, 1.0)) == pytest.approx(2 / math.pi, rel=1e-14)


def test_static_limits():
    assert ramsey_phase(SignalParams(0.0, 2.0, 0.0), 0.5) == pytest.approx(1.0)
    # a DC field is refocused by any DD train
    for m in (1, 2, 5):
        assert abs(dd_phase(SignalParams(0.0, 2.0, 0.3), DDProtocol(m, 0.7))) < 1e-15


@settings(max_examples=60, deadline=None)
@given(omegas, xis, phis, durations, st.floats(0, 20))
def test_ramsey_matches_quadrature(omega, xi, phi, tau_r, t0):
    sig = SignalParams(omega, xi, phi)
    exact = phase_quadrature_oracle(sig, RamseyProtocol(tau_r, 0.0, 1), t0)
    assert ramsey_phase(sig, tau_r, t0) == pytest.approx(exact, rel=1e-9, abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(omegas, xis, phis, st.integers(1, 16), durations)
def test_dd_matches_quadrature(omega, xi, phi, m, tau):
    sig, dd = SignalParams(omega, xi, phi), DDProtocol(m, tau)
    assert dd_phase(sig, dd) == pytest.approx(phase_quadrature_oracle(sig, dd), rel=1e-9, abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(omegas, xis, phis, durations)
def test_phase_flips_under_pi_shift(omega, xi, phi, tau_r):
    a = ramsey_phase_values(omega, xi, phi, tau_r)
    b = ramsey_phase_values(omega, xi, phi + math.pi, tau_r)
    assert a == pytest.approx(-b, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(omegas, xis, phis, st.integers(1, 16), durations)
def test_dd_gradient_xi_is_phase_over_xi(omega, xi, phi, m, tau):
    # the phase is linear in the amplitude
    d_xi = dd_phase_gradient(omega, xi, phi, m, tau)[1]
    assert d_xi * xi == pytest.approx(dd_phase_values(omega, xi, phi, m, tau), abs=1e-12)


@pytest.mark.parametrize("m", [1, 2, 3, 8, 16])
def test_dd_continuous_at_matching(m):
    tau = 0.8
    w0 = math.pi / tau
    eps = 1e-9
    vals = dd_phase_values(np.array([w0 - eps, w0, w0 + eps]), 1.3, 0.4, m, tau)
    slope = dd_phase_gradient(w0, 1.3, 0.4, m, tau)[0]
    assert np.all(np.isfinite(vals))
    # both one-sided limits agree with the value at the point
    assert abs(vals[0] + eps * slope - vals[1]) < 1e-8
    assert abs(vals[2] - eps * slope - vals[1]) < 1e-8


def test_detuned_form_first_order():
    dd = DDProtocol(4, 1.0)
    for delta in (1e-4, -1e-4):
        sig = SignalParams(math.pi + delta, 1.0, 0.3)
        exact = dd_phase(sig, dd)
        approx = dd_phase_detuned(sig, dd, delta)
        assert abs(approx - exact) <= 1e-3 * abs(exact)


def test_filter_function_is_phase_average():
    phis_ = np.linspace(0, 2 * math.pi, 256, endpoint=False)
    avg = np.mean(ramsey_phase_values(1.3, 0.7, phis_, 0.6) ** 2)
    assert ramsey_filter_function(1.3, 0.7, 0.6) == pytest.approx(avg, rel=1e-12)


def test_max_frequency_static_when_phi_zero():
    assert ramsey_max_frequency(0.0, 1.0) == 0.0
    assert ramsey_max_frequency(math.pi, 1.0) == 0.0


@pytest.mark.parametrize("phi", [0.5, 1.0, math.pi / 2, 2.5])
def test_max_frequency_stationary(phi):
    w = ramsey_max_frequency(phi, 0.5)
    if w > 0:
        assert abs(ramsey_max_residual(w, phi, 0.5)) < 1e-10
        grid = np.linspace(0, 8 * math.pi, 20001)
        assert abs(ramsey_phase_values(w, 1.0, phi, 0.5)) >= np.max(np.abs(ramsey_phase_values(grid, 1.0, phi, 0.5))) - 1e-12


def test_survival_probability_bounds():
    p = survival_probability(np.linspace(-10, 10, 101), 0.5, 1.0)
    assert np.all((p >= 0) & (p <= 1))
    assert survival_probability(0.0, 0.0, 1.0) == 1.0
    assert survival_probability(math.pi, 0.0, 1.0) == pytest.approx(0.0, abs=1e-16)
