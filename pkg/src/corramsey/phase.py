"""Accumulated phases, their parameter gradients, and related closed forms.

Every ``*_values`` / ``*_gradient`` function is a numpy ufunc-style routine
that broadcasts over its arguments; the thin wrappers taking domain objects
return plain floats.
"""
from __future__ import annotations

import math
import warnings

import numpy as np
from scipy import integrate, optimize

from .model import DDProtocol, SignalParams, response_function

# Below these |x| sinc and its derivative switch to their Taylor series.  The
# derivative's closed form cancels like eps/x**2, hence the larger cutoff.
SERIES_CUTOFF = 1e-4
PRIME_SERIES_CUTOFF = 0.05


def sinc(x):
    """``sin(x)/x`` with ``sinc(0) = 1`` (unnormalized, unlike ``np.sinc``)."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < SERIES_CUTOFF
    safe = np.where(small, 1.0, x)
    x2 = x * x
    out = np.where(small, 1.0 - x2 / 6.0 + x2 * x2 / 120.0, np.sin(safe) / safe)
    return out if out.ndim else float(out)


def sinc_prime(x):
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < PRIME_SERIES_CUTOFF
    safe = np.where(small, 1.0, x)
    x2 = x * x
    out = np.where(small, x * (-1.0 / 3.0 + x2 * (1.0 / 30.0 + x2 * (-1.0 / 840.0 + x2 / 45360.0))),
                   (np.cos(safe) - np.sin(safe) / safe) / safe)
    return out if out.ndim else float(out)


def _out(value):
    value = np.asarray(value, dtype=float)
    return value if value.ndim else float(value)


# -- Ramsey -----------------------------------------------------------------

def ramsey_phase_values(omega, xi, phi, tau_r, t_start=0.0):
    a = 0.5 * np.asarray(omega, dtype=float) * tau_r
    theta = a + np.asarray(omega) * t_start + phi
    return _out(np.asarray(xi) * tau_r * np.cos(theta) * sinc(a))


def ramsey_phase_gradient(omega, xi, phi, tau_r, t_start=0.0):
    """``(dPhi/domega, dPhi/dxi, dPhi/dphi)`` of a time-tagged Ramsey shot."""
    omega = np.asarray(omega, dtype=float)
    xi = np.asarray(xi, dtype=float)
    a = 0.5 * omega * tau_r
    theta = a + omega * t_start + phi
    s, ds = sinc(a), sinc_prime(a)
    c, sn = np.cos(theta), np.sin(theta)
    d_omega = xi * tau_r * (-sn * (0.5 * tau_r + t_start) * s + c * ds * 0.5 * tau_r)
    d_xi = tau_r * c * s
    d_phi = -xi * tau_r * sn * s
    d_omega, d_xi, d_phi = np.broadcast_arrays(d_omega, d_xi, d_phi)
    return _out(d_omega), _out(d_xi), _out(d_phi)


def ramsey_phase(signal: SignalParams, tau_r: float, t_start: float = 0.0) -> float:
    """Phase picked up by a Ramsey shot of length ``tau_r`` starting at ``t_start``.

    The start time enters only as the phase shift ``omega * t_start``.
    """
    return float(ramsey_phase_values(signal.omega, signal.xi, signal.phi, tau_r, t_start))


def ramsey_filter_function(omega, xi, tau_r):
    """Phase-averaged squared Ramsey phase."""
    return _out(0.5 * (np.asarray(xi) * tau_r * sinc(0.5 * np.asarray(omega, dtype=float) * tau_r)) ** 2)


# -- Dynamical decoupling ---------------------------------------------------
#
# The textbook closed form contains sin(M u) / cos(omega tau / 2) with
# u = (omega tau + pi) / 2, which is 0/0 at the matching point omega tau = pi.
# Since cos(omega tau / 2) = sin(u), the ratio is the Dirichlet kernel
# sin(M u) / sin(u).  Writing u = k pi + e with |e| <= pi/2 gives
#     sin(M u) / sin(u) = (-1)**(k (M - 1)) * M * sinc(M e) / sinc(e),
# which is exact and finite everywhere.

def _dd_parts(omega, m, tau):
    x = np.asarray(omega, dtype=float) * tau
    u = 0.5 * (x + math.pi)
    k = np.round(u / math.pi)
    e = u - k * math.pi
    sign = np.where(np.mod(k * (m - 1), 2) == 0, 1.0, -1.0)
    s_me, s_e = sinc(m * e), sinc(e)
    kernel = sign * m * s_me / s_e
    q = np.sin(0.25 * x) * sinc(0.25 * x)
    return x, u, e, sign, s_me, s_e, kernel, q


def dd_phase_values(omega, xi, phi, m, tau):
    _, u, _, _, _, _, kernel, q = _dd_parts(omega, m, tau)
    return _out(-np.asarray(xi) * tau * np.cos(m * u + phi) * kernel * q)


def dd_phase_gradient(omega, xi, phi, m, tau):
    """``(dPhi/domega, dPhi/dxi, dPhi/dphi)`` for an ``m``-pulse sequence."""
    xi = np.asarray(xi, dtype=float)
    x, u, e, sign, s_me, s_e, kernel, q = _dd_parts(omega, m, tau)
    arg = m * u + phi
    c, sn = np.cos(arg), np.sin(arg)
    dc = -sn * m * 0.5 * tau
    dkernel = sign * m * (m * sinc_prime(m * e) * s_e - s_me * sinc_prime(e)) / s_e ** 2 * 0.5 * tau
    dq = 0.25 * tau * (np.cos(0.25 * x) * sinc(0.25 * x) + np.sin(0.25 * x) * sinc_prime(0.25 * x))
    d_omega = -xi * tau * (dc * kernel * q + c * dkernel * q + c * kernel * dq)
    d_xi = -tau * c * kernel * q
    d_phi = xi * tau * sn * kernel * q
    d_omega, d_xi, d_phi = np.broadcast_arrays(d_omega, d_xi, d_phi)
    return _out(d_omega), _out(d_xi), _out(d_phi)


def dd_phase(signal: SignalParams, dd: DDProtocol, t_start: float = 0.0) -> float:
    phi = signal.phi + signal.omega * t_start
    return float(dd_phase_values(signal.omega, signal.xi, phi, dd.m, dd.tau))


def dd_phase_detuned_values(delta, xi, phi, m, tau):
    half = 0.5 * m * np.asarray(delta, dtype=float) * tau
    return _out(2.0 * m * np.asarray(xi) * tau / math.pi * np.cos(half + phi) * sinc(half))


def dd_phase_detuned(signal: SignalParams, dd: DDProtocol, delta: float) -> float:
    """Small-detuning form of the DD phase, ``delta = omega - pi/tau``.

    Accurate to first order in ``delta * tau``; ``signal.omega`` is ignored.
    """
    return float(dd_phase_detuned_values(delta, signal.xi, signal.phi, dd.m, dd.tau))


# -- Oracle -----------------------------------------------------------------

def phase_quadrature_oracle(signal: SignalParams, protocol, t_start: float = 0.0,
                            tol: float = 1e-13) -> float:
    """Integrate ``h(t) * xi * cos(omega (t + t_start) + phi)`` numerically.

    Each constant-sign piece of the response function is handed to QUADPACK
    separately, so the integrand is smooth on every panel.
    """
    if signal.xi == 0.0:
        return 0.0
    h = response_function(protocol)
    omega, xi, phi = signal.omega, signal.xi, signal.phi + signal.omega * t_start

    def f(t):
        return xi * math.cos(omega * t + phi)

    total = 0.0
    with warnings.catch_warnings():
        # tol sits at machine precision; QUADPACK flags roundoff on near-zero panels
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        for lo, hi, sign in zip(h.breakpoints, h.breakpoints[1:], h.values):
            # enough subdivisions for ~omega*(hi-lo)/pi oscillation half-periods
            limit = max(50, int(omega * (hi - lo) / math.pi) * 4 + 50)
            val, _ = integrate.quad(f, lo, hi, epsabs=tol, epsrel=tol, limit=limit)
            total += sign * val
    return total


# -- Maximum of the Ramsey phase over frequency -------------------------------

class MaximumNotFound(ValueError):
    """Maximum at boundary or absent within the scanned frequency window."""


def ramsey_max_residual(omega, phi, tau_r):
    """Stationarity condition for the Ramsey phase in multiplied-out form.

    Zero exactly when ``omega*tau_r = tan(omega*tau_r + phi) - sin(phi)/cos(omega*tau_r + phi)``.
    """
    x = np.asarray(omega, dtype=float) * tau_r
    return _out(x * np.cos(x + phi) - np.sin(x + phi) + np.sin(phi))


def ramsey_max_frequency(phi: float, tau_r: float, n_grid: int = 4097) -> float:
    """Frequency ``omega >= 0`` that maximizes ``|Phi_R|`` at fixed ``phi``.

    A dense scan over ``[0, 4 pi / tau_r]`` locates the best lobe; the
    extremum is then polished by root finding on the analytic derivative.
    Returns 0.0 when the static limit already wins (always so for
    ``phi = n pi``).
    """
    if tau_r <= 0:
        raise ValueError("tau_r must be positive")
    if abs(math.sin(phi)) < 1e-14:
        return 0.0
    grid = np.linspace(0.0, 4.0 * math.pi / tau_r, n_grid)
    mag = np.abs(ramsey_phase_values(grid, 1.0, phi, tau_r))
    i = int(np.argmax(mag))
    if i == 0:
        return 0.0
    if i == n_grid - 1:
        raise MaximumNotFound("maximum at boundary or absent")

    def slope(w):
        return ramsey_phase_gradient(w, 1.0, phi, tau_r)[0]

    lo, hi = grid[i - 1], grid[i + 1]
    if slope(lo) * slope(hi) > 0:
        raise MaximumNotFound("maximum at boundary or absent")
    return float(optimize.brentq(slope, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps))


def survival_probability(phase, elapsed_time, t_s):
    """Probability of finding the probe back in its initial state."""
    with np.errstate(over="ignore"):
        p = 0.5 * (1.0 + np.exp(-np.asarray(elapsed_time, dtype=float) / t_s) * np.cos(phase))
    return _out(np.clip(p, 0.0, 1.0))
