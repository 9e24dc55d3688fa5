"""Pure-numpy implementations of the hot loops.

Semantics match the compiled ``_kernels`` module exactly; only the
floating-point summation order may differ.
"""
import numpy as np

from .phase import sinc, sinc_prime

P_FLOOR = 1e-12
_CHUNK = 1 << 16


def _shot_terms(omega, xi, phi, tau_r, t, envelope_m1, param):
    a = 0.5 * omega * tau_r
    s, ds = sinc(a), sinc_prime(a)
    theta = a + omega * t + phi
    c, sn = np.cos(theta), np.sin(theta)
    phase = xi * tau_r * c * s
    if param == 1:
        d = xi * tau_r * (-sn * (0.5 * tau_r + t) * s + c * ds * 0.5 * tau_r)
    elif param == 2:
        d = tau_r * c * s
    else:
        d = -xi * tau_r * sn * s
    s2 = np.sin(phase) ** 2
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(s2 == 0.0, 0.0, s2 / (envelope_m1 + s2)) * d * d
    return out


def ramsey_fisher_terms(omega, xi, phi, tau_r, t0, dt, n, envelope_m1, param):
    """Per-shot Fisher information of ``n`` shots starting at ``t0 + j*dt``."""
    t = t0 + np.arange(n, dtype=float) * dt
    return np.asarray(_shot_terms(omega, xi, phi, tau_r, t, envelope_m1, param), dtype=float)


def ramsey_fisher_phase_average(omega, xi, phis, tau_r, t0, dt, n, envelope_m1, param):
    """Mean over ``phis`` of the total Fisher information of the shot train."""
    phis = np.asarray(phis, dtype=float)
    t = t0 + np.arange(n, dtype=float) * dt
    rows = max(1, _CHUNK // max(n, 1))
    total = 0.0
    for i in range(0, len(phis), rows):
        block = _shot_terms(omega, xi, phis[i:i + rows, None], tau_r, t[None, :], envelope_m1, param)
        total += float(block.sum())
    return total / len(phis)


def bernoulli_loglik(t, y, omega, xi, phi, tau_r, contrast):
    """Log-likelihood of (possibly fractional) outcomes ``y`` at start times ``t``."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    a = 0.5 * omega * tau_r
    phase = xi * tau_r * np.cos(a + omega * t + phi) * sinc(a)
    p = np.clip(0.5 * (1.0 + contrast * np.cos(phase)), P_FLOOR, 1.0 - P_FLOOR)
    return float(np.sum(y * np.log(p) + (1.0 - y) * np.log1p(-p)))
