# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops; see ``_kernels_py`` for the reference semantics."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sin, cos, log, log1p, fabs

cnp.import_array()

cdef double P_FLOOR = 1e-12
cdef double SERIES_CUTOFF = 1e-4
cdef double PRIME_SERIES_CUTOFF = 0.05


cdef inline double _sinc(double x) noexcept nogil:
    cdef double x2
    if fabs(x) < SERIES_CUTOFF:
        x2 = x * x
        return 1.0 - x2 / 6.0 + x2 * x2 / 120.0
    return sin(x) / x


cdef inline double _sinc_prime(double x) noexcept nogil:
    cdef double x2 = x * x
    if fabs(x) < PRIME_SERIES_CUTOFF:
        return x * (-1.0 / 3.0 + x2 * (1.0 / 30.0 + x2 * (-1.0 / 840.0 + x2 / 45360.0)))
    return (cos(x) - sin(x) / x) / x


cdef inline double _term(double omega, double xi, double phi, double tau_r, double t,
                         double a, double s, double ds, double envelope_m1,
                         int param) noexcept nogil:
    cdef double theta = a + omega * t + phi
    cdef double c = cos(theta)
    cdef double sn = sin(theta)
    cdef double phase = xi * tau_r * c * s
    cdef double d, s2
    if param == 1:
        d = xi * tau_r * (-sn * (0.5 * tau_r + t) * s + c * ds * 0.5 * tau_r)
    elif param == 2:
        d = tau_r * c * s
    else:
        d = -xi * tau_r * sn * s
    s2 = sin(phase)
    s2 = s2 * s2
    if s2 == 0.0:
        return 0.0
    return s2 / (envelope_m1 + s2) * d * d


def ramsey_fisher_terms(double omega, double xi, double phi, double tau_r,
                        double t0, double dt, Py_ssize_t n, double envelope_m1, int param):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n, dtype=np.float64)
    cdef double[::1] view = out
    cdef double a = 0.5 * omega * tau_r
    cdef double s = _sinc(a)
    cdef double ds = _sinc_prime(a)
    cdef Py_ssize_t j
    with nogil:
        for j in range(n):
            view[j] = _term(omega, xi, phi, tau_r, t0 + j * dt, a, s, ds, envelope_m1, param)
    return out


def ramsey_fisher_phase_average(double omega, double xi, phis, double tau_r,
                                double t0, double dt, Py_ssize_t n, double envelope_m1, int param):
    cdef double[::1] ph = np.ascontiguousarray(phis, dtype=np.float64)
    cdef Py_ssize_t k, j, nph = ph.shape[0]
    cdef double a = 0.5 * omega * tau_r
    cdef double s = _sinc(a)
    cdef double ds = _sinc_prime(a)
    cdef double total = 0.0
    with nogil:
        for k in range(nph):
            for j in range(n):
                total += _term(omega, xi, ph[k], tau_r, t0 + j * dt, a, s, ds, envelope_m1, param)
    return total / nph


def bernoulli_loglik(t, y, double omega, double xi, double phi, double tau_r, double contrast):
    cdef double[::1] tv = np.ascontiguousarray(t, dtype=np.float64)
    cdef double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef Py_ssize_t j, n = tv.shape[0]
    cdef double a = 0.5 * omega * tau_r
    cdef double s = _sinc(a)
    cdef double total = 0.0
    cdef double p, phase
    if yv.shape[0] != n:
        raise ValueError("t and y must have equal length")
    with nogil:
        for j in range(n):
            phase = xi * tau_r * cos(a + omega * tv[j] + phi) * s
            p = 0.5 * (1.0 + contrast * cos(phase))
            if p < P_FLOOR:
                p = P_FLOOR
            elif p > 1.0 - P_FLOOR:
                p = 1.0 - P_FLOOR
            if yv[j] == 1.0:
                total += log(p)
            elif yv[j] == 0.0:
                total += log1p(-p)
            else:
                total += yv[j] * log(p) + (1.0 - yv[j]) * log1p(-p)
    return total
