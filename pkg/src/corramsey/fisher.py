"""Fisher information, gains, sensitivity and detection thresholds.

Exact values evaluate the full per-shot expression
``sin^2(Phi) / (exp(2t/T_s) - cos^2(Phi)) * (dPhi/da)^2``; the ``approx``
functions are the low-frequency leading-order forms, which are upper
bounds on the exact values.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .model import (DDProtocol, NoiseModel, Param, RamseyProtocol, SignalParams,
                    ValidationError, coherence_time)
from .phase import dd_phase_gradient, dd_phase_values, ramsey_phase_gradient

# Size of the uniform phase grid used for phase averaging.
PHASE_GRID_SIZE = 128


def phase_grid(n: int = PHASE_GRID_SIZE) -> np.ndarray:
    if n < 1:
        raise ValidationError("n_phases", "n_phases must be positive")
    return 2.0 * math.pi * np.arange(n) / n


@dataclass(frozen=True)
class FisherResult:
    value: float
    param: Param
    phase_averaged: bool = False

    def __post_init__(self):
        if not self.value >= 0:
            raise ValueError(f"Fisher information must be non-negative, got {self.value}")

    def __float__(self):
        return float(self.value)


def phase_derivative(signal: SignalParams, protocol, param, t_start: float = 0.0) -> float:
    """Analytic derivative of the accumulated phase with respect to one parameter."""
    param = Param.coerce(param)
    if isinstance(protocol, RamseyProtocol):
        grad = ramsey_phase_gradient(signal.omega, signal.xi, signal.phi, protocol.tau_r, t_start)
    elif isinstance(protocol, DDProtocol):
        phi = signal.phi + signal.omega * t_start
        d_omega, d_xi, d_phi = dd_phase_gradient(signal.omega, signal.xi, phi, protocol.m, protocol.tau)
        grad = (d_omega + t_start * d_phi, d_xi, d_phi)
    else:
        raise TypeError(f"unsupported protocol {type(protocol).__name__}")
    return float(grad[param - 1])


def _information_factor(phase, elapsed, t_s):
    """``sin^2 / (exp(2t/T_s) - cos^2)`` written to stay accurate for small ``t/T_s``."""
    with np.errstate(over="ignore"):
        em1 = math.expm1(2.0 * elapsed / t_s) if 2.0 * elapsed / t_s < 700 else math.inf
    s2 = np.sin(phase) ** 2
    with np.errstate(invalid="ignore"):
        return np.where(s2 == 0.0, 0.0, s2 / (em1 + s2))


def _ramsey_em1(ramsey: RamseyProtocol, noise: NoiseModel) -> float:
    x = 2.0 * ramsey.tau_r / noise.t2_star
    return math.expm1(x) if x < 700 else math.inf


def fisher_single(protocol, signal: SignalParams, noise: NoiseModel, param,
                  t_start: float = 0.0) -> FisherResult:
    """Fisher information of one shot of ``protocol`` started at ``t_start``.

    For a Ramsey protocol only a single shot of length ``tau_r`` is used;
    ``protocol.n`` is ignored.
    """
    param = Param.coerce(param)
    if isinstance(protocol, RamseyProtocol):
        value = kernels.ramsey_fisher_terms(signal.omega, signal.xi, signal.phi, protocol.tau_r,
                                            t_start, 0.0, 1, _ramsey_em1(protocol, noise), int(param))[0]
        return FisherResult(float(value), param)
    if isinstance(protocol, DDProtocol):
        phi = signal.phi + signal.omega * t_start
        return FisherResult(_dd_information(protocol, signal, noise, param, np.array([phi]), t_start), param)
    raise TypeError(f"unsupported protocol {type(protocol).__name__}")


def fisher_correlated_ramsey(ramsey: RamseyProtocol, signal: SignalParams, noise: NoiseModel,
                             param, phase_average: bool = False,
                             n_phases: int = PHASE_GRID_SIZE) -> FisherResult:
    """Total information of ``ramsey.n`` time-tagged shots.

    Shot ``j`` starts at ``(j - 1) * tilde_tau`` and sees the signal phase
    shifted by ``omega * t_j``.  With ``phase_average`` the total is
    averaged over a uniform grid of initial phases and ``signal.phi`` is
    ignored.
    """
    param = Param.coerce(param)
    em1 = _ramsey_em1(ramsey, noise)
    if phase_average:
        value = kernels.ramsey_fisher_phase_average(
            signal.omega, signal.xi, phase_grid(n_phases), ramsey.tau_r,
            0.0, ramsey.tilde_tau, ramsey.n, em1, int(param))
    else:
        terms = kernels.ramsey_fisher_terms(signal.omega, signal.xi, signal.phi, ramsey.tau_r,
                                            0.0, ramsey.tilde_tau, ramsey.n, em1, int(param))
        value = math.fsum(terms)
    return FisherResult(float(value), param, phase_average)


def _dd_information(dd, signal, noise, param, phis, t_start=0.0):
    phase = dd_phase_values(signal.omega, signal.xi, phis, dd.m, dd.tau)
    d_omega, d_xi, d_phi = dd_phase_gradient(signal.omega, signal.xi, phis, dd.m, dd.tau)
    deriv = {Param.FREQUENCY: d_omega + t_start * d_phi, Param.AMPLITUDE: d_xi, Param.PHASE: d_phi}[param]
    factor = _information_factor(phase, dd.total_time, coherence_time(noise, dd.m))
    return float(np.mean(factor * np.asarray(deriv) ** 2))


def fisher_dd(dd: DDProtocol, signal: SignalParams, noise: NoiseModel, param,
              phase_average: bool = False, n_phases: int = PHASE_GRID_SIZE) -> FisherResult:
    """Information of a single decoupling sequence.

    A lone DD sequence starts at an unknown signal phase, so once the
    phase is averaged out it carries no information about the phase
    itself: the phase-averaged result for ``Param.PHASE`` is exactly 0.
    """
    param = Param.coerce(param)
    if phase_average and param is Param.PHASE:
        return FisherResult(0.0, param, True)
    phis = phase_grid(n_phases) if phase_average else np.array([signal.phi])
    return FisherResult(_dd_information(dd, signal, noise, param, phis), param, phase_average)


def fisher_approx_nr(ramsey: RamseyProtocol, signal: SignalParams, noise: NoiseModel,
                     param) -> FisherResult:
    """Leading-order, phase-averaged correlated-Ramsey information at low frequency."""
    param = Param.coerce(param)
    T = ramsey.total_time
    f = {Param.FREQUENCY: signal.xi ** 2 * T ** 2 / 3.0,
         Param.AMPLITUDE: 1.0,
         Param.PHASE: signal.xi ** 2}[param]
    value = f * ramsey.tau_r ** 2 * T / (2.0 * ramsey.tilde_tau) * math.exp(-2.0 * ramsey.tau_r / noise.t2_star)
    return FisherResult(value, param, True)


def fisher_approx_dd(dd: DDProtocol, signal: SignalParams, noise: NoiseModel, param) -> FisherResult:
    """Leading-order, phase-averaged DD information near frequency matching."""
    param = Param.coerce(param)
    T = dd.total_time
    if param is Param.PHASE:
        return FisherResult(0.0, param, True)
    f = signal.xi ** 2 * T ** 2 if param is Param.FREQUENCY else 4.0
    value = f * T ** 2 / (2.0 * math.pi ** 2) * math.exp(-2.0 * T / coherence_time(noise, dd.m))
    return FisherResult(value, param, True)


def check_matched(ramsey: RamseyProtocol, dd: DDProtocol) -> None:
    """Require ``ramsey.n == floor(T / tilde_tau)`` for the DD duration ``T``."""
    expected = math.floor(dd.total_time / ramsey.tilde_tau * (1 + 1e-6))
    if ramsey.n != expected:
        raise ValidationError(
            "n", f"Ramsey train has n={ramsey.n} but T={dd.total_time:g} admits n={expected}")


def log_ratio(numerator: float, denominator: float) -> float:
    """``ln(numerator / denominator)`` with +/-inf sentinels for zero terms."""
    if denominator == 0.0:
        return math.inf
    if numerator == 0.0:
        return -math.inf
    return math.log(numerator) - math.log(denominator)


def gain_exact(ramsey: RamseyProtocol, dd: DDProtocol, signal: SignalParams, noise: NoiseModel,
               param, n_phases: int = PHASE_GRID_SIZE) -> float:
    """Natural log of the phase-averaged exact gain, Ramsey train over one DD sequence.

    ``signal`` is used as given for both protocols (set ``omega`` to
    ``dd.omega_dd`` for the frequency-matched comparison).  Returns
    ``+inf`` when the DD information vanishes.
    """
    check_matched(ramsey, dd)
    i_nr = fisher_correlated_ramsey(ramsey, signal, noise, param, True, n_phases).value
    i_dd = fisher_dd(dd, signal, noise, param, True, n_phases).value
    return log_ratio(i_nr, i_dd)


_APPROX_GAIN_FACTOR = {Param.FREQUENCY: 1.0 / 3.0, Param.AMPLITUDE: 0.25}


def gain_approx(ramsey: RamseyProtocol, dd: DDProtocol, noise: NoiseModel, param) -> float:
    """Natural log of the low-frequency approximate gain; independent of ``xi``."""
    param = Param.coerce(param)
    if param not in _APPROX_GAIN_FACTOR:
        raise ValidationError("param", "approximate gain is defined for frequency and amplitude only")
    T = dd.total_time
    t2 = coherence_time(noise, dd.m)
    return (2.0 * (T / t2 - ramsey.tau_r / noise.t2_star)
            + math.log(math.pi ** 2 * ramsey.tau_r ** 2 * _APPROX_GAIN_FACTOR[param] / (T * ramsey.tilde_tau)))


def sensitivity(fisher_value: float, total_time: float) -> float:
    if total_time <= 0:
        raise ValidationError("total_time", "total_time must be positive")
    if fisher_value < 0:
        raise ValidationError("fisher_value", "fisher_value must be non-negative")
    return math.sqrt(fisher_value / total_time)


def detection_threshold(param, omega: float = math.nan) -> float:
    """Minimum information for a resolvable estimate.

    Frequency: the Rayleigh-type bound ``4 / omega**2``.  Phase: ``10 / pi``,
    an MSE below 5% of the ``[0, 2 pi]`` search interval.
    """
    param = Param.coerce(param)
    if param is Param.FREQUENCY:
        if not omega > 0:
            raise ValidationError("omega", "frequency threshold needs omega > 0")
        return 4.0 / omega ** 2
    if param is Param.PHASE:
        return 10.0 / math.pi
    raise ValidationError("param", "no threshold defined for the amplitude")


detection_thresholds = detection_threshold


@dataclass
class GainMap:
    """2-D grid of log-gains with the settings that produced it.

    ``values[i, j]`` belongs to ``(x_values[j], y_values[i])``.  Cells may
    hold +/-inf sentinels; :meth:`rendered` replaces them with finite
    stand-ins for plotting and export.
    """

    x_name: str
    x_values: np.ndarray
    y_name: str
    y_values: np.ndarray
    values: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.x_values = np.asarray(self.x_values, dtype=float)
        self.y_values = np.asarray(self.y_values, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (len(self.y_values), len(self.x_values)):
            raise ValueError("values shape does not match the axes")

    @property
    def sentinel_mask(self) -> np.ndarray:
        return ~np.isfinite(self.values)

    def rendered(self) -> np.ndarray:
        """Copy with +inf -> max finite + 1 and -inf -> min finite - 1."""
        finite = self.values[np.isfinite(self.values)]
        hi = finite.max() + 1 if finite.size else 1.0
        lo = finite.min() - 1 if finite.size else -1.0
        out = self.values.copy()
        out[np.isposinf(out)] = hi
        out[np.isneginf(out)] = lo
        out[np.isnan(out)] = lo
        return out
