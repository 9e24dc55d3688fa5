"""Domain types, sequence geometry and response functions.

All times share one unit; the package default is the free-evolution
dephasing time ``T2*``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Optional, Union

import numpy as np

TWO_PI = 2.0 * math.pi


class ValidationError(ValueError):
    """Raised when a domain invariant is violated.

    ``field`` names the offending input so callers (the CLI in particular)
    can report it without parsing the message.
    """

    def __init__(self, field: str, message: str):
        super().__init__(message)
        self.field = field


class Param(IntEnum):
    """Signal parameter index used by every Fisher-information routine."""

    FREQUENCY = 1
    AMPLITUDE = 2
    PHASE = 3

    @classmethod
    def coerce(cls, value) -> "Param":
        if isinstance(value, cls):
            return value
        if isinstance(value, str):
            key = value.strip().lower()
            aliases = {"omega": 1, "frequency": 1, "xi": 2, "amplitude": 2,
                       "phi": 3, "phase": 3}
            if key in aliases:
                return cls(aliases[key])
            if key.isdigit():
                value = int(key)
        try:
            return cls(int(value))
        except (TypeError, ValueError):
            raise ValidationError("param", f"unknown parameter {value!r}; expected 1, 2 or 3") from None


def _require(cond: bool, name: str, message: str) -> None:
    if not cond:
        raise ValidationError(name, message)


@dataclass(frozen=True)
class SignalParams:
    """Pure tone ``xi * cos(omega * t + phi)``.

    ``xi`` is a phase-accumulation rate (radians per time unit), so that
    ``xi * tau`` is a phase.  ``phi`` is stored reduced to ``[0, 2*pi)``.
    """

    omega: float
    xi: float
    phi: float = 0.0

    def __post_init__(self):
        _require(math.isfinite(self.omega) and self.omega >= 0, "omega", "omega must be non-negative")
        _require(math.isfinite(self.xi) and self.xi >= 0, "xi", "xi must be non-negative")
        _require(math.isfinite(self.phi), "phi", "phi must be finite")
        object.__setattr__(self, "omega", float(self.omega))
        object.__setattr__(self, "xi", float(self.xi))
        phi = math.fmod(float(self.phi), TWO_PI)
        if phi < 0:
            phi += TWO_PI
        if phi >= TWO_PI:
            phi = 0.0
        object.__setattr__(self, "phi", phi)

    def replace(self, **changes) -> "SignalParams":
        values = {"omega": self.omega, "xi": self.xi, "phi": self.phi}
        values.update(changes)
        return SignalParams(**values)


@dataclass(frozen=True)
class NoiseModel:
    """Decoherence envelope for both protocol families.

    The DD coherence time follows ``m**dd_exponent * t2_star`` unless
    ``t2_dd`` pins it to a fixed value (a Hahn echo with a measured ``T2``,
    for instance).  Either way it is clamped to ``t1_cap`` when given.
    """

    t2_star: float = 1.0
    dd_exponent: float = 1.0
    t1_cap: Optional[float] = None
    t2_dd: Optional[float] = None

    def __post_init__(self):
        _require(self.t2_star > 0, "t2_star", "t2_star must be positive")
        _require(self.dd_exponent >= 0, "dd_exponent", "dd_exponent must be non-negative")
        if self.t1_cap is not None:
            _require(self.t1_cap >= self.t2_star, "t1_cap", "t1_cap must be at least t2_star")
        if self.t2_dd is not None:
            _require(self.t2_dd >= self.t2_star, "t2_dd", "t2_dd must be at least t2_star")

    def coherence_time(self, m: int) -> float:
        return coherence_time(self, m)


def coherence_time(noise: NoiseModel, m: int) -> float:
    """Coherence time of an ``m``-pulse decoupling sequence."""
    _require(m >= 1, "m", "m must be at least 1")
    if noise.t2_dd is not None:
        t2 = noise.t2_dd
    else:
        t2 = float(m) ** noise.dd_exponent * noise.t2_star
    if noise.t1_cap is not None:
        t2 = min(t2, noise.t1_cap)
    return t2


@dataclass(frozen=True)
class RamseyProtocol:
    """``n`` Ramsey shots of length ``tau_r`` repeated every ``tau_r + tau_o``."""

    tau_r: float
    tau_o: float
    n: int

    def __post_init__(self):
        _require(math.isfinite(self.tau_r) and self.tau_r > 0, "tau_r", "tau_r must be positive")
        _require(math.isfinite(self.tau_o) and self.tau_o >= 0, "tau_o", "tau_o must be non-negative")
        _require(int(self.n) == self.n and self.n >= 1, "n", "n must be a positive integer")
        object.__setattr__(self, "n", int(self.n))

    @property
    def tilde_tau(self) -> float:
        return self.tau_r + self.tau_o

    @property
    def total_time(self) -> float:
        return self.n * self.tilde_tau

    def start_time(self, j: int) -> float:
        """Start of shot ``j`` (1-based); the first shot starts at 0."""
        _require(1 <= j <= self.n, "j", f"shot index must lie in [1, {self.n}]")
        return (j - 1) * self.tilde_tau

    def start_times(self) -> np.ndarray:
        return np.arange(self.n, dtype=float) * self.tilde_tau


@dataclass(frozen=True)
class DDProtocol:
    """Evenly spaced train of ``m`` pi pulses, spacing ``tau``, half-spacing edges."""

    m: int
    tau: float

    def __post_init__(self):
        _require(int(self.m) == self.m and self.m >= 1, "m", "m must be a positive integer")
        _require(math.isfinite(self.tau) and self.tau > 0, "tau", "tau must be positive")
        object.__setattr__(self, "m", int(self.m))

    @property
    def total_time(self) -> float:
        return self.m * self.tau

    @property
    def omega_dd(self) -> float:
        return math.pi / self.tau

    def pulse_times(self) -> np.ndarray:
        return (np.arange(self.m) + 0.5) * self.tau


def make_ramsey_protocol(tau_r: float, tau_o: float, n: int) -> RamseyProtocol:
    return RamseyProtocol(tau_r, tau_o, n)


def make_dd_protocol(m: int, tau: float) -> DDProtocol:
    return DDProtocol(m, tau)


def matched_ramsey(total_time: float, tau_r: float, tau_o: float) -> RamseyProtocol:
    """Ramsey train fitting inside ``total_time`` with ``n = floor(T / tilde_tau)``.

    Leftover time is discarded.  Raises if not even one shot fits.
    """
    tilde = tau_r + tau_o
    n = int(math.floor(total_time / tilde * (1 + 1e-12)))
    _require(n >= 1, "n", f"no Ramsey shot of length {tilde:g} fits in T={total_time:g}")
    return RamseyProtocol(tau_r, tau_o, n)


@dataclass(frozen=True)
class ResponseFunction:
    """Piecewise-constant coherence sign.

    ``values[i]`` holds on ``[breakpoints[i], breakpoints[i+1])``; the final
    interval is closed on the right.  Outside the support the value is 0.
    """

    breakpoints: tuple
    values: tuple = field(default=())

    def __post_init__(self):
        _require(len(self.breakpoints) == len(self.values) + 1, "breakpoints",
                 "need exactly one more breakpoint than values")
        _require(all(b1 > b0 for b0, b1 in zip(self.breakpoints, self.breakpoints[1:])),
                 "breakpoints", "breakpoints must be strictly increasing")

    @property
    def support(self) -> tuple:
        return self.breakpoints[0], self.breakpoints[-1]

    def __call__(self, t):
        t_arr = np.asarray(t, dtype=float)
        edges = np.asarray(self.breakpoints)
        vals = np.asarray(self.values, dtype=float)
        idx = np.searchsorted(edges, t_arr, side="right") - 1
        idx = np.where(t_arr == edges[-1], len(vals) - 1, idx)
        inside = (idx >= 0) & (idx < len(vals))
        out = np.where(inside, vals[np.clip(idx, 0, len(vals) - 1)], 0.0)
        return float(out) if out.ndim == 0 else out

    def sign_changes(self) -> int:
        return sum(1 for a, b in zip(self.values, self.values[1:]) if a != b)


Protocol = Union[RamseyProtocol, DDProtocol]


def response_function(protocol: Protocol, t=None):
    """Response function of a single sequence.

    With ``t`` omitted the :class:`ResponseFunction` itself is returned,
    otherwise it is evaluated at ``t``.
    """
    if isinstance(protocol, RamseyProtocol):
        h = ResponseFunction((0.0, protocol.tau_r), (1.0,))
    elif isinstance(protocol, DDProtocol):
        edges = (0.0,) + tuple(float(p) for p in protocol.pulse_times()) + (protocol.total_time,)
        h = ResponseFunction(edges, tuple(float((-1) ** i) for i in range(protocol.m + 1)))
    else:
        raise TypeError(f"unsupported protocol {type(protocol).__name__}")
    return h if t is None else h(t)
