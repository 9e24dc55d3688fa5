"""Time-tagged Ramsey measurement records: simulation, likelihood, estimation.

Random draws come from numpy's counter-based Philox generator.  Shot ``j``
of stream ``s`` under master seed ``seed`` always consumes draw ``j`` of
the Philox stream keyed by ``seed + s * 2**64``, so any chunking of the
shots (or of trials across threads) reproduces the same trace bit for bit.

Outcomes depend on the accumulated phase only through ``cos(Phi)``, and the
Ramsey phase flips sign under ``phi -> phi + pi``.  The initial phase is
therefore identifiable only modulo ``pi``; phase searches should span a
half-period window.
"""
from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, NamedTuple, Optional, Sequence

import numpy as np
from scipy import optimize

from . import kernels
from .model import NoiseModel, Param, RamseyProtocol, SignalParams, ValidationError
from .phase import ramsey_phase_values, survival_probability

PARAM_NAMES = ("omega", "xi", "phi")
TRACE_FORMAT = "corramsey-trace v1"


class MeasurementRecord(NamedTuple):
    t_start: float
    outcome: float


@dataclass(frozen=True, eq=False)
class TimeTrace:
    """Outcomes of a correlated-Ramsey train, one per shot.

    ``outcomes`` are normally bits; fractional values (expected outcomes)
    are accepted for noiseless self-consistency runs.
    """

    t_start: np.ndarray
    outcomes: np.ndarray
    protocol: RamseyProtocol
    noise: NoiseModel
    true_params: Optional[SignalParams] = None
    seed: Optional[int] = None

    def __post_init__(self):
        t = np.asarray(self.t_start, dtype=float)
        y = np.asarray(self.outcomes, dtype=float)
        if t.size == 0:
            raise ValidationError("records", "trace has no records")
        if t.shape != y.shape or t.ndim != 1:
            raise ValidationError("records", "t_start and outcomes must be 1-D and equally long")
        if len(t) != self.protocol.n:
            raise ValidationError("records", f"expected {self.protocol.n} records, got {len(t)}")
        if not np.allclose(t, self.protocol.start_times(), rtol=1e-12, atol=1e-12):
            raise ValidationError("t_start", "records must be spaced exactly tilde_tau apart from 0")
        if np.any((y < 0) | (y > 1)):
            raise ValidationError("outcome", "outcomes must lie in [0, 1]")
        object.__setattr__(self, "t_start", t)
        object.__setattr__(self, "outcomes", y)

    def __len__(self):
        return len(self.t_start)

    @property
    def records(self) -> list:
        return [MeasurementRecord(float(t), float(y)) for t, y in zip(self.t_start, self.outcomes)]

    @property
    def is_binary(self) -> bool:
        return bool(np.all((self.outcomes == 0) | (self.outcomes == 1)))


def _key(seed: int, stream: int) -> int:
    if not 0 <= seed < 2 ** 64:
        raise ValidationError("seed", "seed must be an unsigned 64-bit integer")
    return int(seed) + (int(stream) << 64)


def shot_uniforms(seed: int, start: int, count: int, stream: int = 0) -> np.ndarray:
    """Uniform draws for shots ``start .. start+count-1`` of one stream."""
    bitgen = np.random.Philox(key=_key(seed, stream))
    bitgen.advance(start // 4)  # one Philox counter step yields four 64-bit draws
    gen = np.random.Generator(bitgen)
    gen.random(start % 4)
    return gen.random(count)


def survival_probabilities(signal: SignalParams, ramsey: RamseyProtocol, noise: NoiseModel) -> np.ndarray:
    t = ramsey.start_times()
    phase = ramsey_phase_values(signal.omega, signal.xi, signal.phi, ramsey.tau_r, t)
    return np.asarray(survival_probability(phase, ramsey.tau_r, noise.t2_star), dtype=float)


def simulate_trace(signal: SignalParams, ramsey: RamseyProtocol, noise: NoiseModel,
                   seed: int, stream: int = 0) -> TimeTrace:
    p = survival_probabilities(signal, ramsey, noise)
    u = shot_uniforms(seed, 0, ramsey.n, stream)
    outcomes = (u < p).astype(np.int8)
    return TimeTrace(ramsey.start_times(), outcomes, ramsey, noise, signal, seed)


def expected_trace(signal: SignalParams, ramsey: RamseyProtocol, noise: NoiseModel) -> TimeTrace:
    """Trace whose outcomes are the survival probabilities themselves."""
    return TimeTrace(ramsey.start_times(), survival_probabilities(signal, ramsey, noise),
                     ramsey, noise, signal, None)


def log_likelihood(trace: TimeTrace, candidate: SignalParams) -> float:
    """Bernoulli log-likelihood, probabilities floored at 1e-12 from 0 and 1."""
    contrast = math.exp(-trace.protocol.tau_r / trace.noise.t2_star)
    return kernels.bernoulli_loglik(trace.t_start, trace.outcomes, candidate.omega, candidate.xi,
                                    candidate.phi, trace.protocol.tau_r, contrast)


def _loglik_raw(trace: TimeTrace, values: Mapping[str, float]) -> float:
    contrast = math.exp(-trace.protocol.tau_r / trace.noise.t2_star)
    return kernels.bernoulli_loglik(trace.t_start, trace.outcomes, values["omega"], values["xi"],
                                    values["phi"], trace.protocol.tau_r, contrast)


@dataclass(frozen=True)
class EstimationResult:
    estimate: SignalParams
    log_likelihood: float
    search_meta: dict = field(default_factory=dict)
    flags: tuple = ()

    @property
    def uninformative(self) -> bool:
        return "uninformative trace" in self.flags


def _validate_bounds(search_bounds, grid_resolution):
    if not search_bounds:
        raise ValidationError("search_bounds", "at least one free parameter is required")
    bounds = {}
    for name, (lo, hi) in search_bounds.items():
        if name not in PARAM_NAMES:
            raise ValidationError("search_bounds", f"unknown parameter {name!r}")
        lo, hi = float(lo), float(hi)
        if not (math.isfinite(lo) and math.isfinite(hi) and hi > lo):
            raise ValidationError(name, f"degenerate search bounds for {name}: [{lo}, {hi}]")
        if name in ("omega", "xi") and lo < 0:
            raise ValidationError(name, f"{name} bounds must be non-negative")
        bounds[name] = (lo, hi)
    if isinstance(grid_resolution, Mapping):
        res = {name: int(grid_resolution[name]) for name in bounds}
    else:
        res = {name: int(grid_resolution) for name in bounds}
    for name, r in res.items():
        if r < 2:
            raise ValidationError("grid_resolution", f"need at least 2 grid points for {name}")
    return bounds, res


def estimate_mle(trace: TimeTrace, search_bounds: Mapping[str, Sequence[float]],
                 grid_resolution=32, fixed: Optional[Mapping[str, float]] = None,
                 refine_steps: int = 3) -> EstimationResult:
    """Grid-plus-refinement maximum likelihood over the parameters in ``search_bounds``.

    Parameters not being searched are held at ``fixed`` (falling back to
    ``trace.true_params``).  A coarse grid over the free parameters picks a
    starting cell; each refinement sweep then runs a bounded Brent
    (golden-section with parabolic steps) search per parameter, one
    coordinate at a time, in a window that halves every sweep.
    """
    bounds, res = _validate_bounds(search_bounds, grid_resolution)
    values = {}
    for name in PARAM_NAMES:
        if name in bounds:
            continue
        if fixed is not None and name in fixed:
            values[name] = float(fixed[name])
        elif trace.true_params is not None:
            values[name] = getattr(trace.true_params, name)
        else:
            raise ValidationError(name, f"{name} is neither searched nor fixed")

    flags = []
    if np.all(trace.outcomes == trace.outcomes[0]):
        flags.append("uninformative trace")

    names = list(bounds)
    axes = [np.linspace(*bounds[n], res[n]) for n in names]
    evaluations = 0
    best, best_ll = None, -math.inf
    for point in itertools.product(*axes):
        trial = dict(values, **dict(zip(names, point)))
        ll = _loglik_raw(trace, trial)
        evaluations += 1
        if ll > best_ll:
            best, best_ll = trial, ll
    if best is None:  # every cell evaluated to nan
        raise ValidationError("trace", "log-likelihood is undefined on the whole grid")

    cells = {n: (bounds[n][1] - bounds[n][0]) / (res[n] - 1) for n in names}
    for step in range(refine_steps):
        for n in names:
            half = cells[n] / 2 ** step
            lo = max(bounds[n][0], best[n] - half)
            hi = min(bounds[n][1], best[n] + half)
            if hi <= lo:
                continue

            def negll(x, n=n):
                return -_loglik_raw(trace, dict(best, **{n: x}))

            sol = optimize.minimize_scalar(negll, bounds=(lo, hi), method="bounded",
                                           options={"xatol": max(half * 1e-10, 1e-14)})
            evaluations += int(sol.nfev)
            if -sol.fun > best_ll:
                best = dict(best, **{n: float(sol.x)})
                best_ll = float(-sol.fun)

    meta = {"bounds": {n: list(bounds[n]) for n in names}, "resolution": res,
            "refine_steps": refine_steps, "cell": cells, "evaluations": evaluations}
    estimate = SignalParams(best["omega"], best["xi"], best["phi"])
    return EstimationResult(estimate, best_ll, meta, tuple(flags))


def estimation_error(estimate: float, truth: float, param) -> float:
    """Signed error; phase errors are folded into ``[-pi/2, pi/2)``."""
    err = estimate - truth
    if Param.coerce(param) is Param.PHASE:
        err = (err + math.pi / 2) % math.pi - math.pi / 2
    return err


@dataclass(frozen=True)
class CRBReport:
    ratio: float
    mse: float
    fisher: float
    trials: int
    param: Param

    @property
    def anomaly(self) -> bool:
        """Efficiency below 0.8 beats the bound by too much to be estimator noise."""
        return self.ratio < 0.8


MIN_ENSEMBLE = 30


def crb_report(results: Sequence[EstimationResult], fisher_value: float, param,
               true_value: float) -> CRBReport:
    """Empirical MSE times Fisher information; about 1 for an efficient estimator."""
    param = Param.coerce(param)
    if len(results) < MIN_ENSEMBLE:
        raise ValidationError("ensemble", f"need at least {MIN_ENSEMBLE} estimates, got {len(results)}")
    name = PARAM_NAMES[param - 1]
    errs = [estimation_error(getattr(r.estimate, name), true_value, param) for r in results]
    mse = math.fsum(e * e for e in errs) / len(errs)
    return CRBReport(mse * fisher_value, mse, fisher_value, len(errs), param)


def default_bounds(param, ramsey: RamseyProtocol) -> tuple:
    param = Param.coerce(param)
    if param is Param.FREQUENCY:
        return (0.0, math.pi / ramsey.tilde_tau)
    if param is Param.AMPLITUDE:
        return (0.0, 5.0)
    return (0.0, math.pi)


def run_trial(signal, ramsey, noise, seed, trial, search_bounds, grid_resolution,
              refine_steps=3) -> EstimationResult:
    trace = simulate_trace(signal, ramsey, noise, seed, stream=trial)
    return estimate_mle(trace, search_bounds, grid_resolution, refine_steps=refine_steps)


def run_campaign(signal: SignalParams, ramsey: RamseyProtocol, noise: NoiseModel,
                 search_bounds: Mapping[str, Sequence[float]], trials: int, seed: int,
                 grid_resolution=32, refine_steps: int = 3, threads: int = 1) -> list:
    """Independent simulate-then-estimate trials, trial ``i`` on Philox stream ``i``."""
    if trials < 1:
        raise ValidationError("trials", "trials must be at least 1")
    if threads < 1:
        raise ValidationError("threads", "threads must be positive")

    def one(i):
        return run_trial(signal, ramsey, noise, seed, i, search_bounds, grid_resolution, refine_steps)

    if threads == 1:
        return [one(i) for i in range(trials)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(one, range(trials)))


# -- Trace files ------------------------------------------------------------

def write_trace(path, trace: TimeTrace) -> None:
    """Columnar text: ``# key=value`` header lines, then ``t_start,outcome`` rows."""
    meta = {"tau_r": trace.protocol.tau_r, "tau_o": trace.protocol.tau_o, "n": trace.protocol.n,
            "t2_star": trace.noise.t2_star, "dd_exponent": trace.noise.dd_exponent}
    if trace.noise.t1_cap is not None:
        meta["t1_cap"] = trace.noise.t1_cap
    if trace.noise.t2_dd is not None:
        meta["t2_dd"] = trace.noise.t2_dd
    if trace.seed is not None:
        meta["seed"] = trace.seed
    if trace.true_params is not None:
        meta.update(omega=trace.true_params.omega, xi=trace.true_params.xi, phi=trace.true_params.phi)
    binary = trace.is_binary
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# {TRACE_FORMAT}\n")
        for key, value in meta.items():
            fh.write(f"# {key}={_fmt(value)}\n")
        fh.write("t_start,outcome\n")
        for t, y in zip(trace.t_start, trace.outcomes):
            fh.write(f"{_fmt(t)},{int(y) if binary else _fmt(y)}\n")


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def read_trace(path) -> TimeTrace:
    meta, t, y = {}, [], []
    with open(path, encoding="utf-8") as fh:
        first = fh.readline().strip()
        if first != f"# {TRACE_FORMAT}":
            raise ValidationError("trace", f"{path}: not a {TRACE_FORMAT} file")
        header_seen = False
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                meta[key.strip()] = value.strip()
            elif not header_seen:
                if line != "t_start,outcome":
                    raise ValidationError("trace", f"{path}:{lineno}: expected column header")
                header_seen = True
            else:
                a, _, b = line.partition(",")
                try:
                    t.append(float(a))
                    y.append(float(b))
                except ValueError:
                    raise ValidationError("trace", f"{path}:{lineno}: malformed row {line!r}") from None
    try:
        protocol = RamseyProtocol(float(meta["tau_r"]), float(meta["tau_o"]), int(meta["n"]))
        noise = NoiseModel(float(meta["t2_star"]), float(meta.get("dd_exponent", 1.0)),
                           float(meta["t1_cap"]) if "t1_cap" in meta else None,
                           float(meta["t2_dd"]) if "t2_dd" in meta else None)
    except KeyError as exc:
        raise ValidationError("trace", f"{path}: missing header field {exc.args[0]}") from None
    truth = None
    if all(k in meta for k in PARAM_NAMES):
        truth = SignalParams(float(meta["omega"]), float(meta["xi"]), float(meta["phi"]))
    seed = int(meta["seed"]) if "seed" in meta else None
    return TimeTrace(np.array(t), np.array(y), protocol, noise, truth, seed)
