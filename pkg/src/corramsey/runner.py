"""Command implementations behind the CLI; each returns a :class:`Table`."""
from __future__ import annotations

import math

import numpy as np

from . import figures
from .config import RunConfig
from .fisher import (Param, detection_threshold, fisher_approx_dd, fisher_approx_nr,
                     fisher_correlated_ramsey, fisher_dd, fisher_single, gain_approx,
                     gain_exact, sensitivity)
from .model import (DDProtocol, NoiseModel, RamseyProtocol, SignalParams, ValidationError,
                    matched_ramsey)
from .phase import dd_phase, dd_phase_detuned, phase_quadrature_oracle, ramsey_phase
from .qdyne import (PARAM_NAMES, crb_report, default_bounds, estimate_mle, estimation_error,
                    read_trace, run_campaign, simulate_trace, write_trace, MIN_ENSEMBLE)
from .tables import Table, add_sentinel_columns, parallel_map

DEFAULTS = {
    "omega": 0.1, "xi": 1.0, "phi": 0.0,
    "tau_r": 0.5, "tau_o": 0.5, "n": 100,
    "m": 8, "tau": 1.0,
    "t2_star": 1.0, "dd_exponent": 1.0,
    "t_start": 0.0, "param": 1, "phase_average": False, "n_phases": 128,
    "protocol": "ramsey", "kind": "exact",
    "trials": 1, "resolution": 41, "refine_steps": 3,
}
DEFAULT_SEED = 0


def _get(p, key):
    return p[key] if key in p else DEFAULTS.get(key)


def build_signal(p) -> SignalParams:
    return SignalParams(_get(p, "omega"), _get(p, "xi"), _get(p, "phi"))


def build_noise(p) -> NoiseModel:
    return NoiseModel(_get(p, "t2_star"), _get(p, "dd_exponent"), p.get("t1_cap"), p.get("t2_dd"))


def build_ramsey(p) -> RamseyProtocol:
    if "total_time" in p and "n" not in p:
        return matched_ramsey(p["total_time"], _get(p, "tau_r"), _get(p, "tau_o"))
    return RamseyProtocol(_get(p, "tau_r"), _get(p, "tau_o"), _get(p, "n"))


def build_dd(p) -> DDProtocol:
    return DDProtocol(_get(p, "m"), _get(p, "tau"))


# -- single evaluations -----------------------------------------------------

def evaluate_phase(p) -> dict:
    signal = build_signal(p)
    if _get(p, "protocol") == "dd":
        dd = build_dd(p)
        out = {"phase": dd_phase(signal, dd, _get(p, "t_start")),
               "phase_oracle": phase_quadrature_oracle(signal, dd, _get(p, "t_start"))}
        if "delta" in p:
            out["phase_detuned"] = dd_phase_detuned(signal, dd, p["delta"])
        return out
    tau_r, t0 = _get(p, "tau_r"), _get(p, "t_start")
    return {"phase": ramsey_phase(signal, tau_r, t0),
            "phase_oracle": phase_quadrature_oracle(signal, RamseyProtocol(tau_r, 0.0, 1), t0)}


def evaluate_fisher(p) -> dict:
    signal, noise = build_signal(p), build_noise(p)
    param = Param.coerce(_get(p, "param"))
    approx = _get(p, "kind") == "approx"
    if _get(p, "protocol") == "dd":
        dd = build_dd(p)
        total = dd.total_time
        if approx:
            value = fisher_approx_dd(dd, signal, noise, param).value
        elif "t_start" in p:
            value = fisher_single(dd, signal, noise, param, p["t_start"]).value
        else:
            value = fisher_dd(dd, signal, noise, param, _get(p, "phase_average"), _get(p, "n_phases")).value
    else:
        ramsey = build_ramsey(p)
        total = ramsey.total_time
        if approx:
            value = fisher_approx_nr(ramsey, signal, noise, param).value
        elif "t_start" in p:
            value = fisher_single(ramsey, signal, noise, param, p["t_start"]).value
            total = ramsey.tau_r
        else:
            value = fisher_correlated_ramsey(ramsey, signal, noise, param, _get(p, "phase_average"),
                                             _get(p, "n_phases")).value
    out = {"fisher": value, "total_time": total, "sensitivity": sensitivity(value, total)}
    try:
        out["threshold"] = detection_threshold(param, signal.omega)
    except ValidationError:
        out["threshold"] = math.nan
    return out


def evaluate_gain(p) -> dict:
    noise, dd = build_noise(p), build_dd(p)
    param = Param.coerce(_get(p, "param"))
    ramsey = matched_ramsey(dd.total_time, _get(p, "tau_r"), _get(p, "tau_o"))
    if _get(p, "kind") == "approx":
        value = gain_approx(ramsey, dd, noise, param)
    else:
        signal = SignalParams(p.get("omega", dd.omega_dd), _get(p, "xi"), _get(p, "phi"))
        value = gain_exact(ramsey, dd, signal, noise, param, _get(p, "n_phases"))
    return {"log_gain": value, "n": ramsey.n, "total_time": dd.total_time}


TARGETS = {
    "phase_ramsey": (evaluate_phase, {"protocol": "ramsey"}),
    "phase_dd": (evaluate_phase, {"protocol": "dd"}),
    "fisher_ramsey": (evaluate_fisher, {"protocol": "ramsey", "kind": "exact"}),
    "fisher_dd": (evaluate_fisher, {"protocol": "dd", "kind": "exact"}),
    "fisher_approx_nr": (evaluate_fisher, {"protocol": "ramsey", "kind": "approx"}),
    "fisher_approx_dd": (evaluate_fisher, {"protocol": "dd", "kind": "approx"}),
    "gain_exact": (evaluate_gain, {"kind": "exact"}),
    "gain_approx": (evaluate_gain, {"kind": "approx"}),
}
_EVALUATORS = {"phase": evaluate_phase, "fisher": evaluate_fisher, "gain": evaluate_gain}


def _inputs(p) -> dict:
    """The explicitly supplied inputs, in a stable order."""
    return {k: p[k] for k in sorted(p)}


def run_single(cfg: RunConfig) -> Table:
    p = cfg.parameters
    out = _EVALUATORS[cfg.command](p)
    inputs = _inputs(p)
    table = Table(list(inputs) + list(out))
    table.add({**inputs, **out})
    if "log_gain" in out:
        add_sentinel_columns(table, "log_gain")
    return table


# -- sweeps -----------------------------------------------------------------

def parse_axis(text: str, key: str):
    """``name:min:max:steps[:log]`` -> (name, values)."""
    parts = text.split(":")
    if len(parts) not in (4, 5):
        raise ValidationError(key, f"{key} must look like name:min:max:steps[:log]")
    name = parts[0]
    try:
        lo, hi, steps = float(parts[1]), float(parts[2]), int(parts[3])
    except ValueError:
        raise ValidationError(key, f"malformed axis {text!r}") from None
    if steps < 1:
        raise ValidationError(key, "axis needs at least one step")
    log = len(parts) == 5 and parts[4] == "log"
    if len(parts) == 5 and not log:
        raise ValidationError(key, f"unknown axis scale {parts[4]!r}")
    if steps == 1:
        values = np.array([lo])
    elif log:
        if lo <= 0 or hi <= 0:
            raise ValidationError(key, "log axis needs positive bounds")
        values = np.geomspace(lo, hi, steps)
    else:
        values = np.linspace(lo, hi, steps)
    return name, values


def run_sweep(cfg: RunConfig) -> Table:
    from .config import parse_value

    p = dict(cfg.parameters)
    target = p.pop("target", None)
    if target is None:
        raise ValidationError("target", "sweep needs target=<quantity>")
    if "x_axis" not in p:
        raise ValidationError("x_axis", "sweep needs x_axis=name:min:max:steps")
    evaluator, forced = TARGETS[target]
    axes = [parse_axis(p.pop(k), k) for k in ("x_axis", "y_axis") if k in p]
    if len(axes) == 2 and axes[0][0] == axes[1][0]:
        raise ValidationError("y_axis", "the two axes must sweep different parameters")
    for name, _ in axes:
        if name in ("target", "protocol", "kind", "phase_average"):
            raise ValidationError(name, f"cannot sweep {name}")
        parse_value(name, 0.0)  # rejects unknown names

    def cell_params(point):
        q = dict(p, **forced)
        for (name, _), v in zip(axes, point):
            q[name] = parse_value(name, int(round(v)) if name in ("n", "m", "n_phases", "param") else v)
        return q

    if len(axes) == 1:
        points = [(x,) for x in axes[0][1]]
    else:
        points = [(x, y) for y in axes[1][1] for x in axes[0][1]]

    bad = []
    for i, point in enumerate(points):
        q = cell_params(point)
        try:
            build_signal(q), build_noise(q)
            if target.startswith("phase_ramsey") or target in ("fisher_ramsey", "fisher_approx_nr"):
                build_ramsey(q)
            else:
                dd = build_dd(q)
                if target.startswith("gain"):
                    matched_ramsey(dd.total_time, _get(q, "tau_r"), _get(q, "tau_o"))
        except ValidationError as exc:
            bad.append(f"cell {i} {dict(zip([a[0] for a in axes], point))}: {exc}")
    if bad:
        raise ValidationError("axis", "invalid sweep cells:\n  " + "\n  ".join(bad))

    results = parallel_map(lambda pt: evaluator(cell_params(pt)), points, cfg.threads)
    first_inputs = _inputs(cell_params(points[0]))
    table = Table(list(first_inputs) + list(results[0]), meta={"target": target})
    for point, out in zip(points, results):
        table.add({**_inputs(cell_params(point)), **out})
    if "log_gain" in results[0]:
        add_sentinel_columns(table, "log_gain")
    return table


# -- figures ----------------------------------------------------------------

def run_figure(cfg: RunConfig) -> Table:
    p = cfg.parameters
    preset = p.get("preset")
    if preset is None:
        raise ValidationError("preset", "figure needs a preset")
    res = p.get("resolution", figures.DEFAULT_RESOLUTION[preset])
    if res < 2:
        raise ValidationError("resolution", "resolution must be at least 2")
    return figures.BUILDERS[preset](resolution=res, n_phases=p.get("n_phases", 128), threads=cfg.threads)


# -- Monte Carlo ------------------------------------------------------------

def run_simulate(cfg: RunConfig):
    p = cfg.parameters
    seed = DEFAULT_SEED if cfg.seed is None else cfg.seed
    return simulate_trace(build_signal(p), build_ramsey(p), build_noise(p), seed)


def trace_table(trace) -> Table:
    table = Table(["t_start", "outcome"], meta={
        "tau_r": trace.protocol.tau_r, "tau_o": trace.protocol.tau_o, "n": trace.protocol.n,
        "t2_star": trace.noise.t2_star, "seed": trace.seed,
        "true_params": None if trace.true_params is None else
        {k: getattr(trace.true_params, k) for k in PARAM_NAMES}})
    for t, y in zip(trace.t_start, trace.outcomes):
        table.add({"t_start": float(t), "outcome": int(y) if trace.is_binary else float(y)})
    return table


def _estimated_params(p) -> list:
    names = [s.strip() for s in p.get("estimate", "xi").split(",") if s.strip()]
    for n in names:
        if n not in PARAM_NAMES:
            raise ValidationError("estimate", f"cannot estimate {n!r}; choose from omega, xi, phi")
    if len(set(names)) != len(names):
        raise ValidationError("estimate", "duplicate parameter in estimate")
    return names


def _bounds(p, names, ramsey) -> dict:
    out = {}
    for n in names:
        key = f"bounds_{n}"
        if key in p:
            try:
                lo, hi = (float(v) for v in p[key].split(":"))
            except ValueError:
                raise ValidationError(key, f"{key} must look like lo:hi") from None
            out[n] = (lo, hi)
        else:
            out[n] = default_bounds(PARAM_NAMES.index(n) + 1, ramsey)
    return out


ESTIMATE_COLUMNS = ["kind", "trial", "param", "estimate", "truth", "error", "log_likelihood",
                    "mse", "fisher", "crb_ratio", "crb_valid", "flags"]


def run_estimate(cfg: RunConfig) -> Table:
    p = cfg.parameters
    names = _estimated_params(p)
    resolution = _get(p, "resolution")
    refine = _get(p, "refine_steps")
    if "trace" in p:
        trace = read_trace(p["trace"])
        bounds = _bounds(p, names, trace.protocol)
        fixed = {k: p[k] for k in PARAM_NAMES if k in p}
        res = estimate_mle(trace, bounds, resolution, fixed=fixed or None, refine_steps=refine)
        table = Table(ESTIMATE_COLUMNS, meta={"search": res.search_meta})
        for n in names:
            truth = getattr(trace.true_params, n) if trace.true_params else math.nan
            table.add({"kind": "estimate", "trial": 0, "param": n, "estimate": getattr(res.estimate, n),
                       "truth": truth, "error": estimation_error(getattr(res.estimate, n), truth, n_to_param(n)),
                       "log_likelihood": res.log_likelihood, "flags": ";".join(res.flags)})
        return table

    trials = _get(p, "trials")
    if trials < 1:
        raise ValidationError("trials", "trials must be at least 1")
    signal, ramsey, noise = build_signal(p), build_ramsey(p), build_noise(p)
    bounds = _bounds(p, names, ramsey)
    seed = DEFAULT_SEED if cfg.seed is None else cfg.seed
    results = run_campaign(signal, ramsey, noise, bounds, trials, seed, resolution, refine, cfg.threads)
    table = Table(ESTIMATE_COLUMNS, meta={"bounds": {k: list(v) for k, v in bounds.items()},
                                          "resolution": resolution, "refine_steps": refine})
    for i, res in enumerate(results):
        for n in names:
            est, truth = getattr(res.estimate, n), getattr(signal, n)
            table.add({"kind": "trial", "trial": i, "param": n, "estimate": est, "truth": truth,
                       "error": estimation_error(est, truth, n_to_param(n)),
                       "log_likelihood": res.log_likelihood, "flags": ";".join(res.flags)})
    for n in names:
        param = n_to_param(n)
        fisher = fisher_correlated_ramsey(ramsey, signal, noise, param).value
        errs = [estimation_error(getattr(r.estimate, n), getattr(signal, n), param) for r in results]
        mse = math.fsum(e * e for e in errs) / len(errs)
        valid = len(results) >= MIN_ENSEMBLE
        ratio = crb_report(results, fisher, param, getattr(signal, n)).ratio if valid else mse * fisher
        table.add({"kind": "summary", "trial": len(results), "param": n, "truth": getattr(signal, n),
                   "mse": mse, "fisher": fisher, "crb_ratio": ratio, "crb_valid": valid})
    return table


def n_to_param(name: str) -> Param:
    return Param(PARAM_NAMES.index(name) + 1)


def execute(cfg: RunConfig):
    """Run a configuration; returns a :class:`Table` (or a trace for ``simulate``)."""
    if cfg.command in _EVALUATORS:
        return run_single(cfg)
    if cfg.command == "sweep":
        return run_sweep(cfg)
    if cfg.command == "figure":
        return run_figure(cfg)
    if cfg.command == "simulate":
        return run_simulate(cfg)
    return run_estimate(cfg)


__all__ = ["execute", "run_sweep", "run_figure", "run_estimate", "run_simulate", "write_trace",
           "TARGETS", "DEFAULTS"]
