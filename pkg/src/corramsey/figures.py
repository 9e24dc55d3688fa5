"""Data grids behind the gain maps and information/sensitivity curves.

All times are in units of ``T2*`` (``t2_star = 1``).  Ranges the source
figures leave open are fixed here and echoed into each table's metadata.
"""
from __future__ import annotations

import math

import numpy as np

from .fisher import (PHASE_GRID_SIZE, Param, detection_threshold, fisher_correlated_ramsey,
                     fisher_dd, gain_approx, gain_exact, log_ratio, sensitivity)
from .model import DDProtocol, NoiseModel, RamseyProtocol, SignalParams
from .tables import Table, add_sentinel_columns, parallel_map

PRESETS = ("fig2a", "fig2b", "fig3a", "fig3b", "fig3c")

FIG2A = {"m": 8, "t2": 8.0, "tau_o": 0.5, "xi": 1.0, "tau_r": (0.05, 3.0), "total_time": (4.0, 100.0)}
FIG2B = {"m": 1, "t2": 30.0, "tau_r": 0.5, "xi": 1.0, "tau_o": (0.0, 3.0), "total_time": (2.0, 40.0)}
FIG3A = {"total_time": 1000.0, "tau_r": 0.5, "tau_o": 0.5, "phis": (0.0, math.pi / 2),
         "omega": (1e-3, 3.0)}
FIG3B = {"omegas": (0.05 * math.pi, 0.2 * math.pi), "totals": (100.0, 1000.0), "tau_r": 0.5,
         "tau_o": 0.5, "total_time": (10.0, 1000.0)}
FIG3C = {"omega": math.pi, "tau_r": 0.5, "tau_o": 0.5, "exponents": (1.0, 0.8),
         "total_time": (2.0, 1000.0)}


def gain_cell(tau_r, tau_o, dd: DDProtocol, noise: NoiseModel, xi: float, param=Param.FREQUENCY,
              n_phases=PHASE_GRID_SIZE):
    """Exact and approximate log-gains at frequency matching for one grid cell.

    Returns ``(n, exact, approx)``; with no whole Ramsey shot in ``T`` the
    exact gain is ``-inf``.
    """
    T = dd.total_time
    n = int(math.floor(T / (tau_r + tau_o) * (1 + 1e-6)))
    signal = SignalParams(dd.omega_dd, xi, 0.0)
    ramsey = RamseyProtocol(tau_r, tau_o, max(n, 1))
    if n >= 1:
        exact = gain_exact(ramsey, dd, signal, noise, param, n_phases)
    else:
        exact = log_ratio(0.0, fisher_dd(dd, signal, noise, param, True, n_phases).value)
    return n, exact, gain_approx(ramsey, dd, noise, param)


def _gain_table(xs, ys, x_name, cell, threads, meta):
    table = Table([x_name, "total_time", "omega", "n", "m", "tau", "t2", "log_gain", "log_gain_approx"],
                  meta=meta)
    cells = [(x, y) for y in ys for x in xs]
    for (x, T), row in zip(cells, parallel_map(lambda c: cell(*c), cells, threads)):
        table.add(dict(row, **{x_name: float(x), "total_time": float(T)}))
    add_sentinel_columns(table, "log_gain")
    return table


def fig2a(resolution: int = 100, n_phases: int = PHASE_GRID_SIZE, threads: int = 1) -> Table:
    """Log-gain over (tau_r, T) for an 8-pulse sequence with T2 = 8 T2*."""
    p = FIG2A
    noise = NoiseModel(1.0, dd_exponent=1.0)
    xs = np.linspace(*p["tau_r"], resolution)
    ys = np.linspace(*p["total_time"], resolution)

    def cell(tau_r, T):
        dd = DDProtocol(p["m"], T / p["m"])
        n, exact, approx = gain_cell(tau_r, p["tau_o"], dd, noise, p["xi"], Param.FREQUENCY, n_phases)
        return {"omega": dd.omega_dd, "n": n, "m": dd.m, "tau": dd.tau, "t2": noise.coherence_time(dd.m),
                "log_gain": exact, "log_gain_approx": approx}

    meta = {"preset": "fig2a", "settings": _listify(p), "resolution": resolution, "n_phases": n_phases}
    return _gain_table(xs, ys, "tau_r", cell, threads, meta)


def fig2b(resolution: int = 100, n_phases: int = PHASE_GRID_SIZE, threads: int = 1) -> Table:
    """Log-gain over (tau_o, T) against a Hahn echo with T2 = 30 T2*."""
    p = FIG2B
    noise = NoiseModel(1.0, t2_dd=p["t2"])
    xs = np.linspace(*p["tau_o"], resolution)
    ys = np.linspace(*p["total_time"], resolution)

    def cell(tau_o, T):
        dd = DDProtocol(p["m"], T / p["m"])
        n, exact, approx = gain_cell(p["tau_r"], tau_o, dd, noise, p["xi"], Param.FREQUENCY, n_phases)
        return {"omega": dd.omega_dd, "n": n, "m": dd.m, "tau": dd.tau, "t2": noise.coherence_time(dd.m),
                "log_gain": exact, "log_gain_approx": approx}

    meta = {"preset": "fig2b", "settings": _listify(p), "resolution": resolution, "n_phases": n_phases}
    return _gain_table(xs, ys, "tau_o", cell, threads, meta)


def fig3a_dd_protocol(omega: float, total_time: float) -> DDProtocol:
    """Pulse count ``max(1, floor(T omega / pi))`` with ``tau = T / M``."""
    m = max(1, int(math.floor(total_time * omega / math.pi)))
    return DDProtocol(m, total_time / m)


def fig3a_dd_information(omega: float, total_time: float = FIG3A["total_time"],
                         n_phases: int = PHASE_GRID_SIZE) -> float:
    dd = fig3a_dd_protocol(omega, total_time)
    noise = NoiseModel(1.0, dd_exponent=1.0)
    return fisher_dd(dd, SignalParams(omega, 1.0 / dd.tau), noise, Param.FREQUENCY, True, n_phases).value


def fig3a_ramsey_information(omega: float, phi=None, n_phases: int = PHASE_GRID_SIZE) -> float:
    p = FIG3A
    ramsey = RamseyProtocol(p["tau_r"], p["tau_o"], int(round(p["total_time"] / (p["tau_r"] + p["tau_o"]))))
    signal = SignalParams(omega, 1.0 / p["tau_r"], 0.0 if phi is None else phi)
    return fisher_correlated_ramsey(ramsey, signal, NoiseModel(1.0), Param.FREQUENCY,
                                    phi is None, n_phases).value


def dd_rayleigh_crossing(lo: float = 1e-3, hi: float = math.pi, iterations: int = 80,
                         n_phases: int = PHASE_GRID_SIZE) -> float:
    """Bisect (in log-frequency) for where the DD information meets ``4 / omega**2``."""
    def excess(w):
        return fig3a_dd_information(w, n_phases=n_phases) - detection_threshold(Param.FREQUENCY, w)

    f_lo, f_hi = excess(lo), excess(hi)
    if f_lo * f_hi > 0:
        raise ValueError("threshold crossing is not bracketed")
    a, b = math.log(lo), math.log(hi)
    for _ in range(iterations):
        mid = 0.5 * (a + b)
        if (excess(math.exp(mid)) > 0) == (f_hi > 0):
            b = mid
        else:
            a = mid
    return math.exp(0.5 * (a + b))


def fig3a(resolution: int = 200, n_phases: int = PHASE_GRID_SIZE, threads: int = 1) -> Table:
    """Frequency information over a log grid of omega, Ramsey versus DD, at T = 1000 T2*."""
    p = FIG3A
    omegas = np.geomspace(*p["omega"], resolution)
    phi0, phi1 = p["phis"]

    def row(w):
        dd = fig3a_dd_protocol(w, p["total_time"])
        return {"omega": float(w),
                "i_nr_phi0": fig3a_ramsey_information(w, phi0, n_phases),
                "i_nr_phi1": fig3a_ramsey_information(w, phi1, n_phases),
                "i_nr_avg": fig3a_ramsey_information(w, None, n_phases),
                "m": dd.m, "tau": dd.tau, "i_dd": fig3a_dd_information(w, p["total_time"], n_phases),
                "threshold": detection_threshold(Param.FREQUENCY, w)}

    table = Table(["omega", "i_nr_phi0", "i_nr_phi1", "i_nr_avg", "m", "tau", "i_dd", "threshold"],
                  meta={"preset": "fig3a", "settings": _listify(p), "resolution": resolution,
                        "n_phases": n_phases, "dd_crossing_omega": dd_rayleigh_crossing(n_phases=n_phases)})
    for r in parallel_map(row, omegas, threads):
        table.add(r)
    return table


def integer_times(lo: float, hi: float, resolution: int, log: bool = False) -> np.ndarray:
    grid = np.geomspace(lo, hi, resolution) if log else np.linspace(lo, hi, resolution)
    return np.unique(np.round(grid))


def fig3b_phase_information(omega: float, total_time: float, phi=None,
                            n_phases: int = PHASE_GRID_SIZE) -> float:
    p = FIG3B
    tilde = p["tau_r"] + p["tau_o"]
    ramsey = RamseyProtocol(p["tau_r"], p["tau_o"], int(math.floor(total_time / tilde * (1 + 1e-12))))
    signal = SignalParams(omega, 1.0 / p["tau_r"], 0.0 if phi is None else phi)
    return fisher_correlated_ramsey(ramsey, signal, NoiseModel(1.0), Param.PHASE,
                                    phi is None, n_phases).value


def fig3b(resolution: int = 100, n_phases: int = PHASE_GRID_SIZE, threads: int = 1) -> Table:
    """Phase information: phase-averaged versus T, and versus the true phase at two T."""
    p = FIG3B
    jobs = []
    for w in p["omegas"]:
        jobs += [("vs_total_time", w, float(T), None) for T in integer_times(*p["total_time"], resolution)]
        for T in p["totals"]:
            jobs += [("vs_phi", w, T, float(phi))
                     for phi in np.linspace(0.0, 2 * math.pi, resolution, endpoint=False)]

    def row(job):
        series, w, T, phi = job
        return {"series": series, "omega": w, "total_time": T,
                "phi": math.nan if phi is None else phi, "phase_averaged": phi is None,
                "i_phase": fig3b_phase_information(w, T, phi, n_phases),
                "threshold": detection_threshold(Param.PHASE)}

    table = Table(["series", "omega", "total_time", "phi", "phase_averaged", "i_phase", "threshold"],
                  meta={"preset": "fig3b", "settings": _listify(p), "resolution": resolution,
                        "n_phases": n_phases})
    for r in parallel_map(row, jobs, threads):
        table.add(r)
    return table


def fig3c_information(total_time: float, dd_exponent=None, n_phases: int = PHASE_GRID_SIZE) -> float:
    """Phase-averaged frequency information at omega = pi/T2*.

    ``dd_exponent=None`` gives correlated Ramsey; otherwise a matched DD
    sequence (``tau = pi/omega``, ``M = T/tau``) with ``T2 = M**p T2*``.
    """
    p = FIG3C
    w = p["omega"]
    if dd_exponent is None:
        tilde = p["tau_r"] + p["tau_o"]
        ramsey = RamseyProtocol(p["tau_r"], p["tau_o"], int(math.floor(total_time / tilde * (1 + 1e-12))))
        return fisher_correlated_ramsey(ramsey, SignalParams(w, 1.0 / p["tau_r"]), NoiseModel(1.0),
                                        Param.FREQUENCY, True, n_phases).value
    tau = math.pi / w
    dd = DDProtocol(max(1, int(round(total_time / tau))), tau)
    return fisher_dd(dd, SignalParams(w, 1.0 / tau), NoiseModel(1.0, dd_exponent=dd_exponent),
                     Param.FREQUENCY, True, n_phases).value


def fig3c(resolution: int = 60, n_phases: int = PHASE_GRID_SIZE, threads: int = 1) -> Table:
    """Frequency sensitivity ``sqrt(I/T)`` versus T, Ramsey against DD for each T2 scaling."""
    p = FIG3C
    totals = integer_times(*p["total_time"], resolution, log=True)
    cols = ["total_time", "i_nr", "eta_nr"]
    for e in p["exponents"]:
        tag = _exp_tag(e)
        cols += [f"i_dd_{tag}", f"eta_dd_{tag}"]

    def row(T):
        out = {"total_time": float(T)}
        out["i_nr"] = fig3c_information(T, None, n_phases)
        out["eta_nr"] = sensitivity(out["i_nr"], T)
        for e in p["exponents"]:
            tag = _exp_tag(e)
            out[f"i_dd_{tag}"] = fig3c_information(T, e, n_phases)
            out[f"eta_dd_{tag}"] = sensitivity(out[f"i_dd_{tag}"], T)
        return out

    table = Table(cols, meta={"preset": "fig3c", "settings": _listify(p), "resolution": resolution,
                              "n_phases": n_phases})
    for r in parallel_map(row, totals, threads):
        table.add(r)
    return table


def _exp_tag(exponent: float) -> str:
    return "p" + format(exponent, "g").replace(".", "")


def _listify(settings: dict) -> dict:
    return {k: list(v) if isinstance(v, tuple) else v for k, v in settings.items()}


BUILDERS = {"fig2a": fig2a, "fig2b": fig2b, "fig3a": fig3a, "fig3b": fig3b, "fig3c": fig3c}
DEFAULT_RESOLUTION = {"fig2a": 100, "fig2b": 100, "fig3a": 200, "fig3b": 100, "fig3c": 60}
