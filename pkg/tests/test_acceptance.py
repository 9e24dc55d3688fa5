"""End-to-end acceptance checks, one test per criterion.

Each test records a ``[PASS]``/``[FAIL]`` line (printed in the terminal
summary by ``conftest.py``, or directly when run as a script) before
asserting, so the outcome of every criterion is visible in one place.
Tolerances are the required ones; nothing here is relaxed.
"""
import math
import time

import numpy as np
import pytest
from scipy import stats

from _fd import richardson
from corramsey.cli import main
from corramsey.figures import (FIG2A, dd_rayleigh_crossing, fig2a, fig3a, fig3b_phase_information,
                               fig3c, gain_cell, FIG3B)
from corramsey.fisher import (fisher_approx_nr, fisher_correlated_ramsey, phase_derivative,
                              detection_threshold)
from corramsey.model import DDProtocol, NoiseModel, Param, RamseyProtocol, SignalParams
from corramsey.phase import dd_phase, dd_phase_detuned, phase_quadrature_oracle, ramsey_phase
from corramsey.qdyne import crb_report, default_bounds, run_campaign

REPORT = []


def report(name, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}"
    REPORT.append(line)
    print(line)
    return ok


@pytest.fixture(scope="module")
def fig2a_table():
    t0 = time.perf_counter()
    table = fig2a(100)
    return table, time.perf_counter() - t0


def test_oracle_equivalence():
    rng = np.random.default_rng(2024)
    worst, t0 = 0.0, time.perf_counter()
    for _ in range(1000):
        w, xi, phi = rng.uniform(0, 4 * math.pi), rng.uniform(0, 5), rng.uniform(0, 2 * math.pi)
        m, tau, tau_r = int(rng.integers(1, 17)), rng.uniform(0.05, 5), rng.uniform(0.05, 5)
        sig = SignalParams(w, xi, phi)
        for got, ref in ((ramsey_phase(sig, tau_r), phase_quadrature_oracle(sig, RamseyProtocol(tau_r, 0, 1))),
                         (dd_phase(sig, DDProtocol(m, tau)), phase_quadrature_oracle(sig, DDProtocol(m, tau)))):
            worst = max(worst, abs(got - ref) / (1e-9 + 1e-9 * abs(ref)))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1.0 and elapsed < 10
    assert report("closed-form phases vs quadrature (1000 configs)", ok,
                  f"worst error {worst:.3g} of the 1e-9 abs+rel budget, {elapsed:.1f} s")


def test_detuning_limit():
    worst_by_m = {}
    for m in range(1, 17):
        for tau in (0.1, 1.0, 3.0):
            for frac in (-0.01, -0.005, 0.001, 0.005, 0.01):
                delta = frac / (m * tau)
                for phi in (0.0, 0.6, 2.0):
                    sig = SignalParams(math.pi / tau + delta, 1.0, phi)
                    exact = dd_phase(sig, DDProtocol(m, tau))
                    rel = abs(dd_phase_detuned(sig, DDProtocol(m, tau), delta) - exact) / abs(exact)
                    worst_by_m[m] = max(worst_by_m.get(m, 0.0), rel)
    failing = [m for m, r in worst_by_m.items() if r > 1e-3]
    jump = 0.0
    for m in range(1, 17):
        for tau in (0.1, 1.0, 3.0):
            w0 = math.pi / tau
            at = dd_phase(SignalParams(w0, 1.0, 0.4), DDProtocol(m, tau))
            for w in (w0 * (1 - 1e-12), w0 * (1 + 1e-12)):
                jump = max(jump, abs(dd_phase(SignalParams(w, 1.0, 0.4), DDProtocol(m, tau)) - at))
    ok_rel, ok_cont = not failing, jump <= 1e-8
    report("detuned form within 1e-3 relative for |M tau delta| <= 0.01", ok_rel,
           f"worst {max(worst_by_m.values()):.3g} (M=1: {worst_by_m[1]:.3g}, M=2: {worst_by_m[2]:.3g}); "
           f"failing M: {failing or 'none'}")
    report("DD phase continuous through omega tau = pi", ok_cont, f"largest jump {jump:.2g}")
    assert ok_rel and ok_cont


def test_derivative_correctness():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(500):
        w, xi, phi = rng.uniform(0.05, 4 * math.pi), rng.uniform(0.1, 5), rng.uniform(0, 2 * math.pi)
        m, tau, tau_r, t0 = int(rng.integers(1, 17)), rng.uniform(0.05, 5), rng.uniform(0.05, 5), rng.uniform(0, 10)
        for proto, start in ((RamseyProtocol(tau_r, 0, 1), t0), (DDProtocol(m, tau), 0.0)):
            for param in Param:
                base = [w, xi, phi]

                def f(v):
                    args = list(base)
                    args[param - 1] = v
                    sig = SignalParams(*args)
                    return ramsey_phase(sig, tau_r, start) if isinstance(proto, RamseyProtocol) else dd_phase(sig, proto)

                x = base[param - 1]
                h = min(1e-3, 0.5 * x) if param == Param.FREQUENCY else 1e-2
                num = richardson(f, x, h)
                ana = phase_derivative(SignalParams(*base), proto, param, start)
                worst = max(worst, abs(ana - num) / max(abs(num), 1e-6))
    ok = worst <= 1e-6
    assert report("analytic derivatives vs Richardson differences (500 configs x 3 params x 2 protocols)",
                  ok, f"worst relative error {worst:.3g}")


def test_gain_map_tau_r_half(fig2a_table):
    table, elapsed = fig2a_table
    noise = NoiseModel(1.0, 1.0)
    totals = np.unique(table.column("total_time").astype(float))
    row = []
    for T in totals:
        dd = DDProtocol(FIG2A["m"], T / FIG2A["m"])
        row.append(gain_cell(0.5, FIG2A["tau_o"], dd, noise, FIG2A["xi"])[1])
    row = np.array(row)
    t2 = FIG2A["t2"]
    beyond = totals > t2
    negative = totals[beyond & (row <= 0)]
    deep = totals >= 2 * t2
    slope = stats.linregress(totals[deep], row[deep]).slope
    ok_pos = negative.size == 0
    ok_slope = abs(slope - 2 / t2) <= 0.1 * 2 / t2
    ok_time = elapsed < 60
    report("gain map: log-gain > 0 for all T > T2 at tau_r = 0.5", ok_pos,
           "holds" if ok_pos else f"log-gain <= 0 for T in [{negative.min():.3g}, {negative.max():.3g}] "
           f"(min {row[beyond].min():.3g})")
    report("gain map: slope vs T for T >= 2 T2 equals 2/T2 within 10%", ok_slope,
           f"slope {slope:.4f} vs {2 / t2:.4f} ({abs(slope * t2 / 2 - 1):.1%} off)")
    report("gain map: 100x100 grid under 1 min", ok_time, f"{elapsed:.1f} s")
    assert ok_pos and ok_slope and ok_time


def test_low_frequency_information_curves():
    table = fig3a(200)
    w = table.column("omega").astype(float)
    thr = table.column("threshold").astype(float)
    nr_ok = bool(np.all(table.column("i_nr_avg").astype(float) > thr))
    low = w <= 0.1
    dd_ok = bool(np.all(table.column("i_dd").astype(float)[low] < thr[low]))
    crossing = dd_rayleigh_crossing()
    cross_ok = 1e-3 < crossing < math.pi
    ok = nr_ok and dd_ok and cross_ok
    assert report("frequency information: Ramsey above 4/omega^2 on [1e-3, 3], DD below for omega <= 0.1",
                  ok, f"Ramsey ok={nr_ok}, DD ok={dd_ok}, DD crossing at omega = {crossing:.4g}")


def test_phase_information_linear_in_time():
    totals = np.arange(10, 1001, 10, dtype=float)
    details, ok = [], True
    for w in FIG3B["omegas"]:
        info = np.array([fig3b_phase_information(w, T) for T in totals])
        r2 = stats.linregress(totals, info).rvalue ** 2
        above = info[-1] > detection_threshold(Param.PHASE)
        ok &= r2 >= 0.999 and above
        details.append(f"omega={w:.3g}: R^2={r2:.6f}, I(T=1000)={info[-1]:.4g}")
    assert report("phase information linear in T and above 10/pi", ok, "; ".join(details))


def test_sensitivity_ordering():
    table = fig3c(60)
    eta_nr = table.column("eta_nr").astype(float)
    totals = table.column("total_time").astype(float)
    details, ok = [], True
    for tag in ("p1", "p08"):
        eta_dd = table.column(f"eta_dd_{tag}").astype(float)
        bad = totals[eta_nr < eta_dd]
        ok &= bad.size == 0
        details.append(f"{tag}: " + ("Ramsey >= DD everywhere" if bad.size == 0 else
                                     f"DD ahead at {bad.size}/{totals.size} T in [{bad.min():g}, {bad.max():g}]"))
    assert report("sensitivity: Ramsey >= DD at omega = pi for both T2 scalings", ok, "; ".join(details))


def test_approximate_gain_tracks_exact(fig2a_table):
    table, _ = fig2a_table
    e = table.column("log_gain").astype(float)
    a = table.column("log_gain_approx").astype(float)
    ok_cells = np.isfinite(e) & np.isfinite(a)
    rho = stats.spearmanr(e[ok_cells], a[ok_cells]).statistic
    big = ok_cells & (np.abs(e) > 0.5)
    agree = float(np.mean(np.sign(e[big]) == np.sign(a[big])))
    ok = rho >= 0.9 and agree >= 0.8
    assert report("approximate vs exact gain", ok, f"Spearman {rho:.4f}, sign agreement {agree:.1%} "
                  f"on {big.sum()} cells")


def test_low_frequency_information_convergence():
    noise, ratios = NoiseModel(1.0), {}
    for T in (100.0, 1000.0):
        for wt in (1e-2, 1e-4):
            ramsey = RamseyProtocol(0.5, 0.5, int(T))
            sig = SignalParams(wt / T, 2.0, 0.0)
            for p in (Param.AMPLITUDE, Param.PHASE):
                exact = fisher_correlated_ramsey(ramsey, sig, noise, p, phase_average=True).value
                ratios[(T, wt, int(p))] = exact / fisher_approx_nr(ramsey, sig, noise, p).value
    worst = max(abs(r - 1) for r in ratios.values())
    amp = [r for k, r in ratios.items() if k[2] == 2]
    pha = [r for k, r in ratios.items() if k[2] == 3]
    ok = worst <= 0.1
    assert report("low-frequency amplitude/phase information vs leading-order formula (tau_r = 0.5, xi = 2)",
                  ok, f"exact/approx amplitude {min(amp):.3f}-{max(amp):.3f}, phase {min(pha):.3f}-{max(pha):.3f}")


@pytest.mark.slow
def test_cramer_rao_campaign():
    sig = SignalParams(0.01 * math.pi, 2.0, math.pi / 4)
    ramsey, noise = RamseyProtocol(0.5, 0.5, 10_000), NoiseModel(1.0)
    details, ok = [], True
    for name, p in (("xi", Param.AMPLITUDE), ("phi", Param.PHASE)):
        t0 = time.perf_counter()
        res = run_campaign(sig, ramsey, noise, {name: default_bounds(p, ramsey)}, 200, 12345, 41)
        elapsed = time.perf_counter() - t0
        fisher = fisher_correlated_ramsey(ramsey, sig, noise, p).value
        ratio = crb_report(res, fisher, p, getattr(sig, name)).ratio
        ok &= 0.8 <= ratio <= 2.0 and elapsed < 300
        details.append(f"{name}: MSE*I = {ratio:.3f} ({elapsed:.1f} s)")
    assert report("Cramer-Rao campaign, 200 seeds, N = 1e4", ok, "; ".join(details))


def test_determinism(tmp_path):
    commands = [
        ["simulate", "n=5000", "omega=0.0314", "xi=2", "phi=0.7", "--seed", "99"],
        ["estimate", "trials=8", "n=2000", "omega=0.0314", "xi=2", "estimate=xi,phi", "--seed", "99"],
        ["sweep", "target=fisher_ramsey", "x_axis=omega:0:3:7", "y_axis=n:10:40:4", "phase_average=1", "--seed", "1"],
        ["figure", "fig3c", "resolution=12", "--format", "json"],
    ]
    mismatched = []
    for i, cmd in enumerate(commands):
        blobs = []
        for threads in (1, 4, 1):
            out = tmp_path / f"{i}_{threads}_{len(blobs)}.out"
            assert main(cmd + ["--threads", str(threads), "--out", str(out)]) == 0
            blobs.append(out.read_bytes())
        if len(set(blobs)) != 1:
            mismatched.append(cmd[0])
    ok = not mismatched
    assert report("seeded runs byte-identical across repeats and thread counts", ok,
                  f"{len(commands)} commands checked" + (f", mismatched: {mismatched}" if mismatched else ""))


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-q"]))
