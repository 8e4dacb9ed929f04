"""End-to-end acceptance criteria 1-8 at their stated tolerances.

Each test records a one-line verdict (shown in the terminal summary) before asserting.
"""

import hashlib
import json
import time
import warnings

import numpy as np
import pytest

from gridid import pipeline
from gridid.cli import main
from gridid.config import load_config
from gridid.gridsim import CircuitParams, analytic_impedance, grid_model, rl_degenerate_params, simulate_experiment
from gridid.metrics import bode_errors
from gridid.nonparam import SweepPlan, frequency_sweep_identify, wideband_fft_identify
from gridid.signals import DqSeries, generate_rbs, inverse_park, park
from gridid.statespace import discretize_zoh
from gridid.sysid import (
    OrderAmbiguityWarning,
    RegressionData,
    arx_identify,
    arx_predict,
    d2c,
    frequency_response,
    select_order,
    subspace_identify,
)
from gridid.sysid.arx import _regressor

from .conftest import ACCEPTANCE_LINES, REFERENCE_CONFIG
from .test_arx import arx_recursion, rbs
from .test_order import order2_data
from .test_subspace import markov, simulate

W = 2 * np.pi * 50
N_SEEDS = 5


def verdict(n, ok, detail):
    ACCEPTANCE_LINES[n] = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    return ok


def rl_closed_form(R, L, f):
    s = 2j * np.pi * np.asarray(f)
    return np.array([[[R + x * L, -W * L], [W * L, R + x * L]] for x in s])


# ---------------------------------------------------------------- 1


def test_criterion_1_reference_structure():
    t0 = time.perf_counter()
    ss = grid_model(CircuitParams(), W)
    ok = ss.n_states == 10 and ss.is_hurwitz() and np.all(ss.D == 0) and ss.shape == (2, 2)
    dt = time.perf_counter() - t0
    ok = ok and dt < 1.0
    verdict(1, ok, f"states={ss.n_states} hurwitz={ss.is_hurwitz()} D=0:{bool(np.all(ss.D == 0))} ({dt:.3f} s)")
    assert ok


# ---------------------------------------------------------------- 2


def test_criterion_2_noiseless_rl_oracles():
    t0 = time.perf_counter()
    p = rl_degenerate_params(shunt_c=1e-5)
    g = grid_model(p, W)
    R, L = 0.5, 0.3 / p.omega_base
    errs = {}

    f = np.geomspace(1, 1000, 60)
    fr = analytic_impedance(p, W, f)
    errs["analytic"] = np.max(np.abs(fr.Z - rl_closed_form(R, L, f)) / np.abs(rl_closed_form(R, L, f)))

    fs = 5000.0
    plan = SweepPlan.log_spaced(1, 1000, 20, settle_time=0.1, cycle_duration=5.1, sample_rate=fs)

    def runner(exc_d, exc_q, duration, cycle):
        return simulate_experiment(g, exc_d, exc_q, omega_g=W, duration=duration, sample_rate=fs,
                                   lead_in=0.02, injection="device")

    fr = frequency_sweep_identify(runner, plan, threads=4)
    ref = rl_closed_form(R, L, fr.freqs)
    errs["sweep"] = np.max(np.abs(fr.Z - ref) / np.abs(ref))

    fs, T = 50_000.0, 20.0
    recs = []
    for sd, sq in ((1, 2), (3, 4)):
        n = int(fs * T)
        recs.append(simulate_experiment(g, generate_rbs(sd, n, 0.1, fs), generate_rbs(sq, n, 0.1, fs),
                                        omega_g=W, duration=T, sample_rate=fs, oversample=1,
                                        lead_in=0.01, tracking_lag=1e-4))
    fr = wideband_fft_identify(*recs, band=(1.0, 1000.0))
    ref = rl_closed_form(R, L, fr.freqs)
    errs["wideband"] = np.max(np.abs(fr.Z - ref) / np.abs(ref))
    df = fr.freqs[1] - fr.freqs[0]  # FFT bin spacing: the band edges fall between bins
    covered = fr.freqs[0] <= 1.0 + df and fr.freqs[-1] >= 1000.0 - df
    dt = time.perf_counter() - t0
    ok = all(e <= 0.01 for e in errs.values()) and covered and dt < 30
    detail = " ".join(f"{k}={v:.2e}" for k, v in errs.items())
    verdict(2, ok, f"max rel err {detail} bins {fr.freqs[0]:g}-{fr.freqs[-1]:g} Hz ({dt:.1f} s)")
    assert ok


# ---------------------------------------------------------------- 3, 4


@pytest.fixture(scope="module")
def parametric_runs():
    base = load_config(REFERENCE_CONFIG)
    out = []
    t0 = time.perf_counter()
    for k in range(N_SEEDS):
        cfg = base.with_seed_offset(k)
        rec = pipeline.parametric_record(cfg)
        arx = pipeline.identify_arx(cfg, rec)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", OrderAmbiguityWarning)
            sub = pipeline.identify_subspace(cfg, rec)
        f = pipeline.bode_freqs(cfg)
        f = f[f < cfg.sample_rate / 2]
        truth = pipeline.truth(cfg)
        out.append({
            "arx": bode_errors(frequency_response(arx, f), truth, cfg.band),
            "sub": bode_errors(frequency_response(sub, f), truth, cfg.band),
            "order": arx.meta["minimal_order"],
        })
    return out, time.perf_counter() - t0


def test_criterion_3_arx_accuracy(parametric_runs):
    runs, dt = parametric_runs
    mag = float(np.median([r["arx"][0] for r in runs]))
    ph = float(np.median([r["arx"][1] for r in runs]))
    orders = [r["order"] for r in runs]
    ok = mag <= -25 and ph <= 15 and all(o == 16 for o in orders) and dt < 120
    verdict(3, ok, f"median over {N_SEEDS} seeds: {mag:.1f} dB, {ph:.1f} deg; minimal orders {orders} ({dt:.0f} s)")
    assert ok


def test_criterion_4_subspace_accuracy(parametric_runs):
    runs, _ = parametric_runs
    mag = float(np.median([r["sub"][0] for r in runs]))
    ph = float(np.median([r["sub"][1] for r in runs]))
    ok = mag <= -12 and ph <= 40
    verdict(4, ok, f"median over {N_SEEDS} seeds: {mag:.1f} dB, {ph:.1f} deg")
    assert ok


# ---------------------------------------------------------------- 5, 6, 8 share two CLI runs


def _digests(d):
    return {p.name: hashlib.sha256(p.read_bytes()).hexdigest() for p in sorted(d.iterdir())}


@pytest.fixture(scope="module")
def compare_runs(tmp_path_factory):
    root = tmp_path_factory.mktemp("compare")
    times = []
    for name in ("a", "b"):
        t0 = time.perf_counter()
        code = main(["compare", "--config", str(REFERENCE_CONFIG), "--out", str(root / name), "--threads", "4"])
        times.append(time.perf_counter() - t0)
        assert code == 0
    report = json.loads((root / "a" / "report.json").read_text())
    rows = {r["method"]: r for r in report["rows"]}
    return rows, _digests(root / "a"), _digests(root / "b"), times


REFERENCE_DB = {"arx": -33.6, "sweep": -31.7, "seqpert": -24.2}


def test_criterion_5_accuracy_ordering(compare_runs):
    rows = compare_runs[0]
    e = {k: rows[k]["avg_mag_error_db"] for k in REFERENCE_DB}
    ordered = e["arx"] <= e["sweep"] <= e["seqpert"]
    drift = {k: e[k] - REFERENCE_DB[k] for k in REFERENCE_DB}
    within = all(abs(d) <= 6 for d in drift.values())
    ok = ordered  # ordering is required whether or not the absolute values drift
    detail = " ".join(f"{k}={e[k]:.1f} dB (reference {REFERENCE_DB[k]}, drift {drift[k]:+.1f})" for k in REFERENCE_DB)
    verdict(5, ok, f"{detail}; ordering {'holds' if ordered else 'violated'}; "
                   f"{'all' if within else 'not all'} within +/-6 dB")
    assert ok


def test_criterion_6_efficiency_counters(compare_runs):
    rows = compare_runs[0]
    arx, sw, sq = rows["arx"], rows["sweep"], rows["seqpert"]
    counts = [(arx["experiment_cycles"], arx["excitation_time"]),
              (sq["experiment_cycles"], sq["excitation_time"]),
              (sw["experiment_cycles"], sw["excitation_time"])]
    ok_counts = counts == [(1, 15.0), (2, 30.0), (40, 400.0)]
    ok_energy = sw["energy_i"] > sq["energy_i"] > arx["energy_i"]
    ok = ok_counts and ok_energy
    verdict(6, ok, f"cycles/time {counts}; energy_i sweep {sw['energy_i']:.4g} > seqpert {sq['energy_i']:.4g}"
                   f" > parametric {arx['energy_i']:.4g}: {ok_energy}")
    assert ok


def test_criterion_8_determinism(compare_runs):
    _, a, b, times = compare_runs
    numeric = [k for k in a if k.endswith((".csv", ".json"))]
    ok = a == b and len(numeric) > 5
    verdict(8, ok, f"{len(a)} artifacts byte-identical across two runs: {a == b} "
                   f"(runs took {times[0]:.0f} s, {times[1]:.0f} s)")
    assert ok


# ---------------------------------------------------------------- 7


def _property_suite():
    rng = np.random.default_rng(2024)
    res = {}

    # (a) park / inverse park round trip
    worst = 0.0
    for _ in range(20):
        d, q = rng.normal(size=(2, 500))
        s = DqSeries(0.0, 2e-4, d, q, 50.0)
        back = park(inverse_park(s, theta0=0.3), 50.0, theta0=0.3)
        worst = max(worst, np.max(np.abs(back.d - d)), np.max(np.abs(back.q - q)))
    res["a"] = (worst, worst <= 1e-12)

    # (b) noiseless ARX self recovery
    worst = 0.0
    for seed in range(10):
        r = np.random.default_rng(seed)
        A = 0.3 / 2 * r.uniform(-1, 1, size=(2, 2, 2))
        B = r.normal(size=(3, 2, 2))
        u = rbs(seed, 1500, 2)
        m = arx_identify(RegressionData(u, arx_recursion(A, B, u), 1.0), 2, 3)
        worst = max(worst, np.max(np.abs(m.A_coeffs - A)), np.max(np.abs(m.B_coeffs - B)))
    res["b"] = (worst, worst <= 1e-8)

    # (c) subspace Markov parameters, noiseless
    worst = 0.0
    for seed in range(5):
        r = np.random.default_rng(seed)
        n = 3
        Q, _ = np.linalg.qr(r.normal(size=(n, n)))
        A = Q @ np.diag(r.uniform(0.2, 0.85, n) * r.choice([-1, 1], n)) @ Q.T
        B, C, D = r.normal(size=(n, 2)), r.normal(size=(2, n)), r.normal(size=(2, 2))
        u = rbs(seed, 1500, 2)
        rr = 6
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", OrderAmbiguityWarning)
            ss = subspace_identify(RegressionData(u, simulate(A, B, C, D, u), 1.0), n, rr)
        for k in range(2 * rr + 1):
            worst = max(worst, np.max(np.abs(ss.markov(k) - markov(A, B, C, D, k))))
    res["c"] = (worst, worst <= 1e-6)

    # (d) residual / regressor orthogonality
    worst = 0.0
    for seed in range(10):
        r = np.random.default_rng(seed)
        data = RegressionData(r.normal(size=(800, 2)), r.normal(size=(800, 2)), 1.0)
        m = arx_identify(data, 3, 3)
        Phi, Y, _ = _regressor(data, 3, 3, 1)
        _, E = arx_predict(m, data)
        worst = max(worst, np.max(np.abs(Phi.T @ E)) / (np.linalg.norm(Phi) * np.linalg.norm(Y)))
    res["d"] = (worst, worst <= 1e-8)

    # (e) spectral mapping of the ZOH discretization
    ss = grid_model(CircuitParams(), W)
    dt = 2e-4
    lc = np.linalg.eigvals(ss.A)
    ld = np.linalg.eigvals(discretize_zoh(ss, dt).A)
    target = np.exp(lc * dt)
    worst = max(np.min(np.abs(ld - t)) for t in target)
    res["e"] = (worst, worst <= 1e-10)

    # (f) matrix-log round trip
    back = d2c(discretize_zoh(ss, dt), "matrix_log")
    worst = max(np.max(np.abs(back.A - ss.A)), np.max(np.abs(back.B - ss.B)))
    res["f"] = (worst, worst <= 1e-8)

    # (g) AIC Monte Carlo
    hits = sum(select_order(order2_data(seed), [1, 2, 4, 8])[0] == 2 for seed in range(50))
    res["g"] = (hits / 50, hits >= 45)
    return res


def test_criterion_7_property_suite():
    t0 = time.perf_counter()
    res = _property_suite()
    dt = time.perf_counter() - t0
    ok = all(v[1] for v in res.values()) and dt < 180
    detail = " ".join(f"({k}) {v[0]:.2e}{'' if v[1] else '!'}" for k, v in res.items())
    verdict(7, ok, f"{detail} ({dt:.1f} s)")
    assert ok
