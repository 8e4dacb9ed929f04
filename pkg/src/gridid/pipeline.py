"""End-to-end experiments: simulate, preprocess, identify, compare."""

from __future__ import annotations

import numpy as np

from .config import ExperimentConfig
from .gridsim import (
    MeasurementRecord,
    NoiseConfig,
    analytic_impedance,
    dominant_time_constant,
    grid_model,
    simulate_experiment,
    small_signal,
)
from .metrics import ExperimentMeta, ModelType, comparison_report, signal_energy
from .nonparam import SpectralAveraging, SweepPlan, frequency_sweep_identify, wideband_fft_identify
from .response import FrequencyResponse
from .signals import generate_prbs, generate_rbs
from .sysid import (
    RegressionData,
    arx_identify,
    arx_to_ss,
    frequency_response,
    minimal_order,
    subspace_identify,
)
from .signals import prefilter

# noise seeds of the different experiments are derived from the base seed
SEQPERT_NOISE_OFFSET = 1000
SWEEP_NOISE_OFFSET = 2000


def grid(cfg: ExperimentConfig):
    return grid_model(cfg.circuit, cfg.omega_g)


def truth(cfg: ExperimentConfig):
    """Callable freqs -> analytic FrequencyResponse."""
    return lambda freqs: analytic_impedance(cfg.circuit, cfg.omega_g, freqs)


def bode_freqs(cfg: ExperimentConfig):
    b = cfg.bode
    return np.geomspace(b.f_min, b.f_max, b.n_points)


def _excitation(cfg, seed, n):
    ex = cfg.excitation
    if ex.kind == "PRBS":
        return generate_prbs(seed, n, ex.amplitude, cfg.sample_rate)
    return generate_rbs(seed, n, ex.amplitude, cfg.sample_rate)


def run_experiment(cfg: ExperimentConfig, seeds, duration, noise_seed, g=None) -> MeasurementRecord:
    """One wideband cycle with independent binary excitations on d and q."""
    g = g if g is not None else grid(cfg)
    n = int(round(duration * cfg.sample_rate))
    return simulate_experiment(
        g,
        _excitation(cfg, seeds[0], n),
        _excitation(cfg, seeds[1], n),
        omega_g=cfg.omega_g,
        duration=duration,
        sample_rate=cfg.sample_rate,
        oversample=cfg.oversample,
        noise=NoiseConfig(cfg.noise.variance, noise_seed),
        operating_point=cfg.operating_point,
        lead_in=cfg.lead_in,
        tracking_lag=cfg.tracking_lag,
    )


def parametric_record(cfg: ExperimentConfig, g=None):
    return run_experiment(cfg, cfg.excitation.seeds, cfg.duration, cfg.noise.seed, g)


def regression_data(record: MeasurementRecord, filter_spec=None):
    i_dq, v_dq = small_signal(record)
    if filter_spec is not None:
        i_dq, v_dq = prefilter(i_dq, filter_spec), prefilter(v_dq, filter_spec)
    return RegressionData.from_dq(i_dq, v_dq)


def _record_cost(records, model_type):
    pts = t = ei = ev = 0.0
    for rec in records:
        i_dq, v_dq = small_signal(rec)
        pts += 4 * len(i_dq)
        t += rec.excitation_time
        ei += signal_energy(i_dq)
        ev += signal_energy(v_dq)
    return ExperimentMeta(len(records), int(pts), float(t), float(ei), float(ev), model_type)


def identify_arx(cfg: ExperimentConfig, record: MeasurementRecord):
    idc = cfg.identification
    data = regression_data(record, idc.arx_prefilter)
    model = arx_identify(data, idc.arx_na, idc.arx_nb, idc.arx_nk, ridge=idc.ridge)
    model.meta["minimal_order"] = minimal_order(arx_to_ss(model))
    return model


def identify_subspace(cfg: ExperimentConfig, record: MeasurementRecord):
    idc = cfg.identification
    data = regression_data(record, idc.subspace_prefilter)
    return subspace_identify(data, idc.subspace_n, idc.subspace_r)


def sweep_plan(cfg: ExperimentConfig, g=None) -> SweepPlan:
    sw = cfg.sweep
    settle = sw.settle_time
    if settle is None:
        settle = sw.settle_time_constants * dominant_time_constant(g if g is not None else grid(cfg))
    return SweepPlan.log_spaced(
        sw.f_min, sw.f_max, sw.n_freqs, amplitude=sw.amplitude, settle_time=settle,
        cycle_duration=sw.cycle_duration, sample_rate=cfg.sample_rate,
    )


def run_sweep(cfg: ExperimentConfig, threads=1) -> FrequencyResponse:
    g = grid(cfg)
    plan = sweep_plan(cfg, g)

    def runner(exc_d, exc_q, duration, cycle):
        return simulate_experiment(
            g, exc_d, exc_q, omega_g=cfg.omega_g, duration=duration, sample_rate=cfg.sample_rate,
            oversample=cfg.oversample,
            noise=NoiseConfig(cfg.noise.variance, cfg.noise.seed + SWEEP_NOISE_OFFSET + cycle),
            operating_point=cfg.operating_point, lead_in=cfg.lead_in,
            tracking_lag=cfg.tracking_lag, injection=cfg.sweep.injection,
        )

    return frequency_sweep_identify(runner, plan, threads=threads)


def seqpert_records(cfg: ExperimentConfig, g=None):
    sp = cfg.seqpert
    g = g if g is not None else grid(cfg)
    return [
        run_experiment(cfg, seeds, sp.duration, cfg.noise.seed + SEQPERT_NOISE_OFFSET + k, g)
        for k, seeds in enumerate(sp.seeds)
    ]


def run_seqpert(cfg: ExperimentConfig, records=None) -> FrequencyResponse:
    sp = cfg.seqpert
    rec1, rec2 = records if records is not None else seqpert_records(cfg)
    win = SpectralAveraging(sp.window, sp.n_segments, sp.overlap)
    return wideband_fft_identify(rec1, rec2, cfg.omega_g, win, filter_spec=sp.prefilter, band=tuple(cfg.band))


def _sweep_meta(fr: FrequencyResponse):
    m = fr.metadata
    return ExperimentMeta(m["experiment_cycles"], m["data_points"], m["excitation_time"],
                          m["energy_i"], m["energy_v"], ModelType.NONPARAMETRIC)


def run_compare(cfg: ExperimentConfig, threads=1):
    """All four methods under identical settings; returns (report, artifacts dict)."""
    g = grid(cfg)
    rec = parametric_record(cfg, g)
    arx = identify_arx(cfg, rec)
    sub = identify_subspace(cfg, rec)
    freqs = bode_freqs(cfg)
    freqs = freqs[freqs < cfg.sample_rate / 2]
    fr_arx = frequency_response(arx, freqs)
    fr_sub = frequency_response(sub, freqs)
    par_meta = _record_cost([rec], ModelType.PARAMETRIC)

    sp_recs = seqpert_records(cfg, g)
    fr_wb = run_seqpert(cfg, sp_recs)
    wb_meta = _record_cost(sp_recs, ModelType.NONPARAMETRIC)

    fr_sw = run_sweep(cfg, threads)
    methods = [
        ("arx", fr_arx, par_meta),
        ("subspace", fr_sub, par_meta),
        ("sweep", fr_sw, _sweep_meta(fr_sw)),
        ("seqpert", fr_wb, wb_meta),
    ]
    report = comparison_report(methods, truth(cfg), cfg.band)
    artifacts = {
        "record": rec, "arx": arx, "subspace": sub,
        "responses": {name: fr for name, fr, _ in methods},
    }
    return report, artifacts
