"""Nonparametric baselines: sinusoidal frequency sweep and two-record wideband FFT."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
import scipy.signal

from .errors import InsufficientExcitation, InvalidArgument, LeakageError
from .gridsim import MeasurementRecord, small_signal
from .metrics import signal_energy
from .response import FrequencyResponse, ResponseSource
from .signals import DqSeries, generate_sine

COND_LIMIT = 1e6
PERIOD_TOL = 1e-9

__all__ = [
    "FrequencyResponse", "SweepPlan", "SpectralAveraging",
    "dft_phasor", "frequency_sweep_identify", "wideband_fft_identify",
]


def dft_phasor(series: DqSeries, freq):
    """(2/N) sum_k x(k) exp(-j 2 pi f k dt) per channel, cosine referenced."""
    N = len(series)
    periods = freq * N * series.dt
    P = round(periods)
    if P < 1 or abs(periods - P) > PERIOD_TOL * max(1.0, periods):
        raise LeakageError(f"window holds {periods:.6f} periods of {freq} Hz, not an integer >= 1")
    w = np.exp(-2j * np.pi * freq * series.dt * np.arange(N))
    return (2.0 / N) * np.array([series.d @ w, series.q @ w])


@dataclass(frozen=True)
class SweepPlan:
    """Per-frequency cycles: ``cycle_duration`` seconds of sine injection, of which
    the last ``measure_periods[i]`` whole periods are analysed after ``settle_time``."""

    freqs: tuple
    injection_amplitude: float
    settle_time: float
    measure_periods: tuple
    cycle_duration: float
    sample_rate: float

    def __post_init__(self):
        object.__setattr__(self, "freqs", tuple(float(f) for f in self.freqs))
        object.__setattr__(self, "measure_periods", tuple(int(p) for p in self.measure_periods))
        if len(self.freqs) < 1 or len(self.freqs) != len(self.measure_periods):
            raise InvalidArgument("need one period count per frequency")
        if not self.injection_amplitude > 0:
            raise InvalidArgument("injection amplitude must be positive")
        if any(p < 1 for p in self.measure_periods):
            raise InvalidArgument("measure_periods must be >= 1")
        if self.settle_time < 0 or self.cycle_duration <= self.settle_time:
            raise InvalidArgument("cycle must be longer than the settle time")
        if any(not 0 < f < self.sample_rate / 2 for f in self.freqs):
            raise InvalidArgument("sweep frequencies must lie in (0, Nyquist)")
        if list(self.freqs) != sorted(set(self.freqs)):
            raise InvalidArgument("sweep frequencies must be strictly increasing")

    @classmethod
    def log_spaced(cls, f_lo=1.0, f_hi=1000.0, n=20, *, amplitude=0.1, settle_time=0.0,
                   cycle_duration=10.0, sample_rate=5000.0):
        """Log-spaced plan; each frequency is moved to the nearest one with an integer
        number of periods in the post-settle window (shared by all frequencies)."""
        n_cycle = int(round(cycle_duration * sample_rate))
        n_meas = n_cycle - int(round(settle_time * sample_rate))
        if n_meas < 2:
            raise InvalidArgument("no samples left after settling")
        t_meas = n_meas / sample_rate
        periods = np.maximum(1, np.round(np.geomspace(f_lo, f_hi, n) * t_meas)).astype(int)
        periods = np.unique(periods)
        freqs = periods / t_meas
        return cls(tuple(freqs), amplitude, settle_time, tuple(periods), cycle_duration, sample_rate)

    @property
    def n_cycle(self):
        return int(round(self.cycle_duration * self.sample_rate))

    def n_measure(self, i):
        n = self.measure_periods[i] * self.sample_rate / self.freqs[i]
        return int(round(n))

    @property
    def n_cycles(self):
        return 2 * len(self.freqs)


def _solve_2x2(V, I, freq):
    c = np.linalg.cond(I)
    if not c <= COND_LIMIT:
        raise InsufficientExcitation(f"current phasor matrix ill-conditioned at {freq} Hz", freq, c)
    return V @ np.linalg.inv(I)


def _cost(records_dq):
    """(data points, excitation seconds, energy_i, energy_v) of excited windows."""
    pts = t = ei = ev = 0.0
    for i_dq, v_dq in records_dq:
        pts += 4 * len(i_dq)
        t += len(i_dq) * i_dq.dt
        ei += signal_energy(i_dq)
        ev += signal_energy(v_dq)
    return int(pts), float(t), float(ei), float(ev)


def frequency_sweep_identify(experiment_runner, plan: SweepPlan, *, threads=1) -> FrequencyResponse:
    """Two cycles per frequency (sine on the d axis, then on the q axis).

    ``experiment_runner(exc_d, exc_q, duration, cycle)`` must return a
    MeasurementRecord; ``cycle`` is the 0-based cycle index (for seeding).
    """
    n = plan.n_cycle
    fs = plan.sample_rate
    jobs = []
    for i, f in enumerate(plan.freqs):
        exc = generate_sine(f, plan.injection_amplitude, 0.0, n, fs)
        jobs.append((exc, None, 2 * i))
        jobs.append((None, exc, 2 * i + 1))

    def run(job):
        exc_d, exc_q, cycle = job
        rec = experiment_runner(exc_d, exc_q, plan.cycle_duration, cycle)
        return small_signal(rec)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            dq = list(pool.map(run, jobs))
    else:
        dq = [run(j) for j in jobs]

    Z = np.empty((len(plan.freqs), 2, 2), dtype=complex)
    for i, f in enumerate(plan.freqs):
        nm = plan.n_measure(i)
        cols_i, cols_v = [], []
        for i_dq, v_dq in dq[2 * i : 2 * i + 2]:
            start = len(i_dq) - nm
            cols_i.append(dft_phasor(i_dq.window(start), f))
            cols_v.append(dft_phasor(v_dq.window(start), f))
        Z[i] = _solve_2x2(np.column_stack(cols_v), np.column_stack(cols_i), f)
    pts, t, ei, ev = _cost(dq)
    meta = {
        "method": "sweep",
        "experiment_cycles": plan.n_cycles,
        "data_points": pts,
        "excitation_time": t,
        "energy_i": ei,
        "energy_v": ev,
        "settle_time": plan.settle_time,
    }
    return FrequencyResponse(plan.freqs, Z, ResponseSource.SWEEP, meta)


@dataclass(frozen=True)
class SpectralAveraging:
    window: str = "hann"
    n_segments: int = 8
    overlap: float = 0.5

    def __post_init__(self):
        if self.n_segments < 1 or not 0 <= self.overlap < 1:
            raise InvalidArgument("need n_segments >= 1 and overlap in [0, 1)")

    def segment_length(self, n):
        # n_segments windows of length L advancing by L (1 - overlap) cover n samples
        return int(n / (1 + (self.n_segments - 1) * (1 - self.overlap)))


def _segment_spectra(x, L, step, nseg, win):
    """FFT of each windowed segment of the (N, 2) array x: (nseg, L//2+1, 2)."""
    segs = np.stack([x[s * step : s * step + L] for s in range(nseg)])
    return np.fft.rfft(segs * win[None, :, None], axis=1)


def wideband_fft_identify(rec1: MeasurementRecord, rec2: MeasurementRecord, frame_freq=None,
                          window: SpectralAveraging | None = None, *, filter_spec=None,
                          band=None) -> FrequencyResponse:
    """Two independent wideband records, segment-averaged 2x2 spectral solve per bin.

    For every bin the per-segment current matrices [I1 I2] with condition number
    above the limit are discarded; Z = sum(V I^H) (sum(I I^H))^-1 over the rest,
    and bins with no usable segment are dropped.
    """
    window = window or SpectralAveraging()
    if rec1.sample_rate != rec2.sample_rate or len(rec1) != len(rec2) or rec1.onset != rec2.onset \
            or rec1.n_excited != rec2.n_excited:
        raise InvalidArgument("records must share sample rate, length and excitation window")
    fs = rec1.sample_rate
    dqs = []
    for rec in (rec1, rec2):
        if frame_freq is not None and frame_freq != rec.omega_g:
            rec = replace(rec, omega_g=float(frame_freq))
        dqs.append(small_signal(rec, filter_spec))
    N = len(dqs[0][0])
    L = window.segment_length(N)
    step = max(1, int(L * (1 - window.overlap)))
    nseg = window.n_segments
    if L < 4 or (nseg - 1) * step + L > N:
        raise InvalidArgument("records too short for the requested segmentation")
    win = scipy.signal.get_window(window.window, L)
    I = [_segment_spectra(i.stacked(), L, step, nseg, win) for i, _ in dqs]
    V = [_segment_spectra(v.stacked(), L, step, nseg, win) for _, v in dqs]
    Iseg = np.stack(I, axis=-1)  # (nseg, F, 2 channels, 2 records)
    Vseg = np.stack(V, axis=-1)
    freqs = np.fft.rfftfreq(L, 1.0 / fs)
    keep_f = freqs > 0
    if band is not None:
        keep_f &= (freqs >= band[0]) & (freqs <= band[1])
    Iseg, Vseg, freqs = Iseg[:, keep_f], Vseg[:, keep_f], freqs[keep_f]

    s = np.linalg.svd(Iseg, compute_uv=False)
    with np.errstate(divide="ignore", invalid="ignore"):
        cond = np.where(s[..., 1] > 0, s[..., 0] / s[..., 1], np.inf)
    good = (cond <= COND_LIMIT)[..., None, None]
    Iw = np.where(good, Iseg, 0)
    Vw = np.where(good, Vseg, 0)
    Svi = np.einsum("sfar,sfbr->fab", Vw, Iw.conj())
    Sii = np.einsum("sfar,sfbr->fab", Iw, Iw.conj())
    n_used = good[..., 0, 0].sum(axis=0)
    cs = np.linalg.svd(Sii, compute_uv=False)
    with np.errstate(divide="ignore", invalid="ignore"):
        ok = (n_used > 0) & (cs[:, 1] > 0) & (np.sqrt(cs[:, 0] / cs[:, 1]) <= COND_LIMIT)
    Z = np.empty((int(ok.sum()), 2, 2), dtype=complex)
    if ok.any():
        Z = Svi[ok] @ np.linalg.inv(Sii[ok])
    pts, t, ei, ev = _cost(dqs)
    meta = {
        "method": "wideband",
        "experiment_cycles": 2,
        "data_points": pts,
        "excitation_time": t,
        "energy_i": ei,
        "energy_v": ev,
        "segment_length": L,
        "n_segments": nseg,
        "bins_dropped": int((~ok).sum()),
    }
    return FrequencyResponse(freqs[ok], Z, ResponseSource.WIDEBAND, meta)
