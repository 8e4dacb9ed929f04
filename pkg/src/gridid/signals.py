"""Excitation signals, abc/dq transforms and small-signal preprocessing.

Park convention: amplitude invariant (2/3 scaling) with
x_a = d cos(theta) - q sin(theta), so a balanced unit cosine set aligned with
the frame maps to (d, q) = (1, 0) and a set leading it by 90 degrees to (0, 1).
The zero-sequence component is dropped.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path

import numpy as np
import scipy.signal

from .errors import InvalidArgument

TWO_PI_3 = 2.0 * np.pi / 3.0


def _frozen_array(x, dtype=float):
    a = np.array(x, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


class ExcitationKind(str, Enum):
    RBS = "RBS"
    PRBS = "PRBS"
    SINE = "sine"
    CHIRP = "chirp"


@dataclass(frozen=True)
class ExcitationSignal:
    samples: np.ndarray
    sample_rate: float
    kind: ExcitationKind
    seed: int | None = None
    # amplitude / freq / phase etc., needed to reproduce analytic kinds
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "samples", _frozen_array(self.samples))
        object.__setattr__(self, "kind", ExcitationKind(self.kind))
        if self.sample_rate <= 0:
            raise InvalidArgument("sample_rate must be positive")

    def __len__(self):
        return len(self.samples)

    @property
    def amplitude(self):
        return self.params.get("amplitude")

    def describe(self):
        d = {"kind": self.kind.value, "n": len(self), "sample_rate": self.sample_rate}
        if self.seed is not None:
            d["seed"] = self.seed
        d.update(self.params)
        return d


@dataclass(frozen=True)
class ThreePhaseSeries:
    t0: float
    dt: float
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    label: str = ""

    def __post_init__(self):
        for name in "abc":
            object.__setattr__(self, name, _frozen_array(getattr(self, name)))
        if not (len(self.a) == len(self.b) == len(self.c)) or len(self.a) < 1:
            raise InvalidArgument("abc channels must have equal length >= 1")
        if not self.dt > 0:
            raise InvalidArgument("dt must be positive")

    def __len__(self):
        return len(self.a)

    @property
    def t(self):
        return self.t0 + self.dt * np.arange(len(self))


@dataclass(frozen=True)
class DqSeries:
    t0: float
    dt: float
    d: np.ndarray
    q: np.ndarray
    frame_freq: float
    is_small_signal: bool = False

    def __post_init__(self):
        object.__setattr__(self, "d", _frozen_array(self.d))
        object.__setattr__(self, "q", _frozen_array(self.q))
        if len(self.d) != len(self.q):
            raise InvalidArgument("d and q must have equal length")
        if not self.frame_freq > 0:
            raise InvalidArgument("frame_freq must be positive")
        if not self.dt > 0:
            raise InvalidArgument("dt must be positive")

    def __len__(self):
        return len(self.d)

    @property
    def t(self):
        return self.t0 + self.dt * np.arange(len(self))

    @property
    def sample_rate(self):
        return 1.0 / self.dt

    def stacked(self):
        """Samples as an (N, 2) array with columns (d, q)."""
        return np.column_stack([self.d, self.q])

    def window(self, start, stop=None):
        stop = len(self) if stop is None else stop
        return replace(
            self,
            t0=self.t0 + start * self.dt,
            d=self.d[start:stop],
            q=self.q[start:stop],
        )


class FilterKind(str, Enum):
    NONE = "none"
    MOVING_AVERAGE_DETREND = "moving_average_detrend"
    FIRST_ORDER_HIGHPASS = "first_order_highpass"
    BANDPASS = "bandpass"
    LOWPASS = "lowpass"


@dataclass(frozen=True)
class FilterSpec:
    kind: FilterKind = FilterKind.NONE
    cutoffs: tuple = ()
    order: int = 2

    def __post_init__(self):
        object.__setattr__(self, "kind", FilterKind(self.kind))
        cut = self.cutoffs
        if np.isscalar(cut):
            cut = (cut,)
        object.__setattr__(self, "cutoffs", tuple(float(c) for c in cut))
        need = {
            FilterKind.NONE: 0,
            FilterKind.MOVING_AVERAGE_DETREND: 1,
            FilterKind.FIRST_ORDER_HIGHPASS: 1,
            FilterKind.LOWPASS: 1,
            FilterKind.BANDPASS: 2,
        }[self.kind]
        if len(self.cutoffs) != need:
            raise InvalidArgument(f"{self.kind.value} filter takes {need} cutoff(s)")
        if self.kind is FilterKind.BANDPASS and not self.cutoffs[0] < self.cutoffs[1]:
            raise InvalidArgument("bandpass cutoffs must be increasing")
        if self.order < 1:
            raise InvalidArgument("filter order must be >= 1")

    def validate_for(self, sample_rate):
        nyq = sample_rate / 2.0
        for c in self.cutoffs:
            if not 0.0 < c < nyq:
                raise InvalidArgument(
                    f"cutoff {c} Hz outside (0, {nyq}) Hz for sample rate {sample_rate}"
                )


# ---------------------------------------------------------------- generators


def generate_rbs(seed, n, amplitude, sample_rate):
    """Random binary sequence: each sample is +/-amplitude with probability 1/2."""
    if n < 1:
        raise InvalidArgument("n must be >= 1")
    if not amplitude > 0:
        raise InvalidArgument("amplitude must be positive")
    rng = np.random.default_rng(seed)
    bits = rng.integers(0, 2, size=n)
    samples = amplitude * (2.0 * bits - 1.0)
    return ExcitationSignal(
        samples, sample_rate, ExcitationKind.RBS, seed, {"amplitude": float(amplitude)}
    )


# Maximal-length feedback taps (ITU-T O.150 style polynomials).
PRBS_TAPS = {7: (7, 6), 9: (9, 5), 11: (11, 9), 15: (15, 14), 20: (20, 3), 23: (23, 18), 31: (31, 28)}


def generate_prbs(seed, n, amplitude, sample_rate, register_bits=15):
    """Maximum-length LFSR sequence mapped to +/-amplitude.

    The seed selects the (nonzero) initial register state.
    """
    if n < 1:
        raise InvalidArgument("n must be >= 1")
    if not amplitude > 0:
        raise InvalidArgument("amplitude must be positive")
    if register_bits not in PRBS_TAPS:
        raise InvalidArgument(f"register_bits must be one of {sorted(PRBS_TAPS)}")
    t1, t2 = PRBS_TAPS[register_bits]
    mask = (1 << register_bits) - 1
    state = (seed % mask) + 1
    out = np.empty(n)
    for k in range(n):
        bit = ((state >> (t1 - 1)) ^ (state >> (t2 - 1))) & 1
        state = ((state << 1) | bit) & mask
        out[k] = bit
    samples = amplitude * (2.0 * out - 1.0)
    return ExcitationSignal(
        samples,
        sample_rate,
        ExcitationKind.PRBS,
        seed,
        {"amplitude": float(amplitude), "register_bits": register_bits},
    )


def generate_sine(freq, amplitude, phase, n, sample_rate):
    if not 0.0 < freq < sample_rate / 2.0:
        raise InvalidArgument(f"freq {freq} Hz outside (0, Nyquist)")
    if n < 1:
        raise InvalidArgument("n must be >= 1")
    k = np.arange(n)
    samples = amplitude * np.sin(2.0 * np.pi * freq * k / sample_rate + phase)
    return ExcitationSignal(
        samples,
        sample_rate,
        ExcitationKind.SINE,
        None,
        {"freq": float(freq), "amplitude": float(amplitude), "phase": float(phase)},
    )


def generate_chirp(f0, f1, amplitude, n, sample_rate, method="logarithmic"):
    nyq = sample_rate / 2.0
    if not (0.0 < f0 < nyq and 0.0 < f1 < nyq):
        raise InvalidArgument("chirp frequencies must lie in (0, Nyquist)")
    t = np.arange(n) / sample_rate
    t1 = t[-1] if n > 1 else 1.0 / sample_rate
    samples = amplitude * scipy.signal.chirp(t, f0, t1, f1, method=method, phi=-90)
    return ExcitationSignal(
        samples,
        sample_rate,
        ExcitationKind.CHIRP,
        None,
        {"f0": float(f0), "f1": float(f1), "amplitude": float(amplitude), "method": method},
    )


def zero_excitation(n, sample_rate):
    return ExcitationSignal(np.zeros(n), sample_rate, ExcitationKind.RBS, None, {"amplitude": 0.0})


# ---------------------------------------------------------------- transforms


def _angles(t0, dt, n, frame_freq, theta0):
    return theta0 + frame_freq * (t0 + dt * np.arange(n))


def park(abc: ThreePhaseSeries, frame_freq, theta0=0.0) -> DqSeries:
    th = _angles(abc.t0, abc.dt, len(abc), frame_freq, theta0)
    a, b, c = abc.a, abc.b, abc.c
    d = (2.0 / 3.0) * (a * np.cos(th) + b * np.cos(th - TWO_PI_3) + c * np.cos(th + TWO_PI_3))
    q = -(2.0 / 3.0) * (a * np.sin(th) + b * np.sin(th - TWO_PI_3) + c * np.sin(th + TWO_PI_3))
    return DqSeries(abc.t0, abc.dt, d, q, frame_freq, is_small_signal=False)


def inverse_park(dq: DqSeries, theta0=0.0, label="") -> ThreePhaseSeries:
    th = _angles(dq.t0, dq.dt, len(dq), dq.frame_freq, theta0)
    d, q = dq.d, dq.q
    a = d * np.cos(th) - q * np.sin(th)
    b = d * np.cos(th - TWO_PI_3) - q * np.sin(th - TWO_PI_3)
    c = d * np.cos(th + TWO_PI_3) - q * np.sin(th + TWO_PI_3)
    return ThreePhaseSeries(dq.t0, dq.dt, a, b, c, label)


def _as_slice(window, n):
    if isinstance(window, slice):
        start, stop, step = window.indices(n)
        if step != 1:
            raise InvalidArgument("reference window must be contiguous")
    else:
        start, stop = window
        start, stop, _ = slice(start, stop).indices(n)
    return start, stop


def remove_offset(dq: DqSeries, reference_window) -> DqSeries:
    """Subtract each channel's mean over ``reference_window`` (slice or (start, stop))."""
    start, stop = _as_slice(reference_window, len(dq))
    if stop <= start:
        raise InvalidArgument("reference window is empty")
    d0 = np.mean(dq.d[start:stop])
    q0 = np.mean(dq.q[start:stop])
    return replace(dq, d=dq.d - d0, q=dq.q - q0, is_small_signal=True)


def filter_coefficients(spec: FilterSpec, sample_rate):
    """(b, a) of the discrete filter realizing ``spec``; None for kind none."""
    spec.validate_for(sample_rate)
    if spec.kind is FilterKind.NONE:
        return None
    if spec.kind is FilterKind.MOVING_AVERAGE_DETREND:
        # x - moving average over one period of the cutoff frequency
        m = max(1, int(round(sample_rate / spec.cutoffs[0])))
        b = -np.ones(m) / m
        b[0] += 1.0
        return b, np.array([1.0])
    if spec.kind is FilterKind.FIRST_ORDER_HIGHPASS:
        return scipy.signal.butter(1, spec.cutoffs[0], "highpass", fs=sample_rate)
    if spec.kind is FilterKind.LOWPASS:
        return scipy.signal.butter(spec.order, spec.cutoffs[0], "lowpass", fs=sample_rate)
    return scipy.signal.butter(spec.order, list(spec.cutoffs), "bandpass", fs=sample_rate)


def prefilter(dq: DqSeries, spec: FilterSpec) -> DqSeries:
    """Causal filtering of both channels from rest; kind none returns the input."""
    coeffs = filter_coefficients(spec, dq.sample_rate)
    if coeffs is None:
        return dq
    b, a = coeffs
    d = scipy.signal.lfilter(b, a, dq.d)
    q = scipy.signal.lfilter(b, a, dq.q)
    return replace(dq, d=d, q=q)


# ---------------------------------------------------------------- CSV


def _fmt(x):
    return repr(float(x))


def write_series_csv(series, path):
    path = Path(path)
    if isinstance(series, ThreePhaseSeries):
        header, cols = ["t", "a", "b", "c"], [series.a, series.b, series.c]
    elif isinstance(series, DqSeries):
        header, cols = ["t", "d", "q"], [series.d, series.q]
    else:
        raise InvalidArgument(f"cannot export {type(series).__name__}")
    t = series.t
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for k in range(len(t)):
            w.writerow([_fmt(t[k])] + [_fmt(c[k]) for c in cols])
    return path


def read_series_csv(path, frame_freq=None, label=""):
    """Read a ``t,a,b,c`` or ``t,d,q`` file; dq files need ``frame_freq``."""
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    header = [h.strip() for h in rows[0]]
    data = np.array([[float(v) for v in r] for r in rows[1:] if r], dtype=float)
    t = data[:, 0]
    dt = (t[-1] - t[0]) / (len(t) - 1) if len(t) > 1 else 1.0
    if header == ["t", "a", "b", "c"]:
        return ThreePhaseSeries(t[0], dt, data[:, 1], data[:, 2], data[:, 3], label)
    if header == ["t", "d", "q"]:
        if frame_freq is None:
            raise InvalidArgument("frame_freq required to read a dq series")
        return DqSeries(t[0], dt, data[:, 1], data[:, 2], frame_freq)
    raise InvalidArgument(f"unrecognized CSV header {header}")
