"""Bode error metrics, signal energies, time-domain fit and the comparison report."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from enum import Enum

import numpy as np

from .errors import InvalidArgument, UndefinedFit
from .response import FrequencyResponse
from .signals import DqSeries

DB_FLOOR = -200.0
MIN_MAGNITUDE = 1e-9


def _wrap_deg(x):
    """Wrap to (-180, 180]."""
    w = np.mod(x + 180.0, 360.0) - 180.0
    return np.where(w == -180.0, 180.0, w)


def _align(est: FrequencyResponse, truth: FrequencyResponse, band):
    lo, hi = band
    if not lo <= hi:
        raise InvalidArgument("band must be (low, high) with low <= high")
    e = est.restrict(band)
    if len(e) == 0:
        raise InvalidArgument(f"no estimate frequencies inside {band} Hz")
    if truth.Z.shape[1:] != e.Z.shape[1:]:
        raise InvalidArgument("estimate and truth have different matrix shapes")
    # truth must be available on the estimate's grid
    idx = np.searchsorted(truth.freqs, e.freqs)
    idx = np.clip(idx, 0, len(truth.freqs) - 1)
    ok = np.isclose(truth.freqs[idx], e.freqs, rtol=1e-12, atol=0.0)
    if not np.all(ok):
        raise InvalidArgument("truth must be evaluated on the estimate's frequency grid")
    return e.Z, truth.Z[idx]


def bode_errors(est: FrequencyResponse, truth, band):
    """(avg_mag_error_db, avg_phase_error_deg) over ``band`` and all matrix entries.

    ``truth`` is a FrequencyResponse on (a superset of) est's grid, or a callable
    freqs -> FrequencyResponse used to re-evaluate it there.
    """
    if callable(truth):
        e = est.restrict(band)
        if len(e) == 0:
            raise InvalidArgument(f"no estimate frequencies inside {band} Hz")
        truth = truth(e.freqs)
    Ze, Zt = _align(est, truth, band)
    mask = np.abs(Zt) >= MIN_MAGNITUDE
    if not np.any(mask):
        raise InvalidArgument("every truth entry is below the magnitude threshold")
    rel = np.abs(Ze - Zt)[mask] / np.abs(Zt)[mask]
    mean_rel = float(np.mean(rel))
    mag_db = DB_FLOOR if mean_rel <= 0 else max(DB_FLOOR, 20.0 * np.log10(mean_rel))
    dphi = _wrap_deg(np.degrees(np.angle(Ze[mask]) - np.angle(Zt[mask])))
    return float(mag_db), float(np.mean(np.abs(dphi)))


def signal_energy(dq: DqSeries):
    if not dq.is_small_signal:
        raise InvalidArgument("energy is defined on small-signal (offset-removed) data")
    return float(np.sum(dq.d**2) + np.sum(dq.q**2))


def fit_percent(measured: DqSeries, model_simulated: DqSeries):
    """NRMSE fit per channel, (fit_d, fit_q) in percent."""
    if len(measured) != len(model_simulated):
        raise InvalidArgument("series lengths differ")
    out = []
    for ch in "dq":
        y = getattr(measured, ch)
        yh = getattr(model_simulated, ch)
        den = np.linalg.norm(y - np.mean(y))
        if den == 0:
            raise UndefinedFit(f"measured {ch} channel is constant")
        out.append(float(100.0 * (1.0 - np.linalg.norm(y - yh) / den)))
    return tuple(out)


class ModelType(str, Enum):
    PARAMETRIC = "parametric"
    NONPARAMETRIC = "nonparametric"


@dataclass(frozen=True)
class ExperimentMeta:
    """Cost counters of the experiments a method consumed."""

    experiment_cycles: int
    data_points: int
    excitation_time: float
    energy_i: float
    energy_v: float
    model_type: ModelType

    def __post_init__(self):
        if self.experiment_cycles < 0 or self.data_points < 0 or self.excitation_time < 0:
            raise InvalidArgument("counters must be non-negative")
        object.__setattr__(self, "model_type", ModelType(self.model_type))


@dataclass(frozen=True)
class ReportRow:
    method: str
    experiment_cycles: int
    data_points: int
    excitation_time: float
    energy_i: float
    energy_v: float
    avg_mag_error_db: float
    avg_phase_error_deg: float
    model_type: ModelType


ROW_LABELS = [
    ("experiment_cycles", "# Experiment cycles", "{:d}"),
    ("data_points", "# Data points", "{:.3g}"),
    ("excitation_time", "Excitation time [s]", "{:g}"),
    ("energy_i", "Energy of |di| at PCC", "{:.4g}"),
    ("energy_v", "Energy of |dv| at PCC", "{:.4g}"),
    ("avg_mag_error_db", "Average magnitude error [dB]", "{:.1f}"),
    ("avg_phase_error_deg", "Average phase error [deg]", "{:.1f}"),
    ("model_type", "Model type", "{}"),
]


@dataclass
class ComparisonReport:
    rows: list = field(default_factory=list)
    band: tuple = (1.0, 1000.0)

    def row(self, method):
        for r in self.rows:
            if r.method == method:
                return r
        raise KeyError(method)

    def to_dict(self):
        rows = []
        for r in self.rows:
            d = asdict(r)
            d["model_type"] = r.model_type.value
            rows.append(d)
        return {"band_hz": list(self.band), "rows": rows}

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_text(self):
        """Fixed-width table, one column per method."""
        head = ["Metric"] + [r.method for r in self.rows]
        body = []
        for key, label, fmt in ROW_LABELS:
            cells = []
            for r in self.rows:
                v = getattr(r, key)
                cells.append(fmt.format(v.value if isinstance(v, Enum) else v))
            body.append([label] + cells)
        widths = [max(len(row[i]) for row in [head] + body) for i in range(len(head))]
        lines = []
        for k, row in enumerate([head] + body):
            lines.append("  ".join(c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in enumerate(zip(row, widths))))
            if k == 0:
                lines.append("  ".join("-" * w for w in widths))
        return "\n".join(lines) + "\n"


def comparison_report(methods, truth, band) -> ComparisonReport:
    """``methods``: list of (name, FrequencyResponse, ExperimentMeta)."""
    if not methods:
        raise InvalidArgument("need at least one method")
    rows = []
    for name, fr, meta in methods:
        mag, ph = bode_errors(fr, truth, band)
        rows.append(ReportRow(
            name, int(meta.experiment_cycles), int(meta.data_points), float(meta.excitation_time),
            float(meta.energy_i), float(meta.energy_v), mag, ph, meta.model_type,
        ))
    return ComparisonReport(rows, tuple(float(b) for b in band))
