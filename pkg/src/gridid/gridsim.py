"""Reference grid model and simulated injection experiments.

The grid is the one-line circuit seen from the PCC: a load resistor R1 and a
shunt capacitor C2 at the PCC node, a series R2-L2 line to a mid node with a
second shunt C2, then a series R3-L3-C3 branch to the infinite bus (a
small-signal short). Per-unit element values are converted with the base
angular frequency only (L = L_pu / w_b, C = C_pu / w_b); time is in seconds.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
import scipy.linalg

from .errors import InvalidArgument, NumericalError
from .response import FrequencyResponse, ResponseSource
from .signals import (
    DqSeries,
    ExcitationKind,
    ExcitationSignal,
    ThreePhaseSeries,
    inverse_park,
    park,
    prefilter,
    read_series_csv,
    remove_offset,
    write_series_csv,
)
from .statespace import ContinuousStateSpace, run_recursion, zoh_matrices

LARGE = 1e12  # stands in for an open circuit / infinite element


@dataclass(frozen=True)
class CircuitParams:
    v_base: float = 380.0
    s_base: float = 1500.0
    f_base: float = 50.0
    r1: float = 2.0
    r2: float = 0.015
    l2: float = 0.15
    c2: float = 0.05
    r3: float = 0.015
    l3: float = 0.15
    c3: float = 10.0
    lf1: float = 0.08
    lf2: float = 0.05
    cf: float = 0.08

    def __post_init__(self):
        for name in ("v_base", "s_base", "f_base"):
            if not getattr(self, name) > 0:
                raise InvalidArgument(f"{name} must be positive")
        for name in ("r1", "r2", "r3"):
            if not getattr(self, name) >= 0:
                raise InvalidArgument(f"{name} must be non-negative")
        for name in ("l2", "c2", "l3", "c3", "lf1", "lf2", "cf"):
            if not getattr(self, name) > 0:
                raise InvalidArgument(f"{name} must be positive")

    @property
    def z_base(self):
        return self.v_base**2 / self.s_base

    @property
    def omega_base(self):
        return 2.0 * np.pi * self.f_base

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise InvalidArgument(f"unknown circuit parameters {sorted(unknown)}")
        return cls(**d)

    def si_values(self):
        """Element values in ohm / henry / farad."""
        zb, wb = self.z_base, self.omega_base
        return {
            "r1": self.r1 * zb, "r2": self.r2 * zb, "r3": self.r3 * zb,
            "l2": self.l2 * zb / wb, "l3": self.l3 * zb / wb,
            "c2": self.c2 / (zb * wb), "c3": self.c3 / (zb * wb),
        }


def rl_degenerate_params(r=0.5, l=0.3, shunt_c=1e-5, **base):
    """Circuit values that reduce the topology to a series R-L branch.

    The load is opened, the series capacitor shorted and both shunt
    capacitors made tiny (they keep the current-in/voltage-out model proper).
    """
    return CircuitParams(
        r1=LARGE, r2=r / 2, l2=l / 2, c2=shunt_c, r3=r / 2, l3=l / 2, c3=LARGE, **base
    )


def build_phase_circuit(p: CircuitParams) -> ContinuousStateSpace:
    """Single-axis model, PCC current in -> PCC voltage out (per unit, SI time).

    States: v_C2 at the PCC, i_L2, v_C2 at the mid node, i_L3, v_C3.
    """
    wb = p.omega_base
    L2, L3 = p.l2 / wb, p.l3 / wb
    C2, C3 = p.c2 / wb, p.c3 / wb
    if p.r1 == 0:
        raise InvalidArgument("r1 = 0 shorts the PCC node")
    g1 = 1.0 / p.r1
    A = np.array([
        [-g1 / C2, -1 / C2, 0, 0, 0],
        [1 / L2, -p.r2 / L2, -1 / L2, 0, 0],
        [0, 1 / C2, 0, -1 / C2, 0],
        [0, 0, 1 / L3, -p.r3 / L3, -1 / L3],
        [0, 0, 0, 1 / C3, 0],
    ])
    B = np.array([[1 / C2], [0], [0], [0], [0]])
    C = np.array([[1.0, 0, 0, 0, 0]])
    return ContinuousStateSpace(A, B, C, np.zeros((1, 1)), ("i",), ("v",))


def to_dq_frame(ss_phase: ContinuousStateSpace, omega_g) -> ContinuousStateSpace:
    if ss_phase.shape != (1, 1):
        raise InvalidArgument("to_dq_frame expects a single-input single-output phase model")
    n = ss_phase.n_states
    A, B, C, D = ss_phase.A, ss_phase.B, ss_phase.C, ss_phase.D
    I = np.eye(n)
    Adq = np.block([[A, omega_g * I], [-omega_g * I, A]])
    return ContinuousStateSpace(
        Adq,
        scipy.linalg.block_diag(B, B),
        scipy.linalg.block_diag(C, C),
        scipy.linalg.block_diag(D, D),
        tuple(f"{ss_phase.input_labels[0]}_{ax}" for ax in "dq"),
        tuple(f"{ss_phase.output_labels[0]}_{ax}" for ax in "dq"),
        meta={"omega_g": float(omega_g)},
    )


def grid_model(p: CircuitParams, omega_g=None) -> ContinuousStateSpace:
    """dq-frame impedance model of ``p`` (defaults to the base frequency frame)."""
    omega_g = p.omega_base if omega_g is None else omega_g
    return to_dq_frame(build_phase_circuit(p), omega_g)


def _is_admittance(ss):
    return all(lab.startswith("v") for lab in ss.input_labels)


def impedance_response(ss: ContinuousStateSpace, freqs, cond_limit=1e12):
    """Z(j 2 pi f) for every f; admittance-form models (voltage inputs) are inverted."""
    freqs = np.asarray(freqs, dtype=float)
    if np.any(freqs <= 0):
        raise InvalidArgument("frequencies must be positive")
    n = ss.n_states
    out = np.empty((len(freqs),) + ss.shape, dtype=complex)
    for k, f in enumerate(freqs):
        M = 2j * np.pi * f * np.eye(n) - ss.A
        if n:
            c = np.linalg.cond(M)
            if not c < cond_limit:
                raise NumericalError(f"(sI - A) too ill-conditioned at {f} Hz: cond {c:.3e}")
            out[k] = ss.C @ np.linalg.solve(M, ss.B) + ss.D
        else:
            out[k] = ss.D
    if _is_admittance(ss):
        out = np.linalg.inv(out)
    return out


def analytic_impedance(p, omega_g, freqs) -> FrequencyResponse:
    """Ground-truth dq impedance of a circuit (or of a phase/dq state-space model)."""
    if isinstance(p, CircuitParams):
        ss = to_dq_frame(build_phase_circuit(p), omega_g)
    elif isinstance(p, ContinuousStateSpace):
        ss = to_dq_frame(p, omega_g) if p.shape == (1, 1) else p
    else:
        raise InvalidArgument(f"cannot build an impedance from {type(p).__name__}")
    Z = impedance_response(ss, freqs)
    return FrequencyResponse(freqs, Z, ResponseSource.ANALYTIC, {"omega_g": float(omega_g)})


def dominant_time_constant(ss: ContinuousStateSpace):
    """Slowest decay time 1/min|Re(lambda)| of a Hurwitz model."""
    re = -np.linalg.eigvals(ss.A).real
    if np.any(re <= 0):
        raise InvalidArgument("model is not Hurwitz")
    return float(1.0 / re.min())


# ---------------------------------------------------------------- experiments


@dataclass(frozen=True)
class NoiseConfig:
    """White Gaussian measurement noise.

    ``variance`` is the per-channel variance seen on the dq small-signal
    quantities; the abc channels carry 1.5x that value, which the amplitude
    invariant Park transform scales back by 2/3.
    """

    variance: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not self.variance >= 0:
            raise InvalidArgument("noise variance must be non-negative")

    @property
    def abc_std(self):
        return float(np.sqrt(1.5 * self.variance))


@dataclass(frozen=True)
class OperatingPoint:
    i_d0: float = 0.5
    i_q0: float = 0.0
    v_d0: float | None = None
    v_q0: float | None = None

    def resolve(self, grid: ContinuousStateSpace):
        i0 = np.array([self.i_d0, self.i_q0])
        if self.v_d0 is None or self.v_q0 is None:
            v0 = grid.dc_gain() @ i0
        else:
            v0 = np.array([self.v_d0, self.v_q0])
        return float(i0[0]), float(i0[1]), float(v0[0]), float(v0[1])


@dataclass(frozen=True)
class MeasurementRecord:
    v_abc: ThreePhaseSeries
    i_abc: ThreePhaseSeries
    sample_rate: float
    noise_seed: int
    excitation_meta: dict
    steady_state: tuple  # (i_d0, i_q0, v_d0, v_q0)
    omega_g: float = 2 * np.pi * 50
    onset: int = 0  # first excited sample
    n_excited: int = 0

    def __post_init__(self):
        v, i = self.v_abc, self.i_abc
        if len(v) != len(i) or v.t0 != i.t0 or v.dt != i.dt:
            raise InvalidArgument("voltage and current records must share t0, dt and length")

    def __len__(self):
        return len(self.v_abc)

    @property
    def excitation_time(self):
        return self.n_excited / self.sample_rate


def _excitation_columns(exc_d, exc_q, n_exc, sample_rate):
    u = np.zeros((n_exc, 2))
    for j, exc in enumerate((exc_d, exc_q)):
        if exc is None:
            continue
        if abs(exc.sample_rate - sample_rate) > 1e-9 * sample_rate:
            raise InvalidArgument("excitation sample rate must equal the measurement sample rate")
        if len(exc) < n_exc:
            raise InvalidArgument(
                f"excitation has {len(exc)} samples, experiment needs {n_exc}"
            )
        u[:, j] = exc.samples[:n_exc]
    return u


def _compose(Ai, Bi, o):
    """o internal steps with the input held: (Ai^o, sum_j Ai^j Bi)."""
    Phi = np.eye(Ai.shape[0])
    Gam = np.zeros_like(Bi)
    for _ in range(o):
        Gam = Ai @ Gam + Bi
        Phi = Ai @ Phi
    return Phi, Gam


def _simulate_converter(grid, u, dt_int, oversample, tau):
    n = grid.n_states
    if tau > 0:
        A = np.block([[-np.eye(2) / tau, np.zeros((2, n))], [grid.B, grid.A]])
        B = np.vstack([np.eye(2) / tau, np.zeros((n, 2))])
    else:
        A, B = grid.A, grid.B
    Phi, Gam = _compose(*zoh_matrices(A, B, dt_int), oversample)
    X = run_recursion(Phi, u @ Gam.T, np.zeros(A.shape[0]))
    if tau > 0:
        i = X[:, :2]
        v = X[:, 2:] @ grid.C.T + i @ grid.D.T
    else:
        i = u.copy()
        v = X @ grid.C.T + u @ grid.D.T
    return i, v


def _simulate_device(grid, exc_d, exc_q, n_lead, n_exc, dt_int, oversample):
    """Ideal analog sinusoidal current source: exact continuous sinusoids."""
    n = grid.n_states
    A = np.zeros((n + 4, n + 4))
    A[:n, :n] = grid.A
    x_on = np.zeros(n + 4)
    for j, exc in enumerate((exc_d, exc_q)):
        if exc is None:
            continue
        if exc.kind is not ExcitationKind.SINE:
            raise InvalidArgument("the injection device only produces sinusoids")
        w = 2 * np.pi * exc.params["freq"]
        a, ph = exc.params["amplitude"], exc.params["phase"]
        s = n + 2 * j  # states: a sin(wt+ph), a cos(wt+ph)
        A[:n, s] = grid.B[:, j]
        A[s, s + 1] = w
        A[s + 1, s] = -w
        x_on[s], x_on[s + 1] = a * np.sin(ph), a * np.cos(ph)
    Phi, _ = _compose(*zoh_matrices(A, np.zeros((n + 4, 1)), dt_int), oversample)
    zero = np.zeros((n_lead, n + 4))
    X_lead = run_recursion(Phi, zero, np.zeros(n + 4))
    x_start = Phi @ X_lead[-1] if n_lead else np.zeros(n + 4)
    x_start = x_start + x_on
    X_exc = run_recursion(Phi, np.zeros((n_exc, n + 4)), x_start)
    X = np.vstack([X_lead, X_exc])
    i = X[:, [n, n + 2]]
    v = X[:, :n] @ grid.C.T + i @ grid.D.T
    return i, v


def simulate_experiment(
    grid: ContinuousStateSpace,
    exc_d: ExcitationSignal | None,
    exc_q: ExcitationSignal | None,
    *,
    omega_g,
    duration,
    sample_rate,
    oversample=20,
    noise: NoiseConfig | None = None,
    operating_point: OperatingPoint | None = None,
    lead_in=1.0,
    tracking_lag=0.0,
    injection="converter",
) -> MeasurementRecord:
    """Simulate one injection cycle and return the sampled abc measurements.

    ``injection="converter"``: the dq current follows the excitation samples
    held over each sample period, optionally through a first-order tracking
    lag with time constant ``tracking_lag``. ``injection="device"``: sine
    excitations are reproduced as continuous sinusoids by an ideal source.
    The first ``lead_in`` seconds are unexcited steady state.
    """
    if int(oversample) != oversample or oversample < 1:
        raise InvalidArgument("oversample must be an integer >= 1")
    if grid.shape != (2, 2):
        raise InvalidArgument("grid must be a 2x2 dq model")
    if tracking_lag < 0 or duration <= 0 or lead_in < 0:
        raise InvalidArgument("tracking_lag, duration and lead_in must be non-negative")
    oversample = int(oversample)
    noise = noise or NoiseConfig()
    op = (operating_point or OperatingPoint()).resolve(grid)
    n_lead = int(round(lead_in * sample_rate))
    n_exc = int(round(duration * sample_rate))
    dt = 1.0 / sample_rate
    dt_int = dt / oversample

    if injection == "converter":
        u = np.vstack([np.zeros((n_lead, 2)), _excitation_columns(exc_d, exc_q, n_exc, sample_rate)])
        i_ss, v_ss = _simulate_converter(grid, u, dt_int, oversample, tracking_lag)
    elif injection == "device":
        _excitation_columns(exc_d, exc_q, n_exc, sample_rate)
        i_ss, v_ss = _simulate_device(grid, exc_d, exc_q, n_lead, n_exc, dt_int, oversample)
    else:
        raise InvalidArgument(f"unknown injection mode {injection!r}")

    N = n_lead + n_exc
    i_dq = DqSeries(0.0, dt, op[0] + i_ss[:, 0], op[1] + i_ss[:, 1], omega_g)
    v_dq = DqSeries(0.0, dt, op[2] + v_ss[:, 0], op[3] + v_ss[:, 1], omega_g)
    i_abc = inverse_park(i_dq, label="i")
    v_abc = inverse_park(v_dq, label="v")
    if noise.variance > 0:
        rng = np.random.default_rng(noise.seed)
        e = noise.abc_std * rng.standard_normal((N, 6))
        v_abc = ThreePhaseSeries(0.0, dt, v_abc.a + e[:, 0], v_abc.b + e[:, 1], v_abc.c + e[:, 2], "v")
        i_abc = ThreePhaseSeries(0.0, dt, i_abc.a + e[:, 3], i_abc.b + e[:, 4], i_abc.c + e[:, 5], "i")

    meta = {
        "injection": injection,
        "duration": float(duration),
        "lead_in": float(lead_in),
        "oversample": oversample,
        "tracking_lag": float(tracking_lag),
        "noise_variance": float(noise.variance),
        "d": exc_d.describe() if exc_d is not None else None,
        "q": exc_q.describe() if exc_q is not None else None,
    }
    return MeasurementRecord(
        v_abc, i_abc, float(sample_rate), noise.seed, meta, op, float(omega_g), n_lead, n_exc
    )


def small_signal(record: MeasurementRecord, filter_spec=None, theta0=0.0):
    """dq transform, offset removal over the lead-in, excited window only.

    Returns (delta_i_dq, delta_v_dq) as small-signal DqSeries.
    """
    if record.onset < 1:
        raise InvalidArgument("record has no unexcited lead-in to estimate the offset from")
    ref = (0, record.onset)
    out = []
    for abc in (record.i_abc, record.v_abc):
        dq = remove_offset(park(abc, record.omega_g, theta0), ref)
        dq = dq.window(record.onset, record.onset + record.n_excited)
        if filter_spec is not None:
            dq = prefilter(dq, filter_spec)
        out.append(dq)
    return tuple(out)


def write_record(record: MeasurementRecord, outdir, stem):
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    write_series_csv(record.v_abc, outdir / f"{stem}_v_abc.csv")
    write_series_csv(record.i_abc, outdir / f"{stem}_i_abc.csv")
    side = {
        "sample_rate": record.sample_rate,
        "noise_seed": record.noise_seed,
        "omega_g": record.omega_g,
        "onset": record.onset,
        "n_excited": record.n_excited,
        "steady_state": dict(zip(("i_d0", "i_q0", "v_d0", "v_q0"), record.steady_state)),
        "excitation": record.excitation_meta,
    }
    path = outdir / f"{stem}.json"
    path.write_text(json.dumps(side, indent=2, sort_keys=True) + "\n")
    return path


def read_record(sidecar_path) -> MeasurementRecord:
    sidecar_path = Path(sidecar_path)
    side = json.loads(sidecar_path.read_text())
    stem = sidecar_path.with_suffix("")
    v = read_series_csv(f"{stem}_v_abc.csv", label="v")
    i = read_series_csv(f"{stem}_i_abc.csv", label="i")
    ss = side["steady_state"]
    return MeasurementRecord(
        v, i, side["sample_rate"], side["noise_seed"], side["excitation"],
        (ss["i_d0"], ss["i_q0"], ss["v_d0"], ss["v_q0"]),
        side["omega_g"], side["onset"], side["n_excited"],
    )
