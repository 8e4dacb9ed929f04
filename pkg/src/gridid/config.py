"""Experiment configuration: JSON schema validation and typed dataclasses."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import jsonschema

from .errors import InvalidArgument
from .gridsim import CircuitParams, NoiseConfig, OperatingPoint
from .signals import FilterSpec

MAX_SAMPLES = 10**8

_num = {"type": "number"}
_pos = {"type": "number", "exclusiveMinimum": 0}
_nonneg = {"type": "number", "minimum": 0}
_int = {"type": "integer"}
_seed = {"type": "integer", "minimum": 0}
_filter = {
    "type": "object",
    "properties": {
        "kind": {"enum": ["none", "moving_average_detrend", "first_order_highpass", "bandpass", "lowpass"]},
        "cutoffs": {"type": "array", "items": _pos, "maxItems": 2},
        "order": {"type": "integer", "minimum": 1},
    },
    "required": ["kind"],
    "additionalProperties": False,
}
_band = {"type": "array", "items": _pos, "minItems": 2, "maxItems": 2}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["circuit"],
    "additionalProperties": False,
    "properties": {
        "circuit": {
            "type": "object",
            "required": ["v_base", "s_base", "f_base", "r1", "r2", "l2", "c2", "r3", "l3", "c3"],
            "additionalProperties": False,
            "properties": {
                "v_base": _pos, "s_base": _pos, "f_base": _pos,
                "r1": _nonneg, "r2": _nonneg, "r3": _nonneg,
                "l2": _pos, "c2": _pos, "l3": _pos, "c3": _pos,
                "lf1": _pos, "lf2": _pos, "cf": _pos,
            },
        },
        "grid_frequency": _pos,
        "sample_rate": _pos,
        "oversample": {"type": "integer", "minimum": 1},
        "duration": _pos,
        "lead_in": _pos,
        "tracking_lag": _nonneg,
        "excitation": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["RBS", "PRBS"]},
                "amplitude": _pos,
                "seeds": {"type": "array", "items": _seed, "minItems": 2, "maxItems": 2},
            },
        },
        "noise": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"variance": _nonneg, "seed": _seed},
        },
        "operating_point": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"i_d0": _num, "i_q0": _num, "v_d0": _num, "v_q0": _num},
        },
        "identification": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "arx_na": {"type": "integer", "minimum": 0},
                "arx_nb": {"type": "integer", "minimum": 1},
                "arx_nk": {"type": "integer", "minimum": 0},
                "arx_prefilter": _filter,
                "ridge": _nonneg,
                "subspace_n": {"type": "integer", "minimum": 1},
                "subspace_r": {"type": "integer", "minimum": 2},
                "subspace_prefilter": _filter,
                "aic_candidates": {"type": "array", "items": {"type": "integer", "minimum": 1}, "minItems": 1},
            },
        },
        "sweep": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "f_min": _pos, "f_max": _pos,
                "n_freqs": {"type": "integer", "minimum": 1},
                "amplitude": _pos,
                "cycle_duration": _pos,
                "settle_time": {"oneOf": [_nonneg, {"type": "null"}]},
                "settle_time_constants": _nonneg,
                "injection": {"enum": ["converter", "device"]},
            },
        },
        "seqpert": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "duration": _pos,
                "seeds": {
                    "type": "array",
                    "items": {"type": "array", "items": _seed, "minItems": 2, "maxItems": 2},
                    "minItems": 2, "maxItems": 2,
                },
                "window": {"type": "string"},
                "n_segments": {"type": "integer", "minimum": 1},
                "overlap": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
                "prefilter": _filter,
            },
        },
        "bode": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"f_min": _pos, "f_max": _pos, "n_points": {"type": "integer", "minimum": 2}},
        },
        "band": _band,
        "output_dir": {"type": "string"},
    },
}


class ConfigError(InvalidArgument):
    """Schema violation; ``field_path`` is the dotted path of the offending entry."""

    def __init__(self, field_path, message):
        super().__init__(f"{field_path}: {message}")
        self.field_path = field_path


def _filter_from(d):
    return FilterSpec(d.get("kind", "none"), tuple(d.get("cutoffs", ())), d.get("order", 2))


def _filter_to(f: FilterSpec):
    return {"kind": f.kind.value, "cutoffs": list(f.cutoffs), "order": f.order}


@dataclass(frozen=True)
class ExcitationConfig:
    kind: str = "RBS"
    amplitude: float = 0.1
    seeds: tuple = (1, 2)  # d axis, q axis


@dataclass(frozen=True)
class IdentificationConfig:
    arx_na: int = 8
    arx_nb: int = 8
    arx_nk: int = 1
    arx_prefilter: FilterSpec = field(default_factory=FilterSpec)
    ridge: float = 0.0
    subspace_n: int = 16
    subspace_r: int = 20
    subspace_prefilter: FilterSpec = field(default_factory=FilterSpec)
    aic_candidates: tuple = (2, 4, 6, 8, 10)


@dataclass(frozen=True)
class SweepConfig:
    f_min: float = 1.0
    f_max: float = 1000.0
    n_freqs: int = 20
    amplitude: float = 0.1
    cycle_duration: float = 10.0
    settle_time: float | None = None  # None: settle_time_constants x dominant time constant
    settle_time_constants: float = 5.0
    injection: str = "device"


@dataclass(frozen=True)
class SeqPertConfig:
    duration: float = 15.0
    seeds: tuple = ((3, 4), (5, 6))  # (d, q) seeds of each cycle
    window: str = "hann"
    n_segments: int = 8
    overlap: float = 0.5
    prefilter: FilterSpec = field(default_factory=FilterSpec)


@dataclass(frozen=True)
class BodeConfig:
    f_min: float = 1.0
    f_max: float = 2000.0
    n_points: int = 200


@dataclass(frozen=True)
class ExperimentConfig:
    circuit: CircuitParams = field(default_factory=CircuitParams)
    grid_frequency: float = 50.0
    sample_rate: float = 5000.0
    oversample: int = 20
    duration: float = 15.0
    lead_in: float = 1.0
    tracking_lag: float = 0.0
    excitation: ExcitationConfig = field(default_factory=ExcitationConfig)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    operating_point: OperatingPoint = field(default_factory=OperatingPoint)
    identification: IdentificationConfig = field(default_factory=IdentificationConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)
    seqpert: SeqPertConfig = field(default_factory=SeqPertConfig)
    bode: BodeConfig = field(default_factory=BodeConfig)
    band: tuple = (1.0, 1000.0)
    output_dir: str = "out"

    def __post_init__(self):
        longest = max(self.duration, self.seqpert.duration, self.sweep.cycle_duration) + self.lead_in
        if longest * self.sample_rate > MAX_SAMPLES:
            raise ConfigError("duration", f"more than {MAX_SAMPLES} samples per record")
        if not self.band[0] < self.band[1]:
            raise ConfigError("band", "must be increasing")

    @property
    def omega_g(self):
        return 2.0 * math.pi * self.grid_frequency

    def to_dict(self):
        d = {
            "circuit": self.circuit.to_dict(),
            "grid_frequency": self.grid_frequency,
            "sample_rate": self.sample_rate,
            "oversample": self.oversample,
            "duration": self.duration,
            "lead_in": self.lead_in,
            "tracking_lag": self.tracking_lag,
            "excitation": {**asdict(self.excitation), "seeds": list(self.excitation.seeds)},
            "noise": asdict(self.noise),
            "operating_point": {k: v for k, v in asdict(self.operating_point).items() if v is not None},
            "identification": {
                **asdict(self.identification),
                "arx_prefilter": _filter_to(self.identification.arx_prefilter),
                "subspace_prefilter": _filter_to(self.identification.subspace_prefilter),
                "aic_candidates": list(self.identification.aic_candidates),
            },
            "sweep": asdict(self.sweep),
            "seqpert": {
                **asdict(self.seqpert),
                "seeds": [list(s) for s in self.seqpert.seeds],
                "prefilter": _filter_to(self.seqpert.prefilter),
            },
            "bode": asdict(self.bode),
            "band": list(self.band),
            "output_dir": self.output_dir,
        }
        return d

    def digest(self):
        """SHA-256 of the canonical JSON form."""
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()

    def with_seed_offset(self, offset):
        """Shift every seed by ``offset`` (the CLI's --seed-override)."""
        ex = replace(self.excitation, seeds=tuple(s + offset for s in self.excitation.seeds))
        sp = replace(self.seqpert, seeds=tuple(tuple(s + offset for s in pair) for pair in self.seqpert.seeds))
        return replace(self, excitation=ex, seqpert=sp, noise=replace(self.noise, seed=self.noise.seed + offset))


def _path(err):
    parts = [str(p) for p in err.absolute_path]
    if err.validator == "required":
        missing = err.message.split("'")[1]
        parts.append(missing)
    return ".".join(parts) or "<root>"


def validate_dict(raw):
    validator = jsonschema.Draft202012Validator(SCHEMA)
    errors = sorted(validator.iter_errors(raw), key=lambda e: (list(map(str, e.absolute_path)), e.message))
    if errors:
        e = errors[0]
        raise ConfigError(_path(e), e.message)


def _sub(cls, d, **conv):
    names = {f.name for f in fields(cls)}
    kw = {k: conv[k](v) if k in conv else v for k, v in d.items() if k in names}
    return cls(**kw)


def config_from_dict(raw) -> ExperimentConfig:
    validate_dict(raw)
    try:
        ident = raw.get("identification", {})
        cfg = ExperimentConfig(
            circuit=CircuitParams.from_dict(raw["circuit"]),
            **{k: raw[k] for k in ("grid_frequency", "sample_rate", "oversample", "duration", "lead_in",
                                   "tracking_lag", "output_dir") if k in raw},
            band=tuple(raw.get("band", (1.0, 1000.0))),
            excitation=_sub(ExcitationConfig, raw.get("excitation", {}), seeds=tuple),
            noise=_sub(NoiseConfig, raw.get("noise", {})),
            operating_point=_sub(OperatingPoint, raw.get("operating_point", {})),
            identification=_sub(IdentificationConfig, ident, arx_prefilter=_filter_from,
                                subspace_prefilter=_filter_from, aic_candidates=tuple),
            sweep=_sub(SweepConfig, raw.get("sweep", {})),
            seqpert=_sub(SeqPertConfig, raw.get("seqpert", {}), prefilter=_filter_from,
                         seeds=lambda s: tuple(tuple(p) for p in s)),
            bode=_sub(BodeConfig, raw.get("bode", {})),
        )
    except ConfigError:
        raise
    except InvalidArgument as exc:
        raise ConfigError("<config>", str(exc)) from exc
    return cfg


def load_config(path) -> ExperimentConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError("<file>", f"invalid JSON: {exc}") from exc
    return config_from_dict(raw)
