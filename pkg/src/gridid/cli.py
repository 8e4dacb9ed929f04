"""Command line entry point: ``python -m gridid <subcommand> --config cfg.json``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from . import pipeline
from .config import ConfigError, load_config
from .errors import GridIdError
from .gridsim import small_signal, write_record
from .metrics import fit_percent
from .response import write_response_csv
from .signals import DqSeries, write_series_csv
from .sysid import arx_to_ss, frequency_response, save_model

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


class Run:
    """Collects written files for the manifest."""

    def __init__(self, cfg, out, command):
        self.cfg = cfg
        self.out = Path(out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.command = command
        self.files = []

    def add(self, path):
        self.files.append(Path(path))
        return path

    def json(self, name, obj):
        path = self.out / name
        path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
        return self.add(path)

    def response(self, name, fr):
        return self.add(write_response_csv(fr, self.out / name))

    def model(self, name, model, extra=None):
        prov = {"config_sha256": self.cfg.digest(), "excitation_seeds": list(self.cfg.excitation.seeds),
                "noise_seed": self.cfg.noise.seed}
        prov.update(extra or {})
        return self.add(save_model(model, self.out / name, prov))

    def record(self, stem, rec):
        side = write_record(rec, self.out, stem)
        self.add(self.out / f"{stem}_v_abc.csv")
        self.add(self.out / f"{stem}_i_abc.csv")
        return self.add(side)

    def manifest(self):
        files = {}
        for p in sorted(set(self.files)):
            files[p.name] = hashlib.sha256(p.read_bytes()).hexdigest()
        cfg = self.cfg
        man = {
            "command": self.command,
            "config_sha256": cfg.digest(),
            "seeds": {
                "excitation": list(cfg.excitation.seeds),
                "noise": cfg.noise.seed,
                "seqpert": [list(s) for s in cfg.seqpert.seeds],
            },
            "files": files,
        }
        path = self.out / "manifest.json"
        path.write_text(json.dumps(man, indent=2, sort_keys=True) + "\n")
        return path


def _bode_freqs(cfg):
    f = pipeline.bode_freqs(cfg)
    return f[f < cfg.sample_rate / 2]


def cmd_simulate(run: Run, args):
    rec = pipeline.parametric_record(run.cfg)
    run.record("parametric", rec)
    i_dq, v_dq = small_signal(rec)
    run.add(write_series_csv(i_dq, run.out / "parametric_i_dq.csv"))
    run.add(write_series_csv(v_dq, run.out / "parametric_v_dq.csv"))


def cmd_identify(run: Run, args):
    cfg = run.cfg
    rec = pipeline.parametric_record(cfg)
    arx = pipeline.identify_arx(cfg, rec)
    sub = pipeline.identify_subspace(cfg, rec)
    f = _bode_freqs(cfg)
    run.model("arx_model.json", arx)
    run.model("subspace_model.json", sub)
    run.response("bode_arx.csv", frequency_response(arx, f))
    run.response("bode_subspace.csv", frequency_response(sub, f))
    run.response("bode_analytic.csv", pipeline.truth(cfg)(f))


def cmd_sweep(run: Run, args):
    fr = pipeline.run_sweep(run.cfg, threads=args.threads)
    run.response("sweep.csv", fr)
    run.json("sweep_meta.json", fr.metadata)


def cmd_seqpert(run: Run, args):
    fr = pipeline.run_seqpert(run.cfg)
    run.response("seqpert.csv", fr)
    run.json("seqpert_meta.json", fr.metadata)


def cmd_bode(run: Run, args):
    f = _bode_freqs(run.cfg)
    run.response("bode_analytic.csv", pipeline.truth(run.cfg)(f))


def cmd_compare(run: Run, args):
    report, art = pipeline.run_compare(run.cfg, threads=args.threads)
    run.json("report.json", report.to_dict())
    path = run.out / "report.txt"
    path.write_text(report.to_text())
    run.add(path)
    for name, fr in art["responses"].items():
        run.response(f"bode_{name}.csv", fr)
    run.response("bode_analytic.csv", pipeline.truth(run.cfg)(_bode_freqs(run.cfg)))
    run.model("arx_model.json", art["arx"])
    run.model("subspace_model.json", art["subspace"])
    print(report.to_text(), end="")


VALIDATION_SEED_OFFSET = 500


def cmd_validate(run: Run, args):
    """Fit models on the estimation record, score them on an independent record."""
    cfg = run.cfg
    est = pipeline.parametric_record(cfg)
    seeds = tuple(s + VALIDATION_SEED_OFFSET for s in cfg.excitation.seeds)
    val = pipeline.run_experiment(cfg, seeds, cfg.duration, cfg.noise.seed + VALIDATION_SEED_OFFSET)
    i_dq, v_dq = small_signal(val)
    u = i_dq.stacked()
    result = {"config_sha256": cfg.digest(), "validation_seeds": list(seeds)}
    for name, model in (("arx", arx_to_ss(pipeline.identify_arx(cfg, est))),
                        ("subspace", pipeline.identify_subspace(cfg, est))):
        y = model.simulate(u)
        sim = DqSeries(v_dq.t0, v_dq.dt, y[:, 0], y[:, 1], v_dq.frame_freq, True)
        fd, fq = fit_percent(v_dq, sim)
        result[name] = {"fit_d_percent": fd, "fit_q_percent": fq}
        print(f"{name:9s} fit d {fd:6.2f} %  q {fq:6.2f} %")
    run.json("validation.json", result)


COMMANDS = {
    "simulate": cmd_simulate,
    "identify": cmd_identify,
    "sweep": cmd_sweep,
    "seqpert": cmd_seqpert,
    "bode": cmd_bode,
    "compare": cmd_compare,
    "validate": cmd_validate,
}


def build_parser():
    ap = argparse.ArgumentParser(prog="gridid", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", required=True, help="experiment JSON file")
    ap.add_argument("--seed-override", type=int, default=None, help="offset added to every seed")
    ap.add_argument("--out", default=None, help="output directory (default: config output_dir)")
    ap.add_argument("--threads", type=int, default=1, help="parallel sweep workers")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed_override is not None:
            cfg = cfg.with_seed_offset(args.seed_override)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    run = Run(cfg, args.out or cfg.output_dir, args.command)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            COMMANDS[args.command](run, args)
    except (GridIdError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical error in {type(exc).__module__}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    run.manifest()
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
