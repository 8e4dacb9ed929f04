"""Per-seed Bode errors of all four methods on a config (default: configs/reference.json).

    python3 scripts/seed_study.py --seeds 5 --threads 4
"""

import argparse
import warnings
from pathlib import Path

import numpy as np

from gridid import pipeline
from gridid.config import load_config

ROOT = Path(__file__).resolve().parents[1]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default=str(ROOT / "configs" / "reference.json"))
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--threads", type=int, default=4)
    args = ap.parse_args()
    base = load_config(args.config)
    methods = ("arx", "subspace", "sweep", "seqpert")
    table = {m: [] for m in methods}
    print(f"{'offset':>6} " + " ".join(f"{m:>18}" for m in methods))
    for k in range(args.seeds):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            report, _ = pipeline.run_compare(base.with_seed_offset(k), threads=args.threads)
        cells = []
        for m in methods:
            r = report.row(m)
            table[m].append((r.avg_mag_error_db, r.avg_phase_error_deg))
            cells.append(f"{r.avg_mag_error_db:7.1f} dB {r.avg_phase_error_deg:5.1f} deg")
        print(f"{k:>6} " + " ".join(f"{c:>18}" for c in cells), flush=True)
    med = [np.median(np.array(table[m]), axis=0) for m in methods]
    print(f"{'median':>6} " + " ".join(f"{a:7.1f} dB {b:5.1f} deg" for a, b in med))


if __name__ == "__main__":
    main()
