"""Nonparametric 2x2 frequency-response container and its CSV format."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import InvalidArgument

CSV_HEADER = ["f_hz", "re_dd", "im_dd", "re_dq", "im_dq", "re_qd", "im_qd", "re_qq", "im_qq"]


class ResponseSource(str, Enum):
    ANALYTIC = "analytic"
    ARX = "arx"
    SUBSPACE = "subspace"
    SWEEP = "sweep"
    WIDEBAND = "wideband"


@dataclass(frozen=True)
class FrequencyResponse:
    freqs: np.ndarray
    Z: np.ndarray  # (F, m, p) complex
    source: ResponseSource
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        f = np.array(self.freqs, dtype=float, copy=True).reshape(-1)
        Z = np.array(self.Z, dtype=complex, copy=True)
        if Z.ndim != 3 or Z.shape[0] != len(f):
            raise InvalidArgument("need exactly one matrix per frequency")
        if len(f) and (np.any(f <= 0) or np.any(np.diff(f) <= 0)):
            raise InvalidArgument("freqs must be positive and strictly increasing")
        f.setflags(write=False)
        Z.setflags(write=False)
        object.__setattr__(self, "freqs", f)
        object.__setattr__(self, "Z", Z)
        object.__setattr__(self, "source", ResponseSource(self.source))

    def __len__(self):
        return len(self.freqs)

    def restrict(self, band):
        lo, hi = band
        keep = (self.freqs >= lo) & (self.freqs <= hi)
        return replace(self, freqs=self.freqs[keep], Z=self.Z[keep])

    def entry(self, i, j):
        return self.Z[:, i, j]


def write_response_csv(fr: FrequencyResponse, path):
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for f, Zk in zip(fr.freqs, fr.Z):
            row = [repr(float(f))]
            for i in range(2):
                for j in range(2):
                    row += [repr(float(Zk[i, j].real)), repr(float(Zk[i, j].imag))]
            w.writerow(row)
    return path


def read_response_csv(path, source=ResponseSource.ANALYTIC):
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    if [h.strip() for h in rows[0]] != CSV_HEADER:
        raise InvalidArgument("unexpected frequency-response CSV header")
    data = np.array([[float(v) for v in r] for r in rows[1:] if r])
    Z = (data[:, 1::2] + 1j * data[:, 2::2]).reshape(-1, 2, 2)
    return FrequencyResponse(data[:, 0], Z, source)
