"""Akaike order selection for ARX structures."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InvalidArgument
from .arx import ArxModel, RegressionData, arx_identify, arx_predict

EXACT_FIT_RTOL = 1e-20  # residual variance relative to output power


@dataclass(frozen=True)
class AicScore:
    value: float
    exact_fit: bool
    n_samples: int
    n_params: int

    def __float__(self):
        return float(self.value)


def aic_score(model: ArxModel, data: RegressionData, start=None) -> AicScore:
    """N log det(Sigma) + 2 d over the regression rows; -inf with exact_fit on singular Sigma."""
    _, E = arx_predict(model, data, start)
    N = len(E)
    S = E.T @ E / N
    scale = float(np.mean(np.sum(data.y**2, axis=1)))
    lam = np.linalg.eigvalsh((S + S.T) / 2)
    d = model.n_params
    if lam[0] <= EXACT_FIT_RTOL * max(scale, np.finfo(float).tiny):
        return AicScore(-np.inf, True, N, d)
    _, logdet = np.linalg.slogdet(S)
    return AicScore(float(N * logdet + 2 * d), False, N, d)


def _as_orders(c):
    if np.isscalar(c):
        return int(c), int(c)
    na, nb = c
    return int(na), int(nb)


def select_order(data: RegressionData, candidate_orders, nk=1, scorer=aic_score):
    """Fit each candidate on a common set of rows and return (best, {candidate: score}).

    Candidates are ints (na = nb) or (na, nb) pairs; ties go to the smallest.
    """
    cands = list(candidate_orders)
    if not cands:
        raise InvalidArgument("no candidate orders")
    orders = [_as_orders(c) for c in cands]
    start = max(max(na, nk + nb - 1) for na, nb in orders)
    scores = {}
    for c, (na, nb) in zip(cands, orders):
        model = arx_identify(data, na, nb, nk, start=start)
        scores[c] = scorer(model, data, start=start)
    ranked = sorted(cands, key=lambda c: (float(scores[c]), _as_orders(c)[0] + _as_orders(c)[1]))
    best = ranked[0]
    # exact ties (including several exact fits) resolve to the lowest order
    ties = [c for c in cands if float(scores[c]) == float(scores[best])]
    best = min(ties, key=lambda c: sum(_as_orders(c)))
    return best, scores
