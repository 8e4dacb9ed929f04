import numpy as np
import pytest

from gridid.signals import generate_rbs
from gridid.sysid import AicScore, ArxModel, RegressionData, aic_score, arx_identify, select_order


def order2_data(seed, N=2000, sigma=0.05):
    rng = np.random.default_rng(seed)
    u = generate_rbs(seed, N, 1.0, 1.0).samples
    e = sigma * rng.standard_normal(N)
    y = np.zeros(N)
    for k in range(2, N):
        y[k] = 1.5 * y[k - 1] - 0.7 * y[k - 2] + u[k - 1] + 0.5 * u[k - 2] + e[k]
    return RegressionData(u, y, 1.0)


def test_penalty_difference_for_identical_residuals():
    data = order2_data(0)
    m = arx_identify(data, 2, 2)
    # same coefficients padded with zero lags: identical residuals, more parameters
    big = ArxModel(4, 4, np.concatenate([m.A_coeffs, np.zeros((2, 1, 1))]),
                   np.concatenate([m.B_coeffs, np.zeros((2, 1, 1))]), 1.0, m.residual_covariance)
    s1, s2 = aic_score(m, data, start=4), aic_score(big, data, start=4)
    assert float(s2) - float(s1) == pytest.approx(2 * (big.n_params - m.n_params), abs=1e-9)


def test_definition():
    data = order2_data(1)
    m = arx_identify(data, 2, 2)
    s = aic_score(m, data)
    N = s.n_samples
    assert N == len(data) - 2
    assert float(s) == pytest.approx(N * np.log(m.residual_covariance[0, 0]) + 2 * 4, rel=1e-12)


def test_exact_fit_flag():
    data = order2_data(2, sigma=0.0)
    s = aic_score(arx_identify(data, 2, 2), data)
    assert s.exact_fit and float(s) == -np.inf


def test_single_candidate():
    best, scores = select_order(order2_data(3), [3])
    assert best == 3 and list(scores) == [3]


def test_ties_go_to_smaller_order():
    def flat(model, data, start=None):
        return AicScore(1.0, False, len(data), model.n_params)

    best, _ = select_order(order2_data(4), [6, 4], scorer=flat)
    assert best == 4


def test_exact_fits_resolve_to_lowest_order():
    best, scores = select_order(order2_data(5, sigma=0.0), [1, 2, 4, 8])
    assert best == 2 and scores[4].exact_fit


def test_true_order_selected_in_monte_carlo():
    hits = sum(select_order(order2_data(seed), [1, 2, 4, 8])[0] == 2 for seed in range(50))
    assert hits >= 45
