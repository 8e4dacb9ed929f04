import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gridid.errors import ConversionError, DegenerateModel, InvalidArgument
from gridid.gridsim import CircuitParams, analytic_impedance, grid_model
from gridid.statespace import ContinuousStateSpace, DiscreteStateSpace, discretize_zoh
from gridid.sysid import ArxModel, arx_to_ss, arx_to_tf, d2c, frequency_response, minimal_order

W = 2 * np.pi * 50


def scalar_arx(a=-0.8, b=0.5, dt=1.0):
    return ArxModel(1, 1, [[[a]]], [[[b]]], dt, [[0.0]])


def random_arx(seed, na=3, nb=2, m=2, p=2, dt=1e-3):
    rng = np.random.default_rng(seed)
    A = 0.25 / na * rng.uniform(-1, 1, size=(na, m, m))
    return ArxModel(na, nb, A, rng.normal(size=(nb, m, p)), dt, np.zeros((m, m)))


def test_scalar_tf():
    G = arx_to_tf(scalar_arx())
    assert np.allclose(G.num[0][0], [0.0, 0.5])
    assert np.allclose(G.den[0][0], [1.0, -0.8])


def test_diagonal_tf():
    m = ArxModel(1, 1, [np.diag([-0.8, -0.3])], [np.diag([0.5, 2.0])], 1.0, np.zeros((2, 2)))
    G = arx_to_tf(m)
    for z in (np.exp(0.3j), 1.7, -0.4 + 0.9j):
        H = G.evaluate(z)
        assert H[0, 1] == 0 and H[1, 0] == 0
        assert H[0, 0] == pytest.approx(0.5 / z / (1 - 0.8 / z), rel=1e-13)
        assert H[1, 1] == pytest.approx(2.0 / z / (1 - 0.3 / z), rel=1e-13)


def test_degenerate_det():
    # a monic ARX A(z) always has det(I) = 1 at z^-1 = 0, so force a singular polynomial matrix
    m = ArxModel(1, 1, [[[0.0, 0.0], [0.0, 0.0]]], [np.eye(2)], 1.0, np.zeros((2, 2)))

    class Singular(ArxModel):
        def a_poly(self):
            return np.array([[[1.0, 1.0], [1.0, 1.0]], [[0.5, 0.5], [0.5, 0.5]]])

    bad = Singular(m.na, m.nb, m.A_coeffs, m.B_coeffs, m.dt, m.residual_covariance)
    with pytest.raises(DegenerateModel):
        arx_to_tf(bad)


@settings(max_examples=20)
@given(seed=st.integers(0, 10_000))
def test_tf_and_direct_paths_agree(seed):
    m = random_arx(seed)
    G = arx_to_tf(m)
    ss = arx_to_ss(m)
    for f in (1.0, 37.0, 210.0, 480.0):
        z = np.exp(2j * np.pi * f * m.dt)
        ref = m.evaluate(z)
        assert np.max(np.abs(G.evaluate(z) - ref)) <= 1e-10 * max(1, np.max(np.abs(ref)))
        assert np.max(np.abs(ss.evaluate(z) - ref)) <= 1e-10 * max(1, np.max(np.abs(ref)))


def test_tf_matches_recursion_steady_state():
    m = random_arx(3)
    f, dt = 50.0, m.dt
    n = np.arange(4000)
    u = np.column_stack([np.cos(2 * np.pi * f * n * dt), np.zeros(len(n))])
    y = m.simulate(u)
    tail = slice(2000, 4000)  # integer number of periods (50 Hz at 1 kHz: 20 samples)
    ph = 2 / 2000 * (y[tail].T @ np.exp(-2j * np.pi * f * n[tail] * dt))
    G = arx_to_tf(m).evaluate(np.exp(2j * np.pi * f * dt))
    assert np.max(np.abs(ph - G[:, 0])) <= 1e-8


def test_static_gain_model_is_flat():
    D = np.array([[1.0, 2.0], [3.0, 4.0]])
    ss = DiscreteStateSpace(np.zeros((0, 0)), np.zeros((0, 2)), np.zeros((2, 0)), D, 1e-3)
    fr = frequency_response(ss, [1.0, 100.0, 400.0])
    assert np.all(fr.Z == D)
    m = ArxModel(0, 1, np.zeros((0, 2, 2)), [D], 1e-3, np.zeros((2, 2)), nk=0)
    assert np.allclose(frequency_response(m, [1.0, 400.0]).Z, D, atol=1e-15)


def test_nyquist_rejected():
    with pytest.raises(InvalidArgument):
        frequency_response(scalar_arx(dt=1e-3), [100.0, 500.0])


def test_grid_response_equals_analytic():
    ss = grid_model(CircuitParams())
    f = np.geomspace(1, 2000, 50)
    a = analytic_impedance(CircuitParams(), W, f).Z
    b = frequency_response(ss, f).Z
    assert np.max(np.abs(a - b)) <= 1e-10 * np.max(np.abs(a))


# ---------------------------------------------------------------- d2c


def test_identity_maps_to_zero():
    ss = DiscreteStateSpace(np.eye(3), np.ones((3, 1)), np.ones((1, 3)), [[0.0]], 0.01)
    for method in ("bilinear", "matrix_log"):
        assert np.allclose(d2c(ss, method).A, 0, atol=1e-14)


def test_matrix_log_round_trip_grid():
    ss = grid_model(CircuitParams())
    back = d2c(discretize_zoh(ss, 2e-4), "matrix_log")
    assert np.max(np.abs(back.A - ss.A)) <= 1e-8
    assert np.allclose(back.B, ss.B, atol=1e-8)


@settings(max_examples=25)
@given(seed=st.integers(0, 10_000), n=st.integers(1, 5))
def test_matrix_log_round_trip_property(seed, n):
    rng = np.random.default_rng(seed)
    # eigenvalues with |Im| * dt < pi keep the principal log the right branch
    A = rng.normal(size=(n, n)) - 2 * n * np.eye(n)
    B = rng.normal(size=(n, 2))
    ss = ContinuousStateSpace(A, B, rng.normal(size=(1, n)), np.zeros((1, 2)))
    back = d2c(discretize_zoh(ss, 0.01), "matrix_log")
    assert np.max(np.abs(back.A - A)) <= 1e-8
    assert np.max(np.abs(back.B - B)) <= 1e-8


def test_bilinear_round_trip_bode():
    ss = grid_model(CircuitParams())
    dt = 2e-4
    back = d2c(discretize_zoh(ss, dt), "bilinear")
    f = np.geomspace(1, 0.05 / dt, 60)  # up to f_s / 20
    a = frequency_response(ss, f).Z
    b = frequency_response(back, f).Z
    db = np.abs(20 * np.log10(np.abs(b) / np.abs(a)))
    assert np.max(db) <= 0.5


def test_bilinear_rejects_minus_one():
    ss = DiscreteStateSpace([[-1.0]], [[1.0]], [[1.0]], [[0.0]], 1.0)
    with pytest.raises(ConversionError) as ei:
        d2c(ss, "bilinear")
    assert ei.value.eigenvalue == -1


def test_matrix_log_rejects_negative_real():
    ss = DiscreteStateSpace([[-0.5]], [[1.0]], [[1.0]], [[0.0]], 1.0)
    with pytest.raises(ConversionError, match="-0.5"):
        d2c(ss, "matrix_log")


def test_unknown_method():
    ss = DiscreteStateSpace([[0.5]], [[1.0]], [[1.0]], [[0.0]], 1.0)
    with pytest.raises(InvalidArgument):
        d2c(ss, "tustin2")


# ---------------------------------------------------------------- minimal order


def test_minimal_order_of_observer_form():
    # common factor (1 - 0.5 z^-1) cancels exactly: order 1 not 2
    m = ArxModel(2, 2, [[[-1.3]], [[0.4]]], [[[1.0]], [[-0.5]]], 1.0, [[0.0]])
    ss = arx_to_ss(m)
    assert ss.n_states == 2
    assert minimal_order(ss) == 1


def test_minimal_order_full():
    ss = arx_to_ss(random_arx(1, na=4, nb=4))
    assert ss.n_states == 8 and minimal_order(ss) == 8


def test_minimal_order_uncontrollable_and_unobservable():
    A = np.diag([0.5, 0.2, -0.1])
    B = np.array([[1.0], [1.0], [0.0]])
    C = np.array([[1.0, 0.0, 1.0]])
    assert minimal_order(DiscreteStateSpace(A, B, C, [[0.0]], 1.0)) == 1
