"""MIMO ARX models fitted by one-step prediction-error least squares.

Model: y(k) + A_1 y(k-1) + ... + A_na y(k-na)
              = B_1 u(k-nk) + ... + B_nb u(k-nk-nb+1) + e(k)
with full m x m A_i and m x p B_j blocks estimated jointly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import IllConditionedData, InvalidArgument

PINV_RTOL = 1e-10


def _frozen(x, ndim):
    a = np.array(x, dtype=float, copy=True)
    if a.ndim != ndim:
        raise InvalidArgument(f"expected a {ndim}-d array, got shape {a.shape}")
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class RegressionData:
    """Input u (N, p) = small-signal dq current, output y (N, m) = dq voltage."""

    u: np.ndarray
    y: np.ndarray
    dt: float

    def __post_init__(self):
        u = np.asarray(self.u, dtype=float)
        y = np.asarray(self.y, dtype=float)
        u = u[:, None] if u.ndim == 1 else u
        y = y[:, None] if y.ndim == 1 else y
        object.__setattr__(self, "u", _frozen(u, 2))
        object.__setattr__(self, "y", _frozen(y, 2))
        if len(self.u) != len(self.y):
            raise InvalidArgument("u and y must have equal length")
        if not self.dt > 0:
            raise InvalidArgument("dt must be positive")

    @classmethod
    def from_dq(cls, i_dq, v_dq):
        if i_dq.dt != v_dq.dt or len(i_dq) != len(v_dq):
            raise InvalidArgument("current and voltage series must be aligned")
        return cls(i_dq.stacked(), v_dq.stacked(), i_dq.dt)

    def __len__(self):
        return len(self.y)

    @property
    def n_inputs(self):
        return self.u.shape[1]

    @property
    def n_outputs(self):
        return self.y.shape[1]


@dataclass(frozen=True)
class ArxModel:
    na: int
    nb: int
    A_coeffs: np.ndarray  # (na, m, m): A_1 .. A_na
    B_coeffs: np.ndarray  # (nb, m, p): coefficients of u(k-nk) .. u(k-nk-nb+1)
    dt: float
    residual_covariance: np.ndarray
    nk: int = 1
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        A = np.array(self.A_coeffs, dtype=float).reshape(self.na, *np.shape(self.A_coeffs)[1:] or (0, 0))
        B = np.array(self.B_coeffs, dtype=float)
        if B.ndim != 3 or len(B) != self.nb or self.nb < 1:
            raise InvalidArgument("B_coeffs must hold nb >= 1 matrices")
        m = B.shape[1]
        if self.na == 0:
            A = np.zeros((0, m, m))
        if A.shape[1:] != (m, m):
            raise InvalidArgument("A_i must be m x m with m = rows of B_j")
        S = np.array(self.residual_covariance, dtype=float).reshape(m, m)
        if self.nk < 0 or self.na < 0:
            raise InvalidArgument("orders must be non-negative")
        for name, val in (("A_coeffs", A), ("B_coeffs", B), ("residual_covariance", S)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)

    @property
    def n_outputs(self):
        return self.B_coeffs.shape[1]

    @property
    def n_inputs(self):
        return self.B_coeffs.shape[2]

    @property
    def n_params(self):
        m, p = self.n_outputs, self.n_inputs
        return self.na * m * m + self.nb * m * p

    @property
    def max_lag(self):
        return max(self.na, self.nk + self.nb - 1)

    def a_poly(self):
        """A(z) coefficients in powers of z^-1, leading identity included: (na+1, m, m)."""
        m = self.n_outputs
        return np.concatenate([np.eye(m)[None], self.A_coeffs])

    def b_poly(self):
        """B(z) coefficients in powers of z^-1 from z^0: (nk+nb, m, p)."""
        m, p = self.n_outputs, self.n_inputs
        return np.concatenate([np.zeros((self.nk, m, p)), self.B_coeffs])

    def evaluate(self, z):
        zi = 1.0 / z
        A = sum(Ai * zi**i for i, Ai in enumerate(self.a_poly()))
        B = sum(Bj * zi**j for j, Bj in enumerate(self.b_poly()))
        return np.linalg.solve(A, B)

    def simulate(self, u):
        """Free-run (simulation, not prediction) output from rest for inputs u (N, p)."""
        from .convert import arx_to_ss

        return arx_to_ss(self).simulate(u)


def _regressor(data: RegressionData, na, nb, nk, start=None):
    """Stacked regressors phi(k)^T as rows, targets y(k), first row index."""
    y, u = data.y, data.u
    k0 = max(na, nk + nb - 1)
    if start is not None:
        if start < k0:
            raise InvalidArgument(f"start {start} precedes the first full regressor {k0}")
        k0 = start
    N = len(y)
    if N <= k0:
        raise InvalidArgument("data too short for the requested lags")
    cols = [-y[k0 - i : N - i] for i in range(1, na + 1)]
    cols += [u[k0 - nk - j : N - nk - j] for j in range(nb)]
    Phi = np.hstack(cols) if cols else np.zeros((N - k0, 0))
    return Phi, y[k0:], k0


def _unpack(theta, na, nb, m, p):
    A = np.array([theta[i * m : (i + 1) * m].T for i in range(na)]).reshape(na, m, m)
    off = na * m
    B = np.array([theta[off + j * p : off + (j + 1) * p].T for j in range(nb)])
    return A, B


def _lstsq(Phi, Y, ridge=0.0):
    if ridge > 0:
        d = Phi.shape[1]
        Phi = np.vstack([Phi, np.sqrt(ridge) * np.eye(d)])
        Y = np.vstack([Y, np.zeros((d, Y.shape[1]))])
    # SVD based; singular values below PINV_RTOL * s_max are discarded
    theta, *_ = np.linalg.lstsq(Phi, Y, rcond=PINV_RTOL)
    return theta


def arx_identify(data: RegressionData, na, nb, nk=1, *, ridge=0.0, start=None) -> ArxModel:
    """Joint least-squares fit of all A_i, B_j.

    ``start`` lets several candidate orders share the same regression rows.
    """
    na, nb, nk = int(na), int(nb), int(nk)
    if na < 0 or nb < 1 or nk < 0:
        raise InvalidArgument("need na >= 0, nb >= 1, nk >= 0")
    m, p = data.n_outputs, data.n_inputs
    d = na * m + nb * p
    if len(data) <= 4 * d:
        raise InvalidArgument(f"{len(data)} samples too few for {d} regressors per output")
    Phi, Y, k0 = _regressor(data, na, nb, nk, start)

    U = Phi[:, na * m :]
    s = np.linalg.svd(U, compute_uv=False)
    if s[0] == 0 or s[-1] < PINV_RTOL * s[0]:
        cond = np.inf if s[-1] == 0 else s[0] / s[-1]
        raise IllConditionedData("input regressors are rank deficient", cond)

    theta = _lstsq(Phi, Y, ridge)
    E = Y - Phi @ theta
    A, B = _unpack(theta, na, nb, m, p)
    cov = E.T @ E / len(E)
    return ArxModel(na, nb, A, B, data.dt, (cov + cov.T) / 2, nk, meta={"first_row": k0, "n_rows": len(E)})


def arx_predict(model: ArxModel, data: RegressionData, start=None):
    """One-step-ahead predictions and residuals for rows k >= first full regressor."""
    if data.n_outputs != model.n_outputs or data.n_inputs != model.n_inputs:
        raise InvalidArgument("data dimensions do not match the model")
    Phi, Y, _ = _regressor(data, model.na, model.nb, model.nk, start)
    theta = np.vstack([Ai.T for Ai in model.A_coeffs] + [Bj.T for Bj in model.B_coeffs])
    pred = Phi @ theta
    return pred, Y - pred
