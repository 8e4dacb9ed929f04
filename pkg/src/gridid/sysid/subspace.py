"""Subspace identification, MOESP with past inputs and outputs as instruments."""

from __future__ import annotations

import warnings

import numpy as np

from ..errors import InvalidArgument
from ..statespace import DiscreteStateSpace
from .arx import PINV_RTOL, RegressionData

GAP_RATIO = 1.5
GROWTH_LIMIT = 1e6


class OrderAmbiguityWarning(UserWarning):
    pass


class UnstableModelWarning(UserWarning):
    pass


def block_hankel(x, start, rows, cols):
    """Block Hankel matrix with block (i, j) = x[start + i + j] as a column."""
    return np.vstack([x[start + i : start + i + cols].T for i in range(rows)])


def _observability_basis(u, y, n, r):
    N = len(y) - 2 * r + 1
    Up, Yp = block_hankel(u, 0, r, N), block_hankel(y, 0, r, N)
    Uf, Yf = block_hankel(u, r, r, N), block_hankel(y, r, r, N)
    Wp = np.vstack([Up, Yp])
    # LQ factorization of [Uf; Wp; Yf] via QR of the transpose
    Rt = np.linalg.qr(np.vstack([Uf, Wp, Yf]).T, mode="r")
    L = Rt.T
    ru, rw = Uf.shape[0], Wp.shape[0]
    # part of Yf explained by the instruments once Uf is projected out
    L32 = L[ru + rw :, ru : ru + rw]
    U, s, _ = np.linalg.svd(L32, full_matrices=False)
    return U[:, :n] * np.sqrt(s[:n]), s


def _estimate_bdx0(u, y, A, C):
    """Least squares for B, D and x0 given A, C; outputs are linear in all three.

    For an unstable A only the leading samples over which A^k grows by at most
    GROWTH_LIMIT are used, so the regressors stay within floating-point range.
    """
    N, p = u.shape
    m, n = C.shape
    rho = np.max(np.abs(np.linalg.eigvals(A)))
    if rho > 1.0:
        n_unknown = n * p + m * p + n
        N = min(N, max(int(np.log(GROWTH_LIMIT) / np.log(rho)), -(-4 * n_unknown // m)))
        u, y = u[:N], y[:N]
    # S(k) = d x(k) / d vec(B) with vec column-major: S(k+1) = A S(k) + kron(u(k)^T, I)
    S = np.zeros((n, n * p))
    P = C.copy()  # C A^k
    cols_b = np.empty((N, m, n * p))
    cols_x = np.empty((N, m, n))
    eye = np.eye(n)
    for k in range(N):
        cols_b[k] = C @ S
        cols_x[k] = P
        S = A @ S + np.kron(u[k], eye)
        P = P @ A
    cols_d = np.einsum("ij,kl->kilj", np.eye(m), u).reshape(N, m, m * p)
    Phi = np.concatenate([cols_b, cols_d, cols_x], axis=2).reshape(N * m, -1)
    theta, *_ = np.linalg.lstsq(Phi, y.reshape(-1), rcond=PINV_RTOL)
    B = theta[: n * p].reshape(p, n).T
    D = theta[n * p : n * p + m * p].reshape(m, p, order="F")
    x0 = theta[n * p + m * p :]
    return B, D, x0


def subspace_identify(data: RegressionData, n, r) -> DiscreteStateSpace:
    n, r = int(n), int(r)
    m, p = data.n_outputs, data.n_inputs
    if n < 1:
        raise InvalidArgument("model order must be >= 1")
    if r < n + 1:
        raise InvalidArgument(f"need r >= n + 1 block rows (n={n}, r={r})")
    if r * m < n:
        raise InvalidArgument("r * m must be at least n")
    N = len(data) - 2 * r + 1
    if N < 2 * r * (m + p):
        raise InvalidArgument(f"too few samples: {N} Hankel columns for {r} block rows")
    u, y = data.u, data.y
    Or, s = _observability_basis(u, y, n, r)

    C = Or[:m]
    A, *_ = np.linalg.lstsq(Or[:-m], Or[m:], rcond=PINV_RTOL)
    B, D, x0 = _estimate_bdx0(u, y, A, C)

    gap = s[n - 1] / s[n] if n < len(s) and s[n] > 0 else np.inf
    if gap < GAP_RATIO:
        warnings.warn(
            f"singular value gap s_n/s_(n+1) = {gap:.3g} < {GAP_RATIO}: order {n} is ambiguous",
            OrderAmbiguityWarning,
            stacklevel=2,
        )
    stable = bool(np.all(np.abs(np.linalg.eigvals(A)) < 1.0))
    if not stable:
        warnings.warn("identified A has eigenvalues outside the unit circle", UnstableModelWarning, stacklevel=2)
    meta = {
        "source": "subspace",
        "order": n,
        "block_rows": r,
        "singular_values": [float(v) for v in s],
        "gap_ratio": float(gap),
        "stable": stable,
        "x0": [float(v) for v in x0],
    }
    return DiscreteStateSpace(A, B, C, D, data.dt, meta=meta)
