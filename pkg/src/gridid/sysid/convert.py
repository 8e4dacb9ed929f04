"""Model conversions: ARX -> transfer matrix / state space, d2c, frequency responses."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from ..errors import ConversionError, DegenerateModel, InvalidArgument
from ..response import FrequencyResponse, ResponseSource
from ..statespace import ContinuousStateSpace, DiscreteStateSpace
from .arx import ArxModel

# ---------------------------------------------------------------- polynomials in z^-1


def _pmul(a, b):
    return np.convolve(a, b)


def _padd(a, b):
    n = max(len(a), len(b))
    out = np.zeros(n)
    out[: len(a)] += a
    out[: len(b)] += b
    return out


def _trim(a):
    """Drop exactly-zero trailing (highest z^-1 power) coefficients."""
    a = np.asarray(a, dtype=float)
    nz = np.flatnonzero(a != 0.0)
    return a[: nz[-1] + 1] if len(nz) else a[:1] * 0.0


def _pdet(P):
    """Determinant of a square matrix of polynomials (Laplace expansion)."""
    m = len(P)
    if m == 1:
        return P[0][0]
    out = np.zeros(1)
    for j in range(m):
        minor = [row[:j] + row[j + 1 :] for row in P[1:]]
        term = _pmul(P[0][j], _pdet(minor))
        out = _padd(out, term if j % 2 == 0 else -term)
    return out


def _padj(P):
    m = len(P)
    if m == 1:
        return [[np.ones(1)]]
    adj = [[None] * m for _ in range(m)]
    for i in range(m):
        for j in range(m):
            minor = [row[:j] + row[j + 1 :] for k, row in enumerate(P) if k != i]
            c = _pdet(minor)
            adj[j][i] = c if (i + j) % 2 == 0 else -c
    return adj


@dataclass(frozen=True)
class DiscreteTransferMatrix:
    """Entry (i, j) = num[i][j](z^-1) / den[i][j](z^-1), coefficients from z^0 upward."""

    num: tuple
    den: tuple
    dt: float

    def __post_init__(self):
        num = tuple(tuple(np.array(c, dtype=float) for c in row) for row in self.num)
        den = tuple(tuple(np.array(c, dtype=float) for c in row) for row in self.den)
        if len(num) != len(den) or any(len(a) != len(b) for a, b in zip(num, den)):
            raise InvalidArgument("numerator and denominator tables must have equal shape")
        for row in den:
            for d in row:
                if d[0] != 1.0:
                    raise InvalidArgument("denominators must be monic in z^-1")
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)

    @property
    def shape(self):
        return len(self.num), len(self.num[0])

    def evaluate(self, z):
        zi = 1.0 / z
        m, p = self.shape
        G = np.empty((m, p), dtype=complex)
        for i in range(m):
            for j in range(p):
                G[i, j] = np.polyval(self.num[i][j][::-1], zi) / np.polyval(self.den[i][j][::-1], zi)
        return G


def arx_to_tf(model: ArxModel) -> DiscreteTransferMatrix:
    """G(z) = adj A(z) B(z) / det A(z), entrywise."""
    m, p = model.n_outputs, model.n_inputs
    Ap, Bp = model.a_poly(), model.b_poly()
    A = [[Ap[:, i, j].copy() for j in range(m)] for i in range(m)]
    det = _trim(_pdet(A))
    if not np.any(det):
        raise DegenerateModel("det A(z) is identically zero")
    adj = _padj(A)
    num, den = [], []
    for i in range(m):
        nrow, drow = [], []
        for j in range(p):
            acc = np.zeros(1)
            for k in range(m):
                acc = _padd(acc, _pmul(adj[i][k], Bp[:, k, j]))
            nrow.append(_trim(acc))
            drow.append(det / det[0])
        num.append(nrow)
        den.append(drow)
    # det A(z) has leading coefficient det(I) = 1, so no rescaling of num needed
    return DiscreteTransferMatrix(tuple(num), tuple(den), model.dt)


def arx_to_ss(model: ArxModel) -> DiscreteStateSpace:
    """Block observer-form realization with m * max_lag states."""
    m, p = model.n_outputs, model.n_inputs
    n = model.max_lag
    Ab = np.zeros((n + 1, m, m))
    Ab[: model.na + 1] = model.a_poly()
    Bb = np.zeros((n + 1, m, p))
    bp = model.b_poly()
    Bb[: len(bp)] = bp
    D = Bb[0]
    A = np.zeros((n * m, n * m))
    B = np.zeros((n * m, p))
    for i in range(1, n + 1):
        r = slice((i - 1) * m, i * m)
        A[r, :m] = -Ab[i]
        if i < n:
            A[r, i * m : (i + 1) * m] = np.eye(m)
        B[r] = Bb[i] - Ab[i] @ D
    C = np.zeros((m, n * m))
    if n:
        C[:, :m] = np.eye(m)
    return DiscreteStateSpace(A, B, C, D, model.dt, meta={"source": "arx"})


def _reachable_basis(A, B, tol):
    """Orthonormal basis of the controllable subspace by an orthogonal staircase.

    Each step keeps the directions of A * (newest block) not yet spanned whose
    singular values exceed tol * ||[A B]||.
    """
    n = A.shape[0]
    scale = max(np.linalg.norm(A, 2), np.linalg.norm(B, 2))
    if scale == 0:
        return np.zeros((n, 0))
    Q = np.zeros((n, 0))
    V = B
    while Q.shape[1] < n:
        for _ in range(2):  # re-orthogonalize
            V = V - Q @ (Q.T @ V)
        U, s, _ = np.linalg.svd(V, full_matrices=False)
        r = int(np.sum(s > tol * scale))
        if r == 0:
            break
        Q = np.hstack([Q, U[:, :r]])
        V = A @ U[:, :r]
    return Q


def minimal_order(ss, tol=1e-8):
    """Dimension of the controllable and observable part (Kalman decomposition rank tests)."""
    A, B, C = np.asarray(ss.A), np.asarray(ss.B), np.asarray(ss.C)
    if A.shape[0] == 0:
        return 0
    Q = _reachable_basis(A, B, tol)
    if Q.shape[1] == 0:
        return 0
    Ar, Cr = Q.T @ A @ Q, C @ Q
    return _reachable_basis(Ar.T, Cr.T, tol).shape[1]


def d2c(ss: DiscreteStateSpace, method="bilinear") -> ContinuousStateSpace:
    T = ss.dt
    Ad, Bd, Cd, Dd = ss.A, ss.B, ss.C, ss.D
    n = Ad.shape[0]
    lam = np.linalg.eigvals(Ad) if n else np.zeros(0)
    if method == "bilinear":
        bad = np.abs(lam + 1.0) < 1e-10
        if np.any(bad):
            raise ConversionError("eigenvalue of A_d at -1", complex(lam[bad][0]))
        E = np.linalg.inv(Ad + np.eye(n))
        Ac = (2.0 / T) * E @ (Ad - np.eye(n))
        Bc = (4.0 / T) * E @ E @ Bd
        Cc = Cd
        Dc = Dd - Cd @ E @ Bd
    elif method == "matrix_log":
        bad = (np.abs(lam.imag) <= 1e-12 * np.maximum(1.0, np.abs(lam))) & (lam.real <= 0)
        if np.any(bad):
            raise ConversionError("eigenvalue of A_d on the closed negative real axis", complex(lam[bad][0]))
        p = Bd.shape[1]
        M = np.zeros((n + p, n + p))
        M[:n, :n] = Ad
        M[:n, n:] = Bd
        M[n:, n:] = np.eye(p)
        L = scipy.linalg.logm(M)
        if np.iscomplexobj(L):
            if np.max(np.abs(L.imag)) > 1e-8 * max(1.0, np.max(np.abs(L.real))):
                raise ConversionError("matrix logarithm is not real")
            L = L.real
        L = L / T
        Ac, Bc, Cc, Dc = L[:n, :n], L[:n, n:], Cd, Dd
    else:
        raise InvalidArgument(f"unknown d2c method {method!r}")
    return ContinuousStateSpace(Ac, Bc, Cc, Dc, ss.input_labels, ss.output_labels, meta=dict(ss.meta))


def frequency_response(model, freqs, source=None) -> FrequencyResponse:
    freqs = np.asarray(freqs, dtype=float)
    if isinstance(model, ContinuousStateSpace):
        Z = np.array([model.evaluate(2j * np.pi * f) for f in freqs])
        src = source or model.meta.get("source", ResponseSource.ANALYTIC)
        return FrequencyResponse(freqs, Z, src)
    if isinstance(model, (ArxModel, DiscreteStateSpace, DiscreteTransferMatrix)):
        nyq = 0.5 / model.dt
        if np.any(freqs >= nyq):
            raise InvalidArgument(f"frequencies must lie below the Nyquist frequency {nyq} Hz")
        Z = np.array([model.evaluate(np.exp(2j * np.pi * f * model.dt)) for f in freqs])
        default = ResponseSource.SUBSPACE if isinstance(model, DiscreteStateSpace) else ResponseSource.ARX
        src = source or getattr(model, "meta", {}).get("source", default)
        return FrequencyResponse(freqs, Z, src, {"dt": model.dt})
    raise InvalidArgument(f"cannot evaluate a {type(model).__name__}")
