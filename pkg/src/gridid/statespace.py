"""Continuous and discrete MIMO state-space models."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import InvalidArgument


def _mat(x, rows=None, cols=None):
    a = np.atleast_2d(np.array(x, dtype=float, copy=True))
    if rows is not None and a.shape[0] != rows:
        raise InvalidArgument(f"expected {rows} rows, got shape {a.shape}")
    if cols is not None and a.shape[1] != cols:
        raise InvalidArgument(f"expected {cols} columns, got shape {a.shape}")
    a.setflags(write=False)
    return a


def _check_dims(obj):
    A = _mat(obj.A)
    n = A.shape[0]
    if A.shape != (n, n):
        raise InvalidArgument(f"A must be square, got {A.shape}")
    B = _mat(obj.B, rows=n) if n else _mat(obj.B)
    C = _mat(obj.C, cols=n) if n else _mat(obj.C)
    D = _mat(obj.D, rows=C.shape[0], cols=B.shape[1])
    for name, val in zip("ABCD", (A, B, C, D)):
        object.__setattr__(obj, name, val)
    p, m = B.shape[1], C.shape[0]
    if not obj.input_labels:
        object.__setattr__(obj, "input_labels", tuple(f"u{j}" for j in range(p)))
    if not obj.output_labels:
        object.__setattr__(obj, "output_labels", tuple(f"y{i}" for i in range(m)))
    object.__setattr__(obj, "input_labels", tuple(obj.input_labels))
    object.__setattr__(obj, "output_labels", tuple(obj.output_labels))
    if len(obj.input_labels) != p or len(obj.output_labels) != m:
        raise InvalidArgument("label count does not match model dimensions")


@dataclass(frozen=True)
class ContinuousStateSpace:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    input_labels: tuple = ()
    output_labels: tuple = ()
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        _check_dims(self)

    @property
    def n_states(self):
        return self.A.shape[0]

    @property
    def shape(self):
        """(outputs, inputs)"""
        return self.D.shape

    def poles(self):
        return np.linalg.eigvals(self.A)

    def is_hurwitz(self):
        return bool(np.all(self.poles().real < 0))

    def dc_gain(self):
        return self.D - self.C @ np.linalg.solve(self.A, self.B)

    def evaluate(self, s):
        """Transfer matrix C (sI - A)^-1 B + D at complex frequency s."""
        n = self.n_states
        return self.C @ np.linalg.solve(s * np.eye(n) - self.A, self.B) + self.D


@dataclass(frozen=True)
class DiscreteStateSpace:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    dt: float = 1.0
    input_labels: tuple = ()
    output_labels: tuple = ()
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        _check_dims(self)
        if not self.dt > 0:
            raise InvalidArgument("dt must be positive")

    @property
    def n_states(self):
        return self.A.shape[0]

    @property
    def shape(self):
        return self.D.shape

    def poles(self):
        return np.linalg.eigvals(self.A)

    def is_stable(self):
        return bool(np.all(np.abs(self.poles()) < 1.0))

    def evaluate(self, z):
        n = self.n_states
        return self.C @ np.linalg.solve(z * np.eye(n) - self.A, self.B) + self.D

    def markov(self, k):
        """k-th Markov parameter: D for k = 0, C A^(k-1) B otherwise."""
        if k == 0:
            return np.array(self.D)
        return self.C @ np.linalg.matrix_power(self.A, k - 1) @ self.B

    def simulate(self, u, x0=None):
        """Outputs y(k) = C x(k) + D u(k) for inputs ``u`` of shape (N, p)."""
        u = np.atleast_2d(np.asarray(u, dtype=float))
        if u.shape[0] == 1 and u.shape[1] != self.B.shape[1]:
            u = u.T
        x = np.zeros(self.n_states) if x0 is None else np.array(x0, dtype=float)
        X = run_recursion(self.A, u @ self.B.T, x)
        return X @ self.C.T + u @ self.D.T


def run_recursion(Phi, g, x0):
    """States x(0..N-1) of x(k+1) = Phi x(k) + g(k)."""
    N = g.shape[0]
    X = np.empty((N, len(x0)))
    x = np.array(x0, dtype=float)
    Phi = np.ascontiguousarray(Phi)
    for k in range(N):
        X[k] = x
        x = Phi @ x + g[k]
    return X


def zoh_matrices(A, B, dt):
    """Exact zero-order-hold pair (expm(A dt), int_0^dt expm(A s) ds B).

    Uses the augmented-matrix exponential, valid for singular A as well.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    n, p = A.shape[0], B.shape[1]
    M = np.zeros((n + p, n + p))
    M[:n, :n] = A
    M[:n, n:] = B
    E = scipy.linalg.expm(M * dt)
    return E[:n, :n], E[:n, n:]


def discretize_zoh(ss: ContinuousStateSpace, dt) -> DiscreteStateSpace:
    if not dt > 0:
        raise InvalidArgument("dt must be positive")
    Ad, Bd = zoh_matrices(ss.A, ss.B, dt)
    return DiscreteStateSpace(Ad, Bd, ss.C, ss.D, dt, ss.input_labels, ss.output_labels)
