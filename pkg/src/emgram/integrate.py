"""Fixed-step time integration of input-output systems.

The default integrator is the optimal second-order strong stability
preserving explicit Runge-Kutta family SSP(s,2) in low-storage form.  With ``s`` stages it takes ``s - 1`` forward Euler
substeps of width ``h / (s - 1)`` and finishes with one convex combination;
``s = 3`` (SSP32) is the default.  The stable step size on the negative
real axis grows with the number of stages.

Trajectories keep the ``t = 0`` sample, so a grid with ``K`` steps yields
``K + 1`` columns.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, GridError, SolverDivergenceError
from .model import as_model

DEFAULT_STAGES = 3


@dataclass(frozen=True)
class TimeGrid:
    """Uniform time grid ``0, h, ..., K h`` with ``K = round(T / h)``."""

    h: float
    T: float

    def __post_init__(self):
        h, T = float(self.h), float(self.T)
        if not (np.isfinite(h) and h > 0):
            raise GridError(f"time step must be positive, got h={self.h}")
        if not (np.isfinite(T) and T > h):
            raise GridError(f"horizon must exceed the time step, got T={self.T}, h={self.h}")
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "T", T)

    @property
    def steps(self):
        return int(round(self.T / self.h))

    @property
    def times(self):
        """All ``K + 1`` sample times, including ``t = 0``."""
        return np.arange(self.steps + 1) * self.h

    @property
    def quadrature_times(self):
        """The ``K`` right-hand sample times used by the rectangle rule."""
        return np.arange(1, self.steps + 1) * self.h


def _input_table(u, M, R, K):
    """Normalize an input specification into an ``(M, R, K)`` table."""
    if hasattr(u, "table"):
        tab = u.table()
    elif callable(u):
        raise TypeError("pass an InputSignal or a sampled table, not a bare callable")
    else:
        tab = np.asarray(u, dtype=float)
    if tab.ndim == 2:
        if tab.shape != (M, K):
            raise DimensionError(f"input table has shape {tab.shape}, expected {(M, K)}")
        return np.broadcast_to(tab[:, None, :], (M, R, K))
    if tab.shape != (M, R, K):
        raise DimensionError(f"input table has shape {tab.shape}, expected {(M, R, K)}")
    return tab


def ssp_rk(f, g, grid, x0, u, p, stages=DEFAULT_STAGES):
    """Integrate with the low-storage SSP(s,2) Runge-Kutta method.

    Parameters
    ----------
    f, g : callable
        Vector field and output functional with signature
        ``(x, u, p, t)``; both are called with column batches.
    grid : TimeGrid
    x0 : ndarray, shape (N, R)
        Initial states of ``R`` simultaneous runs.
    u : ndarray, shape (M, R, K)
        Input values, held constant over each step.
    p : ndarray, shape (P, R)
    stages : int
        Number of stages ``s >= 2``.

    Returns
    -------
    ndarray, shape (d, R, K + 1)
        Output samples at every grid time including ``t = 0``.
    """
    stages = int(stages)
    if stages < 2:
        raise ValueError(f"stages must be at least 2, got {stages}")
    h = grid.h
    K = grid.steps
    sub = h / (stages - 1)
    inv_s = 1.0 / stages

    x = np.array(x0, dtype=float)
    y = np.asarray(g(x, u[:, :, 0], p, 0.0))
    out = np.empty((y.shape[0],) + x.shape[1:] + (K + 1,))
    out[..., 0] = y
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(K):
            t = k * h
            uk = u[:, :, k]
            xk = x.copy()
            for i in range(stages - 1):
                x += sub * f(x, uk, p, t + i * sub)
            # x_{k+1} = (x_k + (s-1) (x + h/(s-1) f(x))) / s, arranged so that
            # components with zero derivative are carried over exactly
            xk -= x
            xk += h * f(x, uk, p, t + h)
            xk *= inv_s
            x += xk
            if not np.isfinite(x).all():
                bad = ~np.isfinite(x).reshape(x.shape[0], -1).all(axis=0)
                raise SolverDivergenceError(k, column=int(np.flatnonzero(bad)[0]))
            out[..., k + 1] = g(x, u[:, :, min(k + 1, K - 1)], p, t + h)
    return out


def _ssp_step_matrices(A, h, stages):
    """Closed form ``x' = Phi x + G b`` of one SSP(s,2) step for ``f = A x + b``.

    Obtained by running the stage recursion on identity columns.
    """
    N = A.shape[0]
    sub = h / (stages - 1)

    def step(x, b):
        xk = x.copy()
        for _ in range(stages - 1):
            x = x + sub * (A @ x + b)
        return x + (xk - x + h * (A @ x + b)) / stages

    eye, zero = np.eye(N), np.zeros((N, N))
    return step(eye, zero), step(zero, eye)


def ssp_affine(parts, grid, x0, u, p, stages=DEFAULT_STAGES):
    """SSP(s,2) integration of an affine model via its step matrices.

    Equivalent to :func:`ssp_rk` up to rounding, but each step costs a single
    matrix product.  Returns ``None`` when the model has a gain parameter
    that varies across the batch; the caller then uses :func:`ssp_rk`.
    """
    A, B = parts.A, parts.B
    N, R = x0.shape
    K = grid.steps
    if parts.gain:
        theta = p[0]
        if not np.all(theta == theta[0]):
            return None
        A, B = theta[0] * A, theta[0] * B
    Phi, G = _ssp_step_matrices(A, grid.h, int(stages))
    # drive term per step, time-major (K, N, R)
    Ut = np.moveaxis(np.asarray(u, dtype=float), 2, 0)
    drive = np.matmul(B, Ut) if B.shape[1] else np.zeros((K, N, R))
    if parts.F is not None and not parts.gain:
        drive = drive + (parts.F @ p)[None]
    drive = np.matmul(G, drive)
    X = np.empty((K + 1, N, R))
    X[0] = x0
    with np.errstate(all="ignore"):
        for k in range(K):
            np.matmul(Phi, X[k], out=X[k + 1])
            X[k + 1] += drive[k]
    finite = np.isfinite(X).reshape(K + 1, -1)
    if not finite.all():
        bad = np.flatnonzero(~finite.all(axis=1))[0]
        col = np.flatnonzero(~np.isfinite(X[bad]).all(axis=0))[0]
        raise SolverDivergenceError(int(bad) - 1, column=int(col))
    Y = X if parts.C is None else np.matmul(parts.C, X)
    return np.ascontiguousarray(np.moveaxis(Y, 0, 2))


def solve(sys, grid, x0, u, p=None, *, stages=DEFAULT_STAGES, solver=None):
    """Simulate ``sys`` and return its output trajectory.

    ``x0`` may be a single state vector, giving a ``(Q, K + 1)`` result, or
    an ``(N, R)`` batch of initial states, giving ``(Q, R, K + 1)``.  ``u``
    is an :class:`~emgram.signals.InputSignal` or a sampled table of shape
    ``(M, K)`` or ``(M, R, K)``; ``p`` is a parameter vector or ``(P, R)``
    batch.

    Models converted from a :class:`~emgram.model.LinearSystem` use the
    closed-form affine path :func:`ssp_affine` of the same scheme.

    A custom ``solver`` with the signature ``solver(f, g, grid, x0, u, p)``
    replaces the default SSP integrator and receives the same batched
    arguments; its result is returned unmodified.
    """
    sys = as_model(sys)
    x0 = np.asarray(x0, dtype=float)
    single = x0.ndim == 1
    X0 = x0[:, None] if single else x0
    if X0.shape[0] != sys.N:
        raise DimensionError(f"initial state has {X0.shape[0]} rows, expected {sys.N}")
    R = X0.shape[1]
    U = _input_table(u, sys.M, R, grid.steps)
    if p is None:
        p = np.zeros(sys.P)
    p = np.asarray(p, dtype=float)
    Pm = np.broadcast_to(p.reshape(sys.P, 1), (sys.P, R)) if p.ndim <= 1 else p
    if Pm.shape != (sys.P, R):
        raise DimensionError(f"parameter has shape {p.shape}, expected ({sys.P}, {R})")

    traj = None
    if solver is None and sys.affine is not None:
        traj = ssp_affine(sys.affine, grid, X0, U, Pm, stages)
    if traj is not None:
        pass
    elif solver is None:
        traj = ssp_rk(sys.eval_f, sys.eval_g, grid, X0, U, Pm, stages)
    else:
        traj = np.asarray(solver(sys.eval_f, sys.eval_g, grid, X0, U, Pm))
    return traj[:, 0, :] if single and traj.ndim == 3 else traj
