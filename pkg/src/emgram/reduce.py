"""Projection-based reduced-order models from Gramians.

The reduced model lives on the affine subspace ``x = x_bar + U1 x_r`` and
is tested with ``V1`` (``V1^T U1 = I``); parameters are reduced the same way
with ``theta = theta_bar + Pi1 theta_r``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ConfigError, DimensionError, RankDeficiencyError
from .linalg import sqrt_psd, svd
from .model import LinearSystem, SystemModel, as_model

RANK_TOL = 1e-14


@dataclass(frozen=True)
class RomProjection:
    """Trial and test bases of a state (and optional parameter) reduction.

    Attributes
    ----------
    U1, V1 : ndarray, shape (N, n)
        Trial and test bases with ``V1^T U1 = I``.
    singular_values : ndarray
        All singular values of the decomposed Gramian, descending.
    x_bar : ndarray, shape (N,)
        Expansion point of the state.
    Pi1, Lambda1 : ndarray, shape (P, p), optional
        Parameter trial and test bases.
    theta_bar : ndarray, shape (P,), optional
    """

    U1: np.ndarray
    V1: np.ndarray
    singular_values: np.ndarray
    x_bar: Optional[np.ndarray] = None
    Pi1: Optional[np.ndarray] = None
    Lambda1: Optional[np.ndarray] = None
    theta_bar: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.U1.shape != self.V1.shape:
            raise DimensionError(f"U1 {self.U1.shape} and V1 {self.V1.shape} differ")
        N = self.U1.shape[0]
        xb = np.zeros(N) if self.x_bar is None else np.asarray(self.x_bar, float).reshape(-1)
        if xb.shape != (N,):
            raise DimensionError(f"x_bar has {xb.size} entries, expected {N}")
        object.__setattr__(self, "x_bar", xb)
        if self.Pi1 is not None:
            lam = self.Pi1 if self.Lambda1 is None else self.Lambda1
            if lam.shape != self.Pi1.shape:
                raise DimensionError("Pi1 and Lambda1 differ in shape")
            object.__setattr__(self, "Lambda1", lam)
            P = self.Pi1.shape[0]
            tb = np.zeros(P) if self.theta_bar is None else np.asarray(self.theta_bar, float).reshape(-1)
            if tb.shape != (P,):
                raise DimensionError(f"theta_bar has {tb.size} entries, expected {P}")
            object.__setattr__(self, "theta_bar", tb)

    @property
    def order(self):
        return self.U1.shape[1]

    @property
    def parameter_order(self):
        return None if self.Pi1 is None else self.Pi1.shape[1]

    def with_parameters(self, Pi1, Lambda1=None, theta_bar=None):
        """Copy of this projection with a parameter reduction attached."""
        return RomProjection(self.U1, self.V1, self.singular_values, self.x_bar,
                             Pi1, Lambda1, theta_bar)

    def truncate(self, n):
        """Projection restricted to the leading ``n`` basis vectors."""
        _check_order(n, self.order)
        return RomProjection(self.U1[:, :n], self.V1[:, :n], self.singular_values, self.x_bar,
                             self.Pi1, self.Lambda1, self.theta_bar)

    def reduce_state(self, x):
        """Reduced coordinates ``V1^T (x - x_bar)``."""
        return self.V1.T @ (np.asarray(x, float) - self.x_bar)

    def reduce_parameter(self, theta):
        """Reduced parameter ``Lambda1^T (theta - theta_bar)``."""
        theta = np.asarray(theta, float)
        if self.Pi1 is None:
            return theta
        off = self.theta_bar if theta.ndim == 1 else self.theta_bar[:, None]
        return self.Lambda1.T @ (theta - off)


def _check_order(n, N):
    if int(n) != n or not 1 <= n <= N:
        raise ConfigError(f"reduced order must be in 1..{N}, got {n}")


def _check_rank(S, n):
    if S[0] == 0.0 or S[n - 1] < RANK_TOL * S[0]:
        raise RankDeficiencyError(f"singular value {n} is numerically zero "
                                  f"({S[n - 1]:.3e} vs {S[0]:.3e}); choose a smaller order")


def balance_square_root(WC, WO, n, x_bar=None):
    """Square-root balanced truncation.

    With symmetric square roots ``S_C``, ``S_O`` and the SVD
    ``S_C S_O = U D V^T`` the bases are ``U1 = S_C U_n D_n^{-1/2}`` and
    ``V1 = S_O V_n D_n^{-1/2}``; ``diag(D)`` are the Hankel singular values.
    """
    WC = np.asarray(WC, float)
    WO = np.asarray(WO, float)
    if WC.shape != WO.shape or WC.shape[0] != WC.shape[1]:
        raise DimensionError(f"Gramian shapes {WC.shape} and {WO.shape} do not match")
    _check_order(n, WC.shape[0])
    SC, SO = sqrt_psd(WC), sqrt_psd(WO)
    U, D, V = svd(SC @ SO)
    _check_rank(D, n)
    scale = 1.0 / np.sqrt(D[:n])
    U1 = SC @ U[:, :n] * scale
    V1 = SO @ V[:, :n] * scale
    return RomProjection(U1, V1, D, x_bar)


def direct_truncation(WX, n, x_bar=None):
    """Galerkin projection onto the leading left singular vectors of ``WX``."""
    WX = np.asarray(WX, float)
    _check_order(n, WX.shape[0])
    U, D, _ = svd(WX)
    U1 = np.ascontiguousarray(U[:, :n])
    return RomProjection(U1, U1.copy(), D, x_bar)


def parameter_projection(omega, p, check_rank=True):
    """Leading left singular vectors of a parameter Gramian.

    A vector ``omega`` (a sensitivity diagonal) is promoted to a diagonal
    matrix.  Returns ``(Pi1, Lambda1)`` with ``Lambda1 = Pi1``.  With
    ``check_rank=False`` orders beyond the numerical rank are allowed; the
    extra directions then complete the basis arbitrarily.
    """
    omega = np.asarray(omega, float)
    if omega.ndim == 1:
        omega = np.diag(omega)
    if omega.shape[0] != omega.shape[1]:
        raise DimensionError(f"parameter Gramian must be square, got {omega.shape}")
    _check_order(p, omega.shape[0])
    U, D, _ = svd(omega)
    if check_rank:
        _check_rank(D, p)
    Pi1 = np.ascontiguousarray(U[:, :p])
    return Pi1, Pi1.copy()


def build_rom(sys, proj):
    """Reduced model ``x_r' = V1^T f(x_bar + U1 x_r, u, theta_bar + Pi1 theta_r, t)``.

    The output is ``g`` evaluated at the lifted state and parameter.  The
    reduced steady state is ``V1^T (x_steady - x_bar)``.
    """
    sys = as_model(sys)
    U1, V1, xb = proj.U1, proj.V1, proj.x_bar
    if U1.shape[0] != sys.N:
        raise DimensionError(f"projection has {U1.shape[0]} rows, system has {sys.N} states")
    Pi1, tb = proj.Pi1, proj.theta_bar
    if Pi1 is not None and Pi1.shape[0] != sys.P:
        raise DimensionError(f"parameter projection has {Pi1.shape[0]} rows, system has {sys.P}")
    V1t = np.ascontiguousarray(V1.T)
    n = U1.shape[1]
    P = sys.P if Pi1 is None else Pi1.shape[1]

    def lift(xr):
        return (U1 @ xr) + (xb if xr.ndim == 1 else xb[:, None])

    def lift_p(pr):
        if Pi1 is None:
            return pr
        return (Pi1 @ pr) + (tb if pr.ndim == 1 else tb[:, None])

    def f(xr, u, pr, t):
        return V1t @ sys.eval_f(lift(xr), u, lift_p(pr), t)

    if sys.identity_output:
        def g(xr, u, pr, t):
            return lift(xr)
    else:
        def g(xr, u, pr, t):
            return sys.eval_g(lift(xr), u, lift_p(pr), t)

    return SystemModel(f, g, sys.M, n, sys.Q, P, x_steady=proj.reduce_state(sys.x_steady),
                       u_steady=sys.u_steady, vectorized=True)


def project_linear(sys, proj):
    """Reduced linear system ``(V1^T A U1, V1^T B, C U1)``.

    Requires a zero expansion point; a parameter projection maps the
    parameter input matrix to ``V1^T F Pi1``.
    """
    if not isinstance(sys, LinearSystem):
        raise ConfigError("project_linear needs a LinearSystem")
    if np.any(proj.x_bar != 0) or (proj.theta_bar is not None and np.any(proj.theta_bar != 0)):
        raise ConfigError("project_linear requires zero expansion points")
    U1, V1 = proj.U1, proj.V1
    F = sys.F
    if F is not None and not sys.gain:
        F = V1.T @ F
        if proj.Pi1 is not None:
            F = F @ proj.Pi1
    x0 = V1.T @ sys.x_steady
    return LinearSystem(V1.T @ sys.A @ U1, V1.T @ sys.B, sys.C @ U1, F, gain=sys.gain, x_steady=x0)


def l2_error(y, y_tilde, grid):
    """Rectangle-rule L2 norm of ``y - y_tilde`` over ``(Q, K)`` samples.

    Trajectories with ``K + 1`` columns drop the ``t = 0`` sample first.
    """
    y = np.asarray(y, float)
    y_tilde = np.asarray(y_tilde, float)
    if y.shape != y_tilde.shape:
        raise DimensionError(f"trajectory shapes differ: {y.shape} vs {y_tilde.shape}")
    e = y - y_tilde
    if e.shape[-1] == grid.steps + 1:
        e = e[..., 1:]
    return float(np.sqrt(grid.h * np.sum(e * e)))


def l2l2_error(errors, volume=1.0):
    """Monte-Carlo L2 norm over parameter samples of per-sample L2 errors."""
    e = np.asarray(errors, float).reshape(-1)
    if e.size == 0:
        raise ConfigError("need at least one parameter sample")
    return float(np.sqrt(np.mean(e * e) * volume))


def bt_bound(sigma, n, u_norm=1.0):
    """Balanced-truncation error bound ``2 ||u|| sum_{k > n} sigma_k``."""
    sigma = np.asarray(sigma, float)
    return float(2.0 * u_norm * np.sum(sigma[n:]))
