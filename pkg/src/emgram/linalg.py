"""Dense linear algebra helpers.

Besides thin wrappers around LAPACK (SVD, symmetric square root), this module
holds the cheap approximate inverse used for Schur complements and two
Kronecker-product solvers for Lyapunov and Sylvester equations.  The latter
are brute force on purpose: they serve as independent oracles in tests and
are limited to small dimensions.
"""

import warnings

import numpy as np
import scipy.linalg

from .errors import (ConfigError, DimensionError, IndefiniteError, NotSymmetricError,
                     NumericalError, SingularDiagonalError)

PSD_CLAMP = 1e-10
ORACLE_MAX_N = 64


def _finite_2d(a, name="matrix"):
    a = np.asarray(a, dtype=float)
    if a.ndim != 2:
        a = np.atleast_2d(a)
    if not np.isfinite(a).all():
        raise NumericalError(f"{name} has non-finite entries")
    return a


def fix_signs(U, V=None):
    """Flip singular vector pairs so each column of ``U`` has its
    largest-magnitude entry positive."""
    U = np.array(U)
    if U.size == 0:
        return (U, V) if V is not None else U
    idx = np.argmax(np.abs(U), axis=0)
    s = np.sign(U[idx, np.arange(U.shape[1])])
    s[s == 0] = 1.0
    U *= s
    if V is None:
        return U
    V = np.array(V)
    V[:, :U.shape[1]] *= s
    return U, V


def svd(mat):
    """Singular value decomposition ``mat = U diag(S) V^T``.

    Singular values come out descending, and signs are normalized with
    :func:`fix_signs` so results are reproducible across runs.  Returns
    ``(U, S, V)`` with ``V`` (not its transpose).
    """
    mat = _finite_2d(mat)
    U, S, Vt = scipy.linalg.svd(mat, full_matrices=False, lapack_driver="gesdd")
    U, V = fix_signs(U, Vt.T)
    return U, S, V


def sqrt_psd(W, tol=PSD_CLAMP):
    """Symmetric square root of a symmetric positive semi-definite matrix.

    Eigenvalues down to ``-tol * ||W||`` are clamped to zero; anything more
    negative is rejected.
    """
    W = _finite_2d(W)
    if W.shape[0] != W.shape[1]:
        raise DimensionError(f"expected a square matrix, got {W.shape}")
    scale = np.linalg.norm(W, 2) if W.size else 0.0
    if scale == 0.0:
        return np.zeros_like(W)
    if np.linalg.norm(W - W.T) > tol * np.linalg.norm(W):
        raise NotSymmetricError("matrix is not symmetric")
    lam, U = np.linalg.eigh(0.5 * (W + W.T))
    if lam.min() < -tol * scale:
        raise IndefiniteError(f"matrix has negative eigenvalue {lam.min():.3e}")
    lam = np.clip(lam, 0.0, None)
    return (U * np.sqrt(lam)) @ U.T


def approx_inverse(A):
    """First-order approximate inverse ``D^-1 - D^-1 E D^-1``.

    ``D`` is the diagonal of ``A`` and ``E = A - D``.  Costs O(N^2) and is
    exact for diagonal matrices.
    """
    A = _finite_2d(A)
    if A.shape[0] != A.shape[1]:
        raise DimensionError(f"expected a square matrix, got {A.shape}")
    d = np.diag(A).copy()
    zero = np.flatnonzero(d == 0.0)
    if zero.size:
        raise SingularDiagonalError(int(zero[0]))
    dinv = 1.0 / d
    E = A - np.diag(d)
    return np.diag(dinv) - dinv[:, None] * E * dinv[None, :]


def diagonal_inverse(A):
    """Inverse of the diagonal part of ``A``."""
    A = _finite_2d(A)
    d = np.diag(A).copy()
    zero = np.flatnonzero(d == 0.0)
    if zero.size:
        raise SingularDiagonalError(int(zero[0]))
    return np.diag(1.0 / d)


def _kron_solve(op, rhs):
    try:
        with warnings.catch_warnings():
            # singularity is detected from the pivots below
            warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
            lu = scipy.linalg.lu_factor(op, check_finite=True)
    except (ValueError, np.linalg.LinAlgError) as exc:
        raise NumericalError(f"Kronecker system could not be factorized: {exc}") from None
    piv = np.abs(np.diag(lu[0]))
    if piv.min() <= 1e-13 * max(piv.max(), 1.0):
        raise NumericalError("singular Kronecker system: eigenvalue pair sums to zero")
    return scipy.linalg.lu_solve(lu, rhs)


def lyapunov_oracle(A, Q):
    """Solve ``A W + W A^T + Q = 0`` by Kronecker vectorization (N <= 64)."""
    A = _finite_2d(A, "A")
    Q = _finite_2d(Q, "Q")
    N = A.shape[0]
    if N > ORACLE_MAX_N:
        raise ConfigError(f"oracle limited to N <= {ORACLE_MAX_N}, got {N}")
    I = np.eye(N)
    op = np.kron(I, A) + np.kron(A, I)
    w = _kron_solve(op, -Q.reshape(-1, order="F"))
    return w.reshape(N, N, order="F")


def sylvester_oracle(A, B, C):
    """Solve ``A W + W A + B C = 0`` by Kronecker vectorization (N <= 64)."""
    A = _finite_2d(A, "A")
    BC = _finite_2d(B, "B") @ _finite_2d(C, "C")
    N = A.shape[0]
    if N > ORACLE_MAX_N:
        raise ConfigError(f"oracle limited to N <= {ORACLE_MAX_N}, got {N}")
    I = np.eye(N)
    op = np.kron(I, A) + np.kron(A.T, I)
    w = _kron_solve(op, -BC.reshape(-1, order="F"))
    return w.reshape(N, N, order="F")
