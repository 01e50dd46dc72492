"""Input-output system representations.

A :class:`SystemModel` wraps a vector field ``f(x, u, p, t)`` and an output
functional ``g(x, u, p, t)``.  All simulation code in this package works on
column batches: ``x`` is ``(N, R)``, ``u`` is ``(M, R)`` and ``p`` is
``(P, R)`` for ``R`` simultaneous runs.  Models flagged ``vectorized`` accept
such batches directly; for the others, :meth:`SystemModel.eval_f` loops over
the columns and calls ``f`` with plain vectors.

The callables must be re-entrant, since the Gramian assembly may evaluate
them from several threads at once.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .errors import AugmentationError, DimensionError, NonSquareError


class _Identity:
    """Marker for the identity output functional ``g(x, u, p, t) = x``."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "IDENTITY"

    def __reduce__(self):
        return (_Identity, ())


IDENTITY = _Identity()


def _frozen(a, shape=None):
    a = np.array(a, dtype=float)
    if shape is not None:
        a = np.broadcast_to(a, shape).copy()
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class AffineParts:
    """Matrices of a model whose vector field is ``A x + B u (+ F p)``.

    Attached to models converted from :class:`LinearSystem` so the
    integrator can take its closed-form affine path.  ``C is None`` means
    identity output.
    """

    A: np.ndarray
    B: np.ndarray
    C: Optional[np.ndarray] = None
    F: Optional[np.ndarray] = None
    gain: bool = False


@dataclass(frozen=True)
class SystemModel:
    """Nonlinear parametric input-output system.

    Parameters
    ----------
    f : callable
        Vector field ``f(x, u, p, t)`` returning ``N`` components.
    g : callable or IDENTITY
        Output functional; ``IDENTITY`` (or ``None``) means ``y = x``.
    M, N, Q, P : int
        Input, state, output and parameter dimensions.
    x_steady, u_steady : array_like, optional
        Steady state and steady input (default zero).
    vectorized : bool
        Whether ``f`` and ``g`` accept column batches.
    affine : AffineParts, optional
        Matrix form of ``f`` and ``g`` when they are affine; set by
        :meth:`LinearSystem.to_model`.
    """

    f: Callable
    g: object
    M: int
    N: int
    Q: int
    P: int = 0
    x_steady: np.ndarray = None
    u_steady: np.ndarray = None
    vectorized: bool = False
    affine: Optional[AffineParts] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        g = IDENTITY if self.g is None else self.g
        object.__setattr__(self, "g", g)
        for name in ("M", "N", "Q", "P"):
            v = getattr(self, name)
            if int(v) != v or v < 0:
                raise DimensionError(f"{name} must be a non-negative integer, got {v!r}")
            object.__setattr__(self, name, int(v))
        if self.N < 1:
            raise DimensionError("state dimension N must be at least 1")
        if g is IDENTITY and self.Q != self.N:
            raise DimensionError(f"identity output requires Q == N, got Q={self.Q}, N={self.N}")
        xs = 0.0 if self.x_steady is None else self.x_steady
        us = 0.0 if self.u_steady is None else self.u_steady
        try:
            object.__setattr__(self, "x_steady", _frozen(xs, (self.N,)))
            object.__setattr__(self, "u_steady", _frozen(us, (self.M,)))
        except ValueError as exc:
            raise DimensionError(f"steady state/input has wrong shape: {exc}") from None

    @property
    def dims(self):
        return (self.M, self.N, self.Q, self.P)

    @property
    def identity_output(self):
        return self.g is IDENTITY

    def replace(self, **changes):
        kw = dict(f=self.f, g=self.g, M=self.M, N=self.N, Q=self.Q, P=self.P,
                  x_steady=self.x_steady, u_steady=self.u_steady,
                  vectorized=self.vectorized, affine=self.affine)
        aff = self.affine
        if aff is not None and "affine" not in changes:
            if changes.keys() & {"f", "M", "N", "P", "vectorized"}:
                aff = None
            elif "g" in changes:
                g = changes["g"]
                aff = AffineParts(aff.A, aff.B, None, aff.F, aff.gain) if g is IDENTITY or g is None else None
            kw["affine"] = aff
        kw.update(changes)
        return SystemModel(**kw)

    def _call(self, fun, rows, x, u, p, t, what):
        if x.ndim == 1:
            out = np.asarray(fun(x, u, p, t), dtype=float).reshape(-1)
            if out.shape != (rows,):
                raise DimensionError(f"{what} returned {out.shape[0]} components, expected {rows}")
            return out
        if self.vectorized:
            out = np.asarray(fun(x, u, p, t), dtype=float)
            if out.shape != (rows, x.shape[1]):
                if out.size == rows * x.shape[1]:
                    return out.reshape(rows, x.shape[1])
                raise DimensionError(f"{what} returned shape {out.shape}, expected {(rows, x.shape[1])}")
            return out
        out = np.empty((rows, x.shape[1]))
        for r in range(x.shape[1]):
            col = np.asarray(fun(x[:, r], u[:, r], p[:, r], t), dtype=float).reshape(-1)
            if col.shape != (rows,):
                raise DimensionError(f"{what} returned {col.shape[0]} components, expected {rows}")
            out[:, r] = col
        return out

    def eval_f(self, x, u, p, t):
        """Evaluate the vector field on a vector or a column batch."""
        return self._call(self.f, self.N, x, u, p, t, "f")

    def eval_g(self, x, u, p, t):
        """Evaluate the output functional on a vector or a column batch."""
        if self.g is IDENTITY:
            return x
        return self._call(self.g, self.Q, x, u, p, t, "g")

    def output_steady(self, p=None, t=0.0):
        """Output at the steady state and steady input."""
        p = np.zeros(self.P) if p is None else np.asarray(p, dtype=float).reshape(-1)
        return np.array(self.eval_g(self.x_steady, self.u_steady, p, t), dtype=float)


@dataclass(frozen=True)
class LinearSystem:
    """Linear system ``x' = A x + B u (+ F p)``, ``y = C x``.

    With ``gain=True`` the dynamics carry a single multiplicative parameter,
    ``x' = p (A x + B u)``, as used for transport with variable velocity.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    F: Optional[np.ndarray] = None
    gain: bool = False
    x_steady: np.ndarray = field(default=None)

    def __post_init__(self):
        A = _frozen(np.atleast_2d(self.A))
        N = A.shape[0]
        if A.shape != (N, N):
            raise DimensionError(f"A must be square, got {A.shape}")
        B = np.asarray(self.B, dtype=float)
        B = _frozen(B.reshape(N, -1) if B.ndim < 2 else B)
        C = np.asarray(self.C, dtype=float)
        C = _frozen(C.reshape(-1, N) if C.ndim < 2 else C)
        if B.shape[0] != N or C.shape[1] != N:
            raise DimensionError(f"incompatible shapes A{A.shape}, B{B.shape}, C{C.shape}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)
        if self.F is not None:
            F = np.asarray(self.F, dtype=float)
            F = _frozen(F.reshape(N, -1) if F.ndim < 2 else F)
            if F.shape[0] != N:
                raise DimensionError(f"F must have {N} rows, got {F.shape}")
            if self.gain:
                raise DimensionError("gain parametrization excludes an F matrix")
            object.__setattr__(self, "F", F)
        xs = 0.0 if self.x_steady is None else self.x_steady
        object.__setattr__(self, "x_steady", _frozen(xs, (N,)))

    @property
    def N(self):
        return self.A.shape[0]

    @property
    def M(self):
        return self.B.shape[1]

    @property
    def Q(self):
        return self.C.shape[0]

    @property
    def P(self):
        if self.gain:
            return 1
        return 0 if self.F is None else self.F.shape[1]

    @property
    def dims(self):
        return (self.M, self.N, self.Q, self.P)

    def to_model(self):
        """Convert into a vectorized :class:`SystemModel`."""
        A, B, C, F = self.A, self.B, self.C, self.F
        if self.gain:
            def f(x, u, p, t):
                return p[0] * (A @ x + B @ u)
        elif F is None:
            def f(x, u, p, t):
                return A @ x + B @ u
        else:
            def f(x, u, p, t):
                return A @ x + B @ u + F @ p

        def g(x, u, p, t):
            return C @ x

        return SystemModel(f, g, self.M, self.N, self.Q, self.P,
                           x_steady=self.x_steady, vectorized=True,
                           affine=AffineParts(A, B, C, F, self.gain))


def as_model(sys):
    """Return ``sys`` as a :class:`SystemModel`."""
    if isinstance(sys, SystemModel):
        return sys
    if isinstance(sys, LinearSystem):
        return sys.to_model()
    raise TypeError(f"expected SystemModel or LinearSystem, got {type(sys).__name__}")


def augment_parameters(sys, theta=None):
    """Append the parameters to the state as constant parameter-states.

    The returned system has ``N + P`` states and no parameters.  Its vector
    field is zero on the parameter block, and ``f`` and ``g`` of the original
    system read the parameter from that block.  ``theta`` sets the nominal
    value of the parameter-states (steady state of the augmented system).
    """
    sys = as_model(sys)
    if sys.P < 1:
        raise AugmentationError("cannot augment a system without parameters (P = 0)")
    N, P = sys.N, sys.P
    theta = np.zeros(P) if theta is None else np.broadcast_to(np.asarray(theta, float), (P,))

    def f(x, u, p, t):
        dx = sys.eval_f(x[:N], u, x[N:], t)
        return np.concatenate([dx, np.zeros((P,) + x.shape[1:])])

    if sys.identity_output:
        def g(x, u, p, t):
            return x[:N]
    else:
        def g(x, u, p, t):
            return sys.eval_g(x[:N], u, x[N:], t)

    return SystemModel(f, g, sys.M, N + P, sys.Q, 0,
                       x_steady=np.concatenate([sys.x_steady, theta]),
                       u_steady=sys.u_steady, vectorized=True)


def augment_transpose(sys):
    """Stack a square linear system with its transposed system.

    Returns the ``2N`` state system with dynamics ``diag(A, A^T)``, input
    matrix ``[B; C^T]`` and identity observation.  The upper right block of
    its controllability Gramian is the cross Gramian of ``sys``.
    """
    if not isinstance(sys, LinearSystem):
        raise TypeError("augment_transpose requires a LinearSystem")
    if sys.M != sys.Q:
        raise NonSquareError(f"system is not square: M={sys.M}, Q={sys.Q}")
    N = sys.N
    A = np.zeros((2 * N, 2 * N))
    A[:N, :N] = sys.A
    A[N:, N:] = sys.A.T
    B = np.vstack([sys.B, sys.C.T])
    return LinearSystem(A, B, np.eye(2 * N))


def _read_csv(path):
    return np.loadtxt(path, delimiter=",", ndmin=2)


def load_linear_system(path):
    """Load a :class:`LinearSystem` from a JSON descriptor.

    The descriptor names CSV files (paths relative to the descriptor) for
    ``A``, ``B``, ``C`` and optionally ``F``, and may state ``dims`` as
    ``[M, N, Q, P]`` for validation.
    """
    path = Path(path)
    desc = json.loads(path.read_text())
    base = path.parent
    mats = {}
    for key in ("A", "B", "C", "F"):
        if desc.get(key) is not None:
            mats[key] = _read_csv(base / desc[key])
    for key in ("A", "B", "C"):
        if key not in mats:
            raise DimensionError(f"system descriptor {path} lacks matrix {key}")
    sys = LinearSystem(mats["A"], mats["B"], mats["C"], mats.get("F"),
                       x_steady=desc.get("x_steady"))
    if "dims" in desc and tuple(desc["dims"]) != sys.dims:
        raise DimensionError(f"descriptor dims {desc['dims']} do not match matrices {list(sys.dims)}")
    return sys


def save_linear_system(sys, path):
    """Write ``sys`` as a JSON descriptor plus CSV files next to it."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    stem = path.stem
    desc = {"dims": list(sys.dims)}
    for key in ("A", "B", "C", "F"):
        mat = getattr(sys, key)
        if mat is None:
            continue
        name = f"{stem}_{key}.csv"
        np.savetxt(path.parent / name, mat, delimiter=",", fmt="%.17g")
        desc[key] = name
    path.write_text(json.dumps(desc, indent=2))
    return path
