"""Empirical Gramians from simulated perturbation trajectories.

Seven kinds are computable, selected by the single-letter codes

====  ==========================================================
``c``  empirical controllability Gramian
``o``  empirical observability Gramian
``x``  empirical cross Gramian (non-symmetric variant via flag 7)
``y``  empirical linear cross Gramian (linear systems only)
``s``  controllability Gramian plus sensitivity Gramian diagonal
``i``  observability Gramian plus identifiability Gramian
``j``  joint Gramian (cross Gramian plus cross-identifiability)
====  ==========================================================

Configuration follows the classic twelve-flag interface; see
:class:`GramianConfig`.  Flags are addressed with zero-based indices in the
code (``nf[0]`` is flag 1).

Conventions
-----------
* Time integrals use the rectangle rule with weight ``h`` over the ``K``
  right-hand samples ``t = h, ..., T``; the ``t = 0`` sample is dropped.
* Each perturbation trajectory is divided by its own scale before the inner
  product, so a scale enters as ``1 / (c_k d_l)`` resp. ``1 / c_k^2``.
* Cross Gramians sum over input components without a ``1 / M`` factor, which
  keeps them equal to the Sylvester solution for MIMO systems.
* Runs are batched per parameter sample and partial results are reduced in
  a fixed ``(parameter, k, l, m)`` order, so results do not depend on the
  number of worker threads.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from functools import partial
from typing import Callable, Optional

import numpy as np

from .errors import (AugmentationError, ConfigError, DimensionError, NonSquareError,
                     NormalizationError, PartitionError, SolverDivergenceError,
                     UnsupportedSystemError)
from .integrate import DEFAULT_STAGES, solve
from .linalg import approx_inverse, diagonal_inverse
from .model import IDENTITY, LinearSystem, SystemModel, as_model, augment_parameters
from .signals import make_signal


class GramianKind(str, Enum):
    CONTROLLABILITY = "c"
    OBSERVABILITY = "o"
    CROSS = "x"
    LINEAR_CROSS = "y"
    SENSITIVITY = "s"
    IDENTIFIABILITY = "i"
    JOINT = "j"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            pass
        try:
            return cls[str(value).upper()]
        except KeyError:
            raise ConfigError(f"unknown Gramian kind {value!r}") from None


SCALE_SEQUENCES = {
    0: (1.0,),
    1: (0.25, 0.5, 0.75, 1.0),
    2: (0.125, 0.25, 0.5, 1.0),
    3: (0.001, 0.01, 0.1, 1.0),
    4: (0.01, 0.5, 0.99, 1.0),
}

# inclusive upper bounds of flags 1..10; flags 11 and 12 are checked separately
_FLAG_MAX = (5, 4, 4, 1, 1, 2, 1, 1, 2, 1)
_FLAG_NAMES = ("centering", "input scale sequence", "state scale sequence",
               "input directions", "state directions", "normalization",
               "non-symmetric cross Gramian", "extra input",
               "parameter centering", "parameter Gramian variant",
               "partition width", "partition index")


# Inner product kernels ------------------------------------------------------

def matmul_kernel(x, y):
    """Default Euclidean inner product (plain matrix product)."""
    return x @ y


def trace_kernel(x, y):
    """Pseudo-kernel yielding ``trace(x @ y)`` without forming the product."""
    return np.sum(x * y.T)


def diagonal_kernel(x, y):
    """Pseudo-kernel yielding only the diagonal of ``x @ y``."""
    return np.sum(x * y.T, axis=1)


def time_weighted_kernel(grid, order):
    """Kernel weighting the quadrature samples by ``t ** order``."""
    w = grid.quadrature_times ** order

    def kernel(x, y):
        return (x * w) @ y

    return kernel


# Configuration --------------------------------------------------------------

@dataclass(frozen=True)
class GramianConfig:
    """Optional arguments of the Gramian computation.

    Parameters
    ----------
    pr : array_like, optional
        Parameter samples as columns, shape ``(P, S)``.  For ``c``, ``o``,
        ``x`` and ``y`` the Gramian is averaged over the samples; for ``s``,
        ``i`` and ``j`` their componentwise range defines the nominal
        parameter and the parameter perturbation scales.
    nf : sequence of 12 ints
        Option flags (zero-based here):

        0. centering: 0 none, 1 steady state, 2 final value, 3 time mean,
           4 root mean square, 5 mid-range
        1. / 2. input / state scale sequence 0..4 (see ``SCALE_SEQUENCES``)
        3. / 4. input / state directions: 0 both signs, 1 positive only
        5. normalization: 0 none, 1 Gramian diagonal, 2 steady state
        6. non-symmetric cross Gramian (``x``, ``y``, ``j``)
        7. extra input during state and parameter perturbation runs
        8. parameter centering: 0 none (minimum), 1 arithmetic, 2 logarithmic
        9. parameter Gramian variant: ``s`` input-to-output instead of
           input-to-state, ``i``/``j`` approximate Schur complement
        10. partition width (0 disables partitioning)
        11. partition index, zero-based
    ut : str, number, callable or InputSignal
        Excitation: ``"impulse"`` (default), ``"prbs:<seed>"``, ``"chirp"``,
        or a callable ``t -> M-vector``.
    us, xs : float or array_like, optional
        Steady input and steady state; default to the system's.
    um, xm : float, vector or matrix
        Input / state perturbation scales.  A matrix is used as is, one
        column per scale, bypassing flags 1-4.
    dp : callable, optional
        Inner product kernel ``dp(X, Y)`` with ``X`` of shape ``(r, K)`` and
        ``Y`` of shape ``(K, c)``.
    stages : int
        Stage count of the default SSP integrator.
    solver : callable, optional
        Replacement integrator, see :func:`emgram.integrate.solve`.
    threads : int
        Worker threads for trajectory simulation.
    """

    pr: Optional[np.ndarray] = None
    nf: tuple = (0,) * 12
    ut: object = "impulse"
    us: object = None
    xs: object = None
    um: object = 1.0
    xm: object = 1.0
    dp: Optional[Callable] = None
    stages: int = DEFAULT_STAGES
    solver: Optional[Callable] = None
    threads: int = 1

    def __post_init__(self):
        nf = tuple(self.nf)
        if len(nf) > 12:
            raise ConfigError(f"expected at most 12 flags, got {len(nf)}")
        nf = nf + (0,) * (12 - len(nf))
        clean = []
        for i, v in enumerate(nf):
            if int(v) != v:
                raise ConfigError(f"flag {i + 1} ({_FLAG_NAMES[i]}) must be an integer, got {v!r}")
            v = int(v)
            top = _FLAG_MAX[i] if i < 10 else None
            if v < 0 or (top is not None and v > top):
                raise ConfigError(f"flag {i + 1} ({_FLAG_NAMES[i]}) out of range: {v}")
            clean.append(v)
        object.__setattr__(self, "nf", tuple(clean))
        if int(self.stages) < 2:
            raise ConfigError(f"stages must be at least 2, got {self.stages}")
        if int(self.threads) < 1:
            raise ConfigError(f"threads must be at least 1, got {self.threads}")
        if self.pr is not None:
            pr = np.array(self.pr, dtype=float)
            pr = pr.reshape(-1, 1) if pr.ndim < 2 else pr
            pr.setflags(write=False)
            object.__setattr__(self, "pr", pr)

    def replace(self, **changes):
        kw = {k: getattr(self, k) for k in self.__dataclass_fields__}
        kw.update(changes)
        return GramianConfig(**kw)


@dataclass
class GramianResult:
    """Gramian matrix with an optional parameter-space companion.

    ``matrix`` is ``N x N``, except for the joint Gramian (``N x (N + P)``)
    and for partitioned computations (only ``columns`` are present).
    ``companion`` holds the sensitivity diagonal (``s``), the identifiability
    Gramian (``i``) or the cross-identifiability Gramian (``j``).
    """

    kind: GramianKind
    matrix: np.ndarray
    companion: Optional[np.ndarray] = None
    columns: Optional[range] = None
    extra: dict = field(default_factory=dict)

    @property
    def state_block(self):
        n = self.matrix.shape[0]
        if self.kind is GramianKind.JOINT and self.columns is None:
            return self.matrix[:, :n]
        return self.matrix

    @property
    def mixed_block(self):
        if self.kind is not GramianKind.JOINT or self.columns is not None:
            raise ValueError("mixed block only exists for an unpartitioned joint Gramian")
        return self.matrix[:, self.matrix.shape[0]:]


# Building blocks ------------------------------------------------------------

def scale_sequence(base, mode=0, two_sided=False, dim=None):
    """Perturbation scales as a ``(dim, S)`` matrix.

    ``base`` is a scalar (broadcast to ``dim`` rows), a vector of per
    direction maximum scales, or a matrix used as is.  ``mode`` multiplies the
    base by the subdivision sequence; ``two_sided`` prepends the negated
    scales.
    """
    if mode not in SCALE_SEQUENCES:
        raise ConfigError(f"unknown scale sequence mode {mode!r}")
    b = np.asarray(base, dtype=float)
    if b.ndim == 2:
        out = b.copy()
        if dim is not None and out.shape[0] != dim:
            raise DimensionError(f"scale matrix has {out.shape[0]} rows, expected {dim}")
    else:
        rows = 1 if dim is None else dim
        try:
            b = np.broadcast_to(b.reshape(-1), (rows,))
        except ValueError:
            raise DimensionError(f"scale vector has {b.size} entries, expected {rows}") from None
        out = b[:, None] * np.asarray(SCALE_SEQUENCES[mode])[None, :]
        if two_sided:
            out = np.hstack([-out, out])
    if out.size and np.any(out == 0.0):
        raise ConfigError("perturbation scales must be nonzero")
    if not np.isfinite(out).all():
        raise ConfigError("perturbation scales must be finite")
    return out


def center(traj, mode, steady=None):
    """Subtract a per-row offset along the last (time) axis.

    Modes: 0 none, 1 ``steady``, 2 final value, 3 arithmetic mean,
    4 root mean square, 5 mid-range.
    """
    traj = np.asarray(traj, dtype=float)
    if mode == 0:
        return traj
    if mode == 1:
        if steady is None:
            raise DimensionError("steady-state centering needs a steady state")
        s = np.asarray(steady, dtype=float).reshape(-1)
        if s.shape[0] != traj.shape[0]:
            raise DimensionError(f"steady state has {s.shape[0]} rows, trajectory {traj.shape[0]}")
        return traj - s.reshape((-1,) + (1,) * (traj.ndim - 1))
    if mode == 2:
        off = traj[..., -1:]
    elif mode == 3:
        off = traj.mean(axis=-1, keepdims=True)
    elif mode == 4:
        off = np.sqrt(np.mean(traj * traj, axis=-1, keepdims=True))
    elif mode == 5:
        off = 0.5 * (traj.max(axis=-1, keepdims=True) + traj.min(axis=-1, keepdims=True))
    else:
        raise ConfigError(f"unknown centering mode {mode!r}")
    return traj - off


def normalize(W, mode, steady=None):
    """Normalize a square Gramian by its diagonal (1) or the steady state (2)."""
    if mode == 0:
        return W
    W = np.asarray(W, dtype=float)
    if mode == 1:
        d = np.abs(np.diag(W))
        zero = np.flatnonzero(d == 0.0)
        if zero.size:
            raise NormalizationError(int(zero[0]), "diagonal entry")
        s = np.sqrt(d)
    elif mode == 2:
        s = np.asarray(steady, dtype=float).reshape(-1)
        zero = np.flatnonzero(s == 0.0)
        if zero.size:
            raise NormalizationError(int(zero[0]), "steady-state component")
    else:
        raise ConfigError(f"unknown normalization mode {mode!r}")
    return W / s[:, None] / s[None, :]


def _log_mean(a, b):
    out = np.array(a, dtype=float)
    diff = b != a
    out[diff] = (b[diff] - a[diff]) / np.log(b[diff] / a[diff])
    return out


def parameter_scales(pr, centering=0, mode=0, two_sided=False):
    """Nominal parameter and perturbation scales from parameter samples.

    The componentwise span ``max - min`` of the sample columns is multiplied
    by the scale sequence; a zero span falls back to unit scale.  The nominal
    value is the minimum (``centering=0``), the arithmetic mean of minimum
    and maximum (1) or their logarithmic mean (2).

    Returns
    -------
    theta : ndarray, shape (P,)
    scales : ndarray, shape (P, S)
    """
    pr = np.asarray(pr, dtype=float)
    pr = pr.reshape(-1, 1) if pr.ndim < 2 else pr
    lo, hi = pr.min(axis=1), pr.max(axis=1)
    if centering == 0:
        theta = lo.copy()
    elif centering == 1:
        theta = 0.5 * (lo + hi)
    elif centering == 2:
        if np.any(lo <= 0):
            raise ConfigError("logarithmic parameter centering requires positive parameters")
        theta = _log_mean(lo, hi)
    else:
        raise ConfigError(f"unknown parameter centering {centering!r}")
    span = hi - lo
    span[span == 0.0] = 1.0
    return theta, scale_sequence(span, mode, two_sided, dim=pr.shape[0])


def merge_partitions(blocks):
    """Concatenate column blocks of a partitioned cross or joint Gramian.

    ``blocks`` holds :class:`GramianResult` objects or ``(start, matrix)``
    pairs; they must cover the columns contiguously from zero, in order.
    """
    mats = []
    expected = 0
    for b in blocks:
        if isinstance(b, GramianResult):
            start = 0 if b.columns is None else b.columns.start
            mat = b.matrix
        else:
            start, mat = b
        mat = np.asarray(mat, dtype=float)
        if start != expected:
            what = "gap" if start > expected else "overlap"
            raise PartitionError(f"partition {what}: block starts at column {start}, expected {expected}")
        mats.append(mat)
        expected = start + mat.shape[1]
    if not mats:
        raise PartitionError("no partitions to merge")
    return np.hstack(mats)


def joint_companion(WJ, variant=0):
    """Cross-identifiability Gramian from a full ``N x (N + P)`` joint Gramian."""
    WJ = np.asarray(WJ, dtype=float)
    n = WJ.shape[0]
    WX, Wm = WJ[:, :n], WJ[:, n:]
    S = WX + WX.T
    inv = diagonal_inverse(S) if variant else approx_inverse(S)
    return -0.5 * (Wm.T @ inv @ Wm)


def partition_columns(ncols, width, index):
    """Column range of partition ``index`` with at most ``width`` columns."""
    if width == 0:
        return range(ncols)
    if width >= ncols:
        raise ConfigError(f"partition width {width} must be below the column count {ncols}")
    start = index * width
    if start >= ncols:
        raise PartitionError(f"partition index {index} beyond last block (width {width}, {ncols} columns)")
    return range(start, min(start + width, ncols))


# Internal machinery ---------------------------------------------------------

class _Context:
    """Resolved configuration for one Gramian computation."""

    def __init__(self, sys, grid, cfg):
        self.sys = sys
        self.grid = grid
        self.cfg = cfg
        self.nf = cfg.nf
        self.h = grid.h
        self.K = grid.steps
        self.dp = cfg.dp or matmul_kernel
        N, M, P = sys.N, sys.M, sys.P
        self.xs = _vector(sys.x_steady if cfg.xs is None else cfg.xs, N, "xs")
        self.us = _vector(sys.u_steady if cfg.us is None else cfg.us, M, "us")
        if cfg.pr is None:
            self.pr = np.zeros((P, 1))
        else:
            if cfg.pr.shape[0] != P:
                raise DimensionError(f"pr has {cfg.pr.shape[0]} rows, system has {P} parameters")
            self.pr = cfg.pr
        self.exc = make_signal(cfg.ut, max(M, 1), grid).table()
        # state model: identity output
        self.state_model = sys if sys.identity_output else sys.replace(g=IDENTITY, Q=N)

    def input_scales(self, dim=None):
        nf = self.nf
        return scale_sequence(self.cfg.um, nf[1], nf[3] == 0, self.sys.M if dim is None else dim)

    def state_scales(self, dim=None):
        nf = self.nf
        return scale_sequence(self.cfg.xm, nf[2], nf[4] == 0, self.sys.N if dim is None else dim)

    def base_input(self, extra):
        """Input table applied to state / parameter perturbation runs."""
        M = self.sys.M
        if extra:
            return self.us[:, None] + self.exc[:M]
        return np.broadcast_to(self.us[:, None], (M, self.K))

    def simulate(self, model, x0, u, p, tag):
        try:
            traj = solve(model, self.grid, x0, u, p, stages=self.cfg.stages, solver=self.cfg.solver)
        except SolverDivergenceError as exc:
            run = tag(exc.column) if callable(tag) else tag
            raise exc.with_perturbation(run) from None
        return traj[..., 1:]

    def run(self, jobs):
        if self.cfg.threads > 1 and len(jobs) > 1:
            with ThreadPoolExecutor(max_workers=self.cfg.threads) as pool:
                return list(pool.map(lambda job: job(), jobs))
        return [job() for job in jobs]


def _vector(v, n, name):
    try:
        return np.broadcast_to(np.asarray(v, dtype=float).reshape(-1), (n,)).copy()
    except ValueError:
        raise DimensionError(f"{name} must be a scalar or have {n} entries") from None


def _split(traj, S, R):
    """Split ``(d, S * R, K)`` into ``S`` arrays of shape ``(d, R, K)``."""
    return [traj[:, k * R:(k + 1) * R] for k in range(S)]


def _input_runs(ctx, model, p, scales, channels, base, excitation, x0, steady, label):
    """Input perturbation trajectories for all scales in one batch.

    Run ``(k, r)`` perturbs input component ``channels[r]`` by
    ``scales[r, k] * excitation[r]`` on top of ``base``.  Returns one
    centered and scaled ``(d, R, K)`` array per scale index ``k``.
    """
    R, S = len(channels), scales.shape[1]
    X0 = np.repeat(np.asarray(x0, dtype=float)[:, None], S * R, axis=1)
    U = np.repeat(np.asarray(base, dtype=float)[:, None, :], S * R, axis=1)
    for k in range(S):
        for r, ch in enumerate(channels):
            U[ch, k * R + r, :] += scales[r, k] * excitation[r]

    def tag(col):
        if col is None:
            return {"run": label}
        return {"run": label, "scale_index": col // R, "direction": int(channels[col % R])}

    traj = center(ctx.simulate(model, X0, U, p, tag), ctx.nf[0], steady)
    traj = traj / scales.T.reshape(-1)[None, :, None]
    return _split(traj, S, R)


def _offset_runs(ctx, model, p, scales, idx, x0, base, steady, label, parameter=False):
    """Trajectories for perturbations of the initial state (or parameter).

    Run ``(l, r)`` starts from ``x0 + scales[idx[r], l] e_idx[r]``; with
    ``parameter=True`` the parameter ``p`` is perturbed instead.
    """
    idx = np.asarray(idx, dtype=int)
    R, S = idx.size, scales.shape[1]
    cols = np.arange(S * R)
    d = scales[idx].T.reshape(-1)
    X0 = np.repeat(np.asarray(x0, dtype=float)[:, None], S * R, axis=1)
    Pm = np.repeat(np.asarray(p, dtype=float).reshape(-1, 1), S * R, axis=1)
    target = Pm if parameter else X0
    target[np.tile(idx, S), cols] += d
    key = "parameter" if parameter else "direction"

    def tag(col):
        if col is None:
            return {"run": label}
        return {"run": label, "scale_index": col // R, key: int(idx[col % R])}

    traj = center(ctx.simulate(model, X0, base, Pm, tag), ctx.nf[0], steady)
    traj = traj / d[None, :, None]
    return _split(traj, S, R)


def _controllability_batches(ctx, p):
    sys = ctx.sys
    scales = ctx.input_scales()
    exc = ctx.exc[:sys.M]
    base = np.broadcast_to(ctx.us[:, None], (sys.M, ctx.K))
    return _input_runs(ctx, ctx.state_model, p, scales, np.arange(sys.M), base, exc,
                       ctx.xs, ctx.xs, "input")


def _output_steady(ctx, theta):
    return np.asarray(ctx.sys.eval_g(ctx.xs, ctx.us, theta, 0.0), dtype=float)


def _cross_sum(ctx, ctrl, obs):
    """``sum_{k,l,m} dp(X_km, Y_lm^T)`` in fixed order."""
    nonsym = ctx.nf[6] == 1
    acc = 0.0
    for X in ctrl:
        for Y in obs:
            Ysum = Y.sum(axis=0) if nonsym else None
            for m in range(X.shape[1]):
                Ym = Ysum if nonsym else Y[m]
                acc = acc + ctx.dp(np.ascontiguousarray(X[:, m, :]), np.ascontiguousarray(Ym.T))
    return acc


def _finish(ctx, W, steady=None):
    return normalize(W, ctx.nf[5], ctx.xs if steady is None else steady)


def _symmetrize(W):
    W = np.asarray(W)
    if W.ndim == 2 and W.shape[0] == W.shape[1]:
        return 0.5 * (W + W.T)
    return W


def _ordered_sum(parts):
    acc = 0.0
    for part in parts:
        acc = acc + part
    return acc


# Gramians -------------------------------------------------------------------

def _controllability_sum(ctx, p):
    acc = 0.0
    for X in _controllability_batches(ctx, p):
        for m in range(X.shape[1]):
            Xm = np.ascontiguousarray(X[:, m, :])
            # same product path as the linear cross Gramian, so both agree
            # bitwise on state-space-symmetric systems
            acc = acc + ctx.dp(Xm, np.ascontiguousarray(Xm.T))
    return acc


def empirical_wc(sys, grid, cfg=None):
    """Empirical controllability Gramian."""
    sys, cfg = as_model(sys), cfg or GramianConfig()
    if sys.M < 1:
        raise DimensionError("controllability Gramian needs at least one input")
    ctx = _Context(sys, grid, cfg)
    acc = _ordered_sum(ctx.run([partial(_controllability_sum, ctx, p) for p in ctx.pr.T]))
    S = ctx.input_scales().shape[1]
    W = acc * (ctx.h / (S * ctx.pr.shape[1]))
    return GramianResult(GramianKind.CONTROLLABILITY, _finish(ctx, _symmetrize(W)))


def _observability(ctx, model, scales, x0, steady, theta_cols, base):
    """Observability Gramian of ``model`` over state perturbations."""
    cols = np.arange(model.N)

    def part(p):
        acc = 0.0
        for Y in _offset_runs(ctx, model, p, scales, cols, x0, base, steady(p), "state"):
            for q in range(Y.shape[0]):
                Yq = np.ascontiguousarray(Y[q])
                acc = acc + ctx.dp(Yq, Yq.T)
        return acc

    acc = _ordered_sum(ctx.run([partial(part, p) for p in theta_cols]))
    return acc * (ctx.h / (scales.shape[1] * len(theta_cols)))


def empirical_wo(sys, grid, cfg=None):
    """Empirical observability Gramian."""
    sys, cfg = as_model(sys), cfg or GramianConfig()
    if sys.Q < 1:
        raise DimensionError("observability Gramian needs at least one output")
    ctx = _Context(sys, grid, cfg)
    W = _observability(ctx, sys, ctx.state_scales(), ctx.xs,
                       lambda p: _output_steady(ctx, p), list(ctx.pr.T),
                       ctx.base_input(ctx.nf[7] == 1))
    return GramianResult(GramianKind.OBSERVABILITY, _finish(ctx, _symmetrize(W)))


def _check_square(sys, nf):
    if nf[6] == 0 and sys.M != sys.Q:
        raise NonSquareError(f"cross Gramian needs M == Q (got M={sys.M}, Q={sys.Q}); "
                             "set flag 7 for the non-symmetric variant")


def empirical_wx(sys, grid, cfg=None):
    """Empirical cross Gramian, or its non-symmetric variant with flag 7.

    With a partition width in flag 11 only the column block selected by
    flag 12 is computed; combine blocks with :func:`merge_partitions`.
    """
    sys, cfg = as_model(sys), cfg or GramianConfig()
    if sys.M < 1 or sys.Q < 1:
        raise DimensionError("cross Gramian needs inputs and outputs")
    _check_square(sys, cfg.nf)
    ctx = _Context(sys, grid, cfg)
    N = sys.N
    partitioned = cfg.nf[10] > 0
    cols = partition_columns(N, cfg.nf[10], cfg.nf[11])
    xscales = ctx.state_scales()
    base = ctx.base_input(ctx.nf[7] == 1)
    idx = np.arange(cols.start, cols.stop)

    def part(p):
        ctrl = _controllability_batches(ctx, p)
        obs = _offset_runs(ctx, sys, p, xscales, idx, ctx.xs, base, _output_steady(ctx, p), "state")
        return _cross_sum(ctx, ctrl, obs)

    acc = _ordered_sum(ctx.run([partial(part, p) for p in ctx.pr.T]))
    S = ctx.input_scales().shape[1] * xscales.shape[1]
    W = np.asarray(acc * (ctx.h / (S * ctx.pr.shape[1])), dtype=float)
    if not partitioned:
        W = _finish(ctx, W)
    return GramianResult(GramianKind.CROSS, W, columns=cols if partitioned else None)


def empirical_wy(sys, grid, cfg=None):
    """Empirical linear cross Gramian of a square linear system.

    Pairs the state trajectories with those of the transposed system driven
    by the same inputs.  With flag 7 the input columns of ``B`` and output
    rows of ``C`` are summed first (non-symmetric variant).
    """
    cfg = cfg or GramianConfig()
    if not isinstance(sys, LinearSystem):
        raise UnsupportedSystemError("linear cross Gramian requires a LinearSystem")
    nonsym = cfg.nf[6] == 1
    if not nonsym and sys.M != sys.Q:
        raise NonSquareError(f"linear cross Gramian needs M == Q (got M={sys.M}, Q={sys.Q})")
    N = sys.N
    At = np.ascontiguousarray(sys.A.T)
    B = sys.B.sum(axis=1, keepdims=True) if nonsym else sys.B
    Ct = np.ascontiguousarray((sys.C.sum(axis=0, keepdims=True) if nonsym else sys.C).T)
    model = as_model(sys)
    us = _vector(model.u_steady if cfg.us is None else cfg.us, sys.M, "us")
    xs = _vector(model.x_steady if cfg.xs is None else cfg.xs, N, "xs")
    us_run = np.array([us.mean()]) if nonsym else us
    um = cfg.um
    if nonsym:
        um = scale_sequence(um, cfg.nf[1], cfg.nf[3] == 0, sys.M)[:1]
    eye = np.eye(N)
    primal = LinearSystem(sys.A, B, eye, sys.F, sys.gain, x_steady=xs).to_model()
    dual = LinearSystem(At, Ct, eye, sys.F, sys.gain, x_steady=xs).to_model()
    primal = primal.replace(g=IDENTITY, u_steady=us_run)
    dual = dual.replace(g=IDENTITY, u_steady=us_run)
    ctx = _Context(primal, grid, cfg.replace(us=None, xs=None, um=um))

    def part(p):
        xs_runs = _controllability_batches(ctx, p)
        ctx_d = _Context(dual, grid, ctx.cfg)
        zs_runs = _controllability_batches(ctx_d, p)
        acc = 0.0
        for X, Z in zip(xs_runs, zs_runs):
            for m in range(X.shape[1]):
                Xm = np.ascontiguousarray(X[:, m, :])
                acc = acc + ctx.dp(Xm, np.ascontiguousarray(Z[:, m, :].T))
        return acc

    acc = _ordered_sum(ctx.run([partial(part, p) for p in ctx.pr.T]))
    S = ctx.input_scales().shape[1]
    W = acc * (ctx.h / (S * ctx.pr.shape[1]))
    if not nonsym and np.array_equal(sys.A, At) and np.array_equal(sys.C, sys.B.T):
        # state-space-symmetric: the Gramian is symmetric in theory
        W = _symmetrize(W)
    return GramianResult(GramianKind.LINEAR_CROSS, normalize(W, cfg.nf[5], xs))


def empirical_ws(sys, grid, cfg=None):
    """Controllability Gramian plus the sensitivity Gramian diagonal.

    Each parameter is treated as an extra input channel, excited like the
    regular inputs around the nominal parameter; its sensitivity is the
    trace of the associated controllability Gramian (of the outputs instead
    of the states with flag 10).
    """
    sys, cfg = as_model(sys), cfg or GramianConfig()
    if sys.P < 1:
        raise AugmentationError("sensitivity Gramian needs parameters (P >= 1)")
    nf = cfg.nf
    pr = np.zeros((sys.P, 1)) if cfg.pr is None else cfg.pr
    if pr.shape[0] != sys.P:
        raise DimensionError(f"pr has {pr.shape[0]} rows, system has {sys.P} parameters")
    theta, pscales = parameter_scales(pr, nf[8], nf[1], nf[3] == 0)
    WC = empirical_wc(sys, grid, cfg.replace(pr=theta[:, None]))

    M, P = sys.M, sys.P
    use_output = nf[9] == 1

    def f(x, w, p, t):
        return sys.eval_f(x, w[:M], p + w[M:], t)

    if use_output:
        def g(x, w, p, t):
            return sys.eval_g(x, w[:M], p + w[M:], t)
        Q = sys.Q
    else:
        g, Q = IDENTITY, sys.N
    wrapped = SystemModel(f, g, M + P, sys.N, Q, P, x_steady=sys.x_steady, vectorized=True)
    ctx = _Context(sys, grid, cfg)
    base = np.vstack([ctx.base_input(nf[7] == 1), np.zeros((P, ctx.K))])
    exc = np.repeat(ctx.exc[:1], P, axis=0)
    steady = _output_steady(ctx, theta) if use_output else ctx.xs
    batches = _input_runs(ctx, wrapped, theta, pscales, M + np.arange(P), base, exc,
                          ctx.xs, steady, "parameter")
    WS = np.zeros(P)
    for X in batches:
        for i in range(P):
            Xi = np.ascontiguousarray(X[:, i, :])
            WS[i] += trace_kernel(Xi, Xi.T)
    WS *= ctx.h / pscales.shape[1]
    return GramianResult(GramianKind.SENSITIVITY, WC.matrix, companion=WS,
                         extra={"theta": theta, "parameter_scales": pscales})


def _matched_scales(xscales, pscales):
    if xscales.shape[1] != pscales.shape[1]:
        raise ConfigError(f"state scales ({xscales.shape[1]}) and parameter scales "
                          f"({pscales.shape[1]}) differ in count")
    return np.vstack([xscales, pscales])


def empirical_wi(sys, grid, cfg=None):
    """Observability Gramian plus the empirical identifiability Gramian.

    The augmented observability Gramian of the system with parameters as
    constant states is split into blocks; the identifiability Gramian is the
    Schur complement of the parameter block (approximate inverse), or just
    the parameter block with flag 10.
    """
    sys, cfg = as_model(sys), cfg or GramianConfig()
    if sys.P < 1:
        raise AugmentationError("identifiability Gramian needs parameters (P >= 1)")
    if sys.Q < 1:
        raise DimensionError("identifiability Gramian needs at least one output")
    nf = cfg.nf
    N = sys.N
    ctx = _Context(sys, grid, cfg)
    theta, pscales = parameter_scales(ctx.pr, nf[8], nf[2], nf[4] == 0)
    scales = _matched_scales(ctx.state_scales(), pscales)
    aug = augment_parameters(sys.replace(x_steady=ctx.xs), theta)
    ys = _output_steady(ctx, theta)
    W = _observability(ctx, aug, scales, aug.x_steady, lambda p: ys, [np.zeros(0)],
                       ctx.base_input(nf[7] == 1))
    W = _symmetrize(W)
    WO, WM, WP = W[:N, :N], W[:N, N:], W[N:, N:]
    if nf[9] == 1:
        WI = WP.copy()
    else:
        WI = WP - WM.T @ approx_inverse(WO) @ WM
    return GramianResult(GramianKind.IDENTIFIABILITY, _finish(ctx, WO), companion=WI,
                         extra={"augmented": W, "theta": theta})


def empirical_wj(sys, grid, cfg=None):
    """Joint Gramian: cross Gramian of the parameter-augmented system.

    Returns the ``N x (N + P)`` matrix ``[W_X, W_m]`` (the parameter rows are
    identically zero and not stored) and the cross-identifiability Gramian
    as companion.  Partitioning via flags 11/12 applies to the ``N + P``
    columns; the companion is then omitted (see :func:`joint_companion`).
    """
    sys, cfg = as_model(sys), cfg or GramianConfig()
    if sys.P < 1:
        raise AugmentationError("joint Gramian needs parameters (P >= 1)")
    if sys.M < 1 or sys.Q < 1:
        raise DimensionError("joint Gramian needs inputs and outputs")
    _check_square(sys, cfg.nf)
    nf = cfg.nf
    N, P = sys.N, sys.P
    ctx = _Context(sys, grid, cfg)
    theta, pscales = parameter_scales(ctx.pr, nf[8], nf[2], nf[4] == 0)
    xscales = ctx.state_scales()
    _matched_scales(xscales, pscales)
    partitioned = nf[10] > 0
    cols = partition_columns(N + P, nf[10], nf[11])
    scols = np.arange(cols.start, min(cols.stop, N))
    pcols = np.arange(max(cols.start, N), cols.stop)
    base = ctx.base_input(nf[7] == 1)
    ys = _output_steady(ctx, theta)

    jobs = [partial(_controllability_batches, ctx, theta)]
    if scols.size:
        jobs.append(partial(_offset_runs, ctx, sys, theta, xscales, scols, ctx.xs, base, ys,
                            "state"))
    if pcols.size:
        jobs.append(partial(_offset_runs, ctx, sys, theta, pscales, pcols - N, ctx.xs, base, ys,
                            "parameter", parameter=True))
    ctrl, *obs = ctx.run(jobs)
    blocks = [np.asarray(_cross_sum(ctx, ctrl, o), dtype=float) for o in obs]
    S = ctx.input_scales().shape[1] * xscales.shape[1]
    W = np.hstack(blocks) * (ctx.h / S)
    if partitioned:
        return GramianResult(GramianKind.JOINT, W, columns=cols, extra={"theta": theta})
    W[:, :N] = _finish(ctx, W[:, :N])
    return GramianResult(GramianKind.JOINT, W, companion=joint_companion(W, nf[9]),
                         extra={"theta": theta})


_DISPATCH = {
    GramianKind.CONTROLLABILITY: empirical_wc,
    GramianKind.OBSERVABILITY: empirical_wo,
    GramianKind.CROSS: empirical_wx,
    GramianKind.LINEAR_CROSS: empirical_wy,
    GramianKind.SENSITIVITY: empirical_ws,
    GramianKind.IDENTIFIABILITY: empirical_wi,
    GramianKind.JOINT: empirical_wj,
}


def empirical_gramian(sys, grid, kind, cfg=None):
    """Compute the empirical Gramian selected by ``kind`` (``c, o, x, y, s, i, j``)."""
    kind = GramianKind.parse(kind)
    if kind is not GramianKind.LINEAR_CROSS:
        sys = as_model(sys)
    return _DISPATCH[kind](sys, grid, cfg)
