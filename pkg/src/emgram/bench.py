"""Benchmark systems and reduction error sweeps.

Three experiments are provided:

``linear``
    Random stable state-space-symmetric MIMO system; linear cross Gramian,
    truncation of its singular vectors, relative L2 output error under
    Gaussian noise against the balanced-truncation bound.
``transport``
    Upwind discretization of 1D transport with the velocity as parameter;
    cross Gramian trained at the extreme velocities, parametric L2 x L2
    error for a Gauss bell input over random velocities.
``network``
    Nonlinear network ``x' = A tanh(theta * x) + B u`` with a negative
    Lehmer matrix; non-symmetric joint Gramian, combined state and
    parameter reduction, error table over both reduced orders.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigError
from .gramian import GramianConfig, empirical_wj, empirical_wx, empirical_wy
from .integrate import TimeGrid, solve
from .model import LinearSystem, SystemModel
from .reduce import (bt_bound, build_rom, direct_truncation, l2l2_error,
                     parameter_projection, project_linear)

KINDS = ("linear", "transport", "network")

TRANSPORT_VELOCITY = (1.0, 1.5)
NETWORK_GAIN = (0.5, 1.0)


@dataclass(frozen=True)
class BenchmarkSpec:
    """Configuration of one benchmark run.

    ``grid`` and ``orders`` default per kind when left as ``None``; see
    :func:`default_grid` and :func:`default_orders`.
    """

    kind: str
    N: int = 256
    seed: int = 1
    grid: Optional[TimeGrid] = None
    orders: Optional[tuple] = None
    parameter_orders: Optional[tuple] = None
    samples: int = 10
    ports: int = 4
    threads: int = 1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown benchmark {self.kind!r}; expected one of {KINDS}")
        if self.N < 2:
            raise ConfigError("benchmark needs N >= 2")
        if self.kind == "linear" and not 1 <= self.ports <= self.N:
            raise ConfigError(f"need 1 <= ports <= N, got {self.ports}")
        if self.kind == "network" and self.N % self.ports:
            raise ConfigError(f"network needs N divisible by the output count {self.ports}")
        if self.samples < 1:
            raise ConfigError("need at least one parameter sample")
        if self.grid is None:
            object.__setattr__(self, "grid", default_grid(self.kind, self.N))
        if self.orders is None:
            object.__setattr__(self, "orders", default_orders(self.kind, self.N))
        if self.kind == "network" and self.parameter_orders is None:
            object.__setattr__(self, "parameter_orders", default_orders("network", self.N))
        for n in tuple(self.orders) + tuple(self.parameter_orders or ()):
            if not 1 <= n <= self.N:
                raise ConfigError(f"reduced order {n} outside 1..{self.N}")


def default_grid(kind, N):
    if kind == "linear":
        return TimeGrid(0.01, 50.0)
    if kind == "transport":
        # stability alone allows h * N * theta_max up to 2, but the upwind
        # stencil is only resolved accurately well below that
        h = 0.5 / (N * TRANSPORT_VELOCITY[1])
        return TimeGrid(h, 3.0)
    return TimeGrid(0.01, 10.0)


def default_orders(kind, N):
    if kind == "network":
        out, n = [], 1
        while n < N:
            out.append(n)
            n *= 2
        return tuple(out + [N])
    return tuple(range(1, min(N, 64) + 1))


# Generators -----------------------------------------------------------------

def gen_linear_symmetric(N, M, seed):
    """Random stable state-space-symmetric system (``A = A^T``, ``C = B^T``).

    ``A = Q diag(lambda) Q^T`` with a random orthogonal ``Q`` and eigenvalues
    log-uniform in ``[-10, -0.1]``; ``B`` is standard Gaussian.
    """
    if not 1 <= M <= N:
        raise ConfigError(f"need 1 <= M <= N, got M={M}, N={N}")
    rng = np.random.default_rng(seed)
    Q, R = np.linalg.qr(rng.standard_normal((N, N)))
    Q *= np.sign(np.diag(R))
    lam = -(10.0 ** rng.uniform(-1.0, 1.0, N))
    A = (Q * lam) @ Q.T
    A = 0.5 * (A + A.T)
    B = rng.standard_normal((N, M))
    return LinearSystem(A, B, B.T.copy())


def gen_transport(N):
    """Upwind transport on the unit interval with velocity as gain parameter.

    ``x' = theta (A x + b u)``, ``y = x_N``, with ``A = N (S - I)`` for the
    shift matrix ``S`` and ``b = N e_1``.
    """
    if N < 2:
        raise ConfigError("transport needs N >= 2")
    A = N * (np.eye(N, k=-1) - np.eye(N))
    b = np.zeros((N, 1))
    b[0, 0] = N
    c = np.zeros((1, N))
    c[0, -1] = 1.0
    return LinearSystem(A, b, c, gain=True)


def lehmer(N):
    """Lehmer matrix ``min(i, j) / max(i, j)``."""
    i = np.arange(1, N + 1, dtype=float)
    return np.minimum.outer(i, i) / np.maximum.outer(i, i)


def gen_tanh_network(N, Q=4, seed=None):
    """Network ``x' = A tanh(theta * x) + B u``, ``y = C x``, one gain per state.

    ``A`` is the negative Lehmer matrix, ``B_i = cos(i)`` for ``i = 1..N``
    and ``C`` sums contiguous blocks: ``C_{q,i} = 1``
    iff state ``i`` lies in the ``q``-th of ``Q`` equal blocks.  The system
    is fully deterministic; ``seed`` is accepted for interface symmetry.
    """
    if N % Q:
        raise ConfigError(f"N={N} is not divisible by Q={Q}")
    A = -lehmer(N)
    B = np.cos(np.arange(1, N + 1, dtype=float))[:, None]
    C = np.kron(np.eye(Q), np.ones((1, N // Q)))

    def f(x, u, p, t):
        return A @ np.tanh(p * x) + B @ u

    def g(x, u, p, t):
        return C @ x

    model = SystemModel(f, g, 1, N, Q, N, vectorized=True)
    return model, {"A": A, "B": B, "C": C}


# Drivers --------------------------------------------------------------------

@dataclass
class BenchmarkResult:
    """Error table of a benchmark run with the conventions used."""

    spec: BenchmarkSpec
    columns: tuple
    rows: list
    metadata: dict = field(default_factory=dict)

    def column(self, name):
        i = self.columns.index(name)
        return np.array([r[i] for r in self.rows])

    def table(self):
        """Error matrix over (state order, parameter order) for ``network``."""
        if self.spec.kind != "network":
            raise ValueError("only the network benchmark has a two-dimensional table")
        ns, ps = list(self.spec.orders), list(self.spec.parameter_orders)
        E = np.full((len(ns), len(ps)), np.nan)
        for n, p, e in self.rows:
            E[ns.index(n), ps.index(p)] = e
        return E


def _per_sample_l2(e, h):
    """L2 norm over outputs and time for every run along axis 1."""
    return np.sqrt(h * np.sum(e[..., 1:] ** 2, axis=(0, 2)))


def run_linear(spec):
    N, M, grid = spec.N, spec.ports, spec.grid
    sys = gen_linear_symmetric(N, M, spec.seed)
    W = empirical_wy(sys, grid, GramianConfig(threads=spec.threads)).matrix
    full = direct_truncation(W, N)
    sigma = full.singular_values
    rng = np.random.default_rng(spec.seed + 1)
    u = rng.standard_normal((M, grid.steps))
    u_norm = float(np.sqrt(grid.h * np.sum(u * u)))
    x0 = np.zeros(N)
    y = solve(sys, grid, x0, u)
    y_norm = float(np.sqrt(grid.h * np.sum(y[:, 1:] ** 2)))
    rows = []
    for n in spec.orders:
        rom = project_linear(sys, full.truncate(n))
        yr = solve(rom, grid, np.zeros(n), u)
        err = float(np.sqrt(grid.h * np.sum((y - yr)[:, 1:] ** 2)))
        rows.append((n, err / y_norm, bt_bound(sigma, n, u_norm) / y_norm))
    meta = {"eigenvalue_range": [-10.0, -0.1], "test_input": "gaussian noise",
            "noise_seed": spec.seed + 1, "input_norm": u_norm, "output_norm": y_norm,
            "gramian": "linear cross", "projection": "direct truncation (Galerkin)"}
    return BenchmarkResult(spec, ("order", "l2_error", "bound"), rows, meta)


def gauss_bell(grid):
    """Gauss bell centered at ``T / 10`` with width ``T / 50``."""
    t0, s = grid.T / 10.0, grid.T / 50.0
    t = np.arange(grid.steps) * grid.h
    return np.exp(-((t - t0) ** 2) / (2.0 * s * s))[None, :], (t0, s)


def run_transport(spec):
    N, grid = spec.N, spec.grid
    sys = gen_transport(N)
    lo, hi = TRANSPORT_VELOCITY
    cfg = GramianConfig(pr=np.array([[lo, hi]]), threads=spec.threads)
    W = empirical_wx(sys, grid, cfg).matrix
    full = direct_truncation(W, N)
    rng = np.random.default_rng(spec.seed)
    theta = rng.uniform(lo, hi, spec.samples)
    u, (t0, s) = gauss_bell(grid)
    R = theta.size
    U = np.broadcast_to(u[:, None, :], (1, R, grid.steps))
    y = solve(sys, grid, np.zeros((N, R)), U, theta[None, :])
    volume = hi - lo
    y_norm = l2l2_error(_per_sample_l2(y, grid.h), volume)
    rows = []
    for n in spec.orders:
        rom = project_linear(sys, full.truncate(n))
        yr = solve(rom, grid, np.zeros((n, R)), U, theta[None, :])
        err = l2l2_error(_per_sample_l2(y - yr, grid.h), volume) / y_norm
        abscissa = float(np.linalg.eigvals(rom.A).real.max()) * lo
        rows.append((n, err, abscissa))
    meta = {"velocity_range": [lo, hi], "training_velocities": [lo, hi],
            "test_input": "gauss bell", "bell_center": t0, "bell_width": s,
            "test_velocities": theta.tolist(), "projection": "direct truncation (Galerkin)"}
    return BenchmarkResult(spec, ("order", "l2l2_error", "spectral_abscissa"), rows, meta)


def run_network(spec):
    N, Q, grid = spec.N, spec.ports, spec.grid
    sys, _ = gen_tanh_network(N, Q)
    lo, hi = NETWORK_GAIN
    pr = np.column_stack([np.full(N, lo), np.full(N, hi)])
    nf = (0,) * 6 + (1, 1, 1) + (0,) * 3
    res = empirical_wj(sys, grid, GramianConfig(pr=pr, nf=nf, threads=spec.threads))
    theta_bar = res.extra["theta"]
    state = direct_truncation(res.state_block, N)
    omega = res.companion
    sv = np.linalg.svd(omega, compute_uv=False)
    omega_rank = int(np.sum(sv > 1e-14 * sv[0])) if sv[0] > 0 else 0
    rng = np.random.default_rng(spec.seed)
    theta = rng.uniform(lo, hi, (N, spec.samples))
    R = spec.samples
    imp = np.zeros((1, R, grid.steps))
    imp[:, :, 0] = 1.0 / grid.h
    y = solve(sys, grid, np.zeros((N, R)), imp, theta)
    volume = (hi - lo) ** N
    y_norm = l2l2_error(_per_sample_l2(y, grid.h))
    rows = []
    for p in spec.parameter_orders:
        Pi1, Lam1 = parameter_projection(omega, p, check_rank=False)
        for n in spec.orders:
            proj = state.truncate(n).with_parameters(Pi1, Lam1, theta_bar)
            rom = build_rom(sys, proj)
            yr = solve(rom, grid, np.zeros((n, R)), imp, proj.reduce_parameter(theta))
            err = l2l2_error(_per_sample_l2(y - yr, grid.h)) / y_norm
            rows.append((n, p, err))
    rows.sort()
    meta = {"gain_range": [lo, hi], "nominal_parameter": "arithmetic mean",
            "input_matrix": "cos(i), i = 1..N", "output_matrix": "contiguous binary blocks",
            "test_input": "impulse", "test_samples": R,
            "relative_norm": "parameter volume cancels in the ratio",
            "parameter_volume": volume, "parameter_gramian_rank": omega_rank,
            "extra_input": True}
    return BenchmarkResult(spec, ("state_order", "parameter_order", "l2l2_error"), rows, meta)


_RUNNERS = {"linear": run_linear, "transport": run_transport, "network": run_network}


def run_benchmark(spec):
    """Run a benchmark and return its error table."""
    result = _RUNNERS[spec.kind](spec)
    grid = spec.grid
    result.metadata.update({"kind": spec.kind, "N": spec.N, "seed": spec.seed,
                            "dt": grid.h, "horizon": grid.T, "samples": spec.samples,
                            "ports": spec.ports, "integrator": "SSP32"})
    return result
