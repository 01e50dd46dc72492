"""Excitation signals for trajectory simulation.

Four kinds are available:

``impulse``
    Discrete delta: height ``1/h`` on the first step ``[0, h)``, zero after,
    so the rectangle rule integrates it to one.
``prbs``
    Pseudo-random binary values in ``{0, 1}``, one per step and component,
    held over the step.  Bits are the top bit of a counter-based SplitMix64
    hash of ``seed + (i + 1) * 0x9E3779B97F4A7C15`` for flat index
    ``i = step * M + component``, which makes the sequence identical on every
    platform.
``chirp``
    ``cos(2 pi phi(t))`` with instantaneous frequency sweeping exponentially
    down from ``1 / (2 h)`` to ``1 / T``.
``custom``
    A user callable ``t -> M-vector``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ConfigError, DimensionError, SignalRangeError
from .integrate import TimeGrid

KINDS = ("impulse", "prbs", "chirp", "custom")

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


def splitmix64(seed, index):
    """SplitMix64 output for each entry of ``index`` under ``seed``."""
    idx = np.asarray(index, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.uint64(seed & 0xFFFFFFFFFFFFFFFF) + (idx + np.uint64(1)) * _GAMMA
        z = (z ^ (z >> np.uint64(30))) * _MIX1
        z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def chirp_phase(t, grid):
    """Closed-form phase of the exponential down-chirp on ``grid``."""
    f_max = 1.0 / (2.0 * grid.h)
    f_min = 1.0 / grid.T
    ratio = f_min / f_max
    if abs(ratio - 1.0) < 1e-15:
        return f_max * np.asarray(t, dtype=float)
    k = math.log(ratio) / grid.T
    return f_max * np.expm1(k * np.asarray(t, dtype=float)) / k


@dataclass(frozen=True)
class InputSignal:
    """Excitation signal of dimension ``M`` on a time grid.

    The per-step value table is built at construction, so evaluation is
    read-only and safe to share between threads.
    """

    kind: str
    M: int
    grid: TimeGrid
    seed: int = 0
    func: Optional[Callable] = None
    _table: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown input kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == "custom" and not callable(self.func):
            raise ConfigError("custom input requires a callable")
        if int(self.M) != self.M or self.M < 0:
            raise DimensionError(f"input dimension must be a non-negative integer, got {self.M}")
        object.__setattr__(self, "M", int(self.M))
        tab = self._build()
        tab.setflags(write=False)
        object.__setattr__(self, "_table", tab)

    @classmethod
    def impulse(cls, M, grid):
        return cls("impulse", M, grid)

    @classmethod
    def prbs(cls, M, grid, seed=0):
        return cls("prbs", M, grid, seed=int(seed))

    @classmethod
    def chirp(cls, M, grid):
        return cls("chirp", M, grid)

    @classmethod
    def custom(cls, M, grid, func):
        return cls("custom", M, grid, func=func)

    def _build(self):
        M, K, h = self.M, self.grid.steps, self.grid.h
        if self.kind == "impulse":
            tab = np.zeros((M, K))
            tab[:, 0] = 1.0 / h
        elif self.kind == "prbs":
            bits = splitmix64(self.seed, np.arange(K * M, dtype=np.uint64)) >> np.uint64(63)
            tab = bits.astype(float).reshape(K, M).T.copy()
        elif self.kind == "chirp":
            row = np.cos(2.0 * np.pi * chirp_phase(np.arange(K) * h, self.grid))
            tab = np.repeat(row[None, :], M, axis=0)
        else:
            tab = np.empty((M, K))
            for k in range(K):
                tab[:, k] = self._custom(k * h)
        return tab

    def _custom(self, t):
        v = np.asarray(self.func(t), dtype=float).reshape(-1)
        if v.size == 1 and self.M != 1:
            v = np.full(self.M, v[0])
        if v.shape != (self.M,):
            raise DimensionError(f"custom input returned {v.size} components, expected {self.M}")
        return v

    def table(self):
        """Values for steps ``0 .. K-1`` as an ``(M, K)`` array."""
        return self._table

    def evaluate(self, t):
        """Signal value at time ``t`` in ``[0, T]``."""
        T, h = self.grid.T, self.grid.h
        if not (-1e-12 * T <= t <= T * (1 + 1e-12)):
            raise SignalRangeError(f"t={t} outside [0, {T}]")
        if self.kind == "custom":
            return self._custom(t)
        if self.kind == "chirp":
            return np.full(self.M, np.cos(2.0 * np.pi * chirp_phase(t, self.grid)))
        k = min(int(math.floor(t / h + 1e-9)), self.grid.steps - 1)
        return self._table[:, max(k, 0)].copy()


def make_signal(spec, M, grid):
    """Build an :class:`InputSignal` from a compact specification.

    Accepts an existing signal, a callable, the strings ``"impulse"``,
    ``"chirp"``, ``"prbs"`` and ``"prbs:<seed>"``, or the numeric codes
    ``1`` (impulse), ``0`` (PRBS with seed 0) and ``inf`` (chirp).
    """
    if isinstance(spec, InputSignal):
        if spec.M == M and spec.grid == grid:
            return spec
        return InputSignal(spec.kind, M, grid, seed=spec.seed, func=spec.func)
    if callable(spec):
        return InputSignal.custom(M, grid, spec)
    if spec is None:
        return InputSignal.impulse(M, grid)
    if isinstance(spec, (int, float)) and not isinstance(spec, bool):
        if spec == 1:
            return InputSignal.impulse(M, grid)
        if spec == 0:
            return InputSignal.prbs(M, grid, 0)
        if math.isinf(spec):
            return InputSignal.chirp(M, grid)
        raise ConfigError(f"unknown numeric input code {spec!r}")
    if isinstance(spec, str):
        name, _, arg = spec.partition(":")
        name = name.strip().lower()
        if name == "impulse":
            return InputSignal.impulse(M, grid)
        if name == "chirp":
            return InputSignal.chirp(M, grid)
        if name == "prbs":
            try:
                seed = int(arg) if arg else 0
            except ValueError:
                raise ConfigError(f"invalid PRBS seed in {spec!r}") from None
            return InputSignal.prbs(M, grid, seed)
    raise ConfigError(f"cannot interpret input specification {spec!r}")
