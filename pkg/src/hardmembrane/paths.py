"""Uniform time grids, sampled-path containers and reproducible random streams.

Everything downstream (reflection maps, process samplers, Monte Carlo
experiments) works on `Path` objects: real-valued trajectories sampled on a
uniform `TimeGrid`.  Randomness comes from `RngStream`, a counter-based
Philox stream keyed by ``(seed, index)`` so that path ``i`` of an experiment
is addressable and bit-reproducible independently of how many other streams
are drawn concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

_MASK64 = 0xFFFFFFFFFFFFFFFF


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid on ``[0, horizon]`` with ``n_steps`` steps.

    Grid points are always recomputed as ``i * dt``, never accumulated, so
    ``times()[i]`` is the exactly rounded value of ``i * (horizon/n_steps)``.
    """

    horizon: float
    n_steps: int

    def __post_init__(self) -> None:
        if not (np.isfinite(self.horizon) and self.horizon > 0.0):
            raise ValueError(f"horizon must be positive and finite, got {self.horizon}")
        if self.n_steps < 1:
            raise ValueError(f"n_steps must be >= 1, got {self.n_steps}")

    @property
    def dt(self) -> float:
        return self.horizon / self.n_steps

    @property
    def n_points(self) -> int:
        return self.n_steps + 1

    def times(self) -> np.ndarray:
        return np.arange(self.n_points) * self.dt

    def index_at(self, t: float) -> int:
        """Largest grid index i with i*dt <= t (small float slack allowed)."""
        return min(self.n_steps, int(np.floor(t / self.dt + 1e-9)))


@dataclass(frozen=True)
class Path:
    """A real-valued trajectory sampled at the points of a `TimeGrid`.

    Values are stored as a read-only float64 array of length
    ``grid.n_points``; non-finite values are rejected at construction.
    """

    grid: TimeGrid
    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.ascontiguousarray(self.values, dtype=np.float64)
        if v.ndim != 1 or len(v) != self.grid.n_points:
            raise ValueError(
                f"values must have length n_steps+1 = {self.grid.n_points}, got shape {v.shape}"
            )
        if not np.all(np.isfinite(v)):
            raise ValueError("path values must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def t(self) -> np.ndarray:
        return self.grid.times()

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class StepFunction:
    """Right-continuous +-1 valued step function on ``[0, horizon]``.

    ``values[k]`` is the value on ``[jump_times[k], jump_times[k+1])``;
    before the first jump the function equals ``initial_value``.
    """

    initial_value: float
    jump_times: np.ndarray
    values: np.ndarray
    horizon: float

    def __post_init__(self) -> None:
        jt = np.ascontiguousarray(self.jump_times, dtype=np.float64)
        vv = np.ascontiguousarray(self.values, dtype=np.float64)
        if jt.shape != vv.shape:
            raise ValueError("jump_times and values must have equal length")
        if jt.size and (np.any(np.diff(jt) <= 0.0)):
            raise ValueError("jump times must be strictly increasing")
        if jt.size and (jt[0] < 0.0 or jt[-1] > self.horizon):
            raise ValueError("jump times must lie within [0, horizon]")
        if self.initial_value not in (-1.0, 1.0) or not np.all(np.abs(vv) == 1.0):
            raise ValueError("step function values must be +-1")
        jt.setflags(write=False)
        vv.setflags(write=False)
        object.__setattr__(self, "jump_times", jt)
        object.__setattr__(self, "values", vv)

    def __call__(self, t):
        """Evaluate right-continuously at scalar or array ``t``."""
        idx = np.searchsorted(self.jump_times, t, side="right")
        full = np.concatenate(([self.initial_value], self.values))
        out = full[idx]
        return float(out) if np.isscalar(t) else out

    def sample(self, grid: TimeGrid) -> np.ndarray:
        return self(grid.times())


@dataclass(frozen=True)
class RngStream:
    """Counter-based random stream keyed by ``(seed, index)``.

    Distinct keys give statistically independent Philox streams; the same
    key reproduces the identical bit stream on any platform.  ``generator()``
    always starts from counter zero, so sampling functions are pure in
    ``(inputs, stream)``.
    """

    seed: int
    index: int = 0

    def __post_init__(self) -> None:
        if self.index < 0:
            raise ValueError(f"stream index must be non-negative, got {self.index}")

    def generator(self) -> np.random.Generator:
        key = np.array([self.seed & _MASK64, self.index & _MASK64], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))


def sample_wiener(grid: TimeGrid, x0: float, stream: RngStream) -> Path:
    """Sample a Wiener path started at ``x0`` on ``grid``.

    Increments over successive steps are independent ``N(0, dt)`` draws from
    ``stream``; values accumulate sequentially so that a drift-free Euler
    recursion over the same increments reproduces the path bit-for-bit.
    """
    gen = stream.generator()
    inc = gen.standard_normal(grid.n_steps) * np.sqrt(grid.dt)
    values = np.cumsum(np.concatenate(([float(x0)], inc)))
    return Path(grid, values)


def wiener_increments(grid: TimeGrid, stream: RngStream) -> np.ndarray:
    """The raw ``N(0, dt)`` increment block behind `sample_wiener`."""
    gen = stream.generator()
    return gen.standard_normal(grid.n_steps) * np.sqrt(grid.dt)


def modulus_of_continuity(p: Path, delta: float) -> float:
    """Grid modulus of continuity: sup of |p(s)-p(t)| over |s-t| <= delta.

    The supremum runs over grid-point pairs, i.e. over windows of
    ``floor(delta/dt)`` consecutive steps.
    """
    if delta <= 0.0:
        raise ValueError(f"delta must be positive, got {delta}")
    n = p.grid.n_steps
    k = min(n, int(np.floor(delta / p.grid.dt + 1e-9)))
    if k == 0:
        return 0.0
    win = sliding_window_view(p.values, k + 1)
    return float(np.max(win.max(axis=1) - win.min(axis=1)))


def running_min(p: Path) -> Path:
    """Pointwise running minimum min(p[0..i])."""
    return Path(p.grid, np.minimum.accumulate(p.values))
