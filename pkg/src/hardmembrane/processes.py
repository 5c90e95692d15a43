"""Samplers for the processes under study: reflected Brownian motion, skew
Brownian motion, Brownian motion with a hard membrane, Euler paths of the
locally perturbed SDE, and the geometrically killed ladder.

All samplers are pure functions of ``(grid, parameters, stream)``.  Inside a
sampler the Wiener increments are always drawn first and auxiliary variables
(exponential thresholds, geometric kill counts, bridge minima) afterwards,
so the driving path coincides bit-for-bit with `sample_wiener` on the same
stream.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from scipy.special import ndtr

from .paths import Path, RngStream, StepFunction, TimeGrid
from .reflection import skorokhod_map, ladder_transform, LadderPath


@dataclass(frozen=True)
class SkewParams:
    """Skewness parameter gamma in [-1, 1]; +-1 is one-sided reflection."""

    gamma: float

    def __post_init__(self) -> None:
        if not abs(self.gamma) <= 1.0:
            raise ValueError(f"|gamma| <= 1 required, got {self.gamma}")


@dataclass(frozen=True)
class HardMembraneParams:
    """Permeability rates of the membrane, in inverse local-time units."""

    alpha_plus: float
    alpha_minus: float
    initial_sign: int = 1

    def __post_init__(self) -> None:
        for name, r in (("alpha_plus", self.alpha_plus), ("alpha_minus", self.alpha_minus)):
            if not (math.isfinite(r) and r > 0.0):
                raise ValueError(f"{name} must be strictly positive and finite, got {r}")
        if self.initial_sign not in (-1, 1):
            raise ValueError(f"initial_sign must be +-1, got {self.initial_sign}")


@dataclass(frozen=True)
class HardMembranePath:
    """One hard-membrane trajectory with its bookkeeping.

    ``sign`` is the cadlag orientation process, ``local_time`` the cumulative
    regulator across phases, ``flip_times`` the instants the orientation
    switched.
    """

    path: Path
    sign: StepFunction
    local_time: Path
    flip_times: np.ndarray


@dataclass(frozen=True)
class KilledLadder:
    """Ladder path with its geometric kill count and killing instant.

    ``zeta_tilde`` is the first grid time the rung count reaches
    ``geometric_draw``, or ``inf`` if the horizon ends first.
    """

    ladder: LadderPath
    zeta_tilde: float
    geometric_draw: int


class HitResult(NamedTuple):
    time: float
    level: str | None


def recommended_max_dt(epsilon: float) -> float:
    """Step-size guidance for resolving a drift layer of width epsilon:
    dt <= eps^2/25 keeps the per-step noise std at eps/5."""
    return epsilon * epsilon / 25.0


def check_layer_resolution(grid: TimeGrid, epsilon: float) -> None:
    """Warn (not fail) when the grid undersamples the drift layer."""
    limit = recommended_max_dt(epsilon)
    if grid.dt > limit * (1.0 + 1e-12):
        warnings.warn(
            f"dt = {grid.dt:.3g} exceeds the layer-resolution guidance "
            f"eps^2/25 = {limit:.3g}; drift-layer statistics may be biased",
            stacklevel=2,
        )


# ---------------------------------------------------------------------------
# Reflected Brownian motion


def _wiener_with_gen(grid: TimeGrid, x0: float, stream: RngStream):
    gen = stream.generator()
    inc = gen.standard_normal(grid.n_steps) * np.sqrt(grid.dt)
    values = np.cumsum(np.concatenate(([float(x0)], inc)))
    return values, gen


def _bridge_minima(values: np.ndarray, dt: float, gen: np.random.Generator) -> np.ndarray:
    """Exact conditional per-step minima of the Brownian interpolation."""
    x, y = values[:-1], values[1:]
    u = np.clip(gen.random(len(x)), 1e-300, None)
    return 0.5 * (x + y - np.sqrt((x - y) ** 2 - 2.0 * dt * np.log(u)))


def sample_reflected_bm(grid: TimeGrid, x0: float, side: str,
                        stream: RngStream, exact_minimum: bool = False) -> tuple[Path, Path]:
    """Sample a one-sided reflected Brownian path, returning ``(g, l)``.

    By default this is literally the running-minimum reflection of a sampled
    Wiener path, ``skorokhod_map(sample_wiener(...), side)``.  With
    ``exact_minimum=True`` the regulator is built from exact per-step bridge
    minima instead of grid minima, which removes the O(sqrt(dt)) deficit of
    the grid running minimum and makes the law of ``g`` at grid points exact
    (requires a start on the reflection side).
    """
    if side not in ("positive", "negative"):
        raise ValueError(f"side must be 'positive' or 'negative', got {side!r}")
    if not exact_minimum:
        values, _ = _wiener_with_gen(grid, x0, stream)
        sol = skorokhod_map(Path(grid, values), side)
        return sol.g, sol.l
    mirror = -1.0 if side == "negative" else 1.0
    if mirror * x0 < 0.0:
        raise ValueError("exact_minimum requires the start on the reflection side")
    values, gen = _wiener_with_gen(grid, x0, stream)
    v = mirror * values
    m = np.minimum.accumulate(_bridge_minima(v, grid.dt, gen))
    l = np.concatenate(([0.0], np.maximum(-np.minimum(m, 0.0), 0.0)))
    g = v + l
    return Path(grid, mirror * g), Path(grid, l)


# ---------------------------------------------------------------------------
# Skew Brownian motion


def skew_transition_cdf(x, y, t: float, gamma: float):
    """Transition CDF of skew Brownian motion over a step of length t.

    Integrates the transition density ``phi_t(x-y) + gamma sgn(y)
    phi_t(|x|+|y|)`` in closed form:
    ``F(y) = Phi((y-x)/sqrt(t)) - gamma Phi(-(|y|+|x|)/sqrt(t))``.
    """
    s = math.sqrt(t)
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    return ndtr((y - x) / s) - gamma * ndtr(-(np.abs(y) + np.abs(x)) / s)


def skew_step_quantile(x, u, t: float, gamma: float, tol: float = 1e-12):
    """Inverse of `skew_transition_cdf` in y, by bracketed bisection.

    ``x`` and ``u`` may be arrays of equal shape; the bracket
    ``x -+ 9 sqrt(t)`` covers all quantiles reachable by 53-bit uniforms,
    and the iteration count is chosen to bring the bracket below ``tol``.
    """
    s = math.sqrt(t)
    x = np.asarray(x, dtype=np.float64)
    u = np.clip(np.asarray(u, dtype=np.float64), 1e-16, 1.0 - 1e-16)
    scalar = x.ndim == 0 and u.ndim == 0
    x, u = np.atleast_1d(x), np.atleast_1d(u)
    lo = x - 9.0 * s
    hi = x + 9.0 * s
    n_iter = max(1, math.ceil(math.log2(18.0 * s / tol)))
    for _ in range(n_iter):
        mid = 0.5 * (lo + hi)
        below = skew_transition_cdf(x, mid, t, gamma) < u
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    out = 0.5 * (lo + hi)
    return float(out[0]) if scalar else out


def sample_skew_bm(grid: TimeGrid, x0: float, params: SkewParams,
                   stream: RngStream) -> Path:
    """Sample skew Brownian motion by exact per-step inverse-CDF draws.

    Each step is an exact draw from the one-step transition law, so the
    marginal at any grid time is free of time-discretization error and the
    chain satisfies the two-steps-equal-one-double-step property in
    distribution.
    """
    gen = stream.generator()
    us = gen.random(grid.n_steps)
    values = np.empty(grid.n_points)
    values[0] = x0
    cur = float(x0)
    for i in range(grid.n_steps):
        cur = skew_step_quantile(cur, us[i], grid.dt, params.gamma)
        values[i + 1] = cur
    return Path(grid, values)


def skew_terminal_samples(t: float, x0: float, gamma: float, n_paths: int,
                          seed: int, n_steps: int = 8) -> np.ndarray:
    """Marginal draws of skew BM at time t, one stream per path index.

    The chain is stepped ``n_steps`` times (the per-step draw being exact,
    the marginal law does not depend on this choice).
    """
    grid = TimeGrid(t, n_steps)
    us = np.empty((n_paths, n_steps))
    for i in range(n_paths):
        us[i] = RngStream(seed, i).generator().random(n_steps)
    x = np.full(n_paths, float(x0))
    for j in range(n_steps):
        x = skew_step_quantile(x, us[:, j], grid.dt, gamma)
    return x


# ---------------------------------------------------------------------------
# Hard membrane


def _scan_regulator(values: np.ndarray, i0: int, shift: float, sign: int,
                    xi: float, chunk: int = 256):
    """Regulator of the positive-side reflection of the phase driver
    ``sign * (values[i0:] - shift)``, scanned until it reaches ``xi``.

    Returns ``(l, j)`` where ``l`` is the regulator over the scanned prefix
    and ``j`` the first relative index with ``l[j] >= xi``, or None if the
    threshold is not reached by the horizon.  The driver is materialized
    chunk by chunk with geometrically growing chunks, so a phase costs
    O(steps until its flip), not O(steps to the horizon).
    """
    m = len(values) - i0
    out = np.empty(m)
    run = np.inf
    start = 0
    while start < m:
        stop = min(m, start + chunk)
        drive = values[i0 + start:i0 + stop]
        if shift != 0.0 or sign < 0:
            drive = sign * (drive - shift)
        seg = np.minimum.accumulate(np.minimum(drive, 0.0))
        if run < np.inf:
            seg = np.minimum(seg, run)
        l_seg = -seg + 0.0  # drop -0.0
        j = int(np.searchsorted(l_seg, xi, side="left"))
        if j < stop - start:
            out[start:start + j + 1] = l_seg[:j + 1]
            return out[:start + j + 1], start + j
        out[start:stop] = l_seg
        run = seg[-1]
        start = stop
        chunk *= 4
    return out, None


def sample_hard_membrane(grid: TimeGrid, x0: float, params: HardMembraneParams,
                         stream: RngStream) -> HardMembranePath:
    """Sample a hard-membrane path by the sequential phase construction.

    One underlying Wiener path drives all phases.  Phase k reflects the
    increments into the current side, a fresh Exp(alpha_side) threshold is
    drawn, and the phase ends at the first grid index where its regulator
    reaches the threshold; there the orientation flips and the next phase
    restarts from 0 on the opposite side.  Before the first flip the output
    coincides sample-by-sample with `sample_reflected_bm` on the same
    stream.
    """
    if x0 != 0.0 and (1 if x0 > 0 else -1) != params.initial_sign:
        raise ValueError(
            f"initial_sign must match sgn(x0) for x0 != 0 (x0={x0}, "
            f"initial_sign={params.initial_sign})"
        )
    values, gen = _wiener_with_gen(grid, x0, stream)
    n = grid.n_steps
    out = np.empty(n + 1)
    lt = np.empty(n + 1)
    flip_idx: list[int] = []
    side = params.initial_sign
    i0 = 0
    offset = 0.0
    while True:
        shift = 0.0 if i0 == 0 else values[i0]
        rate = params.alpha_plus if side > 0 else params.alpha_minus
        xi = max(gen.exponential(1.0 / rate), 5e-324)
        l_seg, j = _scan_regulator(values, i0, shift, side, xi)
        span = values[i0:i0 + len(l_seg)]
        if shift != 0.0:
            span = span - shift
        g = span + side * l_seg
        if j is None:
            out[i0:] = g
            lt[i0:] = offset + l_seg
            break
        out[i0:i0 + j] = g[:j]
        lt[i0:i0 + j] = offset + l_seg[:j]
        offset += l_seg[j]
        flip_idx.append(i0 + j)
        side = -side
        i0 += j
    flips = np.asarray(flip_idx, dtype=np.int64) * grid.dt
    sign_values = params.initial_sign * (-1.0) ** np.arange(1, len(flip_idx) + 1)
    sign = StepFunction(float(params.initial_sign), flips, sign_values, grid.horizon)
    return HardMembranePath(Path(grid, out), sign, Path(grid, lt), flips)


# ---------------------------------------------------------------------------
# Euler scheme and hitting


def euler_sde(grid: TimeGrid, x0: float, drift: Callable, stream: RngStream) -> Path:
    """Explicit Euler path of ``dX = drift(X) dt + dW``.

    The drift is evaluated at the left endpoint of each step; with a zero
    drift the recursion reproduces `sample_wiener` bit-for-bit on the same
    stream.
    """
    gen = stream.generator()
    inc = gen.standard_normal(grid.n_steps) * np.sqrt(grid.dt)
    dt = grid.dt
    values = np.empty(grid.n_points)
    cur = float(x0)
    values[0] = cur
    for i in range(grid.n_steps):
        cur = cur + (float(drift(cur)) * dt + inc[i])
        values[i + 1] = cur
    return Path(grid, values)


def first_hitting(p: Path, lower: float, upper: float) -> HitResult:
    """First grid time the path leaves (lower, upper), with the level hit.

    Returns ``(inf, None)`` if neither level is reached within the horizon.
    Detection is at grid points only; sub-step excursions are not seen.
    """
    v = p.values
    if not lower < v[0] < upper:
        raise ValueError(f"path must start inside (lower, upper), got {v[0]}")
    outside = (v <= lower) | (v >= upper)
    if not outside.any():
        return HitResult(math.inf, None)
    i = int(np.argmax(outside))
    return HitResult(i * p.grid.dt, "lower" if v[i] <= lower else "upper")


# ---------------------------------------------------------------------------
# Killed ladder


def sample_killed_ladder(grid: TimeGrid, x0: float, epsilon: float,
                         p_hit: float, stream: RngStream) -> KilledLadder:
    """Ladder transform of a fresh Wiener path, killed at a geometric rung.

    ``G ~ Geometric(p_hit)`` on {1, 2, ...} is drawn independently of the
    increments; the kill instant is the first grid time the rung count
    reaches G, with an ``inf`` sentinel when the horizon ends first (the
    kill time is censored, never extrapolated).
    """
    if not 0.0 < p_hit <= 1.0:
        raise ValueError(f"p_hit must lie in (0, 1], got {p_hit}")
    if x0 <= epsilon:
        raise ValueError(f"killed ladder needs x0 > epsilon, got x0={x0}, eps={epsilon}")
    values, gen = _wiener_with_gen(grid, x0, stream)
    g = int(gen.geometric(p_hit))
    ladder = ladder_transform(Path(grid, values), epsilon)
    idx = int(np.searchsorted(ladder.n_tilde, g, side="left"))
    zeta = math.inf if idx >= grid.n_points else idx * grid.dt
    return KilledLadder(ladder, zeta, g)
