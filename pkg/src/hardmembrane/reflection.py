"""Reflection maps at zero: the running-minimum solution, the epsilon-ladder
jump transform, and occupation-count local time.

The one-sided reflection problem for a path f asks for (g, l) with
``g = f + l >= 0``, l non-decreasing from 0 and flat wherever g > 0.  On a
grid the closed form is exact: ``l(t) = -min_{s<=t}(f(s) ^ 0)``.  The ladder
transform is the pre-limit skeleton of the same regulator: it adds a rung of
height epsilon each time the path's running minimum drops by epsilon, and
``eps * n(t)`` tracks l(t) within 2*eps uniformly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .paths import Path

Side = str  # "positive" | "negative"


@dataclass(frozen=True)
class SkorokhodSolution:
    """Reflected path g and its regulator l, on the input path's grid."""

    g: Path
    l: Path


@dataclass(frozen=True)
class LadderPath:
    """Ladder-transformed path ``x_tilde = w + eps * n_tilde``.

    ``n_tilde`` is the non-decreasing integer rung count, zero at time 0.
    """

    x_tilde: Path
    n_tilde: np.ndarray
    epsilon: float

    def __post_init__(self) -> None:
        n = np.ascontiguousarray(self.n_tilde, dtype=np.int64)
        n.setflags(write=False)
        object.__setattr__(self, "n_tilde", n)


def _reflect_positive(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Closed-form (g, l) arrays for a start value >= 0."""
    l = -np.minimum.accumulate(np.minimum(values, 0.0)) + 0.0  # drop -0.0
    return values + l, l


def _reflect_negative(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    l = np.maximum.accumulate(np.maximum(values, 0.0)) + 0.0
    return values - l, l


def skorokhod_map(f: Path, side: Side = "positive") -> SkorokhodSolution:
    """Solve the reflection problem for ``f`` at level 0.

    For ``side="positive"`` and ``f(0) >= 0`` the solution is the running
    minimum formula ``l = -cummin(f ^ 0)``, ``g = f + l``.  A start on the
    wrong side is left untouched until the first grid index where f reaches
    the boundary; the map restarts there.  ``side="negative"`` is the exact
    mirror (``g = f - l <= 0``).
    """
    if side not in ("positive", "negative"):
        raise ValueError(f"side must be 'positive' or 'negative', got {side!r}")
    v = f.values
    wrong_side = v[0] < 0.0 if side == "positive" else v[0] > 0.0
    if not wrong_side:
        g, l = _reflect_positive(v) if side == "positive" else _reflect_negative(v)
    else:
        hit = v >= 0.0 if side == "positive" else v <= 0.0
        g = v.copy()
        l = np.zeros_like(v)
        if np.any(hit):
            i0 = int(np.argmax(hit))
            if side == "positive":
                g[i0:], l[i0:] = _reflect_positive(v[i0:])
            else:
                g[i0:], l[i0:] = _reflect_negative(v[i0:])
    return SkorokhodSolution(Path(f.grid, g), Path(f.grid, l))


def ladder_transform(w: Path, epsilon: float) -> LadderPath:
    """Rung-count transform ``n(t) = floor(-min((w(s)-2 eps) ^ 0) / eps)``.

    Requires ``w(0) > epsilon`` so that the count starts at zero.  Each rung
    adds epsilon to the path; the result ``x_tilde = w + eps*n`` jumps to
    ``2 eps`` whenever its driving minimum drops to the next level below
    epsilon.
    """
    if epsilon <= 0.0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    if w.values[0] <= epsilon:
        raise ValueError(
            f"ladder transform needs w(0) > epsilon, got w(0)={w.values[0]} <= {epsilon}"
        )
    drop = np.minimum.accumulate(np.minimum(w.values - 2.0 * epsilon, 0.0))
    n = np.floor(-drop / epsilon).astype(np.int64)
    x = w.values + epsilon * n
    return LadderPath(Path(w.grid, x), n, float(epsilon))


def occupation_local_time(p: Path, half_width: float) -> Path:
    """Occupation estimate of local time at 0.

    ``out(t_j) = dt/(2 h) * #{1 <= i <= j : |p[i]| <= h}``, a right-endpoint
    Riemann sum of the normalized occupation of ``[-h, h]``; non-decreasing
    and zero at time 0.
    """
    if half_width <= 0.0:
        raise ValueError(f"half_width must be positive, got {half_width}")
    inside = np.abs(p.values[1:]) <= half_width
    occ = np.concatenate(([0.0], np.cumsum(inside) * (p.grid.dt / (2.0 * half_width))))
    return Path(p.grid, occ)
