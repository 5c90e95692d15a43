"""Repelling drift families, scale functions and drift-strength calibration.

A drift family is a function ``a`` supported in ``[-1, 1]`` with
``sgn(x) a(x) >= 0`` and antiderivative ``A(x) = int_0^x a``, behaving like
``2 A(x) ~ c_pm |x|^lam`` near 0.  Rescaled as ``(L/eps) a(x/eps)`` it acts
as a repelling layer of width eps around the origin.  This module provides
the exact first-crossing probabilities of the layer (via the scale function,
by adaptive quadrature), the large-L asymptotics of the layer integral, and
the drift strength L(eps) that tunes the crossing rate to a target
permeability alpha.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach the requested tolerance."""


def _vectorize_scalar(fn):
    def wrapped(x):
        arr = np.asarray(x, dtype=np.float64)
        out = fn(arr)
        return float(out) if arr.ndim == 0 else out

    return wrapped


@dataclass(frozen=True)
class DriftSpec:
    """A drift family together with its layer analytics.

    ``a`` and ``A`` must be vectorized callables; ``A_plus = A(1)`` and
    ``A_minus = A(-1)`` are the one-sided layer masses, ``lam``/``c_plus``/
    ``c_minus`` the local exponent data (``2 A(x) ~ c_pm |x|^lam`` as
    ``x -> 0pm``).  Exponent data is stored, not inferred; construction
    checks it numerically at ``x = pm 1e-4, pm 1e-6`` (5% tolerance).
    """

    a: Callable[[np.ndarray], np.ndarray]
    A: Callable[[np.ndarray], np.ndarray]
    A_plus: float
    A_minus: float
    lam: float
    c_plus: float
    c_minus: float
    name: str = "custom"

    def __post_init__(self) -> None:
        if self.lam <= 0.0:
            raise ValueError(f"lam must be positive, got {self.lam}")
        if self.c_plus <= 0.0 or self.c_minus <= 0.0:
            raise ValueError("local coefficients c_plus, c_minus must be positive")
        if self.A_plus <= 0.0 or self.A_minus <= 0.0:
            raise ValueError("one-sided masses A_plus, A_minus must be positive")
        for x, c in ((1e-4, self.c_plus), (1e-6, self.c_plus),
                     (-1e-4, self.c_minus), (-1e-6, self.c_minus)):
            ratio = 2.0 * float(self.A(x)) / (c * abs(x) ** self.lam)
            if not 0.95 <= ratio <= 1.05:
                raise ValueError(
                    f"local exponent check failed at x={x}: 2A(x)/(c|x|^lam) = {ratio:.4f}"
                )
        if not math.isclose(float(self.A(1.0)), self.A_plus, rel_tol=1e-8):
            raise ValueError("A(1) must equal A_plus")
        if not math.isclose(float(self.A(-1.0)), self.A_minus, rel_tol=1e-8):
            raise ValueError("A(-1) must equal A_minus")
        probe = np.array([-2.0, -1.5, 1.5, 2.0])
        if np.any(np.asarray(self.a(probe)) != 0.0):
            raise ValueError("drift must vanish outside [-1, 1]")
        xs = np.linspace(-1.0, 1.0, 201)
        if np.any(np.sign(xs) * np.asarray(self.a(xs)) < -1e-12):
            raise ValueError("drift must satisfy sgn(x) a(x) >= 0")

    def scaled(self, L: float, epsilon: float) -> Callable[[np.ndarray], np.ndarray]:
        """The rescaled drift ``x -> (L/eps) a(x/eps)`` as a vectorized callable."""
        if epsilon <= 0.0:
            raise ValueError(f"epsilon must be positive, got {epsilon}")
        a, scale = self.a, L / epsilon

        def a_eps(x):
            return scale * np.asarray(a(np.asarray(x, dtype=np.float64) / epsilon))

        return a_eps


@dataclass(frozen=True)
class Calibration:
    """Calibrated drift strength for one (drift, alpha, epsilon) triple."""

    alpha: float
    L_epsilon: float
    epsilon: float
    mode: str = "two_sided"
    beta: float | None = None

    def __post_init__(self) -> None:
        if not (math.isfinite(self.L_epsilon) and self.L_epsilon > 0.0):
            raise ValueError(
                f"calibrated L must be finite and positive, got {self.L_epsilon} "
                "(epsilon too large or alpha outside the asymptotic regime)"
            )


def builtin_drift(family: str, *, lam: float | None = None,
                  c_plus: float = 1.0, c_minus: float = 1.0) -> DriftSpec:
    """Construct one of the built-in drift families.

    ``step``: ``a(x) = sgn(x) 1_[-1,1](x)``, so ``lam = 1``, ``c_pm = 2``,
    ``A_pm = 1``.

    ``signpower``: ``a(x) = sgn(x) (lam c_side / 2) |x|^(lam-1)`` on
    ``[-1, 1]``, giving exactly ``2 A(x) = c_pm |x|^lam`` there and
    ``A_pm = c_pm / 2``.
    """
    if family == "step":
        if lam is not None and lam != 1.0:
            raise ValueError("step drift has fixed exponent lam = 1")

        def a(x):
            return np.sign(x) * (np.abs(x) <= 1.0)

        def A(x):
            return np.minimum(np.abs(x), 1.0)

        return DriftSpec(_vectorize_scalar(a), _vectorize_scalar(A),
                         A_plus=1.0, A_minus=1.0, lam=1.0, c_plus=2.0,
                         c_minus=2.0, name="step")

    if family == "signpower":
        if lam is None or lam <= 0.0:
            raise ValueError("signpower drift requires a positive exponent lam")
        if c_plus <= 0.0 or c_minus <= 0.0:
            raise ValueError("signpower drift requires positive c_plus, c_minus")
        lam_ = float(lam)

        def a(x):
            ax = np.abs(x)
            coef = np.where(x > 0.0, lam_ * c_plus / 2.0, lam_ * c_minus / 2.0)
            mag = np.zeros_like(ax)
            inside = (ax > 0.0) & (ax <= 1.0)
            mag[inside] = ax[inside] ** (lam_ - 1.0)
            return np.sign(x) * coef * mag

        def A(x):
            ax = np.minimum(np.abs(x), 1.0)
            half_c = np.where(x >= 0.0, c_plus / 2.0, c_minus / 2.0)
            return half_c * ax ** lam_

        return DriftSpec(_vectorize_scalar(a), _vectorize_scalar(A),
                         A_plus=c_plus / 2.0, A_minus=c_minus / 2.0, lam=lam_,
                         c_plus=float(c_plus), c_minus=float(c_minus),
                         name=f"signpower(lam={lam_:g})")

    raise ValueError(f"unknown drift family {family!r}")


def _peak_points(d: DriftSpec, L: float, lo: float, hi: float) -> list[float] | None:
    """Interior breakpoints for quad near the integrand peak at 0."""
    pts = {0.0}
    if L > 0.0:
        for c in (d.c_plus, d.c_minus):
            w = (1.0 / (L * c)) ** (1.0 / d.lam)
            for r in (1.0, 10.0, 100.0):
                pts.add(min(1.0, r * w))
                pts.add(-min(1.0, r * w))
    inner = sorted(p for p in pts if lo < p < hi)
    return inner or None


def _quad_core(d: DriftSpec, L: float, lo: float, hi: float) -> float:
    """Adaptive quadrature of exp(-2 L A) over [lo, hi] within [-1, 1]."""
    if hi <= lo:
        return 0.0
    A = d.A

    def f(y: float) -> float:
        return math.exp(-2.0 * L * float(A(y)))

    val, err, info, *rest = integrate.quad(
        f, lo, hi, points=_peak_points(d, L, lo, hi),
        limit=400, epsabs=0.0, epsrel=1e-12, full_output=1,
    )
    if rest or err > max(1e-10 * abs(val), 5e-300):
        raise QuadratureError(
            f"layer integral over [{lo}, {hi}] did not converge (err={err:.2e}, val={val:.6e})"
        )
    return val


def layer_integral(d: DriftSpec, L: float, lo: float = -1.0, hi: float = 2.0) -> float:
    """``int_lo^hi exp(-2 L A(y)) dy`` with analytic tails outside [-1, 1].

    The integrand is constant ``exp(-2 L A_pm)`` beyond the support of the
    drift, so only the ``[-1, 1]`` part is integrated numerically (relative
    tolerance 1e-10, refined near the peak at 0).
    """
    if hi < lo:
        raise ValueError("integration bounds must satisfy lo <= hi")
    total = 0.0
    if lo < -1.0:
        total += (min(hi, -1.0) - lo) * math.exp(-2.0 * L * d.A_minus)
    if hi > 1.0:
        total += (hi - max(lo, 1.0)) * math.exp(-2.0 * L * d.A_plus)
    total += _quad_core(d, L, max(lo, -1.0), min(hi, 1.0))
    return total


def scale_function(d: DriftSpec, L: float, epsilon: float, x: float) -> float:
    """Scale function ``s(x) = eps * int_0^{x/eps} exp(-2 L A(y)) dy``.

    Strictly increasing with ``s(0) = 0``; for ``L = 0`` it reduces to the
    identity.
    """
    if epsilon <= 0.0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    y = x / epsilon
    if y >= 0.0:
        return epsilon * layer_integral(d, L, 0.0, y)
    return -epsilon * layer_integral(d, L, y, 0.0)


def hitting_prob_analytic(d: DriftSpec, L: float, epsilon: float,
                          side: str = "plus") -> float:
    """First-crossing probability of the drift layer, from the scale function.

    ``plus``: probability of reaching ``-eps`` before ``2 eps`` when started
    at ``eps``, i.e. ``(s(2 eps) - s(eps)) / (s(2 eps) - s(-eps))``;
    ``minus`` is the mirror.  In the rescaled integral the epsilon cancels,
    so the value depends on eps only through L.
    """
    if epsilon <= 0.0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    if side not in ("plus", "minus"):
        raise ValueError(f"side must be 'plus' or 'minus', got {side!r}")
    core = _quad_core(d, L, -1.0, 1.0)
    far = math.exp(-2.0 * L * (d.A_plus if side == "plus" else d.A_minus))
    den = core + far
    if den <= 0.0 or not math.isfinite(den):
        raise QuadratureError("degenerate scale-function denominator")
    return far / den


def laplace_asymptotic(d: DriftSpec, L: float) -> float:
    """Large-L value of the layer integral: ``Gamma(1+1/lam) L^(-1/lam) (c_-^(-1/lam) + c_+^(-1/lam))``."""
    if L <= 0.0:
        raise ValueError(f"L must be positive, got {L}")
    inv = 1.0 / d.lam
    return math.gamma(1.0 + inv) * L ** (-inv) * (d.c_minus ** (-inv) + d.c_plus ** (-inv))


def beta_from_alpha(d: DriftSpec, alpha: float) -> float:
    """One-sided rate equivalent to a two-sided permeability alpha."""
    inv = 1.0 / d.lam
    return (d.c_plus ** (-inv) + d.c_minus ** (-inv)) * alpha


def calibrate_L(d: DriftSpec, alpha: float | None, epsilon: float,
                mode: str = "two_sided", beta: float | None = None) -> Calibration:
    """Drift strength L(eps) whose layer-crossing rate matches the target.

    ``two_sided`` solves ``eps^-1 p_eps^+ -> alpha`` to leading order:

        L = (2 A_+)^-1 [ ln(1/eps) + lam^-1 lnln(1/eps)
                         - (ln alpha + ln Gamma(1+1/lam)
                            + lam^-1 ln(2 A_+) + ln(c_+^(-1/lam) + c_-^(-1/lam))) ]

    ``one_sided`` uses the same expansion with a supplied one-sided rate
    beta and without the c-term.  The o(1) remainder is dropped, which
    leaves a known O(lnln/ln) bias in the achieved rate.
    """
    if not 0.0 < epsilon < math.exp(-1.0):
        raise ValueError(f"epsilon must lie in (0, e^-1) for the lnln term, got {epsilon}")
    inv = 1.0 / d.lam
    ln_inv_eps = -math.log(epsilon)
    lnln = math.log(ln_inv_eps)
    log_gamma = math.log(math.gamma(1.0 + inv))
    c_term = math.log(d.c_plus ** (-inv) + d.c_minus ** (-inv))
    if mode == "two_sided":
        if alpha is None or alpha <= 0.0:
            raise ValueError("two-sided calibration requires alpha > 0")
        bracket = ln_inv_eps + inv * lnln - (
            math.log(alpha) + log_gamma + inv * math.log(2.0 * d.A_plus) + c_term
        )
        return Calibration(alpha=float(alpha), L_epsilon=bracket / (2.0 * d.A_plus),
                           epsilon=float(epsilon), mode=mode)
    if mode == "one_sided":
        if beta is None or beta <= 0.0:
            raise ValueError("one-sided calibration requires beta > 0")
        bracket = ln_inv_eps + inv * lnln - (
            math.log(beta) + log_gamma + inv * math.log(2.0 * d.A_plus)
        )
        alpha_equiv = beta / (d.c_plus ** (-inv) + d.c_minus ** (-inv))
        return Calibration(alpha=alpha_equiv, L_epsilon=bracket / (2.0 * d.A_plus),
                           epsilon=float(epsilon), mode=mode, beta=float(beta))
    raise ValueError(f"mode must be 'two_sided' or 'one_sided', got {mode!r}")


def inflated_L(d: DriftSpec, epsilon: float, delta: float = 1.0) -> float:
    """Drift strength in the reflection regime: lnln term inflated by (1+delta).

    With this strength the rescaled crossing rate decays to zero, so the
    layer becomes impermeable in the limit.
    """
    if not 0.0 < epsilon < math.exp(-1.0):
        raise ValueError(f"epsilon must lie in (0, e^-1), got {epsilon}")
    if delta <= 0.0:
        raise ValueError(f"delta must be positive, got {delta}")
    ln_inv_eps = -math.log(epsilon)
    return (ln_inv_eps + (1.0 + delta) * math.log(ln_inv_eps) / d.lam) / (2.0 * d.A_plus)


def crossing_split_limit(d: DriftSpec) -> float:
    """Limit probability of leaving the layer downward when started at 0:
    ``c_+^(-1/lam) / (c_+^(-1/lam) + c_-^(-1/lam))``."""
    inv = 1.0 / d.lam
    cp, cm = d.c_plus ** (-inv), d.c_minus ** (-inv)
    return cp / (cp + cm)


def crossing_split_analytic(d: DriftSpec, L: float) -> float:
    """Finite-L crossing split ``P(reach -2 eps before 2 eps | start 0)``,
    computed from scale-function increments by quadrature."""
    up = _quad_core(d, L, 0.0, 1.0) + math.exp(-2.0 * L * d.A_plus)
    down = _quad_core(d, L, -1.0, 0.0) + math.exp(-2.0 * L * d.A_minus)
    return up / (up + down)
