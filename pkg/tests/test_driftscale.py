import math

import numpy as np
import pytest

from hardmembrane.driftscale import (
    DriftSpec,
    builtin_drift,
    scale_function,
    hitting_prob_analytic,
    laplace_asymptotic,
    layer_integral,
    calibrate_L,
    beta_from_alpha,
    inflated_L,
    crossing_split_limit,
    crossing_split_analytic,
)


def step_exact_ratio(eps: float) -> float:
    """eps^-1 p+ for the step family at the calibrated L, in closed form."""
    li = math.log(1.0 / eps)
    L = (li + math.log(li) - math.log(2.0)) / 2.0
    e = math.exp(-2.0 * L)
    return e / ((1.0 - e) / L + e) / eps


def test_builtin_step_values():
    d = builtin_drift("step")
    assert d.A(0.5) == 0.5
    assert d.A_plus == 1.0 and d.A_minus == 1.0
    assert d.lam == 1.0 and d.c_plus == 2.0 and d.c_minus == 2.0
    assert d.a(0.5) == 1.0 and d.a(-0.5) == -1.0 and d.a(1.5) == 0.0
    assert d.a(0.0) == 0.0


def test_builtin_signpower_values():
    d = builtin_drift("signpower", lam=2.0)
    assert d.A(0.5) == pytest.approx(0.125)
    assert d.A_plus == pytest.approx(0.5)
    # flat beyond the support edge
    assert d.A(1.0) == d.A(2.0) == d.A_plus
    half = builtin_drift("signpower", lam=0.5, c_plus=1.0, c_minus=2.0)
    assert half.a(0.0) == 0.0  # no 0 * inf at the origin
    assert half.A(-1.0) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        builtin_drift("signpower")
    with pytest.raises(ValueError):
        builtin_drift("boxcar")


def test_driftspec_invariant_checks():
    d = builtin_drift("step")
    # wrong local coefficient must be caught by the exponent check
    with pytest.raises(ValueError):
        DriftSpec(d.a, d.A, A_plus=1.0, A_minus=1.0, lam=1.0, c_plus=3.0, c_minus=2.0)
    # A(1) must equal A_plus
    with pytest.raises(ValueError):
        DriftSpec(d.a, d.A, A_plus=0.9, A_minus=1.0, lam=1.0, c_plus=2.0, c_minus=2.0)
    # support violation
    with pytest.raises(ValueError):
        DriftSpec(lambda x: np.sign(x) * (np.abs(x) <= 2.0), d.A,
                  A_plus=1.0, A_minus=1.0, lam=1.0, c_plus=2.0, c_minus=2.0)
    # sign violation
    with pytest.raises(ValueError):
        DriftSpec(lambda x: -np.sign(x) * (np.abs(x) <= 1.0),
                  lambda x: np.minimum(np.abs(x), 1.0),
                  A_plus=1.0, A_minus=1.0, lam=1.0, c_plus=2.0, c_minus=2.0)


def test_scaled_drift():
    d = builtin_drift("step")
    a_eps = d.scaled(2.0, 0.1)
    assert a_eps(0.05) == pytest.approx(20.0)
    assert a_eps(-0.05) == pytest.approx(-20.0)
    assert a_eps(0.2) == 0.0
    assert np.allclose(a_eps(np.array([0.01, -0.01, 1.0])), [20.0, -20.0, 0.0])


def test_scale_function_identity_at_zero_drift():
    d = builtin_drift("step")
    for x in (-0.7, 0.0, 0.3, 2.0):
        assert scale_function(d, 0.0, 0.1, x) == pytest.approx(x, abs=1e-12)


def test_scale_function_step_closed_form():
    d = builtin_drift("step")
    L, eps = 1.7, 0.1
    for x in (0.1, 0.15, 0.4, 2.0):
        ref = eps * (1 - math.exp(-2 * L)) / (2 * L) + (x - eps) * math.exp(-2 * L)
        assert scale_function(d, L, eps, x) == pytest.approx(ref, rel=1e-10)
    assert scale_function(d, L, eps, 0.0) == 0.0


def test_scale_function_odd_for_symmetric_drift():
    d = builtin_drift("signpower", lam=1.5)
    for x in (0.05, 0.2, 1.0):
        s_pos = scale_function(d, 2.0, 0.1, x)
        s_neg = scale_function(d, 2.0, 0.1, -x)
        assert s_neg == pytest.approx(-s_pos, rel=1e-10)
        assert s_pos > 0.0
    with pytest.raises(ValueError):
        scale_function(d, 2.0, 0.0, 1.0)


def test_hitting_prob_driftless_is_one_third():
    d = builtin_drift("step")
    assert hitting_prob_analytic(d, 0.0, 0.1) == pytest.approx(1.0 / 3.0, abs=1e-12)


def test_hitting_prob_symmetric_sides_match():
    d = builtin_drift("signpower", lam=1.3)
    p_plus = hitting_prob_analytic(d, 2.5, 0.05, "plus")
    p_minus = hitting_prob_analytic(d, 2.5, 0.05, "minus")
    assert p_plus == pytest.approx(p_minus, rel=1e-10)
    assert 0.0 < p_plus < 1.0


def test_hitting_prob_step_quadrature_vs_closed_form():
    # frozen oracle: for the step family p+ = e^-2L / ((1-e^-2L)/L + e^-2L)
    d = builtin_drift("step")
    for eps in (1e-4, 1e-8, 1e-12):
        L = calibrate_L(d, 1.0, eps).L_epsilon
        e = math.exp(-2 * L)
        closed = e / ((1 - e) / L + e)
        assert hitting_prob_analytic(d, L, eps) == pytest.approx(closed, rel=1e-9)


def test_calibration_ratio_sweep():
    # eps^-1 p+ / alpha is strictly decreasing toward 1 and matches
    # 1 + (lnln(1/eps) - ln 2)/ln(1/eps) within 1% relative error
    d = builtin_drift("step")
    prev = math.inf
    for eps in (1e-4, 1e-6, 1e-8, 1e-10, 1e-12):
        L = calibrate_L(d, 1.0, eps).L_epsilon
        ratio = hitting_prob_analytic(d, L, eps) / eps
        li = math.log(1.0 / eps)
        predicted = 1.0 + (math.log(li) - math.log(2.0)) / li
        assert abs(ratio / predicted - 1.0) < 1e-2
        assert ratio < prev
        prev = ratio
    # the eps = 1e-4 value, frozen from the quadrature oracle
    L4 = calibrate_L(d, 1.0, 1e-4).L_epsilon
    assert L4 == pytest.approx(5.3687600, abs=1e-6)
    assert hitting_prob_analytic(d, L4, 1e-4) / 1e-4 == pytest.approx(1.1657008, abs=1e-4)


def test_laplace_asymptotic_step_is_inverse_L():
    d = builtin_drift("step")
    for L in (2.0, 5.0, 50.0):
        assert laplace_asymptotic(d, L) == pytest.approx(1.0 / L, rel=1e-12)


def test_laplace_asymptotic_vs_exact_integral():
    # frozen from the exact step integral (1 - e^-2L)/L + e^-2L at the
    # calibrated L for eps = 1e-4
    d = builtin_drift("step")
    L = 5.3687600
    exact = (1 - math.exp(-2 * L)) / L + math.exp(-2 * L)
    assert exact == pytest.approx(0.186276, abs=5e-6)
    assert laplace_asymptotic(d, L) == pytest.approx(0.186262, abs=5e-6)
    assert abs(exact / laplace_asymptotic(d, L) - 1.0) < 1e-4
    assert layer_integral(d, L, -1.0, 2.0) == pytest.approx(exact, rel=1e-10)


def test_laplace_asymptotic_scaling_in_L():
    for lam in (0.5, 1.0, 2.0):
        d = builtin_drift("signpower", lam=lam)
        v1 = laplace_asymptotic(d, 7.0)
        v2 = laplace_asymptotic(d, 14.0)
        assert v2 == pytest.approx(2.0 ** (-1.0 / lam) * v1, rel=1e-12)
    with pytest.raises(ValueError):
        laplace_asymptotic(builtin_drift("step"), 0.0)


def test_laplace_asymptotic_large_L_accuracy():
    for lam in (0.5, 1.0, 2.0):
        d = builtin_drift("signpower", lam=lam)
        exact = layer_integral(d, 1000.0, -1.0, 2.0)
        assert abs(exact / laplace_asymptotic(d, 1000.0) - 1.0) < 0.02


def test_gamma_function_pinned_values():
    # lam = 1 -> Gamma(2) = 1; lam = 0.5 -> Gamma(3) = 2
    assert math.gamma(2.0) == 1.0
    assert math.gamma(3.0) == 2.0


def test_calibrate_L_example_and_validation():
    d = builtin_drift("step")
    cal = calibrate_L(d, 1.0, 1e-4)
    assert cal.L_epsilon == pytest.approx(5.3687600, abs=1e-6)
    assert cal.alpha == 1.0 and cal.epsilon == 1e-4
    with pytest.raises(ValueError):
        calibrate_L(d, 1.0, 0.5)  # eps >= e^-1
    with pytest.raises(ValueError):
        calibrate_L(d, 0.0, 1e-4)
    with pytest.raises(ValueError):
        calibrate_L(d, 1.0, 1e-4, mode="one_sided")  # missing beta


def test_calibrate_one_sided_consistency():
    # two-sided at alpha equals one-sided at beta = (c+^-1/lam + c-^-1/lam) alpha
    for d in (builtin_drift("step"),
              builtin_drift("signpower", lam=1.0, c_plus=1.0, c_minus=4.0)):
        alpha = 1.3
        two = calibrate_L(d, alpha, 1e-5)
        one = calibrate_L(d, None, 1e-5, mode="one_sided",
                          beta=beta_from_alpha(d, alpha))
        assert one.L_epsilon == pytest.approx(two.L_epsilon, rel=1e-12)
        assert one.alpha == pytest.approx(alpha, rel=1e-12)


def test_doubling_mass_halves_L():
    # prefactor (2 A+)^-1: doubling the one-sided mass halves L to leading order
    base = builtin_drift("signpower", lam=1.0, c_plus=2.0, c_minus=2.0)
    double = builtin_drift("signpower", lam=1.0, c_plus=4.0, c_minus=4.0)
    ratio = calibrate_L(double, 1.0, 1e-12).L_epsilon / calibrate_L(base, 1.0, 1e-12).L_epsilon
    assert abs(ratio - 0.5) < 0.02


def test_inflated_L_exceeds_calibrated():
    d = builtin_drift("step")
    for eps in (0.2, 0.1, 0.05):
        assert inflated_L(d, eps, 1.0) > calibrate_L(d, 1.0, eps).L_epsilon


def test_crossing_split_examples():
    sym = builtin_drift("signpower", lam=1.0, c_plus=1.0, c_minus=1.0)
    assert crossing_split_limit(sym) == pytest.approx(0.5)
    asym = builtin_drift("signpower", lam=1.0, c_plus=1.0, c_minus=4.0)
    assert crossing_split_limit(asym) == pytest.approx(0.8)
    mirror = builtin_drift("signpower", lam=1.0, c_plus=4.0, c_minus=1.0)
    assert crossing_split_limit(asym) + crossing_split_limit(mirror) == pytest.approx(1.0)


def test_crossing_split_analytic_approaches_limit():
    d = builtin_drift("signpower", lam=1.0, c_plus=1.0, c_minus=4.0)
    gaps = []
    for eps in (0.05, 1e-4, 1e-8):
        L = calibrate_L(d, 1.0, eps).L_epsilon
        gaps.append(abs(crossing_split_analytic(d, L) - 0.8))
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[2] < 1e-3
    # frozen finite-eps value used by the split acceptance gate
    L05 = calibrate_L(d, 1.0, 0.05).L_epsilon
    assert crossing_split_analytic(d, L05) == pytest.approx(0.809141, abs=2e-6)


def test_regime_classifier_inflated_L_kills_rate():
    # with the lnln term inflated, eps^-1 p+ decreases across three decades
    d = builtin_drift("step")
    prev = math.inf
    for eps in (1e-3, 1e-6, 1e-9):
        r = hitting_prob_analytic(d, inflated_L(d, eps, 1.0), eps) / eps
        assert r < prev
        prev = r
    assert prev < 0.05
