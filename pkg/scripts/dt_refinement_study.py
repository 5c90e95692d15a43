"""Euler step-size refinement for first-exit statistics with strong drifts.

The step policy dt <= eps^2/25 controls the noise resolution of the layer,
but a strongly one-sided drift (per-step drift kick comparable to the noise
std) leaves an O(sqrt(dt)) weak error in exit probabilities.  This sweep
shows the error halving with each 4x step refinement, which is how the
defaults used by the split and drifted hitting experiments were chosen.

Usage: python scripts/dt_refinement_study.py [n_paths]
"""

import sys

from hardmembrane import builtin_drift, calibrate_L, crossing_split_analytic, hitting_prob_analytic
from hardmembrane.montecarlo import crossing_split_mc, estimate_hitting_prob


def main() -> None:
    n_paths = int(sys.argv[1]) if len(sys.argv) > 1 else 20_000

    d = builtin_drift("signpower", lam=1.0, c_plus=1.0, c_minus=4.0)
    eps = 0.05
    L = calibrate_L(d, 1.0, eps).L_epsilon
    target = crossing_split_analytic(d, L)
    print(f"crossing split, analytic={target:.5f}, N={n_paths}")
    for div in (25, 100, 400, 1600):
        rep = crossing_split_mc(d, L, eps, n_paths, seed=1,
                                dt=eps * eps / div, threads=2)
        print(f"  dt=eps^2/{div}: est={rep.estimate:.5f} "
              f"bias={rep.estimate - target:+.5f} se={rep.stderr:.5f}")

    d = builtin_drift("step")
    eps = 0.1
    L = calibrate_L(d, 1.0, eps).L_epsilon
    target = hitting_prob_analytic(d, L, eps)
    print(f"step-drift hitting, analytic={target:.5f}, N={n_paths}")
    for div in (25, 100, 400):
        rep = estimate_hitting_prob(d, L, eps, n_paths, seed=2,
                                    dt=eps * eps / div, threads=2)
        print(f"  dt=eps^2/{div}: est={rep.estimate:.5f} "
              f"bias={rep.estimate - target:+.5f}")


if __name__ == "__main__":
    main()
