"""How fast the inflated-strength layer diffusion approaches pure reflection.

With the lnln term inflated by (1+delta) the rescaled crossing rate decays
like 1/ln(1/eps), so the mass the diffusion still puts below zero (equal to
the KS distance against one-sided reflected BM, which has none) vanishes
only logarithmically.  This sweep prints that mass together with the KS
distance at t = 1 from x0 = 1, quantifying why the distance cannot reach the
two-sample null scale at desk-scale eps.

Usage: python scripts/reflection_regime_study.py [n_paths]
"""

import sys

from hardmembrane import TimeGrid, builtin_drift, inflated_L, hitting_prob_analytic
from hardmembrane.montecarlo import (
    euler_terminal_samples,
    ks_two_sample_report,
    reflected_terminal_samples,
)


def main() -> None:
    n_paths = int(sys.argv[1]) if len(sys.argv) > 1 else 20_000
    d = builtin_drift("step")
    ref = reflected_terminal_samples(1.0, 1.0, 1e-4, n_paths, seed=0, threads=2)
    print("eps,L_inflated,rate_eps,ks_to_reflected,mass_below_zero")
    for k, eps in enumerate((0.2, 0.1, 0.05, 0.025)):
        grid = TimeGrid(1.0, round(25.0 / (eps * eps)))
        L = inflated_L(d, eps, 1.0)
        rate = hitting_prob_analytic(d, L, eps) / eps
        x = euler_terminal_samples(d.scaled(L, eps), 1.0, grid, n_paths,
                                   seed=k + 1, threads=2)
        ks = ks_two_sample_report(x, ref).statistic
        print(f"{eps:g},{L:.4f},{rate:.4f},{ks:.4f},{(x < 0).mean():.4f}")


if __name__ == "__main__":
    main()
