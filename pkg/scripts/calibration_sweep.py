"""Sweep the calibrated drift strength across epsilon and report how fast the
rescaled crossing rate approaches its target.

Usage: python scripts/calibration_sweep.py [alpha]
"""

import math
import sys

from hardmembrane import builtin_drift, calibrate_L, hitting_prob_analytic


def main() -> None:
    alpha = float(sys.argv[1]) if len(sys.argv) > 1 else 1.0
    d = builtin_drift("step")
    print("epsilon,L,ratio,predicted,rel_err")
    for k in range(4, 13):
        eps = 10.0 ** -k
        L = calibrate_L(d, alpha, eps).L_epsilon
        ratio = hitting_prob_analytic(d, L, eps) / (eps * alpha)
        li = math.log(1.0 / eps)
        predicted = 1.0 + (math.log(li) - math.log(2.0)) / li
        print(f"{eps:g},{L:.8f},{ratio:.8f},{predicted:.8f},{ratio/predicted-1:+.3e}")


if __name__ == "__main__":
    main()
