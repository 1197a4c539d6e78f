"""Minimum sets of the rod density across cut angles, checked against a brute-force grid."""

import argparse
import math

import numpy as np

from ribbonlab import rod
from ribbonlab.material import MaterialParams


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n-theta", type=int, default=13, help="angles sampled in [0, pi]")
    ap.add_argument("--gamma", type=float, default=0.3)
    args = ap.parse_args()
    params = MaterialParams.from_gamma(args.gamma)
    print(f"{'theta/deg':>9} {'alpha_lo':>10} {'alpha_hi':>10} {'beta':>10} {'min value':>11} "
          f"{'grid gap':>9} {'coverage':>8}")
    for th in np.linspace(0.0, math.pi, args.n_theta):
        d = rod.RodDensity.from_params(th, params)
        ms = rod.rod_min_set(d)
        br = rod.rod_min_brute(d)
        lo, hi = ms.alpha_interval
        print(f"{math.degrees(th):>9.2f} {lo:>10.6f} {hi:>10.6f} {ms.beta:>10.6f} {ms.value:>11.8f} "
              f"{abs(br.value - ms.value):>9.1e} {br.coverage(ms.alpha_interval):>8.3f}")


if __name__ == "__main__":
    main()
