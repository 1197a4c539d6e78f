"""Print relaxed plate constants for each texture: closed form, oracle and printed values."""

import argparse

import numpy as np

from ribbonlab import relaxation
from ribbonlab.material import Bilayer, ConstantDirector, MaterialParams, SplayBend, Twist


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--gamma", type=float, default=0.3)
    ap.add_argument("--mu", type=float, default=1.0)
    ap.add_argument("--alpha0", type=float, default=1.0)
    args = ap.parse_args()
    params = MaterialParams.from_gamma(args.gamma, mu=args.mu, alpha0=args.alpha0)
    textures = [Twist(), SplayBend(), ConstantDirector(np.array([0.0, 0.0, 1.0])),
                Bilayer(np.diag([0.1, 0.0, 0.0]), np.zeros((3, 3)))]
    print(f"{'texture':<10} {'quantity':<17} {'closed form':>26} {'oracle':>26} {'printed':>26} flag")
    for tex in textures:
        block = relaxation.paper_comparison(relaxation.plate_model(tex, params))
        for e in block["entries"]:
            vals = [np.array2string(np.asarray(e[k]), precision=7, suppress_small=True).replace("\n", "")
                    for k in ("closed_form_value", "oracle_value", "printed_value")]
            print(f"{block['texture']:<10} {e['quantity']:<17} {vals[0]:>26} {vals[1]:>26} {vals[2]:>26} "
                  f"{'DIFF' if e['discrepancy'] else 'ok'}")


if __name__ == "__main__":
    main()
