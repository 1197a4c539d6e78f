"""Thickness sweep F_h/h^2 of the order-2 ansatz toward the plate energy, for every texture."""

import argparse
import math

import numpy as np

from ribbonlab import plate, relaxation
from ribbonlab.material import Bilayer, ConstantDirector, MaterialParams, SplayBend, Twist
from ribbonlab.relaxation import Quadratic2


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--h", default="1e-1,3e-2,1e-2,3e-3,1e-3", help="decreasing thicknesses")
    ap.add_argument("--order", type=int, default=2, choices=(0, 1, 2), help="corrector order")
    ap.add_argument("--quad", type=int, default=8)
    args = ap.parse_args()
    h_list = [float(x) for x in args.h.split(",")]
    params = MaterialParams()
    form = Quadratic2.from_params(params)
    textures = {"twist": Twist(), "splaybend": SplayBend(),
                "director": ConstantDirector(np.array([0.6, 0.0, 0.8])),
                "bilayer": Bilayer(np.diag([0.1, 0.05, 0.0]), np.zeros((3, 3)))}
    for name, tex in textures.items():
        model = relaxation.plate_model(tex, params)
        phi, kappa = plate.minimize_over_cylinders(model, form).minimizers[0]
        base = plate.CylindricalIsometry(phi, kappa)
        sweep = plate.gamma_scaling_sweep(tex, params, base, h_list, (args.quad, args.quad, 2 * args.quad),
                                          corrector_order=args.order)
        print(f"\n{name}: phi={phi:.6f} kappa={kappa:.6f} F_lim={sweep.limit:.9f}")
        print(f"{'h':>8} {'F_h/h^2':>14} {'signed gap':>12} {'running slope':>14}")
        for r in sweep.rows:
            slope = "" if math.isnan(r.slope_running) else f"{r.slope_running:.3f}"
            print(f"{r.h:>8.0e} {r.energy_rescaled:>14.9f} {r.signed_gap:>12.3e} {slope:>14}")
        print(f"fitted slope {sweep.slope:.3f}, monotone {sweep.monotone()}")


if __name__ == "__main__":
    main()
