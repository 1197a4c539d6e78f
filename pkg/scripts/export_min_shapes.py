"""Export OBJ meshes and trajectories of minimal-energy ribbons for several cut angles."""

import argparse
import math
from pathlib import Path

from ribbonlab import geometry, rod
from ribbonlab.material import MaterialParams


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--outdir", default="shapes")
    ap.add_argument("--length", type=float, default=20.0)
    ap.add_argument("--width", type=float, default=1.0)
    ap.add_argument("--angles", default="0,22.5,45,67.5,90", help="cut angles in degrees")
    args = ap.parse_args()
    out = Path(args.outdir)
    out.mkdir(parents=True, exist_ok=True)
    params = MaterialParams()
    for deg in (float(a) for a in args.angles.split(",")):
        d = rod.RodDensity.from_params(math.radians(deg), params)
        ms = rod.rod_min_set(d)
        for frac in (0.0, 0.5, 1.0):
            a, b = ms.point(frac)
            traj = geometry.integrate_frame(a, b, length=args.length, n_samples=801)
            mesh = geometry.ribbon_mesh(traj, args.width, 9, {"theta_deg": deg, "min_set_fraction": frac})
            stem = out / f"ribbon_theta{deg:g}_f{frac:g}"
            geometry.write_obj(mesh, stem.with_suffix(".obj"))
            geometry.write_trajectory_csv(traj, stem.with_suffix(".csv"))
            e = rod.rod_energy(traj.to_frame_field(), d)
            print(f"theta={deg:6.2f} fraction={frac:.1f} flexure={a:+.6f} torsion={b:+.6f} "
                  f"energy gap={e - args.length * ms.value:.2e} -> {stem}.obj")


if __name__ == "__main__":
    main()
