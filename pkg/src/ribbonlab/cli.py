"""Command-line front door: ``ribbonlab derive|rod|shape|gamma-check|verify``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 acceptance failure, 5 I/O error.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import datetime as _dt
import json
import math
import sys
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__, geometry, plate, relaxation, rod, verify
from .config import DEFAULT_H, RunConfig, parse_angle, parse_grid
from .errors import (AnsatzDegenerateError, ConfigError, DegenerateActivationError, DomainSingularityError,
                     InternalConsistencyError, QuadratureError, UnsupportedTextureError)
from .relaxation import Quadratic2, ThicknessProfile
from .verify import qv

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_ACCEPTANCE, EXIT_IO = 0, 2, 3, 4, 5
SCHEMA = "ribbonlab.report"
SCHEMA_VERSION = 1


def _fmt(v) -> str:
    return f"{float(v):.12g}"


# --- configuration ----------------------------------------------------------

def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", metavar="PATH", help="JSON run configuration; flags override it")
    p.add_argument("--texture", choices=["twist", "splaybend", "director", "bilayer"],
                   help="activation texture (default twist)")
    p.add_argument("--mu", type=float, help="shear modulus (default 1)")
    p.add_argument("--gamma", type=float, help="relaxed Poisson ratio gamma in (0,1) (default 0.3)")
    p.add_argument("--alpha0", type=float, help="activation strength (default 1)")
    p.add_argument("--h0", type=float, help="reference thickness (default 1)")
    p.add_argument("--theta", help="cut angle of the ribbon; radians or deg:VALUE (default 0)")
    p.add_argument("--length", type=float, help="ribbon length (default 2)")
    p.add_argument("--width", type=float, help="ribbon width (default 0.5)")
    p.add_argument("--quad", type=int, help="in-plane Gauss order; thickness uses twice this (default 8)")
    p.add_argument("--out", metavar="PATH", help="output file (stdout when omitted)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ribbonlab", description=__doc__.splitlines()[0],
                                     epilog=" ".join(__doc__.splitlines()[2:4]))
    parser.add_argument("--version", action="version", version=f"ribbonlab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("derive", help="plate constants with oracle and printed-value comparison")
    _common(p)

    p = sub.add_parser("rod", help="tabulate the rod density on an (alpha, beta) grid")
    _common(p)
    p.add_argument("--grid", help="MIN:MAX:N[,MIN:MAX:N]; 'k' suffix scales by 6/pi^2 alpha0/h0 "
                                  "(default -3k:3k:601; write --grid=-1k:1k:101 when MIN is negative)")

    p = sub.add_parser("shape", help="integrate a ribbon and export OBJ and trajectory CSV")
    _common(p)
    p.add_argument("--flexure", type=float, default=0.0, help="constant flexure rate (default 0)")
    p.add_argument("--torsion", type=float, default=0.0, help="constant torsion rate (default 0)")
    p.add_argument("--from-min-set", type=float, metavar="T",
                   help="use the minimum-set point at fraction T (0 left end, 1 right end)")
    p.add_argument("--n-samples", type=int, help="frame samples along the ribbon (default 401)")

    p = sub.add_parser("gamma-check", help="energy sweep F_h/h^2 toward the plate minimum")
    _common(p)
    p.add_argument("--h", metavar="LIST", help="comma-separated decreasing thicknesses "
                                               f"(default {','.join(map(str, DEFAULT_H))})")

    p = sub.add_parser("verify", help="run the verification suite")
    _common(p)
    p.add_argument("--suite", choices=verify.SUITES, default="all")
    p.add_argument("--d-branch-ratio", type=float, default=None,
                   help="override the D-branch constant (negative-control hook)")
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    data = {}
    if args.config:
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.config}: invalid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    mat = dict(data.get("material", {}))
    for key in ("mu", "gamma", "alpha0", "h0"):
        if getattr(args, key) is not None:
            mat[key] = getattr(args, key)
            if key == "gamma":
                mat.pop("wvol2", None)
    dom = dict(data.get("domain", {}))
    for key in ("length", "width"):
        if getattr(args, key) is not None:
            dom[key] = getattr(args, key)
    if args.theta is not None:
        dom["theta"] = parse_angle(args.theta)
    tex = dict(data.get("texture", {}))
    if args.texture:
        tex["kind"] = args.texture
    num = dict(data.get("numerics", {}))
    if args.quad is not None:
        num["quad"] = args.quad
        num["thickness_quad"] = 2 * args.quad
    if getattr(args, "grid", None):
        num["grid"] = args.grid
    if getattr(args, "h", None):
        try:
            num["h"] = [float(x) for x in args.h.split(",")]
        except ValueError:
            raise ConfigError(f"cannot parse --h {args.h!r}") from None
    if getattr(args, "n_samples", None) is not None:
        num["n_samples"] = args.n_samples
    merged = dict(data)
    for key, section in (("material", mat), ("domain", dom), ("texture", tex), ("numerics", num)):
        if section:
            merged[key] = section
    if args.out is not None:
        merged["out"] = args.out
    return RunConfig.from_dict(merged)


def _domain(cfg: RunConfig) -> plate.PlateDomain:
    return plate.PlateDomain(cfg.domain.length, cfg.domain.width, cfg.domain.theta)


def report_header(command: str, cfg: RunConfig) -> dict:
    return {"schema": SCHEMA, "schema_version": SCHEMA_VERSION, "version": __version__,
            "command": command, "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
            "config": cfg.to_dict()}


@contextlib.contextmanager
def _sink(path: Optional[str], newline: Optional[str] = None):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", newline=newline) as fh:
            yield fh


def _emit_json(report: dict, path: Optional[str]):
    with _sink(path) as fh:
        json.dump(report, fh, indent=2, sort_keys=False)
        fh.write("\n")


def _summary(obj: dict, to_stderr: bool):
    print(json.dumps(obj, indent=2), file=sys.stderr if to_stderr else sys.stdout)


# --- commands ---------------------------------------------------------------

def cmd_derive(cfg: RunConfig) -> int:
    params = cfg.material.params()
    texture = cfg.texture.build()
    form = Quadratic2.from_params(params)
    n = cfg.numerics.relax_quad
    model = relaxation.plate_model(texture, params, n)
    oracle = relaxation.relax_thickness_oracle(ThicknessProfile.from_texture(texture, params), form, n)
    report = report_header("derive", cfg)
    report.update({
        "texture": model.texture_tag,
        "alpha_coeff": qv(model.alpha_coeff, _units("alpha_coeff")),
        "target_curvature": qv(model.target_curvature, _units("target_curvature")),
        "residual": qv(model.residual, _units("residual")),
        "oracle": {
            "alpha_coeff": qv(oracle.alpha_coeff, _units("alpha_coeff")),
            "target_curvature": qv(oracle.target_curvature, _units("target_curvature")),
            "residual": qv(oracle.residual, _units("residual")),
        },
        "paper_comparison": relaxation.paper_comparison(model, n),
    })
    _emit_json(report, cfg.out)
    return EXIT_OK


def _units(key: str) -> str:
    return relaxation.PlateModel.units[key]


def cmd_rod(cfg: RunConfig) -> int:
    params = cfg.material.params()
    theta = cfg.domain.theta
    density = rod.RodDensity.from_params(theta, params)
    a_axis, b_axis = parse_grid(cfg.numerics.grid, density.k)
    A, B = np.meshgrid(a_axis, b_axis, indexing="ij")
    values = rod.rod_density(A, B, density)
    regions = rod.classify(A, B, density)
    ms = rod.rod_min_set(density)
    i = int(np.argmin(values))
    with _sink(cfg.out, newline="") as fh:
        fh.write(f"# ribbonlab rod-table schema={SCHEMA_VERSION} theta={_fmt(theta)} units=energy/length\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["theta", "alpha", "beta", "region", "value"])
        th = _fmt(theta)
        for a, b, r, v in zip(A.ravel(), B.ravel(), regions.ravel(), values.ravel()):
            w.writerow([th, _fmt(a), _fmt(b), str(r), _fmt(v)])
        fh.write(f"# min_set alpha_lo={_fmt(ms.alpha_interval[0])} alpha_hi={_fmt(ms.alpha_interval[1])} "
                 f"beta={_fmt(ms.beta)} value={_fmt(ms.value)}\n")
        fh.write(f"# grid_min alpha={_fmt(A.ravel()[i])} beta={_fmt(B.ravel()[i])} "
                 f"value={_fmt(values.ravel()[i])}\n")
    _summary({"theta": qv(theta, "rad"),
              "min_set": {"alpha_interval": qv(list(ms.alpha_interval), "1/length"),
                          "beta": qv(ms.beta, "1/length"), "value": qv(ms.value, "energy/length")},
              "grid_min": qv(float(values.ravel()[i]), "energy/length"),
              "regions": {r: int(np.sum(regions == r)) for r in ("D", "U", "V")}}, cfg.out is None)
    return EXIT_OK


def cmd_shape(cfg: RunConfig, flexure: float, torsion: float, from_min_set: Optional[float]) -> int:
    params = cfg.material.params()
    theta, length, width = cfg.domain.theta, cfg.domain.length, cfg.domain.width
    density = rod.RodDensity.from_params(theta, params)
    ms = rod.rod_min_set(density)
    if from_min_set is not None:
        if not 0.0 <= from_min_set <= 1.0:
            raise ConfigError("--from-min-set must lie in [0, 1]")
        flexure, torsion = ms.point(from_min_set)
    if not (math.isfinite(flexure) and math.isfinite(torsion)):
        raise ConfigError("rates must be finite")
    traj = geometry.integrate_frame(flexure, torsion, length=length, n_samples=cfg.numerics.n_samples)
    mesh = geometry.ribbon_mesh(traj, width, cfg.numerics.n_across,
                                {"theta": theta, "flexure": flexure, "torsion": torsion})
    energy = rod.rod_energy(traj.to_frame_field(), density)
    stem = Path(cfg.out or "ribbon")
    if stem.suffix in (".obj", ".csv"):
        stem = stem.with_suffix("")
    obj_path, csv_path = stem.with_suffix(".obj"), stem.with_suffix(".csv")
    geometry.write_obj(mesh, obj_path, {"schema": f"ribbonlab-mesh/{SCHEMA_VERSION}"})
    geometry.write_trajectory_csv(traj, csv_path)
    _summary({"obj": str(obj_path), "trajectory": str(csv_path),
              "flexure": qv(flexure, "1/length"), "torsion": qv(torsion, "1/length"),
              "rod_energy": qv(energy, "energy"), "minimum": qv(length * ms.value, "energy"),
              "gap": qv(energy - length * ms.value, "energy")}, False)
    return EXIT_OK


def cmd_gamma_check(cfg: RunConfig) -> int:
    params = cfg.material.params()
    texture = cfg.texture.build()
    form = Quadratic2.from_params(params)
    model = relaxation.plate_model(texture, params, cfg.numerics.relax_quad)
    phi, kappa = plate.minimize_over_cylinders(model, form, n_phi=cfg.numerics.n_phi).minimizers[0]
    base = plate.CylindricalIsometry(phi, kappa, _domain(cfg))
    quad = (cfg.numerics.quad, cfg.numerics.quad, cfg.numerics.thickness_quad)
    sweep = plate.gamma_scaling_sweep(texture, params, base, cfg.numerics.h, quad, record_errors=True)
    gaps = sweep.gaps()
    scale = max(abs(sweep.limit), params.mu * params.activation**2, 1e-300)
    exact = len(gaps) > 0 and bool(np.all(gaps <= 1e-12 * scale))
    threshold = cfg.numerics.slope_threshold
    passed = exact or (sweep.monotone() and math.isfinite(sweep.slope) and sweep.slope >= threshold)
    with _sink(cfg.out, newline="") as fh:
        fh.write(f"# ribbonlab gamma-sweep schema={SCHEMA_VERSION} texture={texture.tag} "
                 f"phi={_fmt(phi)} kappa={_fmt(kappa)} units=energy\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["h", "energy_rescaled", "gap", "slope_running"])
        for r in sweep.rows:
            w.writerow([_fmt(r.h), _fmt(r.energy_rescaled), _fmt(r.gap), _fmt(r.slope_running)])
        for r in sweep.rows:
            if r.error:
                fh.write(f"# error h={_fmt(r.h)}: {r.error}\n")
        fh.write(f"# limit={_fmt(sweep.limit)} slope={_fmt(sweep.slope)} threshold={_fmt(threshold)} "
                 f"passed={passed}\n")
    _summary({"limit": qv(sweep.limit, "energy"), "slope": qv(None if math.isnan(sweep.slope) else sweep.slope),
              "threshold": qv(threshold), "monotone": sweep.monotone(), "exact": exact, "passed": passed,
              "errors": [{"h": qv(r.h, "length"), "error": r.error} for r in sweep.rows if r.error]},
             cfg.out is None)
    return EXIT_OK if passed else EXIT_ACCEPTANCE


def cmd_verify(cfg: RunConfig, suite: str, d_branch_ratio: Optional[float]) -> int:
    params = cfg.material.params()
    result = verify.run_suite(params, suite, d_branch_ratio=d_branch_ratio, domain=_domain(cfg))
    report = report_header("verify", cfg)
    report["suite"] = suite
    report.update(result)
    _emit_json(report, cfg.out)
    for c in result["checks"]:
        tag = f"[{c['criterion']}]" if c["criterion"] is not None else "[-]"
        print(f"{'PASS' if c['passed'] else 'FAIL'} {tag} {c['name']}", file=sys.stderr)
    return EXIT_OK if result["acceptance_passed"] else EXIT_ACCEPTANCE


NUMERIC_ERRORS = (QuadratureError, InternalConsistencyError, AnsatzDegenerateError, DegenerateActivationError,
                  DomainSingularityError, FloatingPointError, np.linalg.LinAlgError)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        if args.command == "derive":
            return cmd_derive(cfg)
        if args.command == "rod":
            return cmd_rod(cfg)
        if args.command == "shape":
            return cmd_shape(cfg, args.flexure, args.torsion, args.from_min_set)
        if args.command == "gamma-check":
            return cmd_gamma_check(cfg)
        return cmd_verify(cfg, args.suite, args.d_branch_ratio)
    except NUMERIC_ERRORS as exc:
        print(f"ribbonlab: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, UnsupportedTextureError) as exc:
        print(f"ribbonlab: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"ribbonlab: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
