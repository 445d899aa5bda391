"""Command-line interface: ``sphere-neumann <subcommand> ...``.

Every subcommand prints one JSON object on stdout.  With ``--out DIR`` the
object is also written to ``DIR/<subcommand>.json`` and tables go to CSV files
in ``DIR``.  Exit status: 0 pass, 1 an inequality failed, 2 bad input or a
numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import barycenter, cap, fem, radial, verify
from .conformal import profile_G
from .errors import ConfigError, SphereNeumannError


def _complex_arg(text: str) -> complex:
    try:
        re, im = (float(x) for x in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected 're,im', got {text!r}") from exc
    return complex(re, im)


def _floats_arg(text: str):
    try:
        return [float(x) for x in text.split(",")]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _emit(args, name: str, payload: dict, tables: dict | None = None) -> None:
    text = json.dumps(_jsonable(payload), indent=2) + "\n"
    sys.stdout.write(text)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"{name}.json").write_text(text)
        for tname, rows in (tables or {}).items():
            with open(out / f"{tname}.csv", "w", newline="") as fh:
                w = csv.writer(fh)
                for row in rows:
                    w.writerow([repr(x) if isinstance(x, float) else x for x in row])


def _setup(args):
    cfg = verify.load_config(args.config)
    cfg["resolutions"] = verify.scale_resolutions(cfg["resolutions"], args.resolution_scale)
    return cfg, verify.build_domain(cfg)


def cmd_verify(args) -> int:
    report = verify.verify_chain(args.config, args.resolution_scale)
    _emit(args, "report", report.to_dict())
    if args.out:
        (Path(args.out) / "timings.json").write_text(json.dumps(report.timings, indent=2) + "\n")
    for k, v in report.timings.items():
        print(f"timing {k}: {v:.2f} s", file=sys.stderr)
    return report.exit_code


def cmd_cap(args) -> int:
    R = args.radius
    n = max(32, round(cap.default_cap_grid(R) * args.resolution_scale))
    modes = {str(k): cap.solve_cap_mode(R, k, args.count, n).eigenvalues
             for k in range(args.modes + 1)}
    mu2 = cap.cap_mu2(R, n)
    _emit(args, "cap", {"R": R, "M": cap.radius_to_area(R), "grid": n, "modes": modes,
                        "mu2": mu2.mu11, "mu02": mu2.mu02, "gap": mu2.gap})
    return 0 if mu2.gap > 0 else 1


def cmd_radial(args) -> int:
    cfg, domain = _setup(args)
    n = cfg["resolutions"]["sl_grid"]
    dens = domain.density(args.pole)
    sol = radial.solve_radial_weighted(dens, args.count, n)
    prof = radial.solve_sl_G(profile_G(dens, n), args.count, refinement_rtol=None)
    _emit(args, "radial", {"pole": args.pole, "M": domain.M, "grid": n,
                           "kappa_weighted": sol.eigenvalues, "kappa_profile": prof.eigenvalues},
          {"radial_eigenfunction": [("r", "v")] + list(zip(sol.grid.tolist(), sol.first.tolist()))})
    return 0


def cmd_neumann2d(args) -> int:
    cfg, domain = _setup(args)
    rings = cfg["resolutions"]["rings"]
    mesh = fem.build_disk_mesh(rings)
    res = fem.solve_neumann_weighted(mesh, domain.rho2, args.count)
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        mesh.dump(Path(args.out) / "mesh.txt")
    _emit(args, "neumann2d", {"M": domain.M, "rings": rings, "vertices": mesh.n_vertices,
                              "eigenvalues": res.eigenvalues, "residuals": res.residuals})
    return 0


def cmd_barycenter(args) -> int:
    cfg, domain = _setup(args)
    tol = cfg["tolerances"]["residual_V"]
    res = barycenter.find_balanced_pole(domain, tol=tol, n=cfg["resolutions"]["sl_grid"])
    _emit(args, "barycenter", {"M": domain.M, "q": res.q, "residual_V": res.residual,
                               "winding": res.winding, "iterations": res.iterations,
                               "candidates": res.candidates})
    return 0


def cmd_steklov(args) -> int:
    cfg, domain = _setup(args)
    n = cfg["resolutions"]["sl_grid"]
    spec = barycenter.steklov_spectrum(domain.M, 2 * args.sectors + 1)
    out, tables, ok = {"M": domain.M, "sigma": spec.eigenvalues, "sectors": {}}, {}, True
    for k in range(1, args.sectors + 1):
        tab = barycenter.steklov_limit_check(domain, args.magnitudes, k, n)
        out["sectors"][str(k)] = {"sigma": spec.level(k), "monotone": tab.monotone,
                                  "rows": [[r.magnitude, r.mu, r.error, r.relative_error]
                                           for r in tab.rows]}
        tables[f"steklov_sector{k}"] = [("magnitude", "mu", "error", "relative_error")] + \
            [(r.magnitude, r.mu, r.error, r.relative_error) for r in tab.rows]
        ok &= tab.monotone
    _emit(args, "steklov", out, tables)
    return 0 if ok else 1


def cmd_sweep(args) -> int:
    cfg, domain = _setup(args)
    sweep = cfg.get("sweep", {}) or {}
    n = int(sweep.get("sl_grid", cfg["resolutions"]["sl_grid"]))
    pole = complex(*sweep.get("pole", [0.0, 0.0]))
    M = domain.M
    G0 = verify.profile_from_spec(sweep.get("G0", "cap"), M, n, domain, pole)
    G1 = verify.profile_from_spec(sweep.get("G1", "domain"), M, n, domain, pole)
    tab = verify.monotonicity_sweep(G0, G1, int(sweep.get("steps", args.steps)))
    dis = tab.relative_disagreement
    _emit(args, "sweep", {"M": M, "grid": n, "G0": G0.label, "G1": G1.label,
                          "t": tab.t, "kappa1": tab.kappa, "nonincreasing": tab.nonincreasing,
                          "fh": tab.fh, "fd": tab.fd, "max_relative_disagreement": float(dis.max())},
          {"sweep": tab.rows(), "sweep_derivatives": tab.derivative_rows()})
    return 0 if tab.nonincreasing else 1


def cmd_profile(args) -> int:
    cfg, domain = _setup(args)
    tab = verify.isoperimetric_profile_check(domain, args.pole, cfg["resolutions"]["sl_grid"])
    gap = tab.G - tab.cap
    _emit(args, "profile", {"M": domain.M, "pole": args.pole, "nodes": int(tab.a.size),
                            "lower_holds": tab.lower_holds, "upper_holds": tab.upper_holds,
                            "min_G_minus_cap": float(gap.min()),
                            "max_L2_over_G": float(np.max(tab.L2 / tab.G))},
          {"profile": tab.rows()})
    return 0 if tab.holds else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sphere-neumann", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="directory for JSON/CSV outputs")
    common.add_argument("--resolution-scale", type=float, default=1.0,
                        help="multiply all resolutions by this factor")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("verify", parents=[common], help="run the full eigenvalue chain")
    s.add_argument("config")
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("cap", parents=[common], help="cap mode spectra")
    s.add_argument("--radius", type=float, required=True)
    s.add_argument("--modes", type=int, default=2, help="largest angular mode")
    s.add_argument("--count", type=int, default=3, help="eigenvalues per mode")
    s.set_defaults(func=cmd_cap)

    s = sub.add_parser("radial", parents=[common], help="radial spectrum at a pole")
    s.add_argument("config")
    s.add_argument("--pole", type=_complex_arg, default=0j)
    s.add_argument("--count", type=int, default=3)
    s.set_defaults(func=cmd_radial)

    s = sub.add_parser("neumann2d", parents=[common], help="2D weighted Neumann spectrum")
    s.add_argument("config")
    s.add_argument("--count", type=int, default=4)
    s.set_defaults(func=cmd_neumann2d)

    s = sub.add_parser("barycenter", parents=[common], help="balanced pole")
    s.add_argument("config")
    s.set_defaults(func=cmd_barycenter)

    s = sub.add_parser("steklov", parents=[common], help="Neumann-to-Steklov limit table")
    s.add_argument("config")
    s.add_argument("--magnitudes", type=_floats_arg, default=[0.9, 0.99, 0.999])
    s.add_argument("--sectors", type=int, default=2)
    s.set_defaults(func=cmd_steklov)

    s = sub.add_parser("sweep-monotone", parents=[common], help="kappa_1 along G0 -> G1")
    s.add_argument("config")
    s.add_argument("--steps", type=int, default=10)
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("profile", parents=[common], help="isoperimetric profile table")
    s.add_argument("config")
    s.add_argument("--pole", type=_complex_arg, default=0j)
    s.set_defaults(func=cmd_profile)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, SphereNeumannError, FloatingPointError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
