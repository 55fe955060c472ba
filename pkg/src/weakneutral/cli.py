"""Command line front end.

Subcommands:

    design          interface parameter for a shape -> interface.json, beta.csv
    pt              polarization tensors (spectral + boundary integral)
    compare         field grids for the designed and perfect-bonding solutions
    check-geometry  ellipse/ellipsoid membership test for sampled surfaces
    verify          full acceptance check suite -> report.json, nonzero exit on failure

Options may come from flags or from a flat key=value config file; flags win.
NI_THREADS (default 1) sizes the worker pool used for independent solves.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import shapely

from . import bem, conformal, disk_spectral, interface, verify
from .pt import write_pt_json

_CONFIG_KEYS = ("shape", "mode", "n", "N", "grid", "out")


@dataclass
class RunConfig:
    shape: str | None = None
    mode: str = "closed_form"
    n: int = 512
    N: int = 128
    grid: tuple | None = None
    out: str = "."
    threads: int = 1


def _read_config(path: str) -> dict:
    vals = {}
    with open(path) as f:
        for lineno, raw in enumerate(f, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key = value")
            key, val = (s.strip() for s in line.split("=", 1))
            if key not in _CONFIG_KEYS:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
            vals[key] = val
    return vals


def _parse_grid(text: str) -> tuple:
    parts = text.split(",")
    if len(parts) != 5:
        raise ValueError("grid must be xmin,xmax,ymin,ymax,res")
    xmin, xmax, ymin, ymax = (float(p) for p in parts[:4])
    res = int(parts[4])
    if not (xmax > xmin and ymax > ymin and res >= 2):
        raise ValueError("grid needs xmax > xmin, ymax > ymin, res >= 2")
    return (xmin, xmax, ymin, ymax, res)


def _build_config(args) -> RunConfig:
    cfg = RunConfig()
    if args.config:
        raw = _read_config(args.config)
        if "shape" in raw:
            cfg.shape = raw["shape"]
        if "mode" in raw:
            cfg.mode = raw["mode"]
        if "n" in raw:
            cfg.n = int(raw["n"])
        if "N" in raw:
            cfg.N = int(raw["N"])
        if "grid" in raw:
            cfg.grid = _parse_grid(raw["grid"])
        if "out" in raw:
            cfg.out = raw["out"]
    if args.shape is not None:
        cfg.shape = args.shape
    if args.mode is not None:
        cfg.mode = args.mode
    if args.n is not None:
        cfg.n = args.n
    if getattr(args, "N") is not None:
        cfg.N = args.N
    if args.grid is not None:
        cfg.grid = _parse_grid(args.grid)
    if args.out is not None:
        cfg.out = args.out
    env = os.environ.get("NI_THREADS", "").strip()
    if env:
        try:
            cfg.threads = int(env)
        except ValueError:
            raise ValueError(f"NI_THREADS must be an integer, got {env!r}")
        if cfg.threads < 1:
            raise ValueError("NI_THREADS must be >= 1")
    if cfg.mode not in ("closed_form", "calibrated"):
        raise ValueError("mode must be closed_form or calibrated")
    return cfg


def _check_resolution(cfg: RunConfig, min_n: int = 128) -> None:
    if cfg.n < min_n or cfg.n % 2:
        raise ValueError(f"n must be even and >= {min_n}, got {cfg.n}")
    if cfg.N < 64:
        raise ValueError(f"N must be >= 64, got {cfg.N}")


def _require_shape(cfg: RunConfig) -> conformal.ConformalMap:
    if not cfg.shape:
        raise ValueError("a shape is required (--shape ellipse:a,b | droplet | laurent:FILE)")
    return conformal.parse_shape_spec(cfg.shape)


def _outdir(cfg: RunConfig) -> str:
    os.makedirs(cfg.out, exist_ok=True)
    return cfg.out


def _mesh_for(m: conformal.ConformalMap, n: int) -> bem.BoundaryMesh:
    grading = "corner" if m.corner_angles else "none"
    return bem.discretize(m, n, grading=grading)


def _tensor_entries(T: np.ndarray) -> dict:
    return {"T11": float(T[0, 0]), "T12": float(T[0, 1]),
            "T21": float(T[1, 0]), "T22": float(T[1, 1])}


# ---------------------------------------------------------------------------
# subcommands

def cmd_design(cfg: RunConfig) -> int:
    m = _require_shape(cfg)
    if cfg.N < 64:
        raise ValueError(f"N must be >= 64, got {cfg.N}")
    adm = conformal.admissibility(m)
    print(f"|b1| = {adm['b_abs']:.9f}  (bound 2 - sqrt(3) = {conformal.ADMISSIBLE_BOUND:.9f})")
    print(f"phase = {adm['phase']:.9f}")
    print("within guaranteed range:", "yes" if adm["theorem_1_1_ok"] else "no")
    param = interface.design(m, mode=cfg.mode, N=cfg.N)
    out = _outdir(cfg)
    interface.write_interface_json(param, os.path.join(out, "interface.json"))
    interface.write_beta_csv(param, os.path.join(out, "beta.csv"))
    print(f"gamma0 = {param.gamma0!r}")
    print(f"gamma2 = {param.gamma2!r}")
    print(f"provenance = {param.provenance}")
    print(f"wrote {os.path.join(out, 'interface.json')}")
    print(f"wrote {os.path.join(out, 'beta.csv')}")
    return 0


def cmd_pt(cfg: RunConfig) -> int:
    m = _require_shape(cfg)
    _check_resolution(cfg)
    param = interface.design(m, mode=cfg.mode, N=cfg.N)
    out = _outdir(cfg)

    T_sp = disk_spectral.polarization(param.gamma_modes(), cfg.N)
    write_pt_json(T_sp, os.path.join(out, "pt_spectral.json"))
    dens = disk_spectral.solve_dense(param.gamma_modes(), cfg.N)
    disk_spectral.write_density_json(dens, os.path.join(out, "density.json"))

    mesh = _mesh_for(m, cfg.n)
    beta = param.beta(mesh.theta)
    T_bem = bem.polarization_general(mesh, beta)
    write_pt_json(T_bem, os.path.join(out, "pt_bem.json"))
    bem.write_mesh_csv(mesh, os.path.join(out, "mesh.csv"))
    T_perf = bem.polarization_perfect(mesh)

    b = m.b1
    B = 2.0 * np.pi * np.array([[b.real, b.imag], [b.imag, -b.real]])
    pull = T_sp.T - B
    diff = float(np.linalg.norm(T_bem.T - pull, 2))
    ratio = T_bem.norm() / T_perf.norm()
    rec = {
        "shape": cfg.shape, "mode": cfg.mode, "n": cfg.n, "N": cfg.N,
        "b_re": b.real, "b_im": b.imag,
        "spectral": _tensor_entries(T_sp.T),
        "bem": _tensor_entries(T_bem.T),
        "perfect": _tensor_entries(T_perf.T),
        "pullback_prediction": _tensor_entries(pull),
        "bem_vs_pullback": diff,
        "neutrality_ratio": ratio,
    }
    with open(os.path.join(out, "pt_report.json"), "w") as f:
        json.dump(rec, f, indent=2, sort_keys=True)
        f.write("\n")
    print(f"T_bem      = [[{T_bem.T[0,0]: .6e}, {T_bem.T[0,1]: .6e}],")
    print(f"              [{T_bem.T[1,0]: .6e}, {T_bem.T[1,1]: .6e}]]")
    print(f"bem vs pullback prediction: {diff:.3e}")
    print(f"neutrality ratio |T_weak| / |T_perfect| = {ratio:.6e}")
    for name in ("pt_spectral.json", "pt_bem.json", "pt_report.json", "mesh.csv", "density.json"):
        print(f"wrote {os.path.join(out, name)}")
    return 0


def _field_csv(path, mesh, sol, xs, ys, masked) -> None:
    XX, YY = np.meshgrid(xs, ys)
    pts = XX.ravel() + 1j * YY.ravel()
    flat = masked.ravel()
    u = np.full(pts.size, np.nan)
    if np.any(~flat):
        u[~flat] = np.atleast_1d(bem.eval_field(mesh, sol, pts[~flat]))
    bg = sol.a[0] * pts.real + sol.a[1] * pts.imag
    with open(path, "w", newline="") as f:
        wr = csv.writer(f)
        wr.writerow(["x", "y", "u", "pert", "masked"])
        for i in range(pts.size):
            if flat[i]:
                wr.writerow([repr(float(pts[i].real)), repr(float(pts[i].imag)), "", "", "1"])
            else:
                wr.writerow([repr(float(pts[i].real)), repr(float(pts[i].imag)),
                             repr(float(u[i])), repr(float(u[i] - bg[i])), "0"])


def cmd_compare(cfg: RunConfig) -> int:
    m = _require_shape(cfg)
    _check_resolution(cfg)
    if cfg.grid is None:
        raise ValueError("compare requires --grid xmin,xmax,ymin,ymax,res")
    param = interface.design(m, mode=cfg.mode, N=cfg.N)
    mesh = _mesh_for(m, cfg.n)
    beta = param.beta(mesh.theta)
    out = _outdir(cfg)

    xmin, xmax, ymin, ymax, res = cfg.grid
    xs = np.linspace(xmin, xmax, res)
    ys = np.linspace(ymin, ymax, res)
    XX, YY = np.meshgrid(xs, ys)
    pts = XX.ravel() + 1j * YY.ravel()
    ring = m.boundary(2.0 * np.pi * (np.arange(2048) + 0.5) / 2048.0)
    poly = shapely.Polygon(np.column_stack([ring.real, ring.imag]))
    masked = shapely.contains_xy(poly, pts.real, pts.imag)
    masked |= bem.too_close(mesh, pts, 2.0)
    if m.corner_angles:
        disk = 5.0 * float(mesh.w.mean())
        for thc in m.corner_angles:
            cz = complex(m.map(np.exp(1j * thc)))
            masked |= np.abs(pts - cz) < disk
    masked = masked.reshape(res, res)

    jobs = [
        ("field_imperfect_e1.csv", bem.solve_imperfect(mesh, beta, (1.0, 0.0))),
        ("field_imperfect_e2.csv", bem.solve_imperfect(mesh, beta, (0.0, 1.0))),
        ("field_perfect_e1.csv", bem.solve_perfect(mesh, (1.0, 0.0))),
        ("field_perfect_e2.csv", bem.solve_perfect(mesh, (0.0, 1.0))),
    ]

    def run(job):
        name, sol = job
        _field_csv(os.path.join(out, name), mesh, sol, xs, ys, masked)
        return name

    if cfg.threads > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            names = list(pool.map(run, jobs))
    else:
        names = [run(j) for j in jobs]

    fit_w = verify.farfield_decay(mesh, jobs[0][1])
    fit_p = verify.farfield_decay(mesh, jobs[2][1])
    dec = {
        "radii": [float(r) for r in fit_w.radii],
        "amplitude_imperfect": [float(v) for v in fit_w.amplitude],
        "amplitude_perfect": [float(v) for v in fit_p.amplitude],
        "slope_imperfect": fit_w.slope,
        "slope_perfect": fit_p.slope,
    }
    with open(os.path.join(out, "decay.json"), "w") as f:
        json.dump(dec, f, indent=2, sort_keys=True)
        f.write("\n")
    print(f"far-field slopes: imperfect {fit_w.slope:.3f}, perfect {fit_p.slope:.3f}")
    for name in names + ["decay.json"]:
        print(f"wrote {os.path.join(out, name)}")
    return 0


def _read_surface_csv(path: str):
    pts, nrm = [], []
    with open(path, newline="") as f:
        rd = csv.DictReader(f)
        need = {"x", "y", "z", "nx", "ny", "nz"}
        if rd.fieldnames is None or not need.issubset(rd.fieldnames):
            raise ValueError(f"{path}: surface CSV needs columns x,y,z,nx,ny,nz")
        for row in rd:
            pts.append([float(row["x"]), float(row["y"]), float(row["z"])])
            nrm.append([float(row["nx"]), float(row["ny"]), float(row["nz"])])
    if len(pts) < 8:
        raise ValueError(f"{path}: need at least 8 surface samples")
    return np.array(pts), np.array(nrm)


def cmd_check_geometry(cfg: RunConfig) -> int:
    spec = cfg.shape or ""
    if not spec:
        raise ValueError("a shape is required (2D spec, sphere, ellipsoid:c1,c2,c3, "
                         "or surface:FILE)")
    if spec == "sphere":
        pts, nrm = verify.sample_ellipsoid(1.0, 1.0, 1.0, 500)
    elif spec.startswith("ellipsoid:"):
        c = [float(p) for p in spec.split(":", 1)[1].split(",")]
        if len(c) != 3 or min(c) <= 0:
            raise ValueError("ellipsoid spec needs three positive semi-axes c1,c2,c3")
        pts, nrm = verify.sample_ellipsoid(*c, 500)
    elif spec.startswith("surface:"):
        pts, nrm = _read_surface_csv(spec.split(":", 1)[1])
    else:
        m = conformal.parse_shape_spec(spec)
        _check_resolution(cfg)
        pts, nrm = verify.mesh_samples(_mesh_for(m, cfg.n))
    gr = verify.ellipsoid_residual(pts, nrm)
    dim = pts.shape[1]
    family = "ellipse" if dim == 2 else "ellipsoid"
    best = None
    if gr.is_ellipsoid(1e-10):
        verdict = family
        print(f"verdict: {family}")
        print("semi-axes:", ", ".join(f"{r!r}" for r in gr.radii))
    elif dim == 2:
        res, axes, center = verify.best_fit_ellipse_residual(pts)
        best = {"residual": res, "a": axes[0], "b": axes[1],
                "cx": center[0], "cy": center[1]}
        verdict = "not an ellipse" if res > 0.05 else "approximate ellipse"
        print(f"verdict: {verdict}")
        print(f"best centered ellipse: a = {axes[0]:.6f}, b = {axes[1]:.6f}, "
              f"misfit {res:.4f}")
    else:
        verdict = "not an ellipsoid"
        print(f"verdict: {verdict}")
    print(f"normal-ratio residual: {gr.residual:.3e} over {gr.n_used} usable samples")
    out = _outdir(cfg)
    rec = {
        "input": spec, "verdict": verdict, "residual": gr.residual,
        "radii": [r if np.isfinite(r) else None for r in gr.radii],
        "n_samples": gr.n_samples, "n_used": gr.n_used, "best_fit": best,
    }
    with open(os.path.join(out, "geometry.json"), "w") as f:
        json.dump(rec, f, indent=2, sort_keys=True)
        f.write("\n")
    print(f"wrote {os.path.join(out, 'geometry.json')}")
    return 0


def cmd_verify(cfg: RunConfig) -> int:
    if cfg.n < 16 or cfg.n % 2:
        raise ValueError(f"n must be even and >= 16, got {cfg.n}")
    if cfg.N < 64:
        raise ValueError(f"N must be >= 64, got {cfg.N}")
    droplet_n = 1024 if cfg.n >= 512 else 2 * cfg.n
    results = verify.acceptance_suite(n=cfg.n, N=cfg.N, droplet_n=droplet_n,
                                      threads=cfg.threads)
    out = _outdir(cfg)
    verify.write_report(results, os.path.join(out, "report.json"),
                        parameters={"n": cfg.n, "N": cfg.N, "droplet_n": droplet_n})
    for r in results:
        tag = "PASS" if r.passed else "FAIL"
        print(f"{tag} {r.name}: {r.value:.6e} {r.op} {r.tol:.6e}")
    n_fail = sum(not r.passed for r in results)
    print(f"{len(results) - n_fail} passed, {n_fail} failed "
          f"({os.path.join(out, 'report.json')})")
    return 1 if n_fail else 0


# ---------------------------------------------------------------------------

def main(argv=None) -> int:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value options file")
    common.add_argument("--out", help="output directory (default .)")
    common.add_argument("--shape", help="ellipse:a,b | droplet | laurent:FILE")
    common.add_argument("--mode", choices=("closed_form", "calibrated"),
                        help="interface design mode (default closed_form)")
    common.add_argument("--n", type=int, help="boundary nodes (default 512)")
    common.add_argument("--N", type=int, help="Fourier truncation (default 128)")
    common.add_argument("--grid", help="xmin,xmax,ymin,ymax,res field grid")

    parser = argparse.ArgumentParser(
        prog="weakneutral",
        description="Weakly neutral inclusions through imperfect interfaces.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("design", parents=[common],
                   help="interface parameter and beta profile for a shape")
    sub.add_parser("pt", parents=[common],
                   help="polarization tensors from both solvers")
    sub.add_parser("compare", parents=[common],
                   help="field grids for designed vs perfect bonding")
    sub.add_parser("check-geometry", parents=[common],
                   help="ellipse/ellipsoid membership test")
    sub.add_parser("verify", parents=[common],
                   help="run the acceptance checks and write report.json")
    args = parser.parse_args(argv)

    try:
        cfg = _build_config(args)
        handler = {
            "design": cmd_design,
            "pt": cmd_pt,
            "compare": cmd_compare,
            "check-geometry": cmd_check_geometry,
            "verify": cmd_verify,
        }[args.command]
        return handler(cfg)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
