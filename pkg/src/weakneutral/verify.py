"""Cross-checks, far-field diagnostics, and the acceptance check suite.

Everything here is deterministic: sample points come from fixed grids or
golden-ratio sequences, never from a random generator, so a report written
twice from the same build is byte-identical.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import scipy.optimize

from . import bem, disk_spectral, interface
from .conformal import ConformalMap, invert_map, make_droplet_map, make_ellipse_map

_GOLDEN = 0.5 * (np.sqrt(5.0) - 1.0)


# ---------------------------------------------------------------------------
# far-field decay

@dataclass(frozen=True)
class DecayFit:
    """Least-squares power-law fit of the far-field perturbation.

    amplitude[k] is the max of |u - a.x| over the angle grid at radii[k];
    radii below the amplitude floor are dropped from the log-log fit
    (n_used counts the kept ones). slope is nan when fewer than two radii
    survive.
    """

    radii: np.ndarray
    amplitude: np.ndarray
    slope: float
    intercept: float
    n_used: int
    floor: float

    def predicted(self, r):
        return np.exp(self.intercept) * np.asarray(r, dtype=float) ** self.slope


def farfield_decay(mesh: bem.BoundaryMesh, sol: bem.DensitySolution,
                   radii=(5.0, 10.0, 20.0, 40.0), n_angles: int = 64,
                   floor: float = 1e-13) -> DecayFit:
    """Fit |u - a.x| ~ C r^slope on circles of the given radii."""
    radii = np.asarray(radii, dtype=float)
    if radii.size < 2 or np.any(np.diff(radii) <= 0):
        raise ValueError("need at least two strictly increasing radii")
    ang = 2.0 * np.pi * np.arange(n_angles) / n_angles
    pts = (radii[:, None] * np.exp(1j * ang)[None, :]).ravel()
    u = np.asarray(bem.eval_field(mesh, sol, pts))
    bg = sol.a[0] * pts.real + sol.a[1] * pts.imag
    amp = np.abs(u - bg).reshape(radii.size, n_angles).max(axis=1)
    keep = amp > floor
    if keep.sum() >= 2:
        A = np.column_stack([np.log(radii[keep]), np.ones(int(keep.sum()))])
        coef, *_ = np.linalg.lstsq(A, np.log(amp[keep]), rcond=None)
        slope, intercept = float(coef[0]), float(coef[1])
    else:
        slope, intercept = float("nan"), float("nan")
    return DecayFit(radii=radii, amplitude=amp, slope=slope, intercept=intercept,
                    n_used=int(keep.sum()), floor=floor)


# ---------------------------------------------------------------------------
# solver cross-checks

def oracle_crosscheck(m: ConformalMap, param: interface.InterfaceParameter,
                      n: int = 512, N: int = 128, n_points: int = 100,
                      r_range=(2.0, 5.0), a=(1.0, 0.0)) -> dict:
    """Compare the boundary-integral field against the disk-harmonic field.

    With beta the pull-back of gamma the two solutions agree pointwise:
    u(z) = v(zeta) at z = Phi(zeta). Samples are spread over the annulus
    |z| in r_range with golden-angle spacing; points landing too close to
    either boundary are skipped and counted.
    """
    grading = "corner" if m.corner_angles else "none"
    mesh = bem.discretize(m, n, grading=grading)
    beta = param.beta(mesh.theta)
    sol = bem.solve_imperfect(mesh, beta, a)
    dens = disk_spectral.solve_dense(param.gamma_modes(), N, a)
    k = np.arange(n_points)
    z = np.linspace(r_range[0], r_range[1], n_points) * np.exp(2j * np.pi * ((k * _GOLDEN) % 1.0))
    zeta = np.array([invert_map(m, zz) for zz in z])
    keep = (np.abs(zeta) > 1.05) & ~bem.too_close(mesh, z)
    if not np.any(keep):
        raise ValueError("no usable sample points; enlarge r_range")
    u = np.atleast_1d(bem.eval_field(mesh, sol, z[keep]))
    v = np.atleast_1d(disk_spectral.eval_disk_field(dens, zeta[keep]))
    rel = np.abs(u - v) / np.maximum(1.0, np.abs(v))
    return {
        "max_rel_diff": float(np.max(rel)),
        "n_used": int(keep.sum()),
        "n_skipped": int(n_points - keep.sum()),
    }


def pt_invariance(mesh: bem.BoundaryMesh, beta, rho: float = 0.7,
                  shift=(0.3, -0.2)) -> dict:
    """Polarization-tensor frame errors under rotation and translation.

    The tensor must rotate as T -> R T R^T and ignore translations (the
    weighted zero-mean constraint kills the shift term). Errors are
    Frobenius norms relative to max(1, |T|_F).
    """
    T = bem.polarization_general(mesh, beta).T
    Tr = bem.polarization_general(mesh.rotated(rho), beta).T
    Tt = bem.polarization_general(mesh.translated(shift), beta).T
    c, s = np.cos(rho), np.sin(rho)
    R = np.array([[c, -s], [s, c]])
    scale = max(1.0, float(np.linalg.norm(T)))
    return {
        "rotation_error": float(np.linalg.norm(Tr - R @ T @ R.T)) / scale,
        "translation_error": float(np.linalg.norm(Tt - T)) / scale,
        "T": T, "T_rotated": Tr, "T_translated": Tt,
    }


def neutrality_gap(m: ConformalMap, n: int = 512, N: int = 128,
                   mode: str = "calibrated", radii=(5.0, 10.0, 20.0, 40.0),
                   n_angles: int = 64) -> dict:
    """Neutrality diagnostics: designed interface against perfect bonding.

    Returns the two polarization tensors, their norm ratio, and far-field
    decay fits for both solutions (direction e1).
    """
    grading = "corner" if m.corner_angles else "none"
    mesh = bem.discretize(m, n, grading=grading)
    param = interface.design(m, mode=mode, N=N)
    beta = param.beta(mesh.theta)
    T_weak = bem.polarization_general(mesh, beta)
    T_perf = bem.polarization_perfect(mesh)
    sol_w = bem.solve_imperfect(mesh, beta, (1.0, 0.0))
    sol_p = bem.solve_perfect(mesh, (1.0, 0.0))
    return {
        "param": param,
        "mesh": mesh,
        "beta": beta,
        "T_weak": T_weak,
        "T_perf": T_perf,
        "ratio": T_weak.norm() / T_perf.norm(),
        "fit_weak": farfield_decay(mesh, sol_w, radii, n_angles),
        "fit_perfect": farfield_decay(mesh, sol_p, radii, n_angles),
        "condition_weak": sol_w.condition,
    }


# ---------------------------------------------------------------------------
# geometry characterization

@dataclass(frozen=True)
class GeometryResidual:
    """Consistency residual of surface samples with an axis-aligned ellipsoid.

    On an ellipsoid sum_i y_i^2 / c_i^2 = 1 the unit normal satisfies
    nu_i proportional to y_i / c_i^2, so the per-sample ratios
    (nu_i/y_i) / (nu_j/y_j) are constants; residual is the largest relative
    spread of those ratios. radii holds the recovered c_i (nan where the
    samples do not determine a positive value).
    """

    residual: float
    radii: tuple
    n_samples: int
    n_used: int

    def is_ellipsoid(self, tol: float = 1e-10) -> bool:
        return self.residual <= tol


def ellipsoid_residual(points, normals, cutoff: float = 1e-3) -> GeometryResidual:
    y = np.asarray(points, dtype=float)
    nu = np.asarray(normals, dtype=float)
    if y.ndim != 2 or y.shape != nu.shape or y.shape[1] not in (2, 3):
        raise ValueError("points and normals must be (n, 2) or (n, 3) arrays of equal shape")
    norms = np.linalg.norm(nu, axis=1)
    if np.any(norms <= 0.0):
        raise ValueError("normals must be nonzero")
    nu = nu / norms[:, None]
    valid = np.abs(y) > cutoff
    with np.errstate(divide="ignore", invalid="ignore"):
        q = np.where(valid, nu / y, np.nan)
    d = y.shape[1]
    residual, n_pairs = 0.0, 0
    for i in range(d):
        for j in range(i + 1, d):
            both = valid[:, i] & valid[:, j] & (np.abs(q[:, j]) > 0.0)
            if both.sum() < 2:
                continue
            r = q[both, i] / q[both, j]
            med = np.median(r)
            residual = max(residual, float(np.ptp(r)) / max(abs(float(med)), 1e-300))
            n_pairs += 1
    if n_pairs == 0:
        raise ValueError("samples do not constrain the axis ratios; need off-axis points")
    # on the surface sum y_i^2/c_i^2 = 1 forces c_i^2 = (y.nu) y_i / nu_i
    t = np.sum(y * nu, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        c2 = np.where(valid & (np.abs(nu) > 0.0), t[:, None] * y / nu, np.nan)
    radii = []
    for i in range(d):
        col = c2[:, i]
        col = col[np.isfinite(col)]
        radii.append(float(np.sqrt(col.mean())) if col.size and col.mean() > 0 else float("nan"))
    return GeometryResidual(
        residual=float(residual), radii=tuple(radii),
        n_samples=y.shape[0], n_used=int((valid.sum(axis=1) >= 2).sum()),
    )


def best_fit_ellipse_residual(points, rounds: int = 4):
    """RMS misfit of 2D boundary samples to the best centered ellipse.

    Centers at the sample mean, scans a log grid of semi-axes, then refines
    each axis by bounded scalar minimization. Returns (residual, (a, b),
    center).
    """
    y = np.asarray(points, dtype=float)
    if y.ndim != 2 or y.shape[1] != 2 or y.shape[0] < 8:
        raise ValueError("need an (n, 2) sample array with n >= 8")
    center = y.mean(axis=0)
    x1, x2 = (y - center).T
    sx, sy = np.max(np.abs(x1)), np.max(np.abs(x2))
    if sx <= 0 or sy <= 0:
        raise ValueError("degenerate samples: no spread along an axis")

    def misfit(aa, bb):
        v = (x1 / aa) ** 2 + (x2 / bb) ** 2 - 1.0
        return float(np.sqrt(np.mean(v ** 2)))

    ga = np.geomspace(0.25 * sx, 4.0 * sx, 33)
    gb = np.geomspace(0.25 * sy, 4.0 * sy, 33)
    vals = np.array([[misfit(aa, bb) for bb in gb] for aa in ga])
    ia, ib = np.unravel_index(np.argmin(vals), vals.shape)
    a, b = float(ga[ia]), float(gb[ib])
    for _ in range(rounds):
        a = float(scipy.optimize.minimize_scalar(
            lambda v: misfit(v, b), bounds=(0.5 * a, 2.0 * a),
            method="bounded", options={"xatol": 1e-12}).x)
        b = float(scipy.optimize.minimize_scalar(
            lambda v: misfit(a, v), bounds=(0.5 * b, 2.0 * b),
            method="bounded", options={"xatol": 1e-12}).x)
    return misfit(a, b), (a, b), (float(center[0]), float(center[1]))


def sample_ellipse(a: float, b: float, n: int = 360):
    """Boundary points and outward unit normals of an axis-aligned ellipse."""
    th = 2.0 * np.pi * (np.arange(n) + 0.5) / n
    pts = np.column_stack([a * np.cos(th), b * np.sin(th)])
    nrm = np.column_stack([np.cos(th) / a, np.sin(th) / b])
    return pts, nrm / np.linalg.norm(nrm, axis=1)[:, None]


def sample_ellipsoid(c1: float, c2: float, c3: float, n: int = 500):
    """Fibonacci-spaced points and outward unit normals of an ellipsoid."""
    k = np.arange(n)
    z = 1.0 - (2.0 * k + 1.0) / n
    r = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
    phi = 2.0 * np.pi * ((k * _GOLDEN) % 1.0)
    u = np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    c = np.array([c1, c2, c3], dtype=float)
    pts = u * c
    nrm = pts / c ** 2
    return pts, nrm / np.linalg.norm(nrm, axis=1)[:, None]


def mesh_samples(mesh: bem.BoundaryMesh):
    """Boundary samples (points, unit normals) of a discretized shape."""
    return mesh.nodes_xy(), mesh.normals_xy()


# ---------------------------------------------------------------------------
# acceptance check suite

@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    value: float
    tol: float
    op: str = "<="
    detail: str = ""

    def to_dict(self) -> dict:
        val = float(self.value)
        return {
            "name": self.name,
            "passed": bool(self.passed),
            "value": val if np.isfinite(val) else None,
            "tol": float(self.tol),
            "op": self.op,
            "detail": self.detail,
        }


def _leq(name, value, tol, detail="") -> CheckResult:
    value = float(value)
    return CheckResult(name, bool(np.isfinite(value) and value <= tol), value,
                       float(tol), "<=", detail)


def _gt(name, value, tol, detail="") -> CheckResult:
    value = float(value)
    return CheckResult(name, bool(np.isfinite(value) and value > tol), value,
                       float(tol), ">", detail)


def _parallel(fns, threads: int):
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futs = [pool.submit(fn) for fn in fns]
            return [f.result() for f in futs]
    return [fn() for fn in fns]


def _circle_bundle(N: int):
    m = make_ellipse_map(1.0, 1.0)
    mesh = bem.discretize(m, 256)
    param = interface.design(m, "closed_form")
    return {"map": m, "mesh": mesh, "param": param,
            "beta": param.beta(mesh.theta)}


def _ellipse_bundle(n: int, N: int):
    m = make_ellipse_map(1.25, 0.75)
    gap = neutrality_gap(m, n=n, N=N, mode="calibrated")
    cf = interface.design(m, "closed_form")
    return {"map": m, "gap": gap, "param_cf": cf,
            "beta_cf": cf.beta(gap["mesh"].theta)}


def _droplet_bundle(droplet_n: int, N: int):
    m = make_droplet_map()
    gap = neutrality_gap(m, n=droplet_n, N=N, mode="calibrated")
    return {"map": m, "gap": gap, "param_cf": interface.design(m, "closed_form")}


def acceptance_suite(n: int = 512, N: int = 128, droplet_n: int | None = None,
                     threads: int = 1) -> list:
    """Run every acceptance check and return the CheckResult list.

    The two disk closed-form target rows at |b_1| = 0.10 and 0.25 measure an
    intrinsic limitation of the closed-form parameter (its dipole residual
    grows with |b_1| and crosses the 5 percent bar between 0.05 and 0.10);
    they are expected to fail and are kept as honest measurements.
    """
    if droplet_n is None:
        droplet_n = 1024 if n >= 512 else 2 * n
    results: list = []

    # -- disk interface parameters ------------------------------------------
    g0, g2 = interface.gamma_closed_form(Fraction(1, 4))
    exact = (g0 == Fraction(17, 15) and g2 == Fraction(-8, 15)
             and g0 + 2 * g2 == Fraction(1, 15) and g0 - 2 * g2 == Fraction(33, 15))
    results.append(CheckResult(
        "disk_closed_form_rational", exact, 0.0 if exact else 1.0, 0.0, "==",
        "gamma0 = 17/15, gamma2 = -8/15, gamma(0) = 1/15, gamma(pi/2) = 33/15 in exact arithmetic"))

    for b in (0.05, 0.10, 0.25):
        tag = f"b{int(round(100 * b)):03d}"
        cg0, cg2 = interface.calibrate_gamma(b, N=128)
        res = disk_spectral.polarization({0: cg0, 2: cg2, -2: cg2}, 128)
        T = res.T - 2.0 * np.pi * np.diag([b, -b])
        results.append(_leq(
            f"disk_calibrated_neutral_{tag}", float(np.max(np.abs(T))), 1e-9,
            f"gamma0 = {cg0!r}, gamma2 = {cg2!r}, dipole target hit at N = 128"))

    for b in (0.05, 0.10, 0.25):
        tag = f"b{int(round(100 * b)):03d}"
        fg0, fg2 = interface.gamma_closed_form(b)
        T = disk_spectral.polarization((fg0, fg2), 128).T
        rel = max(abs(T[0, 0] / (2 * np.pi) - b), abs(T[1, 1] / (2 * np.pi) + b)) / b
        results.append(_leq(
            f"disk_closed_form_target_{tag}", rel, 0.05,
            "relative dipole residual of the closed-form parameter; grows with |b1| "
            "and is an intrinsic property of that formula, not of the solver"))

    # -- tridiagonal routes ---------------------------------------------------
    tg0, tg2 = interface.gamma_closed_form(0.2)
    dens = disk_spectral.solve_dense((tg0, tg2), 128)
    ks = np.arange(1, 65)
    err = 0.0
    for which, ref in (("A", dens.phi1[2 * ks - 1 + 128].real),
                       ("B", dens.phi2[2 * ks - 1 + 128].imag)):
        xa = disk_spectral.solve_tridiagonal(tg0, tg2, 64, which)
        xb = disk_spectral.solve_tridiagonal_elimination(tg0, tg2, 64, which)
        err = max(err, float(np.max(np.abs(xa - xb))), float(np.max(np.abs(xa - ref))))
    results.append(_leq(
        "tridiagonal_triple_equivalence", err, 1e-10,
        "explicit inverse column, banded elimination, and the dense odd-mode "
        "solve agree at size 64 (|b1| = 0.2)"))

    # -- shape bundles --------------------------------------------------------
    circle, ellipse, droplet = _parallel(
        [lambda: _circle_bundle(N), lambda: _ellipse_bundle(n, N),
         lambda: _droplet_bundle(droplet_n, N)], threads)

    # -- circle operator spectra ----------------------------------------------
    cmesh = circle["mesh"]
    t = cmesh.t
    S = bem.single_layer_matrix(cmesh)
    K = bem.kstar_matrix(cmesh)
    H = bem.hypersingular_matrix(cmesh)
    ones = np.ones(cmesh.n)
    eS = float(np.max(np.abs(S @ ones)))
    eK = float(np.max(np.abs(K @ ones - 0.5)))
    eH = float(np.max(np.abs(H @ ones)))
    for k in range(1, 9):
        for f in (np.cos(k * t), np.sin(k * t)):
            eS = max(eS, float(np.max(np.abs(S @ f + f / (2.0 * k)))))
            eK = max(eK, float(np.max(np.abs(K @ f))))
            eH = max(eH, float(np.max(np.abs(H @ f - 0.5 * k * f))))
    results.append(_leq("circle_single_layer_spectrum", eS, 1e-6,
                        "S e^{ikt} = -e^{ikt}/(2k), S 1 = 0 on the unit circle, k <= 8, 256 nodes"))
    results.append(_leq("circle_adjoint_spectrum", eK, 1e-6,
                        "K* e^{ikt} = 0, K* 1 = 1/2 on the unit circle"))
    results.append(_leq("circle_hypersingular_spectrum", eH, 1e-6,
                        "dnu D e^{ikt} = (k/2) e^{ikt}, constants annihilated"))

    # -- circle with the exactly neutral interface ----------------------------
    csol = bem.solve_imperfect(cmesh, circle["beta"], (1.0, 0.0))
    kk = np.arange(100)
    cpts = np.linspace(1.5, 4.0, 100) * np.exp(2j * np.pi * ((kk * _GOLDEN) % 1.0))
    cu = np.asarray(bem.eval_field(cmesh, csol, cpts))
    cpert = float(np.max(np.abs(cu - cpts.real)))
    results.append(_leq("circle_neutral_field", cpert, 1e-10,
                        "uniform-field perturbation at 100 exterior points, beta = 1"))
    cT = bem.polarization_general(cmesh, circle["beta"]).norm()
    results.append(_leq("circle_neutral_pt", cT, 1e-10,
                        "polarization tensor of the neutral circle vanishes"))

    # -- ellipse neutrality ----------------------------------------------------
    egap = ellipse["gap"]
    results.append(_leq(
        "ellipse_neutrality_ratio", egap["ratio"], 0.02,
        f"|T_weak| / |T_perfect| at {n} nodes, calibrated interface"))
    results.append(_leq(
        "ellipse_decay_weak", egap["fit_weak"].slope, -1.8,
        "log-log far-field slope of the weakly neutral solution (near -2)"))
    results.append(_leq(
        "ellipse_decay_perfect", abs(egap["fit_perfect"].slope + 1.0), 0.1,
        "perfect bonding keeps the dipole tail: slope within 0.1 of -1"))

    # -- dual-solver agreement --------------------------------------------------
    cross = oracle_crosscheck(ellipse["map"], egap["param"], n=n, N=N)
    results.append(_leq(
        "dual_solver_agreement", cross["max_rel_diff"], 1e-3,
        f"boundary-integral field vs disk-harmonic field through the map at "
        f"{cross['n_used']} points (skipped {cross['n_skipped']})"))

    # -- zero data -> zero density ----------------------------------------------
    for name, mesh_, beta_ in (
        ("circle", cmesh, circle["beta"]),
        ("ellipse", egap["mesh"], egap["beta"]),
        ("droplet", droplet["gap"]["mesh"], droplet["gap"]["beta"]),
    ):
        z0 = bem.solve_imperfect(mesh_, beta_, (0.0, 0.0))
        results.append(_leq(f"zero_data_{name}", float(np.max(np.abs(z0.psi))), 1e-10,
                            "a = 0 forces the identically zero density"))

    # -- frame covariance ---------------------------------------------------------
    inv = pt_invariance(egap["mesh"], ellipse["beta_cf"])
    results.append(_leq("pt_rotation_covariance", inv["rotation_error"], 1e-6,
                        "T(e^{i rho} Omega) = R T R^T, rho = 0.7, closed-form interface"))
    results.append(_leq("pt_translation_invariance", inv["translation_error"], 1e-6,
                        "T(Omega + c) = T(Omega), c = (0.3, -0.2)"))

    # -- geometry characterization --------------------------------------------------
    gr = ellipsoid_residual(*sample_ellipse(1.25, 0.75, 400))
    axes_err = float(max(abs(gr.radii[0] - 1.25), abs(gr.radii[1] - 0.75)))
    ok = gr.residual <= 1e-12 and axes_err <= 1e-9
    results.append(CheckResult(
        "geometry_ellipse_exact", ok, gr.residual, 1e-12, "<=",
        f"normal-ratio residual; recovered semi-axes off by {axes_err!r}"))
    gs = ellipsoid_residual(*sample_ellipsoid(1.0, 1.0, 1.0, 500))
    rad_err = float(max(abs(r - 1.0) for r in gs.radii))
    ok = gs.residual <= 1e-12 and rad_err <= 1e-9
    results.append(CheckResult(
        "geometry_sphere_exact", ok, gs.residual, 1e-12, "<=",
        f"unit sphere samples; recovered radii off by {rad_err!r}"))
    dres, daxes, _ = best_fit_ellipse_residual(droplet["gap"]["mesh"].nodes_xy())
    results.append(_gt(
        "geometry_droplet_not_ellipse", dres, 0.05,
        f"best centered ellipse ({daxes[0]:.4f}, {daxes[1]:.4f}) misfits the droplet"))

    # -- droplet ---------------------------------------------------------------------
    dparam = droplet["param_cf"]
    th = 2.0 * np.pi * (np.arange(720) + 0.5) / 720.0
    away = np.abs(th - np.pi) > 0.05
    bvals = dparam.beta(th)
    zeta = np.exp(1j * th[away])
    indep = dparam.gamma(th[away]) / np.abs(droplet["map"].derivative(zeta))
    berr = float(np.max(np.abs(bvals[away] - indep)))
    ok = np.all(np.isfinite(bvals)) and berr <= 1e-12
    results.append(CheckResult(
        "droplet_beta_profile", bool(ok), berr, 1e-12, "<=",
        "closed-form beta finite on the sample grid and reproducible away from the corner"))
    dgap = droplet["gap"]
    results.append(_leq(
        "droplet_neutrality_ratio", dgap["ratio"], 0.1,
        f"graded mesh with {droplet_n} nodes; bordered solve condition "
        f"~ {dgap['condition_weak']:.3e}"))

    return results


def write_report(results, path, parameters: dict | None = None) -> None:
    """Serialize suite results to JSON (deterministic byte-for-byte)."""
    failing = [r.name for r in results if not r.passed]
    rec = {
        "checks": [r.to_dict() for r in results],
        "n_checks": len(results),
        "n_pass": len(results) - len(failing),
        "n_fail": len(failing),
        "failing": failing,
    }
    if parameters:
        rec["parameters"] = parameters
    with open(path, "w") as f:
        json.dump(rec, f, indent=2, sort_keys=True)
        f.write("\n")
