import json
import math

import numpy as np
import pytest

from weakneutral import (
    CheckResult,
    best_fit_ellipse_residual,
    discretize,
    ellipsoid_residual,
    farfield_decay,
    make_droplet_map,
    make_ellipse_map,
    mesh_samples,
    neutrality_gap,
    oracle_crosscheck,
    pt_invariance,
    sample_ellipse,
    sample_ellipsoid,
    solve_imperfect,
    solve_perfect,
    write_report,
)

CIRCLE = make_ellipse_map(1.0, 1.0)


def test_farfield_decay_perfect_circle():
    mesh = discretize(CIRCLE, 128)
    fit = farfield_decay(mesh, solve_perfect(mesh, a=(1.0, 0.0)))
    # perturbation is exactly -cos(alpha)/r
    assert fit.slope == pytest.approx(-1.0, abs=1e-10)
    assert fit.n_used == 4
    np.testing.assert_allclose(fit.amplitude, 1.0 / np.asarray(fit.radii), rtol=1e-10)
    np.testing.assert_allclose(fit.predicted(np.asarray(fit.radii)), fit.amplitude, rtol=1e-8)


def test_farfield_decay_floor():
    # exactly neutral circle: every amplitude sits below the floor and no
    # slope can be fit
    mesh = discretize(CIRCLE, 128)
    fit = farfield_decay(mesh, solve_imperfect(mesh, np.ones(128), a=(1.0, 0.0)))
    assert fit.n_used == 0
    assert math.isnan(fit.slope)


def test_oracle_crosscheck_ellipse():
    m = make_ellipse_map(1.25, 0.75)
    from weakneutral import design
    out = oracle_crosscheck(m, design(m, mode="calibrated"), n=256, N=128, n_points=40)
    assert out["max_rel_diff"] < 1e-6
    assert out["n_used"] > 0


def test_pt_invariance_ellipse():
    mesh = discretize(make_ellipse_map(1.25, 0.75), 256)
    beta = 1.0 + 0.3 * np.cos(2.0 * mesh.theta)
    out = pt_invariance(mesh, beta, rho=0.7, shift=(0.3, -0.2))
    assert out["rotation_error"] < 1e-8
    assert out["translation_error"] < 1e-8
    # the rotated tensor itself must differ from T (the shape is anisotropic)
    assert np.max(np.abs(out["T_rotated"] - out["T"])) > 1e-2


def test_neutrality_gap_bundle():
    out = neutrality_gap(make_ellipse_map(1.25, 0.75), n=128, N=128, mode="calibrated")
    assert out["ratio"] < 1e-8
    assert out["fit_weak"].n_used == 0 or out["fit_weak"].slope < -1.8
    assert abs(out["fit_perfect"].slope + 1.0) < 0.1
    assert out["T_weak"].T.shape == (2, 2)


def test_ellipsoid_residual_accepts_true_ellipsoids():
    pts, nus = sample_ellipse(1.25, 0.75)
    r = ellipsoid_residual(pts, nus)
    assert r.is_ellipsoid()
    np.testing.assert_allclose(r.radii, [1.25, 0.75], atol=1e-10)
    pts, nus = sample_ellipsoid(2.0, 1.5, 1.0)
    r = ellipsoid_residual(pts, nus)
    assert r.is_ellipsoid()
    np.testing.assert_allclose(r.radii, [2.0, 1.5, 1.0], atol=1e-10)


def test_ellipsoid_residual_rejects_perturbed_shapes():
    t = np.linspace(0.0, 2.0 * np.pi, 360, endpoint=False)
    rad = 1.0 + 0.05 * np.cos(3.0 * t)
    pts = np.stack([rad * np.cos(t), rad * np.sin(t)], axis=1)
    drad = -0.15 * np.sin(3.0 * t)
    # outward normal of a polar curve r(t)
    tang = np.stack([drad * np.cos(t) - rad * np.sin(t),
                     drad * np.sin(t) + rad * np.cos(t)], axis=1)
    nus = np.stack([tang[:, 1], -tang[:, 0]], axis=1)
    r = ellipsoid_residual(pts, nus)
    assert not r.is_ellipsoid()
    assert r.residual > 1e-2


def test_ellipsoid_residual_needs_off_axis_samples():
    pts = np.array([[1.0, 0.0], [-1.0, 0.0]])
    nus = pts.copy()
    with pytest.raises(ValueError):
        ellipsoid_residual(pts, nus)


def test_best_fit_ellipse():
    pts, _ = sample_ellipse(1.25, 0.75, n=180)
    misfit, axes, center = best_fit_ellipse_residual(pts)
    assert misfit < 1e-6
    np.testing.assert_allclose(sorted(axes, reverse=True), [1.25, 0.75], atol=1e-5)
    np.testing.assert_allclose(center, 0.0, atol=1e-12)

    mesh = discretize(make_droplet_map(), 256, grading="corner")
    pts, _ = mesh_samples(mesh)
    misfit, _, _ = best_fit_ellipse_residual(pts)
    assert misfit > 0.05


def test_mesh_samples_shapes():
    mesh = discretize(CIRCLE, 64)
    pts, nus = mesh_samples(mesh)
    assert pts.shape == (64, 2)
    np.testing.assert_allclose(np.hypot(nus[:, 0], nus[:, 1]), 1.0, atol=1e-14)


def test_write_report(tmp_path):
    results = [
        CheckResult("alpha", True, 1e-12, 1e-9),
        CheckResult("beta", False, 0.2, 0.05, op="<=", detail="expected red"),
        CheckResult("gamma", True, float("nan"), 0.1, op=">"),
    ]
    path = tmp_path / "report.json"
    write_report(results, path, parameters={"n": 64})
    rec = json.loads(path.read_text())
    assert rec["n_checks"] == 3
    assert rec["n_pass"] == 2
    assert rec["failing"] == ["beta"]
    assert rec["parameters"] == {"n": 64}
    by_name = {c["name"]: c for c in rec["checks"]}
    assert by_name["beta"]["detail"] == "expected red"
    assert by_name["gamma"]["value"] is None  # nan serializes as null
    # deterministic serialization
    first = path.read_text()
    write_report(results, path, parameters={"n": 64})
    assert path.read_text() == first
