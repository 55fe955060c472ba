import numpy as np
import pytest
from scipy.special import ellipe

from weakneutral import (
    discretize,
    eval_field,
    fourier_diff_matrix,
    hypersingular_matrix,
    kstar_matrix,
    make_droplet_map,
    make_ellipse_map,
    polarization_general,
    polarization_perfect,
    single_layer_matrix,
    solve_imperfect,
    solve_perfect,
    too_close,
    write_mesh_csv,
)

CIRCLE = make_ellipse_map(1.0, 1.0)


@pytest.fixture(scope="module")
def circle():
    return discretize(CIRCLE, 256)


@pytest.fixture(scope="module")
def ellipse():
    return discretize(make_ellipse_map(1.25, 0.75), 256)


def test_discretize_validation():
    with pytest.raises(ValueError):
        discretize(CIRCLE, 15)
    with pytest.raises(ValueError):
        discretize(CIRCLE, 8)
    with pytest.raises(ValueError):
        discretize(make_droplet_map(), 64)  # corner shape needs grading


def test_circle_mesh_geometry(circle):
    assert circle.n == 256
    np.testing.assert_allclose(np.abs(circle.z), 1.0, atol=1e-14)
    np.testing.assert_allclose(circle.jac, 1.0, atol=1e-14)
    np.testing.assert_allclose(circle.kappa, 1.0, atol=1e-12)
    np.testing.assert_allclose(circle.nu, circle.z, atol=1e-14)
    assert circle.perimeter() == pytest.approx(2.0 * np.pi)


def test_ellipse_mesh_geometry(ellipse):
    # trapezoid rule on an analytic curve hits the true perimeter
    a, b = 1.25, 0.75
    exact = 4.0 * a * ellipe(1.0 - (b / a) ** 2)
    assert ellipse.perimeter() == pytest.approx(exact, abs=1e-12)
    np.testing.assert_allclose(np.abs(ellipse.nu), 1.0, atol=1e-14)
    # outward normal: positive projection on the position direction
    assert np.all(np.real(np.conj(ellipse.nu) * ellipse.z) > 0)
    # curvature of an ellipse: a b / (a^2 sin^2 + b^2 cos^2)^(3/2)
    th = ellipse.theta
    den = (a * a * np.sin(th) ** 2 + b * b * np.cos(th) ** 2) ** 1.5
    np.testing.assert_allclose(ellipse.kappa, a * b / den, rtol=1e-10)


def test_weighted_normals_integrate_to_zero(circle, ellipse):
    # closed-curve identity: the quadrature must integrate each normal
    # component to zero
    droplet = discretize(make_droplet_map(), 256, grading="corner")
    for mesh in (circle, ellipse, droplet):
        assert abs(np.sum(mesh.nu * mesh.w)) < 1e-10


def test_mesh_transforms(ellipse):
    rot = ellipse.rotated(0.7)
    np.testing.assert_allclose(rot.z, ellipse.z * np.exp(0.7j), atol=1e-14)
    np.testing.assert_allclose(rot.nu, ellipse.nu * np.exp(0.7j), atol=1e-14)
    np.testing.assert_array_equal(rot.jac, ellipse.jac)
    tr = ellipse.translated((0.3, -0.2))
    np.testing.assert_allclose(tr.z, ellipse.z + 0.3 - 0.2j, atol=1e-14)
    np.testing.assert_array_equal(tr.nu, ellipse.nu)


def test_fourier_diff_matrix():
    n = 64
    D = fourier_diff_matrix(n)
    t = 2.0 * np.pi * np.arange(n) / n
    np.testing.assert_allclose(D @ np.sin(3 * t), 3 * np.cos(3 * t), atol=1e-11)
    np.testing.assert_allclose(D @ np.ones(n), 0.0, atol=1e-12)


def test_circle_operator_spectra(circle):
    t = circle.t
    S = single_layer_matrix(circle)
    K = kstar_matrix(circle)
    H = hypersingular_matrix(circle)
    ones = np.ones(circle.n)
    np.testing.assert_allclose(S @ ones, 0.0, atol=1e-12)
    np.testing.assert_allclose(K @ ones, 0.5, atol=1e-12)
    np.testing.assert_allclose(H @ ones, 0.0, atol=1e-10)
    for k in range(1, 9):
        for f in (np.cos(k * t), np.sin(k * t)):
            np.testing.assert_allclose(S @ f, -f / (2 * k), atol=1e-12)
            np.testing.assert_allclose(K @ f, 0.0, atol=1e-12)
            np.testing.assert_allclose(H @ f, 0.5 * k * f, atol=1e-9)


_EPS_LADDER = 0.01 + 0.005 * np.arange(9)


def _normal_derivative_fit(mesh, pot, idx):
    # sample the potential along the outward normal and differentiate a
    # polynomial fit at offset zero; the off-boundary potential is smooth,
    # so trapezoid quadrature is spectrally accurate at these offsets
    vals = np.array([[pot(mesh.z[i] + e * mesh.nu[i]) for i in idx] for e in _EPS_LADDER])
    return np.array([np.polyfit(_EPS_LADDER, vals[:, j], 6)[-2] for j in range(len(idx))])


def test_adjoint_layer_against_offset_quadrature():
    # exterior normal derivative of the single layer is (1/2) psi + K* psi
    mesh = discretize(make_ellipse_map(1.25, 0.75), 4096)
    psi = np.cos(mesh.t) + 0.3 * np.sin(2 * mesh.t)
    idx = np.arange(0, 4096, 512)

    def pot(z):
        return np.log(np.abs(z - mesh.z)) @ (psi * mesh.w) / (2 * np.pi)

    fd = _normal_derivative_fit(mesh, pot, idx)
    ref = 0.5 * psi[idx] + (kstar_matrix(mesh) @ psi)[idx]
    np.testing.assert_allclose(fd, ref, atol=1e-5)


def test_hypersingular_against_offset_quadrature():
    # the normal derivative of the double layer is continuous across the
    # boundary, so the same offset fit recovers it with no jump term
    mesh = discretize(make_ellipse_map(1.25, 0.75), 4096)
    psi = np.cos(mesh.t) + 0.3 * np.sin(2 * mesh.t)
    idx = np.arange(0, 4096, 512)

    def pot(z):
        d = mesh.z - z
        kern = np.real(np.conj(mesh.nu) * d) / np.abs(d) ** 2
        return kern @ (psi * mesh.w) / (2 * np.pi)

    fd = _normal_derivative_fit(mesh, pot, idx)
    ref = (hypersingular_matrix(mesh) @ psi)[idx]
    np.testing.assert_allclose(fd, ref, atol=1e-4)


def test_imperfect_circle_density(circle):
    # constant beta on the circle decouples the modes; beta = 1 gives the
    # exactly neutral density -cos
    sol = solve_imperfect(circle, np.ones(circle.n), a=(1.0, 0.0))
    np.testing.assert_allclose(sol.psi, -np.cos(circle.t), atol=1e-12)
    sol2 = solve_imperfect(circle, np.full(circle.n, 2.0), a=(1.0, 0.0))
    np.testing.assert_allclose(sol2.psi, -(2.0 / 3.0) * np.cos(circle.t), atol=1e-12)
    assert not sol.ill_conditioned
    assert sol.residual < 1e-12


def test_imperfect_validation(circle):
    with pytest.raises(ValueError):
        solve_imperfect(circle, np.ones(circle.n - 1))
    with pytest.raises(ValueError):
        solve_imperfect(circle, -np.ones(circle.n))
    with pytest.raises(ValueError):
        solve_imperfect(circle, np.zeros(circle.n))


def test_neutral_circle_field_and_tensor(circle):
    sol = solve_imperfect(circle, np.ones(circle.n), a=(1.0, 0.0))
    pts = 2.0 * np.exp(1j * np.linspace(0.0, 2.0 * np.pi, 16, endpoint=False))
    u = eval_field(circle, sol, pts)
    np.testing.assert_allclose(u, pts.real, atol=1e-12)
    T = polarization_general(circle, np.ones(circle.n)).T
    np.testing.assert_allclose(T, 0.0, atol=1e-12)


def test_perfect_circle(circle):
    sol = solve_perfect(circle, a=(1.0, 0.0))
    np.testing.assert_allclose(sol.psi, 2.0 * np.cos(circle.t), atol=1e-12)
    assert sol.lam == pytest.approx(0.0, abs=1e-13)
    # exterior solution vanishing on the boundary: Re z - Re z / |z|^2
    pts = np.array([1.5, 1.5j, -2.0 + 0.5j])
    u = eval_field(circle, sol, pts)
    np.testing.assert_allclose(u, pts.real - pts.real / np.abs(pts) ** 2, atol=1e-12)
    T = polarization_perfect(circle).T
    np.testing.assert_allclose(T, -2.0 * np.pi * np.eye(2), atol=1e-12)


def test_perfect_ellipse_tensor_closed_form(ellipse):
    # with the exterior map zeta + b/zeta the perfectly conducting tensor is
    # -2 pi (I + [[b, 0], [0, -b]]) for real b
    T = polarization_perfect(ellipse).T
    expected = -2.0 * np.pi * np.diag([1.25, 0.75])
    np.testing.assert_allclose(T, expected, atol=1e-10)


def test_polarization_tensor_metadata(circle):
    pt = polarization_perfect(circle)
    assert pt.provenance == "bem"
    assert pt.resolution == 256
    assert pt.norm() == pytest.approx(np.linalg.norm(pt.T, 2))
    d = pt.to_dict()
    assert d["provenance"] == "bem"


def test_field_point_screening(circle):
    sol = solve_perfect(circle, a=(1.0, 0.0))
    near = np.array([1.001 + 0.0j])
    assert too_close(circle, near).any()
    with pytest.raises(ValueError):
        eval_field(circle, sol, near)
    far = np.array([3.0 + 0.0j])
    assert not too_close(circle, far).any()
    assert isinstance(eval_field(circle, sol, 3.0 + 0.0j), float)


def test_droplet_graded_mesh_and_operators():
    mesh = discretize(make_droplet_map(), 256, grading="corner")
    assert mesh.corner
    assert np.all(np.isfinite(mesh.jac))
    # nodes crowd toward the corner: smallest weights at theta = pi
    assert mesh.w.min() < 1e-8 * mesh.w.max()
    for M in (single_layer_matrix(mesh), kstar_matrix(mesh), hypersingular_matrix(mesh)):
        assert np.all(np.isfinite(M))
    sol = solve_imperfect(mesh, np.ones(mesh.n), a=(0.0, 1.0))
    assert np.all(np.isfinite(sol.psi))
    assert sol.constraint_residual < 1e-10


def test_solution_linearity(ellipse):
    beta = 1.0 + 0.2 * np.cos(2 * ellipse.theta)
    s1 = solve_imperfect(ellipse, beta, a=(1.0, 0.0))
    s2 = solve_imperfect(ellipse, beta, a=(0.0, 1.0))
    s3 = solve_imperfect(ellipse, beta, a=(0.6, -0.8))
    np.testing.assert_allclose(s3.psi, 0.6 * s1.psi - 0.8 * s2.psi, atol=1e-11)


def test_convergence_with_resolution():
    m = make_ellipse_map(1.25, 0.75)
    ref = polarization_perfect(discretize(m, 256)).T
    errs = [np.max(np.abs(polarization_perfect(discretize(m, n)).T - ref))
            for n in (16, 32, 64)]
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] < 1e-10


def test_mesh_csv(tmp_path, circle):
    path = tmp_path / "mesh.csv"
    write_mesh_csv(circle, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "theta,x,y,nu1,nu2,w"
    assert len(lines) == circle.n + 1
    data = np.loadtxt(lines[1:], delimiter=",")
    np.testing.assert_array_equal(data[:, 1], circle.z.real)
    np.testing.assert_array_equal(data[:, 5], circle.w)
