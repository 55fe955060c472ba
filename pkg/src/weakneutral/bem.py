"""Nystrom boundary-integral solver on conformally mapped inclusion boundaries.

Periodic trapezoid quadrature on smooth curves (spectrally accurate); shapes
with a flagged corner use a polynomial grading substitution that clusters
nodes toward the corner and never places a node on it. The on-boundary single
layer uses Kussmaul-Martensen log-weight quadrature; the hypersingular
operator is evaluated through its tangential regularization

    dnu D[phi] = d/ds S[ d phi/ds ],

with spectral differentiation along the periodic parameter. Kernel sign
conventions (ds = arclength, nu = outward unit normal):

    S[phi](x)  = (1/2pi) int ln|x - y| phi(y) ds(y)
    D[phi](x)  = (1/2pi) int <y - x, nu_y>/|y - x|^2 phi(y) ds(y)
    K*[phi](x) = (1/2pi) p.v. int <x - y, nu_x>/|x - y|^2 phi(y) ds(y)

so that on the unit circle S maps e^{in t} to -e^{in t}/(2|n|), D (exterior
limit) to -e^{in t}/2, K* to 0 for n != 0, and D[1] = 0 outside. The diagonal
(self) entry of both continuous kernels is the curvature limit kappa/(4 pi).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.spatial import cKDTree

from .conformal import ConformalMap
from .pt import PolarizationTensor

_ILL_CONDITIONED = 1e12


@dataclass(frozen=True)
class BoundaryMesh:
    """Nystrom discretization of an inclusion boundary.

    t is the periodic quadrature parameter, theta the circle preimage angle
    (they coincide on smooth meshes), z the nodes as complex numbers, nu and
    tangent outward unit normals / unit tangents (complex), jac = |dz/dt|,
    w = jac * (2 pi / n) the arclength weights, kappa the signed curvature.
    """

    t: np.ndarray
    theta: np.ndarray
    z: np.ndarray
    nu: np.ndarray
    tangent: np.ndarray
    jac: np.ndarray
    w: np.ndarray
    kappa: np.ndarray
    corner: bool = False
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n(self) -> int:
        return self.z.size

    def perimeter(self) -> float:
        return float(self.w.sum())

    def nodes_xy(self) -> np.ndarray:
        return np.column_stack([self.z.real, self.z.imag])

    def normals_xy(self) -> np.ndarray:
        return np.column_stack([self.nu.real, self.nu.imag])

    def rotated(self, rho: float) -> "BoundaryMesh":
        """Mesh of the rotated boundary e^{i rho} * Omega (same node order)."""
        r = np.exp(1j * rho)
        return BoundaryMesh(t=self.t, theta=self.theta, z=self.z * r, nu=self.nu * r,
                            tangent=self.tangent * r, jac=self.jac, w=self.w,
                            kappa=self.kappa, corner=self.corner)

    def translated(self, shift) -> "BoundaryMesh":
        s = complex(shift[0], shift[1]) if np.ndim(shift) else complex(shift)
        return BoundaryMesh(t=self.t, theta=self.theta, z=self.z + s, nu=self.nu,
                            tangent=self.tangent, jac=self.jac, w=self.w,
                            kappa=self.kappa, corner=self.corner)

    def kdtree(self) -> cKDTree:
        if "kdtree" not in self._cache:
            self._cache["kdtree"] = cKDTree(self.nodes_xy())
        return self._cache["kdtree"]


def _corner_substitution(tau, p):
    """Graded map [0,1] -> [0,1] with p-th order flattening at both ends."""
    P = tau ** p
    Q = (1.0 - tau) ** p
    R = P / (P + Q)
    R1 = p * tau ** (p - 1) * (1.0 - tau) ** (p - 1) / (P + Q) ** 2
    dPQ = p * tau ** (p - 1) - p * (1.0 - tau) ** (p - 1)
    R2 = (p * (p - 1) * (tau ** (p - 2) * (1.0 - tau) ** (p - 1)
                         - tau ** (p - 1) * (1.0 - tau) ** (p - 2)) / (P + Q) ** 2
          - 2.0 * p * tau ** (p - 1) * (1.0 - tau) ** (p - 1) * dPQ / (P + Q) ** 3)
    return R, R1, R2


def discretize(m: ConformalMap, n: int, grading: str = "none",
               grading_order: int = 4) -> BoundaryMesh:
    """Quadrature mesh of the boundary Phi(e^{i theta}) with n nodes.

    grading="none" uses equispaced angles (trapezoid rule). Shapes with
    corner flags require grading="corner": a midpoint grid under a grading
    substitution of the given order, centered so nodes cluster toward the
    corner without ever hitting it.
    """
    if n < 16 or n % 2:
        raise ValueError("node count must be even and >= 16")
    if m.corner_angles and grading != "corner":
        raise ValueError("map has boundary corners; discretize with grading='corner'")
    h = 2.0 * np.pi / n
    if grading == "none":
        t = h * np.arange(n)
        theta = t
        dtheta = np.ones(n)
        ddtheta = np.zeros(n)
    elif grading == "corner":
        if not m.corner_angles:
            raise ValueError("grading='corner' needs a map with a corner flag")
        if len(m.corner_angles) > 1:
            raise NotImplementedError("only single-corner shapes are supported")
        t = h * (np.arange(n) + 0.5)  # midpoints: the corner t = 0 is excluded
        tau = t / (2.0 * np.pi)
        R, R1, R2 = _corner_substitution(tau, grading_order)
        theta = (m.corner_angles[0] + 2.0 * np.pi * R) % (2.0 * np.pi)
        dtheta = R1
        ddtheta = R2 / (2.0 * np.pi)
    else:
        raise ValueError(f"unknown grading {grading!r}")
    zeta = np.exp(1j * theta)
    dphi = m.derivative(zeta)
    d2phi = m.second_derivative(zeta)
    zt = dphi * 1j * zeta * dtheta
    ztt = d2phi * (1j * zeta * dtheta) ** 2 + dphi * (1j * ddtheta - dtheta ** 2) * zeta
    jac = np.abs(zt)
    nu = zeta * dphi / np.abs(dphi)
    return BoundaryMesh(
        t=t, theta=theta, z=m.map(zeta), nu=nu, tangent=1j * nu, jac=jac,
        w=jac * h, kappa=(np.conj(zt) * ztt).imag / jac ** 3,
        corner=(grading == "corner"),
    )


# ---------------------------------------------------------------------------
# operator matrices

def _lag_matrix(vec: np.ndarray) -> np.ndarray:
    """Matrix M[i, j] = vec[(i - j) mod n] from a lag vector."""
    n = vec.size
    idx = (np.arange(n)[:, None] - np.arange(n)[None, :]) % n
    return vec[idx]


def _kussmaul_weights(n: int) -> np.ndarray:
    """Lag weights quadrating (1/2pi) int ln(4 sin^2((s-t)/2)) f(t) dt.

    Exact for trigonometric polynomials up to the Nyquist mode on an
    equispaced n-point grid (n even).
    """
    lags = 2.0 * np.pi * np.arange(n) / n
    ms = np.arange(1, n // 2)
    vec = -(2.0 / n) * (np.cos(np.outer(lags, ms)) / ms).sum(axis=1)
    vec -= (2.0 / n ** 2) * np.cos((n // 2) * lags)
    return vec


def fourier_diff_matrix(n: int) -> np.ndarray:
    """Spectral differentiation on an equispaced periodic grid (n even)."""
    d = np.arange(n)
    vec = np.zeros(n)
    vec[1:] = 0.5 * (-1.0) ** d[1:] / np.tan(np.pi * d[1:] / n)
    return _lag_matrix(vec)


def single_layer_matrix(mesh: BoundaryMesh) -> np.ndarray:
    """On-boundary single layer via Kussmaul-Martensen log splitting."""
    if "S" in mesh._cache:
        return mesh._cache["S"]
    n = mesh.n
    h = 2.0 * np.pi / n
    dz2 = np.abs(mesh.z[:, None] - mesh.z[None, :]) ** 2
    sin2 = 4.0 * np.sin(0.5 * (mesh.t[:, None] - mesh.t[None, :])) ** 2
    np.fill_diagonal(dz2, 1.0)
    np.fill_diagonal(sin2, 1.0)
    # node pairs hugging a corner can collapse to the same float; give them
    # the coincident-point limit of the smooth part (their quadrature weights
    # are below float resolution anyway, so any finite value of the right
    # scale is exact enough)
    collapsed = dz2 == 0.0
    smooth = np.log(np.where(collapsed, 1.0, dz2) / sin2)
    if np.any(collapsed):
        lj = np.log(mesh.jac)
        smooth[collapsed] = (lj[:, None] + lj[None, :])[collapsed]
    np.fill_diagonal(smooth, 2.0 * np.log(mesh.jac))
    S = (0.5 * _lag_matrix(_kussmaul_weights(n)) + (h / (4.0 * np.pi)) * smooth) * mesh.jac[None, :]
    mesh._cache["S"] = S
    return S


def kstar_matrix(mesh: BoundaryMesh) -> np.ndarray:
    """Adjoint double layer (normal derivative of the single layer, pv part)."""
    if "Kstar" in mesh._cache:
        return mesh._cache["Kstar"]
    dz = mesh.z[:, None] - mesh.z[None, :]
    r2 = np.abs(dz) ** 2
    np.fill_diagonal(r2, 1.0)
    r2[r2 == 0.0] = 1.0  # float-collapsed corner pairs: numerator is 0 too
    ker = (np.conj(mesh.nu)[:, None] * dz).real / (2.0 * np.pi * r2)
    np.fill_diagonal(ker, mesh.kappa / (4.0 * np.pi))
    K = ker * mesh.w[None, :]
    mesh._cache["Kstar"] = K
    return K


def double_layer_matrix(mesh: BoundaryMesh) -> np.ndarray:
    """On-boundary double layer (principal value); exterior trace is K - I/2."""
    dz = mesh.z[None, :] - mesh.z[:, None]
    r2 = np.abs(dz) ** 2
    np.fill_diagonal(r2, 1.0)
    r2[r2 == 0.0] = 1.0
    ker = (np.conj(mesh.nu)[None, :] * dz).real / (2.0 * np.pi * r2)
    np.fill_diagonal(ker, mesh.kappa / (4.0 * np.pi))
    return ker * mesh.w[None, :]


def hypersingular_matrix(mesh: BoundaryMesh) -> np.ndarray:
    """Normal derivative of the double layer via tangential regularization."""
    if "H" in mesh._cache:
        return mesh._cache["H"]
    Ds = fourier_diff_matrix(mesh.n) / mesh.jac[:, None]
    H = Ds @ single_layer_matrix(mesh) @ Ds
    mesh._cache["H"] = H
    return H


def apply_adjoint_double_layer(mesh: BoundaryMesh, density) -> np.ndarray:
    return kstar_matrix(mesh) @ np.asarray(density, dtype=float)


def apply_hypersingular(mesh: BoundaryMesh, density) -> np.ndarray:
    return hypersingular_matrix(mesh) @ np.asarray(density, dtype=float)


# ---------------------------------------------------------------------------
# bordered solves

@dataclass(frozen=True)
class DensitySolution:
    """Boundary density with its bordered-system diagnostics.

    For imperfect-interface solutions lam is the bordered compatibility
    scalar (zero up to quadrature consistency); for perfect-bonding solutions
    it is the constant boundary potential.
    """

    psi: np.ndarray
    lam: float
    a: tuple
    kind: str
    beta_values: np.ndarray | None = None
    condition: float = np.nan
    residual: float = np.nan
    constraint_residual: float = np.nan

    @property
    def ill_conditioned(self) -> bool:
        return bool(self.condition > _ILL_CONDITIONED)


def _equilibrated_solve(A: np.ndarray, rhs: np.ndarray):
    """Row/column-equilibrated LU solve.

    Returns (x, cond, res): a 1-norm condition estimate of the equilibrated
    matrix and the row-scaled residual max_i |(A x - rhs)_i| / max_j |A_ij|,
    the meaningful backward error when rows span many orders of magnitude.
    """
    rs = np.max(np.abs(A), axis=1)
    rs[rs == 0.0] = 1.0
    A1 = A / rs[:, None]
    cs = np.max(np.abs(A1), axis=0)
    cs[cs == 0.0] = 1.0
    A2 = A1 / cs[None, :]
    lu, piv = scipy.linalg.lu_factor(A2)
    gecon = scipy.linalg.get_lapack_funcs(("gecon",), (A2,))[0]
    rcond, _ = gecon(lu, np.linalg.norm(A2, 1))
    x = scipy.linalg.lu_solve((lu, piv), rhs / rs)
    x = x / cs
    cond = np.inf if rcond == 0 else 1.0 / rcond
    res = float(np.max(np.abs(A @ x - rhs) / rs))
    return x, float(cond), res


def solve_imperfect(mesh: BoundaryMesh, beta, a=(1.0, 0.0)) -> DensitySolution:
    """Solve the imperfect-interface boundary equation for direction a.

    The Nystrom system P psi = -a.nu with P = (I/2 - K*) M_beta + dnu D is
    bordered by the weighted zero-mean constraint sum beta psi w = 0 and one
    free scalar so the discrete system is square; the scalar absorbs the
    quadrature-level inconsistency of the constraint.
    """
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (mesh.n,):
        raise ValueError("beta must be sampled at the mesh nodes")
    if np.any(beta < -1e-12):
        raise ValueError("beta must be non-negative")
    if np.max(beta) <= 0.0:
        raise ValueError("beta must not vanish identically")
    n = mesh.n
    P = (0.5 * np.eye(n) - kstar_matrix(mesh)) * beta[None, :] + hypersingular_matrix(mesh)
    A = np.zeros((n + 1, n + 1))
    A[:n, :n] = P
    A[:n, n] = 1.0
    A[n, :n] = beta * mesh.w
    rhs = np.zeros(n + 1)
    anu = a[0] * mesh.nu.real + a[1] * mesh.nu.imag
    rhs[:n] = -anu
    x, cond, res = _equilibrated_solve(A, rhs)
    psi, lam = x[:n], float(x[n])
    return DensitySolution(
        psi=psi, lam=lam, a=(float(a[0]), float(a[1])), kind="imperfect",
        beta_values=beta, condition=cond, residual=res,
        constraint_residual=float(abs(np.sum(beta * psi * mesh.w))),
    )


def solve_perfect(mesh: BoundaryMesh, a=(1.0, 0.0)) -> DensitySolution:
    """Solve the perfect-bonding comparison problem (constant boundary trace).

    Representation u = a.x + S[phi] with unknown constant lam:
    S[phi] - lam = -a.x on the boundary and sum phi w = 0 (zero net flux).
    The bordered row/column also removes the logarithmic-capacity degeneracy
    of the plain single-layer system.
    """
    n = mesh.n
    S = single_layer_matrix(mesh)
    A = np.zeros((n + 1, n + 1))
    A[:n, :n] = S
    A[:n, n] = -1.0
    A[n, :n] = mesh.w
    rhs = np.zeros(n + 1)
    ax = a[0] * mesh.z.real + a[1] * mesh.z.imag
    rhs[:n] = -ax
    x, cond, res = _equilibrated_solve(A, rhs)
    phi, lam = x[:n], float(x[n])
    return DensitySolution(
        psi=phi, lam=lam, a=(float(a[0]), float(a[1])), kind="perfect",
        beta_values=None, condition=cond, residual=res,
        constraint_residual=float(abs(np.sum(phi * mesh.w))),
    )


# ---------------------------------------------------------------------------
# field evaluation and polarization

def too_close(mesh: BoundaryMesh, points, min_spacing_factor: float = 2.0) -> np.ndarray:
    """True where a point is within min_spacing_factor local spacings of the boundary."""
    pts = np.atleast_1d(np.asarray(points, dtype=complex))
    xy = np.column_stack([pts.real, pts.imag])
    dist, idx = mesh.kdtree().query(xy)
    return dist < min_spacing_factor * mesh.w[idx]

def eval_field(mesh: BoundaryMesh, sol: DensitySolution, points,
               min_spacing_factor: float = 2.0) -> np.ndarray:
    """Evaluate the exterior potential u at strictly exterior points.

    Imperfect solutions use u = a.x - (S M_beta - D)[psi]; perfect solutions
    use u = a.x + S[psi]. Points closer to the boundary than
    min_spacing_factor local node spacings are rejected (plain quadrature is
    not accurate there).
    """
    pts = np.atleast_1d(np.asarray(points, dtype=complex))
    bad = too_close(mesh, pts, min_spacing_factor)
    if np.any(bad):
        raise ValueError(
            f"{int(bad.sum())} evaluation point(s) within {min_spacing_factor} "
            "mesh spacings of the boundary"
        )
    dz = pts[:, None] - mesh.z[None, :]
    r2 = np.abs(dz) ** 2
    a = sol.a
    u = a[0] * pts.real + a[1] * pts.imag
    if sol.kind == "perfect":
        lnr = 0.5 * np.log(r2)
        u = u + (lnr @ (sol.psi * mesh.w)) / (2.0 * np.pi)
    else:
        lnr = 0.5 * np.log(r2)
        u = u - (lnr @ (sol.beta_values * sol.psi * mesh.w)) / (2.0 * np.pi)
        kd = (np.conj(mesh.nu)[None, :] * (-dz)).real / r2
        u = u + (kd @ (sol.psi * mesh.w)) / (2.0 * np.pi)
    return u if u.size > 1 else float(u[0])


def polarization_general(mesh: BoundaryMesh, beta) -> PolarizationTensor:
    """Polarization tensor of the imperfect-interface inclusion.

    T_{ij} = int (y_i beta - nu_i) psi_j ds with psi_j the density for a = e_j.
    """
    beta = np.asarray(beta, dtype=float)
    T = np.empty((2, 2))
    y = np.column_stack([mesh.z.real, mesh.z.imag])
    nu = mesh.normals_xy()
    for j, a in enumerate(((1.0, 0.0), (0.0, 1.0))):
        psi = solve_imperfect(mesh, beta, a).psi
        for i in range(2):
            T[i, j] = np.sum((y[:, i] * beta - nu[:, i]) * psi * mesh.w)
    return PolarizationTensor(T=T, provenance="bem", resolution=mesh.n)


def polarization_perfect(mesh: BoundaryMesh) -> PolarizationTensor:
    """Polarization tensor of the perfect-bonding (conducting) inclusion.

    From the far field of u = a.x + S[phi] with zero total charge:
    T_{ij} = -int y_i phi_j ds.
    """
    T = np.empty((2, 2))
    y = np.column_stack([mesh.z.real, mesh.z.imag])
    for j, a in enumerate(((1.0, 0.0), (0.0, 1.0))):
        phi = solve_perfect(mesh, a).psi
        for i in range(2):
            T[i, j] = -np.sum(y[:, i] * phi * mesh.w)
    return PolarizationTensor(T=T, provenance="bem", resolution=mesh.n)


def write_mesh_csv(mesh: BoundaryMesh, path) -> None:
    with open(path, "w", newline="") as f:
        wr = csv.writer(f)
        wr.writerow(["theta", "x", "y", "nu1", "nu2", "w"])
        for k in range(mesh.n):
            wr.writerow([repr(float(mesh.theta[k])), repr(float(mesh.z[k].real)),
                         repr(float(mesh.z[k].imag)), repr(float(mesh.nu[k].real)),
                         repr(float(mesh.nu[k].imag)), repr(float(mesh.w[k]))])
