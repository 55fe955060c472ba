"""Fourier-space solver for the imperfect-interface problem on the unit disk.

The boundary density is expanded in circle harmonics. With gamma the interface
parameter on the circle (Fourier modes gamma_n) the mode equations read

    sum_k gamma_k phi_{n-k} + |n| phi_n = r_n,       |n| <= N,

with right side r_{+-1} = -1 for a = e1 and r_1 = i, r_{-1} = -i for a = e2,
all other rows zero. The n = 0 row carries no |n| term and therefore enforces
the zero-mean constraint sum_k gamma_k phi_{-k} = 0 automatically.

For gamma with modes {0, +-2} and real gamma2 the odd-mode subsystems are
tridiagonal; those are solved both through the printed inverse recursions
(xi, tau) and through standard banded elimination as an independent route.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .pt import PolarizationTensor


def _as_gamma_dict(gamma_modes) -> dict:
    """Normalize gamma input: dict {n: coeff} or (gamma0, gamma2) pair."""
    if isinstance(gamma_modes, dict):
        g = {int(n): complex(c) for n, c in gamma_modes.items()}
    else:
        g0, g2 = gamma_modes
        g = {0: complex(g0), 2: complex(g2), -2: complex(g2)}
    for n, c in g.items():
        conj = g.get(-n, 0.0)
        if abs(np.conj(c) - conj) > 1e-12 * max(1.0, abs(c)):
            raise ValueError("gamma modes must satisfy gamma_{-n} = conj(gamma_n)")
    return g


def gamma_on_circle(gamma_modes, theta):
    """Evaluate gamma(theta) from its Fourier modes."""
    g = _as_gamma_dict(gamma_modes)
    theta = np.asarray(theta, dtype=float)
    val = np.zeros_like(theta, dtype=complex)
    for n, c in sorted(g.items()):
        val = val + c * np.exp(1j * n * theta)
    return val.real


def _validate_gamma(g: dict, N: int):
    kmax = max(abs(n) for n in g)
    if N < 2 * max(kmax, 1):
        raise ValueError(f"truncation N = {N} too small for gamma modes up to |n| = {kmax}")
    th = np.linspace(0.0, 2 * np.pi, 720, endpoint=False)
    gmin = gamma_on_circle(g, th).min()
    if gmin < -1e-12:
        raise ValueError(f"gamma is negative on the circle (min = {gmin:.3e})")


@dataclass(frozen=True)
class FourierDensity:
    """Truncated Fourier densities for both unit directions.

    phi1, phi2 hold the coefficients phi_{j,n} for n = -N..N (index n + N),
    solved with a = e1 and a = e2; psi is the combination for the requested
    direction a, psi = a1 phi1 + a2 phi2.
    """

    N: int
    gamma_modes: dict
    a: tuple
    phi1: np.ndarray
    phi2: np.ndarray
    psi: np.ndarray

    def mode(self, j: int, n: int) -> complex:
        arr = self.phi1 if j == 1 else self.phi2
        return complex(arr[n + self.N])

    def constraint_residual(self) -> float:
        """Max over j of |sum_k gamma_k phi_{j,-k}| (the zero-mean constraint)."""
        return max(
            abs(_convolve_at(self.gamma_modes, arr, self.N, 0))
            for arr in (self.phi1, self.phi2)
        )

    def reconstruct(self, theta, which="psi"):
        """Nodal values of the density on the circle."""
        arr = {"psi": self.psi, "phi1": self.phi1, "phi2": self.phi2}[which]
        theta = np.asarray(theta, dtype=float)
        ns = np.arange(-self.N, self.N + 1)
        vals = np.exp(1j * np.outer(theta, ns)) @ arr
        return vals.real


def _convolve_at(g: dict, phi: np.ndarray, N: int, m: int) -> complex:
    """(gamma * phi)_m = sum_k gamma_k phi_{m-k}, out-of-range modes dropped."""
    s = 0.0 + 0.0j
    for k, gk in g.items():
        if -N <= m - k <= N:
            s += gk * phi[m - k + N]
    return s


def solve_dense(gamma_modes, N: int, a=(1.0, 0.0)) -> FourierDensity:
    """Solve the truncated dense mode system for both unit directions.

    Returns a FourierDensity whose psi combines phi1, phi2 linearly for the
    given direction a. Raises if the truncated system is singular (gamma
    violating non-negativity, or N too small).
    """
    g = _as_gamma_dict(gamma_modes)
    _validate_gamma(g, N)
    size = 2 * N + 1
    M = np.zeros((size, size), dtype=complex)
    ns = np.arange(-N, N + 1)
    M[np.arange(size), np.arange(size)] = np.abs(ns)
    for k, gk in g.items():
        rows = ns[(ns - k >= -N) & (ns - k <= N)]
        M[rows + N, rows - k + N] += gk
    rhs = np.zeros((size, 2), dtype=complex)
    rhs[1 + N, 0] = -1.0
    rhs[-1 + N, 0] = -1.0
    rhs[1 + N, 1] = 1j
    rhs[-1 + N, 1] = -1j
    try:
        sol = np.linalg.solve(M, rhs)
    except np.linalg.LinAlgError as exc:
        raise ValueError(f"singular truncated mode system (N = {N}): {exc}") from exc
    phi1, phi2 = sol[:, 0], sol[:, 1]
    psi = a[0] * phi1 + a[1] * phi2
    return FourierDensity(N=N, gamma_modes=g, a=(float(a[0]), float(a[1])),
                          phi1=phi1, phi2=phi2, psi=psi)


# ---------------------------------------------------------------------------
# tridiagonal route for gamma of modes {0, +-2}

@dataclass(frozen=True)
class TridiagonalSystem:
    """Tridiagonal odd-mode system with its inverse recursions.

    diag holds d_1..d_N with d_1 = gamma0 + gamma2 + 1 (variant "A") or
    gamma0 - gamma2 + 1 (variant "B") and d_k = gamma0 + 2k - 1 for k >= 2;
    the off-diagonal is gamma2. xi runs the forward determinant recursion
    (xi_0 = 1, xi_1 = d_1, xi_k = d_k xi_{k-1} - gamma2^2 xi_{k-2}) and tau
    the backward one (tau_{N+1} = 1, tau_N = d_N,
    tau_k = d_k tau_{k+1} - gamma2^2 tau_{k+2}); xi_N = tau_1 = det.
    The raw arrays overflow float64 near N ~ 300; first-column inverse
    entries are therefore also exposed in telescoped ratio form.
    """

    which: str
    gamma0: float
    gamma2: float
    N: int
    diag: np.ndarray
    xi: np.ndarray
    tau: np.ndarray

    @property
    def det(self) -> float:
        return float(self.xi[self.N])

    def inverse_first_column(self) -> np.ndarray:
        """Entries a_{k1} = (-gamma2)^(k-1) tau_{k+1} / xi_N, k = 1..N.

        Evaluated as (-gamma2)^(k-1) * prod_{m<=k} (tau_{m+1}/tau_m), the same
        formula telescoped through the backward ratios so it stays finite for
        any N. The ratios come from the continued fraction
        tau_{k+1}/tau_k = 1 / (d_k - gamma2^2 tau_{k+2}/tau_{k+1}).
        """
        d, g2 = self.diag, self.gamma2
        rho = np.empty(self.N)
        rho[self.N - 1] = 1.0 / d[self.N - 1]
        for k in range(self.N - 2, -1, -1):
            rho[k] = 1.0 / (d[k] - g2 * g2 * rho[k + 1])
        return (-g2) ** np.arange(self.N) * np.cumprod(rho)


def tridiagonal_system(gamma0, gamma2, N: int, which="A") -> TridiagonalSystem:
    g0, g2 = float(gamma0), float(gamma2)
    if g0 <= 0 or g0 < 2 * abs(g2) - 1e-12:
        raise ValueError("tridiagonal route needs gamma0 > 0 and gamma0 >= 2|gamma2|")
    if which not in ("A", "B"):
        raise ValueError("which must be 'A' or 'B'")
    k = np.arange(1, N + 1)
    diag = g0 + 2.0 * k - 1.0
    diag[0] = g0 + (g2 if which == "A" else -g2) + 1.0
    xi = np.empty(N + 1)
    xi[0] = 1.0
    xi[1] = diag[0]
    # determinant recursions overflow to inf past N ~ 300; callers use the
    # telescoped ratio form, so let them saturate silently
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(2, N + 1):
            xi[i] = diag[i - 1] * xi[i - 1] - g2 * g2 * xi[i - 2]
        tau = np.empty(N + 2)  # tau[k] holds tau_k for k = 1..N+1 at index k
        tau[N + 1] = 1.0
        tau[N] = diag[N - 1]
        for i in range(N - 1, 0, -1):
            tau[i] = diag[i - 1] * tau[i + 1] - g2 * g2 * tau[i + 2]
    tau[0] = np.nan  # index 0 unused
    if np.isfinite(xi[N]) and xi[N] == 0.0:
        raise ValueError("singular tridiagonal system (xi_N = 0)")
    return TridiagonalSystem(which=which, gamma0=g0, gamma2=g2, N=N,
                             diag=diag, xi=xi, tau=tau)


def solve_tridiagonal(gamma0, gamma2, N: int, which="A") -> np.ndarray:
    """Odd density modes through the explicit tridiagonal inverse.

    Variant "A" returns phi'_{1,2k-1} = -a_{k1} (real parts of the e1 density,
    right side -e1, tail term dropped); variant "B" returns
    phi''_{2,2k-1} = +b_{k1} (imaginary parts of the e2 density, right side
    +e1). k runs 1..N.
    """
    sys = tridiagonal_system(gamma0, gamma2, N, which)
    col = sys.inverse_first_column()
    return -col if which == "A" else col


def solve_tridiagonal_elimination(gamma0, gamma2, N: int, which="A") -> np.ndarray:
    """Same odd-mode solve through scipy banded elimination (independent route)."""
    sys = tridiagonal_system(gamma0, gamma2, N, which)
    ab = np.zeros((3, N))
    ab[0, 1:] = sys.gamma2
    ab[1, :] = sys.diag
    ab[2, :-1] = sys.gamma2
    rhs = np.zeros(N)
    rhs[0] = -1.0 if which == "A" else 1.0
    return scipy.linalg.solve_banded((1, 1), ab, rhs)


# ---------------------------------------------------------------------------
# polarization tensor and exterior field

def polarization(gamma_modes, N: int) -> PolarizationTensor:
    """Disk polarization tensor assembled from the mode solutions.

    T_{1j} =  pi [ (gamma*phi_j)_{-1} + (gamma*phi_j)_{+1} ] - 2 pi Re phi_{j,1}
    T_{2j} = -i pi [ (gamma*phi_j)_{-1} - (gamma*phi_j)_{+1} ] + 2 pi Im phi_{j,1}
    """
    dens = solve_dense(gamma_modes, N)
    g = dens.gamma_modes
    T = np.empty((2, 2), dtype=complex)
    for j, phi in ((0, dens.phi1), (1, dens.phi2)):
        cm = _convolve_at(g, phi, N, -1)
        cp = _convolve_at(g, phi, N, +1)
        p1 = phi[1 + N]
        T[0, j] = np.pi * (cm + cp) - 2 * np.pi * p1.real
        T[1, j] = -1j * np.pi * (cm - cp) + 2 * np.pi * p1.imag
    if np.max(np.abs(T.imag)) > 1e-8:
        raise ValueError("polarization entries came out non-real; inconsistent gamma modes")
    return PolarizationTensor(T=T.real.copy(), provenance="spectral", resolution=N)


def eval_disk_field(density: FourierDensity, zeta):
    """Exterior field u at points |zeta| > 1 for the solved density.

    Uses the closed-form exterior harmonic expansion of the circle layer
    potentials: for n != 0 the single layer maps e^{in t} to
    -r^{-|n|} e^{in alpha} / (2|n|) and the double layer to
    -r^{-|n|} e^{in alpha} / 2, so

        u = a.x - (gamma psi)_0 ln r
              + sum_{n!=0} [ (gamma psi)_n/(2|n|) - psi_n/2 ] r^{-|n|} e^{in alpha}.
    """
    zeta = np.atleast_1d(np.asarray(zeta, dtype=complex))
    r = np.abs(zeta)
    if np.any(r <= 1.0):
        raise ValueError("field evaluation requires |zeta| > 1")
    alpha = np.angle(zeta)
    N, g = density.N, density.gamma_modes
    psi = density.psi
    ns = np.arange(-N, N + 1)
    gpsi = np.array([_convolve_at(g, psi, N, int(n)) for n in ns])
    coeff = np.zeros_like(gpsi)
    nz = ns != 0
    coeff[nz] = gpsi[nz] / (2.0 * np.abs(ns[nz])) - psi[nz] / 2.0
    u = density.a[0] * zeta.real + density.a[1] * zeta.imag
    u = u - gpsi[N].real * np.log(r)
    decay = r[None, :] ** (-np.abs(ns[nz])[:, None])
    osc = np.exp(1j * np.outer(ns[nz], alpha))
    u = u + np.einsum("m,mp->p", coeff[nz], decay * osc).real
    return u if u.size > 1 else float(u[0])


def write_density_json(density: FourierDensity, path) -> None:
    rec = {
        "N": density.N,
        "gamma_modes": {str(n): [c.real, c.imag] for n, c in sorted(density.gamma_modes.items())},
        "phi1_modes": [[c.real, c.imag] for c in density.phi1],
        "phi2_modes": [[c.real, c.imag] for c in density.phi2],
    }
    with open(path, "w") as f:
        json.dump(rec, f, indent=2, sort_keys=True)
        f.write("\n")
