"""Imperfect-interface parameter design for weakly neutral inclusions.

The parameter gamma lives on the unit circle,

    gamma(theta) = gamma0 + 2 gamma2 cos(2 theta - phase),

and pulls back to the physical boundary as beta = gamma / |Phi'|. The closed
form for (gamma0, gamma2) kills the leading dipole of the exterior field up to
a small truncation-independent residual; calibrate_gamma removes that residual
by root-finding against the spectral disk polarization tensor.
"""

from __future__ import annotations

import csv
import json
import math
import cmath
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import disk_spectral
from .conformal import ADMISSIBLE_BOUND, ConformalMap


@dataclass(frozen=True)
class InterfaceParameter:
    """Interface parameter pair (gamma on the circle, beta on the boundary).

    gamma(theta) = gamma0 + 2 gamma2 cos(2 theta - phase) must be >= 0,
    equivalently gamma0 >= 2 |gamma2|. beta is the pull-back
    gamma(theta) / |Phi'(e^{i theta})| through the attached map.
    """

    b: complex
    gamma0: float
    gamma2: float
    phase: float
    map: ConformalMap
    provenance: str = "closed_form"
    N: int | None = None

    def __post_init__(self):
        if self.gamma0 < 0 or self.gamma0 < 2 * abs(self.gamma2) - 1e-12:
            raise ValueError("gamma must be non-negative: gamma0 >= 2|gamma2| required")

    def gamma(self, theta):
        theta = np.asarray(theta, dtype=float)
        return self.gamma0 + 2.0 * self.gamma2 * np.cos(2.0 * theta - self.phase)

    def gamma_modes(self) -> dict:
        rot = cmath.exp(-1j * self.phase)
        return {
            0: complex(self.gamma0),
            2: self.gamma2 * rot,
            -2: self.gamma2 * np.conj(rot),
        }

    def beta(self, theta):
        theta = np.asarray(theta, dtype=float)
        jac = np.abs(self.map.derivative(np.exp(1j * theta)))
        if np.any(jac < 1e-13):
            raise ValueError(
                "beta is unbounded at a corner point (boundary Jacobian vanishes)"
            )
        return self.gamma(theta) / jac


def gamma_closed_form(b_abs):
    """Closed-form (gamma0, gamma2) for a shape with |b_1| = b_abs.

    gamma0 = 1/(1+b) + 1/(1-b) - 1,  gamma2 = 1/(1+b) - 1/(1-b).

    Exact in rational arithmetic when b_abs is a Fraction. Requires
    0 <= b_abs <= 2 - sqrt(3), the range on which gamma stays non-negative.
    """
    bf = float(b_abs)
    if not (0.0 <= bf <= ADMISSIBLE_BOUND + 1e-12):
        raise ValueError(
            f"closed form needs 0 <= |b| <= 2 - sqrt(3) ~ {ADMISSIBLE_BOUND:.6f}; "
            f"got {bf:.6f} (calibrated mode may still admit slightly larger |b|)"
        )
    if isinstance(b_abs, Fraction):
        one = Fraction(1)
    else:
        one = 1.0
        b_abs = bf
    g0 = one / (1 + b_abs) + one / (1 - b_abs) - 1
    g2 = one / (1 + b_abs) - one / (1 - b_abs)
    return g0, g2


def gamma_eval(param: InterfaceParameter, theta):
    return param.gamma(theta)


def beta_on_boundary(param: InterfaceParameter, theta):
    return param.beta(theta)


def phase_for_complex_b(b) -> float:
    """Rotation angle for the cos(2 theta) term when b_1 is complex: arg(b)."""
    b = complex(b)
    if abs(b) > ADMISSIBLE_BOUND + 1e-12:
        raise ValueError("phase rotation defined for |b| <= 2 - sqrt(3)")
    return cmath.phase(b) if b != 0 else 0.0


def calibrate_gamma(b_abs, N: int = 128, tol: float = 1e-10, max_iter: int = 100):
    """Calibrated (gamma0, gamma2) hitting the disk dipole target exactly.

    Damped Newton iteration with finite-difference Jacobian on

        F(gamma0, gamma2) = (T11 - 2 pi b, T22 + 2 pi b)

    where T is the spectral disk polarization tensor at truncation N. Seeded
    at the closed form; converged when |F|_inf <= tol. Roots violating
    gamma0 >= 2|gamma2| are rejected.
    """
    b = float(b_abs)
    if not (0.0 <= b < 1.0):
        raise ValueError("calibration needs 0 <= |b| < 1")
    if b == 0.0:
        return 1.0, 0.0
    # seed at the closed form, or at its boundary-clamped value just outside it
    seed_b = min(b, ADMISSIBLE_BOUND)
    g0, g2 = gamma_closed_form(seed_b)
    if b > ADMISSIBLE_BOUND:
        g2 = 1.0 / (1.0 + b) - 1.0 / (1.0 - b)
        g0 = max(2.0 * abs(g2) + 1e-6, g0)
    x = np.array([g0, g2])
    tgt = 2.0 * np.pi * np.array([b, -b])

    def F(v):
        T = disk_spectral.polarization({0: v[0], 2: v[1], -2: v[1]}, N).T
        return np.array([T[0, 0], T[1, 1]]) - tgt

    fx = F(x)
    for _ in range(max_iter):
        if np.max(np.abs(fx)) <= tol:
            g0, g2 = float(x[0]), float(x[1])
            if g0 < 2 * abs(g2) - 1e-12:
                raise ValueError("calibration converged to a sign-violating root")
            return g0, g2
        h = 1e-7
        J = np.empty((2, 2))
        for j in range(2):
            xp = x.copy()
            xp[j] += h
            J[:, j] = (F(xp) - fx) / h
        step = np.linalg.solve(J, -fx)
        t = 1.0
        while t > 1e-6:
            try:
                xn = x + t * step
                fn = F(xn)
            except ValueError:
                t /= 2  # step left the admissible region, damp
                continue
            if np.max(np.abs(fn)) < np.max(np.abs(fx)):
                x, fx = xn, fn
                break
            t /= 2
        else:
            break
    raise ValueError(f"no admissible calibrated root within {max_iter} iterations")


def neutral_disk_beta(r, sigma_c, sigma_m) -> float:
    """Constant interface parameter making a disk of radius r exactly neutral.

    beta = sigma_c sigma_m / (r (sigma_c - sigma_m)); the perfectly conducting
    core sigma_c = inf gives sigma_m / r.
    """
    if r <= 0:
        raise ValueError("radius must be positive")
    if sigma_c == sigma_m:
        raise ValueError("neutral beta undefined for sigma_c = sigma_m")
    if math.isinf(sigma_c):
        return sigma_m / r
    return sigma_c * sigma_m / (r * (sigma_c - sigma_m))


def design(m: ConformalMap, mode: str = "closed_form", N: int = 128) -> InterfaceParameter:
    """Build the weakly neutral interface parameter for a shape."""
    b = m.b1
    phase = cmath.phase(b) if b != 0 else 0.0
    if mode == "closed_form":
        g0, g2 = gamma_closed_form(abs(b))
        return InterfaceParameter(b=b, gamma0=float(g0), gamma2=float(g2), phase=phase,
                                  map=m, provenance="closed_form", N=None)
    if mode == "calibrated":
        g0, g2 = calibrate_gamma(abs(b), N=N)
        return InterfaceParameter(b=b, gamma0=g0, gamma2=g2, phase=phase,
                                  map=m, provenance="calibrated", N=N)
    raise ValueError(f"unknown interface mode {mode!r}")


def interface_record(param: InterfaceParameter) -> dict:
    return {
        "b_re": param.b.real,
        "b_im": param.b.imag,
        "gamma0": param.gamma0,
        "gamma2": param.gamma2,
        "phase": param.phase,
        "provenance": param.provenance,
        "N": param.N,
    }


def write_interface_json(param: InterfaceParameter, path) -> None:
    with open(path, "w") as f:
        json.dump(interface_record(param), f, indent=2, sort_keys=True)
        f.write("\n")


def write_beta_csv(param: InterfaceParameter, path, n_samples: int = 720) -> None:
    """Sample beta on a midpoint theta grid (avoids corner angles) to CSV."""
    if n_samples % 2:
        raise ValueError("use an even sample count so corner angles are avoided")
    theta = 2.0 * np.pi * (np.arange(n_samples) + 0.5) / n_samples
    beta = param.beta(theta)
    with open(path, "w", newline="") as f:
        wr = csv.writer(f)
        wr.writerow(["theta", "beta"])
        for th, be in zip(theta, beta):
            wr.writerow([repr(float(th)), repr(float(be))])
