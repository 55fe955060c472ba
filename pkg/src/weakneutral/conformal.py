"""Exterior conformal maps from the complement of the unit disk onto inclusion exteriors.

A map is stored through its normalized Laurent expansion

    Phi(zeta) = zeta + b_1/zeta + b_2/zeta^2 + ... ,

optionally backed by closed-form map/derivative callables (used by the droplet
shape, whose Laurent tail is infinite). The first tail coefficient b_1 controls
admissibility of the weakly neutral interface design.
"""

from __future__ import annotations

import cmath
import math
import re
from dataclasses import dataclass, field

import numpy as np
from shapely.geometry import LineString

# Largest |b_1| for which the cos(2 theta) interface design stays non-negative.
ADMISSIBLE_BOUND = 2.0 - math.sqrt(3.0)

_INJECTIVITY_RADII = (1.0 + 1e-3, 1.01, 1.1, 2.0)
_BOUNDARY_SAMPLES = 4096


@dataclass(frozen=True)
class ConformalMap:
    """Exterior Laurent map with optional closed-form evaluators.

    Attributes
    ----------
    tail : ndarray
        Complex coefficients (b_1, ..., b_K) of the normalized expansion.
        The leading coefficient is fixed to 1 and the constant term to 0.
    corner_angles : tuple of float
        Angles theta where Phi'(e^{i theta}) = 0 (boundary corners). Empty for
        smooth shapes.
    kind : str
        "ellipse", "droplet" or "laurent"; used for serialization.
    params : tuple
        Constructor parameters, kept for serialization.
    """

    tail: np.ndarray
    corner_angles: tuple = ()
    kind: str = "laurent"
    params: tuple = ()
    _closed_forms: tuple = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        tail = np.atleast_1d(np.asarray(self.tail, dtype=complex))
        object.__setattr__(self, "tail", tail)

    @property
    def b1(self) -> complex:
        """First Laurent tail coefficient (the admissibility-controlling one)."""
        return complex(self.tail[0]) if self.tail.size else 0.0 + 0.0j

    def map(self, zeta):
        """Evaluate Phi(zeta) for |zeta| >= 1."""
        zeta = np.asarray(zeta, dtype=complex)
        _require_exterior(zeta)
        if self._closed_forms is not None:
            return self._closed_forms[0](zeta)
        w = 1.0 / zeta
        acc = np.zeros_like(zeta)
        for bk in self.tail[::-1]:
            acc = (acc + bk) * w
        return zeta + acc

    def derivative(self, zeta):
        """Evaluate Phi'(zeta) for |zeta| >= 1."""
        zeta = np.asarray(zeta, dtype=complex)
        _require_exterior(zeta)
        if self._closed_forms is not None:
            return self._closed_forms[1](zeta)
        w = 1.0 / zeta
        acc = np.zeros_like(zeta)
        for k in range(self.tail.size, 0, -1):
            acc = (acc + k * self.tail[k - 1]) * w
        return 1.0 - acc * w

    def second_derivative(self, zeta):
        """Evaluate Phi''(zeta) for |zeta| >= 1 (needed for boundary curvature)."""
        zeta = np.asarray(zeta, dtype=complex)
        _require_exterior(zeta)
        if self._closed_forms is not None:
            return self._closed_forms[2](zeta)
        w = 1.0 / zeta
        acc = np.zeros_like(zeta)
        for k in range(self.tail.size, 0, -1):
            acc = (acc + k * (k + 1) * self.tail[k - 1]) * w
        return acc * w * w

    def boundary(self, theta):
        """Boundary points Phi(e^{i theta})."""
        return self.map(np.exp(1j * np.asarray(theta, dtype=float)))

    def is_corner(self, theta, tol=1e-12) -> bool:
        return any(
            abs((theta - c + math.pi) % (2 * math.pi) - math.pi) <= tol
            for c in self.corner_angles
        )


def _require_exterior(zeta):
    if np.any(np.abs(zeta) < 1.0 - 1e-12):
        raise ValueError("map evaluation requires |zeta| >= 1")


def _injectivity_scan(m: ConformalMap):
    # Derivative must not vanish strictly outside the unit circle, and the
    # boundary curve must be a simple closed curve.
    ang = np.linspace(0.0, 2 * math.pi, 720, endpoint=False)
    for r in _INJECTIVITY_RADII:
        dz = m.derivative(r * np.exp(1j * ang))
        if np.min(np.abs(dz)) < 1e-12:
            raise ValueError(
                f"map derivative vanishes at |zeta| = {r}; exterior map is not injective"
            )
    z = m.boundary(np.linspace(0.0, 2 * math.pi, _BOUNDARY_SAMPLES, endpoint=False))
    coords = np.column_stack([z.real, z.imag])
    ring = LineString(np.vstack([coords, coords[:1]]))
    if not ring.is_simple:
        raise ValueError("boundary curve self-intersects; exterior map is not injective")


def make_ellipse_map(a, b) -> ConformalMap:
    """Exterior map of the ellipse with semi-axes a >= b > 0.

    The image is the ellipse rescaled by 2/(a+b), so its Laurent tail is the
    single coefficient (a-b)/(a+b) and the semi-axes become 2a/(a+b), 2b/(a+b).
    """
    if not (a >= b > 0):
        raise ValueError("ellipse axes must satisfy a >= b > 0")
    return ConformalMap(
        tail=np.array([(a - b) / (a + b)], dtype=complex),
        kind="ellipse",
        params=(float(a), float(b)),
    )


def make_droplet_map() -> ConformalMap:
    """Exterior map of a droplet-shaped domain with one boundary corner.

    Defined by the closed-form derivative

        Phi'(zeta) = (1 + 1/zeta) * (1 + 1/(2 zeta))^(-2)
                   = 1 - (2 zeta + 1)^(-2),

    which integrates to Phi(zeta) = zeta + 1/(2(2 zeta + 1)) and the exact tail
    b_k = (-1)^(k-1) 2^(-(k+1)), so b_1 = 1/4. The factor 1 + 1/zeta vanishes
    at zeta = -1: the boundary has a corner at theta = pi, flagged so that
    meshing can grade toward it.
    """

    def phi(z):
        return z + 0.5 / (2.0 * z + 1.0)

    def dphi(z):
        return 1.0 - (2.0 * z + 1.0) ** -2.0

    def d2phi(z):
        return 4.0 * (2.0 * z + 1.0) ** -3.0

    k = np.arange(1, 31)
    tail = ((-1.0) ** (k - 1)) * 0.5 ** (k + 1)
    return ConformalMap(
        tail=tail.astype(complex),
        corner_angles=(math.pi,),
        kind="droplet",
        params=(),
        _closed_forms=(phi, dphi, d2phi),
    )


def make_laurent_map(tail) -> ConformalMap:
    """Normalized exterior map from a finite Laurent tail (b_1, ..., b_K).

    Requires |b_1| < 1 and rejects maps whose sampled derivative vanishes
    outside the unit circle or whose boundary curve self-intersects.
    """
    tail = np.atleast_1d(np.asarray(tail, dtype=complex))
    if tail.size == 0:
        tail = np.zeros(1, dtype=complex)
    if abs(tail[0]) >= 1.0:
        raise ValueError("|b_1| must be < 1 for an exterior map of unit leading coefficient")
    m = ConformalMap(tail=tail, kind="laurent", params=tuple(map(complex, tail)))
    _injectivity_scan(m)
    return m


def eval_map(m: ConformalMap, zeta):
    return m.map(zeta)


def eval_derivative(m: ConformalMap, zeta):
    return m.derivative(zeta)


def invert_map(m: ConformalMap, z, tol=1e-12, max_iter=50):
    """Pull an exterior point z back to the zeta-plane by Newton iteration.

    Seeded at zeta = z (exterior maps are near-identity far out), with a
    fallback sweep over 8 phases of |z| if the first seed fails. Convergence
    means |Phi(zeta) - z| <= tol * max(1, |z|) with |zeta| > 1.

    Raises
    ------
    ValueError
        If no seed converges (point too close to a corner, or inside).
    """
    z = complex(z)
    target = tol * max(1.0, abs(z))
    seeds = [z] + [abs(z) * cmath.exp(2j * math.pi * k / 8) for k in range(8)]
    for seed in seeds:
        zeta = seed
        ok = False
        for _ in range(max_iter):
            if not (np.isfinite(zeta.real) and np.isfinite(zeta.imag)) or abs(zeta) < 1e-9:
                break
            if abs(zeta) < 1.0:
                zeta = zeta / abs(zeta) ** 2  # reflect runaway iterates back outside
            f = complex(m.map(np.array(zeta))) - z
            if abs(f) <= target and abs(zeta) > 1.0:
                ok = True
                break
            df = complex(m.derivative(np.array(zeta)))
            if df == 0:
                break
            zeta = zeta - f / df
        if ok:
            return zeta
    raise ValueError(f"inversion did not converge for z = {z}")


def admissibility(m: ConformalMap) -> dict:
    """Admissibility report for the interface design based on |b_1|."""
    b = m.b1
    return {
        "b_re": b.real,
        "b_im": b.imag,
        "b_abs": abs(b),
        "phase": cmath.phase(b) if b != 0 else 0.0,
        "theorem_1_1_ok": abs(b) <= ADMISSIBLE_BOUND + 1e-15,
    }


# ---------------------------------------------------------------------------
# shape files and CLI shape specs

_PAIR_RE = re.compile(r"\(\s*([^,\s]+)\s*,\s*([^)\s]+)\s*\)")


def read_shape_file(path) -> ConformalMap:
    """Read a shape definition file.

    Flat key = value lines; '#' starts a comment. Keys:
        kind = ellipse | droplet | laurent
        a, b         (ellipse semi-axes)
        tail = (re,im) (re,im) ...   (laurent coefficients b_1..b_K)
    """
    kv = {}
    with open(path) as f:
        for line in f:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"bad shape-file line: {line!r}")
            key, val = line.split("=", 1)
            kv[key.strip().lower()] = val.strip()
    kind = kv.get("kind", "").lower()
    if kind == "ellipse":
        return make_ellipse_map(float(kv["a"]), float(kv["b"]))
    if kind == "droplet":
        return make_droplet_map()
    if kind == "laurent":
        pairs = _PAIR_RE.findall(kv.get("tail", ""))
        if not pairs:
            raise ValueError("laurent shape file needs a 'tail = (re,im) ...' line")
        tail = [complex(float(re_), float(im_)) for re_, im_ in pairs]
        return make_laurent_map(tail)
    raise ValueError(f"unknown shape kind {kind!r}")


def parse_shape_spec(spec: str) -> ConformalMap:
    """Parse a CLI shape spec: ellipse:a,b | droplet | laurent:FILE."""
    spec = spec.strip()
    if spec == "droplet":
        return make_droplet_map()
    if spec.startswith("ellipse:"):
        parts = spec[len("ellipse:"):].split(",")
        if len(parts) != 2:
            raise ValueError("ellipse spec must be ellipse:a,b")
        return make_ellipse_map(float(parts[0]), float(parts[1]))
    if spec.startswith("laurent:"):
        return read_shape_file(spec[len("laurent:"):])
    raise ValueError(f"unknown shape spec {spec!r}")
