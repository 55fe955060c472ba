"""
Telling ellipsoids apart from everything else
=============================================

An ellipsoid centered at the origin satisfies nu_i proportional to
y_i / c_i^2 pointwise, so the ratio nu_i / y_i is constant along each
axis.  That gives an exact residual test needing only points and
normals, no fitting.  For shapes that fail it, a least-squares ellipse
fit quantifies how far from elliptical they are.
"""

import numpy as np

from weakneutral import (
    best_fit_ellipse_residual,
    discretize,
    ellipsoid_residual,
    make_droplet_map,
    make_ellipse_map,
    mesh_samples,
    sample_ellipse,
    sample_ellipsoid,
)

# exact ellipse: residual at rounding level, recovered axes exact
pts, nus = sample_ellipse(1.25, 0.75, n=360)
r = ellipsoid_residual(pts, nus)
print("ellipse(1.25, 0.75): residual %.3e  ellipsoid: %s" % (r.residual, r.is_ellipsoid()))
print("  recovered semi-axes:", np.round(r.radii, 12))

# same test in 3d
pts, nus = sample_ellipsoid(2.0, 1.5, 1.0, n=500)
r = ellipsoid_residual(pts, nus)
print("ellipsoid(2, 1.5, 1): residual %.3e  ellipsoid: %s" % (r.residual, r.is_ellipsoid()))

# the droplet has a cusp; it is nowhere near an ellipse and both
# measures say so
mesh = discretize(make_droplet_map(), 512, grading="corner")
pts, nus = mesh_samples(mesh)
r = ellipsoid_residual(pts, nus)
print("droplet: residual %.3e  ellipsoid: %s" % (r.residual, r.is_ellipsoid()))

misfit, axes, center = best_fit_ellipse_residual(pts)
print("droplet best-fit ellipse: a = %.4f  b = %.4f  rms misfit = %.4f"
      % (axes[0], axes[1], misfit))

# a slightly perturbed ellipse fails the exact test but fits well
t = np.linspace(0.0, 2.0 * np.pi, 400, endpoint=False)
pts = np.stack([1.25 * np.cos(t) * (1 + 0.01 * np.cos(5 * t)),
                0.75 * np.sin(t) * (1 + 0.01 * np.cos(5 * t))], axis=1)
misfit, axes, center = best_fit_ellipse_residual(pts)
print("wobbly ellipse: best-fit a = %.4f  b = %.4f  rms misfit = %.4f"
      % (axes[0], axes[1], misfit))
