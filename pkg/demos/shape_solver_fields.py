"""
Exterior fields around a coated inclusion, two solvers, one answer
==================================================================

The same exterior problem can be solved on the physical boundary with a
Nystrom discretization, or pulled back to the unit disk through the
conformal map and solved spectrally.  Wherever both are defined they must
agree.  With the calibrated interface the perturbation decays like
|x|^{-2}; with a perfectly conducting boundary it only decays like
|x|^{-1}, and the far-field fit shows the difference.
"""

import numpy as np

from weakneutral import (
    design,
    discretize,
    eval_disk_field,
    eval_field,
    farfield_decay,
    invert_map,
    make_ellipse_map,
    oracle_crosscheck,
    polarization_general,
    polarization_perfect,
    solve_dense,
    solve_imperfect,
    solve_perfect,
)

m = make_ellipse_map(1.25, 0.75)
n = 256
mesh = discretize(m, n)

param = design(m, mode="calibrated", N=128)
beta = param.beta(mesh.theta)

sol = solve_imperfect(mesh, beta, a=(1.0, 0.0))
print("imperfect solve: cond = %.2e  residual = %.2e" % (sol.condition, sol.residual))

# one exterior sample, both routes
z = 2.0 + 0.7j
u_bem = eval_field(mesh, sol, np.array([z]))
dens = solve_dense(param.gamma_modes(), N=128, a=(1.0, 0.0))
u_disk = eval_disk_field(dens, invert_map(m, z))
print("u at %s:  bem %.12f  disk %.12f" % (z, u_bem, float(np.real(u_disk))))

# the agreement holds on a whole annulus of sample points
x = oracle_crosscheck(m, param, n=n, N=128, n_points=60)
print("crosscheck over %d points: max rel diff %.3e" % (x["n_used"], x["max_rel_diff"]))

# far-field decay of the perturbation u - a.x
fit_weak = farfield_decay(mesh, sol, radii=(5.0, 10.0, 20.0, 40.0))
perf = solve_perfect(mesh, a=(1.0, 0.0))
fit_perf = farfield_decay(mesh, perf, radii=(5.0, 10.0, 20.0, 40.0))
print("decay slope, neutral interface:   %.4f  (want about -2 or steeper)" % fit_weak.slope)
print("decay slope, perfect conductor:   %.4f  (want about -1)" % fit_perf.slope)

# polarization tensors tell the same story without leaving the boundary
T_weak = polarization_general(mesh, beta).T
T_perf = polarization_perfect(mesh).T
ratio = np.linalg.norm(T_weak) / np.linalg.norm(T_perf)
print("|T_weak| / |T_perf| = %.3e" % ratio)
