"""Conformal invariance of the traceless leaf-curvature density.

Q_2 = (mean leaf curvature)^2 - (second mean curvature function) vanishes
exactly on umbilic leaves and transforms with weight -2 under conformal
rescalings, so (Q_2)^{n/2} dV is invariant under the full Möbius group.
The script checks both the density invariance and the shape-operator
transformation law under an ambient inversion on a sheared, non-umbilic
foliated 3-torus in R^4, and shows the density vanish on a parallels-
foliated revolution hypersurface (umbilic leaves).
"""

import numpy as np

from leafwise import catalog, functionals as fl, revolution as rev

patch = catalog.sheared_torus4(m1=8, m2=8, m3=8)

print("surface: sheared non-umbilic foliated 3-torus in R^4")
res = fl.conformal_density_check(patch, r=2, mode="scaling", scale=2.4)
print(f"  homothety x -> 2.4 x : density deviation {res['max_rel_deviation']:.2e}")
res = fl.conformal_density_check(patch, r=2, mode="inversion")
print(f"  inversion x -> x/|x|^2: density deviation {res['max_rel_deviation']:.2e}")
print(f"  shape-operator law A_F -> (A_F - <grad mu, N>/mu)/mu with mu = |x|^-2:"
      f" deviation {res['shape_law_deviation']:.2e}")

print("\numbilic leaves kill the density identically:")
prof = rev.critical_ode_solve(3, 4, 0.4, 1.0, 0.4, (0.4, 0.6))
rpatch = rev.revolution_patch(prof, m_leaf=10, m_profile=8, rho_window=(0.45, 0.55))
x = rpatch.grid.points[::7]
dens = fl.conformal_density(rpatch, 2, x, rpatch.n, rpatch.s)
print(f"  revolution hypersurface in R^4, sphere parallels: max density "
      f"{np.max(np.abs(dens)):.2e}")
