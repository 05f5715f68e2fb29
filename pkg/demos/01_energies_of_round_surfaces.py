"""Leafwise curvature energies of round surfaces.

The p-th power of the mean leaf curvature integrates to classical values
on spheres and on the optimal-ratio torus; this script reproduces them
with tensor-product quadrature and shows the convergence with grid size.
"""

import numpy as np

from leafwise import catalog, functionals as fl
from leafwise.revolution import sphere_area

print("=== unit sphere, full foliation (s = n) ===")
for n in (2, 3, 4):
    patch = catalog.sphere(n=n, m_polar=24, m_azimuth=32)
    value = fl.evaluate(fl.w_nps(n), patch)
    target = sphere_area(n)
    print(f"  n={n}:  integral of H_F^{n} = {value:.12f}   "
          f"(n-sphere area {target:.12f}, rel err {abs(value/target-1):.1e})")

print("\n=== torus with generating-circle ratio 1/sqrt(2) ===")
value = fl.evaluate(fl.w_nps(2), catalog.torus())
print(f"  integral of H^2 = {value:.12f}   (2 pi^2 = {2*np.pi**2:.12f})")

print("\n=== quadrature convergence on the sphere ===")
for m in (8, 16, 32, 64):
    patch = catalog.sphere(n=2, m_polar=m, m_azimuth=2 * m)
    value = fl.evaluate(fl.w_nps(2), patch)
    print(f"  {m:3d} x {2*m:3d} nodes: rel err {abs(value/(4*np.pi)-1):.2e}")

print("\nGeneric tori are above the optimal value:")
for ratio in (0.5, 1 / np.sqrt(2), 0.85):
    patch = catalog.torus(big_radius=1.0, small_radius=ratio)
    value = fl.evaluate(fl.w_nps(2), patch)
    print(f"  ratio {ratio:.4f}: W = {value:.8f}  (optimum {2*np.pi**2:.8f})")
