"""
Discreteness: exterior diameters and Persson's limit
====================================================

For V = |x|^2 the spectrum is discrete.  Removing larger balls pushes the
bottom of the spectrum up without bound, while the capacitary diameter of
the exterior region shrinks.  For a constant potential both stay put.
"""

import numpy as np

from capbound.diameter import diameter_limit
from capbound.grid import DomainMask, Lattice, ScalarField
from capbound.spectrum import MagneticOperator, persson_limit

lat = Lattice.box((-6, -6), (6, 6), 1 / 4)
X, Y = lat.mesh()
omega = DomainMask.full(lat)
V = ScalarField(lat, X**2 + Y**2)
radii = (1.0, 2.0, 4.0)

pl = persson_limit(MagneticOperator(omega, None, V), radii)
dl = diameter_limit(radii, omega, None, V, 0.5)
print("harmonic potential")
for R, lam, D in zip(radii, pl.values, dl.values):
    print(f"  R={R:4.1f}  lambda={lam:8.3f}  D_R={D:.3f}")

# A torus much larger than the removed balls stands in for the plane.
big = Lattice.box((-16, -16), (16, 16), 1 / 4, periodic=(True, True))
pc = persson_limit(MagneticOperator(DomainMask.full(big), None, ScalarField.constant(big, 1.0)), radii)
print("constant potential c=1")
print("  lambda(R):", np.round(pc.values, 4), " plateau:", pc.plateau)
