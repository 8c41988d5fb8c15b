"""
Flux through a hole and the best gauge
======================================

A magnetic potential whose circulation around a removed hole is not a
multiple of 2 pi cannot be gauged away on the annulus around it.  The
optimal gauge picks the integer winding closest to cancelling the flux,
and the leftover energy grows like the squared distance of the flux to
2 pi Z.
"""

import numpy as np

from capbound.gauge import cube_data, optimize_gauge
from capbound.grid import CubeWindow
from capbound.presets import aharonov_bohm

# One unit cube around the hole centred at (1, 1).  Holes are frozen nodes of
# the domain, so F is simply the set of cube nodes outside it.
alphas = np.linspace(0.0, 4 * np.pi, 17)
rows = []
for alpha in alphas:
    p = aharonov_bohm(alpha)
    cube = CubeWindow.centered(p.lattice, (1.0, 1.0), 1.0)
    data = cube_data(cube, p.a, p.V, p.omega)
    g = optimize_gauge(data, ~data.inside)
    rows.append((alpha, g.winding[0], g.energy))

# The energy at a quarter turn fixes the geometric constant W.
W = rows[2][2] / (np.pi / 2) ** 2
print(f"{'flux/2pi':>9} {'winding':>8} {'energy':>10} {'W*dist^2':>10}")
for alpha, m, e in rows:
    dist = abs(alpha + 2 * np.pi * m)
    print(f"{alpha / (2 * np.pi):9.3f} {m:8d} {e:10.5f} {W * dist**2:10.5f}")
