"""
Fibre decomposition of a translation-invariant field
====================================================

With a = (0, x) and no potential the operator commutes with translations
in y.  A Fourier transform in y turns it into a family of shifted
oscillators -d^2/dx^2 + (x + mu)^2, each with ground energy 1.  The band
bottom is the infimum over mu, and a direct two-dimensional solve on a
periodic strip agrees with it.
"""

from capbound.fibered import fibered_diameter, infimum_over_fibers, strip_operator
from capbound.presets import build
from capbound.spectrum import bottom

p = build("shifted-oscillator", "1/32")
curve = infimum_over_fibers(p.fibered)
print(f"inf over mu: {curve.lam:.6f} at mu = {curve.mu_star:.3f}")
print("lambda_mu on a few grid points:", [round(float(v), 4) for v in curve.lams[20:44:4]])

strip = bottom(strip_operator(p.fibered, 1.0)).lam
print(f"periodic strip 2-D solve: {strip:.6f}")

fd = fibered_diameter(p.fibered_coarse, 0.5, curve=infimum_over_fibers(p.fibered_coarse))
print(f"fibred diameter {fd.D:.3f} (attained at mu = {fd.mu:.2f}), lambda * D^2 = {fd.ratio:.3f}")
