"""
Bottom of the spectrum against the capacitary diameter
======================================================

For each preset the smallest eigenvalue lambda is computed directly and the
capacitary interior diameter D by sweeping cubes.  The two-sided estimate
says lambda and D^-2 are comparable, so the products lambda * D^2 should
fall in one bounded interval across very different problems.
"""

from capbound.harness import compute_two_sided

names = ["const-1", "const-4", "const-16", "punctured", "ab-half-pi", "ab-pi", "strip",
         "shifted-oscillator", "harmonic"]

print(f"{'preset':>20} {'lambda':>10} {'D':>8} {'lambda*D^2':>11}")
for name in names:
    r = compute_two_sided(name)
    ratio = "n/a" if r.ratio is None else f"{r.ratio:.3f}"
    print(f"{name:>20} {r.lam:10.5f} {r.D:8.4g} {ratio:>11}", flush=True)

# The free plane is degenerate on both sides at once: lambda = 0 and D = inf.
free = compute_two_sided("free")
print(f"{'free':>20} {free.lam:10.2e} {free.D:>8} {'both degenerate':>11}")
