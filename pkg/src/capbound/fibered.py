"""Operators whose magnetic potential and potential ignore the last coordinate.

For ``a = (0, ..., 0, a_n(x'))`` and ``V = V(x')`` a Fourier transform in
``x^n`` splits ``H_{a,V}`` into the fibres

    H(mu) = -Laplacian_{x'} + (mu + a_n(x'))^2 + V(x'),

and the bottom of the spectrum is ``inf_mu lambda_mu``.  Each fibre is a
non-magnetic problem one dimension lower.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.optimize import minimize_scalar

from .carving import json_number
from .diameter import DiameterResult, diameter
from .grid import DomainMask, Lattice, ScalarField, VectorField
from .spectrum import MagneticOperator, bottom

__all__ = [
    "BracketError",
    "FiberedProblem",
    "FiberCurve",
    "FiberedDiameter",
    "fiber_bottom",
    "infimum_over_fibers",
    "fibered_diameter",
    "strip_operator",
    "default_mu_grid",
]

MU_POINTS = 64
MU_TOL = 1e-3


class BracketError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class FiberedProblem:
    """Fibre data on an ``(n-1)``-dimensional lattice with Dirichlet walls."""

    lattice: Lattice
    a_fiber: np.ndarray
    V_fiber: np.ndarray
    mu_grid: np.ndarray | None = None

    def __post_init__(self):
        a = np.asarray(self.a_fiber, float)
        V = np.asarray(self.V_fiber, float)
        if a.shape != self.lattice.shape or V.shape != self.lattice.shape:
            raise ValueError("fibre fields must live on the fibre lattice")
        if np.any(V < 0):
            raise ValueError("V must be non-negative")
        object.__setattr__(self, "a_fiber", a)
        object.__setattr__(self, "V_fiber", V)
        if self.mu_grid is not None:
            g = np.asarray(self.mu_grid, float)
            if np.any(np.diff(g) <= 0):
                raise ValueError("mu grid must be strictly ascending")
            object.__setattr__(self, "mu_grid", g)

    @classmethod
    def from_functions(cls, lattice: Lattice, a_n, V=None, mu_grid=None) -> "FiberedProblem":
        xs = lattice.mesh()
        a = np.broadcast_to(np.asarray(a_n(*xs), float), lattice.shape)
        v = np.zeros(lattice.shape) if V is None else np.broadcast_to(np.asarray(V(*xs), float), lattice.shape)
        return cls(lattice, np.array(a), np.array(v), mu_grid)

    @property
    def omega(self) -> DomainMask:
        return DomainMask.full(self.lattice)

    def potential(self, mu: float) -> np.ndarray:
        """``V_mu = (mu + a_n)^2 + V`` on the fibre nodes."""
        return (mu + self.a_fiber) ** 2 + self.V_fiber

    def grid(self) -> np.ndarray:
        return default_mu_grid(self) if self.mu_grid is None else self.mu_grid

    def scaled(self, s: float) -> "FiberedProblem":
        """The dilated problem ``(s a_n(s x), s^2 V(s x))`` on the lattice shrunk by ``s``."""
        lat = self.lattice
        new = Lattice(lat.shape, lat.h / s, tuple(o / s for o in lat.origin), lat.periodic)
        mu = None if self.mu_grid is None else self.mu_grid * s
        return FiberedProblem(new, s * self.a_fiber, s * s * self.V_fiber, mu)


def default_mu_grid(p: FiberedProblem) -> np.ndarray:
    """64 points on ``[-mu_max, mu_max]`` with ``mu_max = max|a_n| + sqrt(max V) + 3``."""
    mu_max = float(np.max(np.abs(p.a_fiber)) + np.sqrt(np.max(p.V_fiber)) + 3.0)
    return np.linspace(-mu_max, mu_max, MU_POINTS)


def fiber_bottom(p: FiberedProblem, mu: float) -> float:
    """Bottom of ``-Laplacian + V_mu`` on the fibre lattice (Dirichlet walls)."""
    lat = p.lattice
    omega = p.omega
    Vm = p.potential(mu)
    if lat.dim == 1 and not lat.periodic[0]:
        inside = omega.inside
        d = 2.0 / lat.h**2 + Vm[inside]
        e = np.full(d.size - 1, -1.0 / lat.h**2)
        return float(sla.eigh_tridiagonal(d, e, eigvals_only=True, select="i", select_range=(0, 0))[0])
    return bottom(MagneticOperator(omega, None, ScalarField(lat, Vm))).lam


@dataclass(frozen=True, eq=False)
class FiberCurve:
    mus: np.ndarray
    lams: np.ndarray
    mu_star: float
    lam: float
    evaluations: tuple[tuple[float, float], ...] = field(default=(), repr=False)

    def to_csv(self) -> str:
        lines = ["mu,lambda_mu"]
        lines += [f"{m:.17g},{v:.17g}" for m, v in zip(self.mus, self.lams)]
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {"mu_star": self.mu_star, "lambda": self.lam, "mu": self.mus.tolist(),
                "lambda_mu": self.lams.tolist()}


def infimum_over_fibers(p: FiberedProblem) -> FiberCurve:
    """``inf_mu lambda_mu``: grid scan, then bounded Brent refinement to ``|dmu| <= 1e-3``.

    Raises :class:`BracketError` if the grid minimum sits at an end point.
    """
    mus = p.grid()
    lams = np.array([fiber_bottom(p, m) for m in mus])
    i = int(np.argmin(lams))
    if i == 0 or i == len(mus) - 1:
        raise BracketError("minimum at the end of the mu grid; extend mu grid")
    evals = []

    def f(m):
        v = fiber_bottom(p, m)
        evals.append((float(m), v))
        return v

    opt = minimize_scalar(f, bounds=(mus[i - 1], mus[i + 1]), method="bounded",
                          options={"xatol": MU_TOL})
    mu_star, lam = float(opt.x), float(opt.fun)
    if lams[i] < lam:
        mu_star, lam = float(mus[i]), float(lams[i])
    return FiberCurve(mus, lams, mu_star, lam, tuple(evals))


@dataclass(frozen=True, eq=False)
class FiberedDiameter:
    """``D~ = sup_mu D(V_mu)`` with the fibre-wise diameters and the ratio ``lambda * D~^2``."""

    D: float
    mu: float
    lam: float
    mus: tuple[float, ...]
    values: tuple[float, ...]
    witness: DiameterResult | None

    @property
    def ratio(self) -> float:
        return self.lam * self.D**2 if np.isfinite(self.D) else float("inf")

    def to_dict(self) -> dict:
        return {"D": json_number(self.D), "mu": self.mu, "lambda": self.lam,
                "ratio": json_number(self.ratio), "mu_grid": list(self.mus),
                "D_mu": [json_number(v) for v in self.values]}


def fibered_diameter(p: FiberedProblem, gamma: float, mus=None, curve: FiberCurve | None = None,
                     **kw) -> FiberedDiameter:
    """Supremum over ``mu`` of the non-magnetic diameter of ``V_mu`` in the fibre dimension.

    ``mus`` defaults to the ``mu`` grid plus the minimiser of ``lambda_mu``.
    """
    curve = infimum_over_fibers(p) if curve is None else curve
    if mus is None:
        mus = sorted(set(np.round(p.grid(), 12).tolist()) | {round(curve.mu_star, 12)})
    omega = p.omega
    best, best_mu, best_res, vals = -1.0, None, None, []
    for mu in mus:
        res = diameter(omega, None, ScalarField(p.lattice, p.potential(mu)), gamma, **kw)
        vals.append(res.D)
        if res.D > best:
            best, best_mu, best_res = res.D, float(mu), res
    return FiberedDiameter(best, best_mu, curve.lam, tuple(float(m) for m in mus), tuple(vals), best_res)


def strip_operator(p: FiberedProblem, period: float) -> MagneticOperator:
    """The full operator on the fibre lattice times a periodic ``x^n`` circle of length ``period``.

    Fourier modes ``2 pi k / period`` sample the fibre parameter.
    """
    lat = p.lattice
    if lat.dim != 1:
        raise NotImplementedError("strip cross-check is implemented for one-dimensional fibres")
    ny = int(round(period / lat.h))
    if ny < 2 or abs(ny * lat.h - period) > 1e-9 * period:
        raise ValueError("period must be a multiple of h with at least two nodes")
    full = Lattice((lat.shape[0], ny), lat.h, (lat.origin[0], 0.0), (False, True))
    comps = (np.zeros(full.edge_shape(0)), np.repeat(p.a_fiber[:, None], ny, axis=1))
    a = VectorField(full, comps)
    V = ScalarField(full, np.repeat(p.V_fiber[:, None], ny, axis=1))
    return MagneticOperator(DomainMask.full(full), a, V)
