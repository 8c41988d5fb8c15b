"""Analytic test problems.

Each preset bundles a domain, magnetic potential and potential on a lattice,
the default ``gamma``, radii for exterior/Persson sequences and a list of
tagged oracle values.  Unbounded domains are represented either by a
periodic box (one period is swept) or by a Dirichlet box whose walls are a
documented truncation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from .fibered import FiberedProblem
from .grid import DomainMask, Lattice, ScalarField, VectorField
from .spectrum import MagneticOperator

__all__ = ["Oracle", "Preset", "PRESETS", "build", "catalog", "parse_h", "hole_centres", "aharonov_bohm"]


@dataclass(frozen=True)
class Oracle:
    quantity: str
    value: float
    tag: str  # REFERENCE, TRIVIAL or DERIVED
    note: str

    def __post_init__(self):
        if self.tag not in ("REFERENCE", "TRIVIAL", "DERIVED"):
            raise ValueError(f"unknown oracle tag {self.tag}")

    def to_dict(self) -> dict:
        v = self.value if np.isfinite(self.value) else ("inf" if self.value > 0 else "nan")
        return {"quantity": self.quantity, "value": v, "tag": self.tag, "note": self.note}


@dataclass(frozen=True, eq=False)
class Preset:
    name: str
    omega: DomainMask
    a: VectorField | None = None
    V: ScalarField | None = None
    gamma: float = 0.5
    radii: tuple[float, ...] = ()
    persson: Callable[[], MagneticOperator] | None = field(default=None, repr=False)
    fibered: FiberedProblem | None = None
    fibered_coarse: FiberedProblem | None = None
    gauge_budget: int = 0
    rounds: int = 2
    oracles: tuple[Oracle, ...] = ()
    caveat: str = ""

    @property
    def dim(self) -> int:
        return self.omega.lattice.dim

    @property
    def lattice(self) -> Lattice:
        return self.omega.lattice

    def operator(self) -> MagneticOperator:
        return MagneticOperator(self.omega, self.a, self.V)

    def persson_operator(self) -> MagneticOperator:
        return self.persson() if self.persson is not None else self.operator()

    def describe(self) -> dict:
        return {"name": self.name, "dim": self.dim, "lattice": self.lattice.to_dict(),
                "gamma": self.gamma, "radii": list(self.radii), "gauge_budget": self.gauge_budget,
                "rounds": self.rounds, "oracles": [o.to_dict() for o in self.oracles],
                "caveat": self.caveat}


def parse_h(text) -> float | None:
    """``"1/64"``, ``"0.015625"`` or ``None``."""
    if text is None:
        return None
    if isinstance(text, (int, float)):
        return float(text)
    return float(Fraction(text))


def _torus(L: float, h: float) -> Lattice:
    return Lattice.box((-L / 2, -L / 2), (L / 2, L / 2), h, periodic=(True, True))


def _dirichlet_box(half: float, h: float) -> Lattice:
    return Lattice.box((-half, -half), (half, half), h)


def _free(h=None):
    h = 1 / 16 if h is None else h
    lat = _torus(4.0, h)
    return Preset("free", DomainMask.full(lat), radii=(0.5, 1.0),
                  oracles=(Oracle("lambda", 0.0, "TRIVIAL", "constants are eigenfunctions"),
                           Oracle("D", float("inf"), "REFERENCE", "every cube qualifies when a and V vanish")),
                  caveat="torus of side 4 stands in for the plane")


def _constant(c):
    def build(h=None):
        s = 1.0 / np.sqrt(c)
        hh = (1 / 16 if h is None else h) * s
        lat = _torus(4.0 * s, hh)

        def persson():
            big = _torus(32.0 * s, 32.0 * s / 128)
            return MagneticOperator(DomainMask.full(big), None, ScalarField.constant(big, c))

        return Preset(f"const-{c}", DomainMask.full(lat), None, ScalarField.constant(lat, c),
                      radii=tuple(r * s for r in (0.5, 1.0, 2.0)), persson=persson,
                      oracles=(Oracle("lambda", float(c), "TRIVIAL", "constant potential"),
                               Oracle("lambda_inf", float(c), "DERIVED", "translation invariance")),
                      caveat="lattice spacing scales as c^-1/2 so the family is dilation-consistent")
    return build


def _harmonic(h=None):
    h = 1 / 8 if h is None else h
    lat = _dirichlet_box(8.0, h)
    X, Y = lat.mesh()

    def persson():
        # wider box so the largest removed ball stays clear of the walls
        big = _dirichlet_box(12.0, h)
        BX, BY = big.mesh()
        return MagneticOperator(DomainMask.full(big), None, ScalarField(big, BX**2 + BY**2))

    return Preset("harmonic", DomainMask.full(lat), None, ScalarField(lat, X**2 + Y**2),
                  radii=(1.0, 2.0, 4.0, 6.0, 8.0), persson=persson,
                  oracles=(Oracle("lambda", 2.0, "DERIVED", "ground state exp(-|x|^2/2)"),),
                  caveat="Dirichlet box of half-width 8; the ground state is about 1e-14 at the walls")


def _landau(B):
    def build(h=None):
        s = 1.0 / np.sqrt(B)
        hh = (1 / 8 if h is None else h) * s
        lat = _dirichlet_box(8.0 * s, hh)
        a = VectorField.from_function(lat, lambda x, y: (-0.5 * B * y, 0.5 * B * x))
        return Preset(f"landau-{B}", DomainMask.full(lat), a, None, radii=tuple(r * s for r in (1.0, 2.0, 4.0)),
                      gauge_budget=2,
                      oracles=(Oracle("lambda", float(B), "DERIVED", "lowest Landau level"),),
                      caveat="Dirichlet box of half-width 8/sqrt(B); the lattice form lowers the level by ~B^2 h^2/8")
    return build


def hole_centres(spacing=2.0, count=4):
    offs = spacing * (np.arange(count) - (count - 1) / 2)
    return [(float(x), float(y)) for x in offs for y in offs]


HOLE_RADIUS = 0.3


def _holes_domain(lat):
    X, Y = lat.mesh()
    inside = DomainMask.full(lat).inside.copy()
    for cx, cy in hole_centres():
        inside &= (X - cx) ** 2 + (Y - cy) ** 2 > HOLE_RADIUS**2
    return DomainMask(lat, inside)


def _ab(alpha, label):
    def build(h=None):
        h = 1 / 16 if h is None else h
        lat = _dirichlet_box(4.0, h)
        X, Y = lat.mesh()
        a = VectorField.zeros(lat)
        for cx, cy in hole_centres():
            a = a + VectorField.from_phase(lat, np.arctan2(Y - cy, X - cx), alpha / (2 * np.pi))
        return Preset(label, _holes_domain(lat), a, None, radii=(1.0, 2.0), gauge_budget=2,
                      oracles=(Oracle("winding", float(-round(alpha / (2 * np.pi))), "DERIVED",
                                      "flux quantisation around each hole"),),
                      caveat="16 holes of radius 0.3 in a Dirichlet box of half-width 4")
    return build


def aharonov_bohm(alpha: float, h=None) -> Preset:
    """The flux-hole lattice with flux ``alpha`` through every hole."""
    return _ab(float(alpha), f"ab-{alpha:.6g}")(parse_h(h))


def _punctured(h=None):
    h = 1 / 16 if h is None else h
    lat = _dirichlet_box(4.0, h)
    return Preset("punctured", _holes_domain(lat), radii=(1.0, 2.0),
                  caveat="16 holes of radius 0.3 in a Dirichlet box of half-width 4")


def _strip(h=None, width=1.0, period=8.0):
    h = 1 / 32 if h is None else h
    lat = Lattice.box((-period / 2, -width / 2), (period / 2, width / 2), h, periodic=(True, False))
    return Preset("strip", DomainMask.full(lat), radii=(0.25, 1.0, 2.0),
                  oracles=(Oracle("lambda", np.pi**2 / width**2, "DERIVED", "width-w strip bottom pi^2/w^2"),),
                  caveat="periodic along the strip with period 8")


def _shifted_oscillator(h=None, half=6.0):
    h = 1 / 64 if h is None else h
    fib = Lattice.box((-half,), (half,), h)
    p = FiberedProblem.from_functions(fib, lambda x: x)
    lat = Lattice.box((-half, 0.0), (half, 1.0), h, periodic=(False, True))
    X, _ = lat.mesh()
    a = VectorField(lat, (np.zeros(lat.edge_shape(0)), X.copy()))
    coarse = FiberedProblem.from_functions(Lattice.box((-half,), (half,), max(h, 1 / 16)), lambda x: x)
    return Preset("shifted-oscillator", DomainMask.full(lat), a, None, fibered=p, fibered_coarse=coarse,
                  oracles=(Oracle("lambda", 1.0, "DERIVED", "ground energy of -d^2/dy^2 + (y + mu)^2"),),
                  caveat="fibre interval of half-width 6; strip period 1 in the free direction")


PRESETS: dict[str, Callable[..., Preset]] = {
    "free": _free,
    "const-1": _constant(1),
    "const-4": _constant(4),
    "const-16": _constant(16),
    "harmonic": _harmonic,
    "landau-1": _landau(1),
    "landau-2": _landau(2),
    "ab-half-pi": _ab(np.pi / 2, "ab-half-pi"),
    "ab-pi": _ab(np.pi, "ab-pi"),
    "punctured": _punctured,
    "strip": _strip,
    "shifted-oscillator": _shifted_oscillator,
}


def build(name: str, h=None) -> Preset:
    try:
        maker = PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}") from None
    return maker(parse_h(h))


def catalog() -> list[str]:
    return list(PRESETS)
