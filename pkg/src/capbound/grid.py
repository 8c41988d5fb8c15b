"""Uniform rectangular lattices, domain masks and staggered fields.

Scalars live on nodes, vector components live on edges: component ``j`` of a
:class:`VectorField` is stored at the edges parallel to axis ``j``.  Edge
values represent the line-integral average of the continuum field over the
edge, so that for an exact field ``a = grad(chi)`` the edge value equals the
forward difference of ``chi`` divided by ``h``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = [
    "Lattice",
    "DomainMask",
    "ScalarField",
    "VectorField",
    "CubeWindow",
    "gradient",
    "dirichlet_energy",
    "edge_mask",
    "wrapped_angle_difference",
]


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Lattice:
    """Nodes ``origin + index * h`` on a box of ``shape`` points.

    Axes flagged in ``periodic`` wrap around: the node count along such an
    axis is the period divided by ``h`` and there is one extra edge joining
    the last node back to the first.
    """

    shape: tuple[int, ...]
    h: float
    origin: tuple[float, ...] | None = None
    periodic: tuple[bool, ...] | None = None

    def __post_init__(self):
        shape = tuple(int(s) for s in self.shape)
        if not 1 <= len(shape) <= 3:
            raise ValueError(f"lattice dimension must be 1, 2 or 3, got {len(shape)}")
        if min(shape) < 2:
            raise ValueError(f"need at least 2 points per axis, got {shape}")
        if not self.h > 0:
            raise ValueError(f"spacing must be positive, got {self.h}")
        origin = (0.0,) * len(shape) if self.origin is None else tuple(map(float, self.origin))
        periodic = (False,) * len(shape) if self.periodic is None else tuple(map(bool, self.periodic))
        if len(origin) != len(shape) or len(periodic) != len(shape):
            raise ValueError("origin/periodic length does not match shape")
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "h", float(self.h))
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "periodic", periodic)

    @classmethod
    def box(cls, lower, upper, h, periodic=None) -> "Lattice":
        """Lattice covering ``[lower, upper]`` per axis (closed, or half-open if periodic)."""
        lower = np.atleast_1d(np.asarray(lower, float))
        upper = np.atleast_1d(np.asarray(upper, float))
        periodic = (False,) * len(lower) if periodic is None else tuple(periodic)
        shape = []
        for lo, hi, per in zip(lower, upper, periodic):
            cells = (hi - lo) / h
            n = int(round(cells))
            if abs(cells - n) > 1e-9 * max(1.0, cells):
                raise ValueError(f"extent {hi - lo} is not a multiple of h={h}")
            shape.append(n if per else n + 1)
        return cls(tuple(shape), h, tuple(lower), periodic)

    @property
    def dim(self) -> int:
        return len(self.shape)

    @property
    def size(self) -> int:
        return int(np.prod(self.shape))

    @property
    def cell_volume(self) -> float:
        return self.h**self.dim

    def axis(self, j: int) -> np.ndarray:
        return self.origin[j] + self.h * np.arange(self.shape[j])

    def mesh(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*(self.axis(j) for j in range(self.dim)), indexing="ij"))

    def edge_count(self, j: int) -> int:
        return self.shape[j] if self.periodic[j] else self.shape[j] - 1

    def edge_shape(self, j: int) -> tuple[int, ...]:
        s = list(self.shape)
        s[j] = self.edge_count(j)
        return tuple(s)

    def edge_mesh(self, j: int, t: float = 0.5) -> tuple[np.ndarray, ...]:
        """Coordinates of the point at fraction ``t`` along each edge of axis ``j``."""
        axes = []
        for k in range(self.dim):
            x = self.axis(k)
            if k == j:
                x = self.origin[k] + self.h * (np.arange(self.edge_count(j)) + t)
            axes.append(x)
        return tuple(np.meshgrid(*axes, indexing="ij"))

    def extent(self) -> tuple[tuple[float, float], ...]:
        out = []
        for j in range(self.dim):
            n = self.shape[j] if self.periodic[j] else self.shape[j] - 1
            out.append((self.origin[j], self.origin[j] + n * self.h))
        return tuple(out)

    def to_dict(self) -> dict:
        return {"shape": list(self.shape), "h": self.h, "origin": list(self.origin),
                "periodic": list(self.periodic)}

    @classmethod
    def from_dict(cls, d: dict) -> "Lattice":
        return cls(tuple(d["shape"]), d["h"], tuple(d.get("origin") or ()) or None,
                   tuple(d.get("periodic") or ()) or None)


def _check_shape(lattice: Lattice, values: np.ndarray, what: str):
    if values.shape != lattice.shape:
        raise ValueError(f"{what} has shape {values.shape}, lattice is {lattice.shape}")


@dataclass(frozen=True, eq=False)
class DomainMask:
    """Boolean node mask, ``True`` inside the open set."""

    lattice: Lattice
    inside: np.ndarray

    def __post_init__(self):
        inside = np.asarray(self.inside, dtype=bool)
        _check_shape(self.lattice, inside, "mask")
        object.__setattr__(self, "inside", _readonly(inside))

    @classmethod
    def full(cls, lattice: Lattice) -> "DomainMask":
        """Everything inside, except the boundary layer of non-periodic axes.

        The boundary layer carries the Dirichlet condition of a truncated box.
        """
        inside = np.ones(lattice.shape, bool)
        for j in range(lattice.dim):
            if not lattice.periodic[j]:
                idx = [slice(None)] * lattice.dim
                idx[j] = 0
                inside[tuple(idx)] = False
                idx[j] = -1
                inside[tuple(idx)] = False
        return cls(lattice, inside)

    @classmethod
    def from_predicate(cls, lattice: Lattice, pred: Callable) -> "DomainMask":
        base = cls.full(lattice).inside
        return cls(lattice, base & np.asarray(pred(*lattice.mesh()), bool))

    def without_ball(self, radius: float, center=None) -> "DomainMask":
        """Mask of ``Omega`` minus the closed ball ``|x - center| <= radius``."""
        center = np.zeros(self.lattice.dim) if center is None else np.asarray(center, float)
        r2 = sum((x - c) ** 2 for x, c in zip(self.lattice.mesh(), center))
        return DomainMask(self.lattice, self.inside & (r2 > radius**2 * (1 + 1e-12)))

    def __and__(self, other: "DomainMask") -> "DomainMask":
        return DomainMask(self.lattice, self.inside & other.inside)

    @property
    def count(self) -> int:
        return int(self.inside.sum())


@dataclass(frozen=True, eq=False)
class ScalarField:
    lattice: Lattice
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        _check_shape(self.lattice, values, "scalar field")
        object.__setattr__(self, "values", _readonly(values))

    @classmethod
    def from_function(cls, lattice: Lattice, f: Callable) -> "ScalarField":
        vals = np.broadcast_to(np.asarray(f(*lattice.mesh()), float), lattice.shape)
        return cls(lattice, vals)

    @classmethod
    def constant(cls, lattice: Lattice, c: float) -> "ScalarField":
        return cls(lattice, np.full(lattice.shape, float(c)))

    def require_potential(self) -> "ScalarField":
        """Check the sign condition on potentials (``+inf`` is allowed)."""
        if np.isnan(self.values).any() or (self.values < 0).any():
            raise ValueError("potential must be non-negative and not NaN")
        return self


@dataclass(frozen=True, eq=False)
class VectorField:
    """Edge-centred vector field; ``components[j]`` has ``lattice.edge_shape(j)``."""

    lattice: Lattice
    components: tuple[np.ndarray, ...]

    def __post_init__(self):
        comps = tuple(np.asarray(c, dtype=float) for c in self.components)
        if len(comps) != self.lattice.dim:
            raise ValueError(f"expected {self.lattice.dim} components, got {len(comps)}")
        for j, c in enumerate(comps):
            if c.shape != self.lattice.edge_shape(j):
                raise ValueError(f"component {j} has shape {c.shape}, "
                                 f"expected {self.lattice.edge_shape(j)}")
        object.__setattr__(self, "components", tuple(_readonly(c) for c in comps))

    @classmethod
    def zeros(cls, lattice: Lattice) -> "VectorField":
        return cls(lattice, tuple(np.zeros(lattice.edge_shape(j)) for j in range(lattice.dim)))

    @classmethod
    def from_function(cls, lattice: Lattice, f: Callable, order: int = 4) -> "VectorField":
        """Edge averages of ``f(*x) -> (a_1, ..., a_n)`` by Gauss-Legendre quadrature."""
        t, w = np.polynomial.legendre.leggauss(order)
        t = 0.5 * (t + 1.0)
        w = 0.5 * w
        comps = []
        for j in range(lattice.dim):
            acc = np.zeros(lattice.edge_shape(j))
            for tq, wq in zip(t, w):
                acc += wq * np.asarray(f(*lattice.edge_mesh(j, tq))[j], float)
            comps.append(acc)
        return cls(lattice, tuple(comps))

    @classmethod
    def from_phase(cls, lattice: Lattice, theta: np.ndarray, scale: float = 1.0) -> "VectorField":
        """``scale`` times the gradient of an angle field, increments wrapped to ``(-pi, pi]``."""
        comps = []
        for j in range(lattice.dim):
            comps.append(scale * wrapped_angle_difference(theta, j, lattice.periodic[j]) / lattice.h)
        return cls(lattice, tuple(comps))

    def __add__(self, other: "VectorField") -> "VectorField":
        return VectorField(self.lattice, tuple(a + b for a, b in zip(self.components, other.components)))

    def __mul__(self, s: float) -> "VectorField":
        return VectorField(self.lattice, tuple(s * c for c in self.components))

    __rmul__ = __mul__


def _forward_diff(values: np.ndarray, j: int, periodic: bool) -> np.ndarray:
    if periodic:
        hi = np.roll(values, -1, axis=j)
        with np.errstate(invalid="ignore"):
            return hi - values
    with np.errstate(invalid="ignore"):
        return np.diff(values, axis=j)


def wrapped_angle_difference(theta: np.ndarray, j: int, periodic: bool = False) -> np.ndarray:
    """Forward differences of an angle field, reduced to the shortest increment."""
    d = _forward_diff(theta, j, periodic)
    return (d + np.pi) % (2 * np.pi) - np.pi


def gradient(f: ScalarField) -> VectorField:
    """Forward-difference gradient; an infinite endpoint makes the edge ``+inf``."""
    lat = f.lattice
    comps = []
    for j in range(lat.dim):
        g = _forward_diff(f.values, j, lat.periodic[j]) / lat.h
        ends = _edge_endpoints(np.isinf(f.values), j, lat.periodic[j])
        g[ends[0] | ends[1]] = np.inf
        comps.append(g)
    return VectorField(lat, tuple(comps))


def _edge_endpoints(node_values: np.ndarray, j: int, periodic: bool):
    if periodic:
        return node_values, np.roll(node_values, -1, axis=j)
    lo = [slice(None)] * node_values.ndim
    hi = [slice(None)] * node_values.ndim
    lo[j] = slice(0, -1)
    hi[j] = slice(1, None)
    return node_values[tuple(lo)], node_values[tuple(hi)]


def edge_mask(region: np.ndarray, j: int, periodic: bool = False) -> np.ndarray:
    """Edges along axis ``j`` whose two endpoints both lie in ``region``."""
    a, b = _edge_endpoints(np.asarray(region, bool), j, periodic)
    return a & b


def dirichlet_energy(f: ScalarField, region: np.ndarray | None = None) -> float:
    """``h^n * sum |forward difference / h|^2`` over edges inside ``region``.

    Edges with an endpoint outside ``region`` are left out; an empty region
    gives 0.
    """
    lat = f.lattice
    region = np.ones(lat.shape, bool) if region is None else np.asarray(region, bool)
    total = 0.0
    for j in range(lat.dim):
        m = edge_mask(region, j, lat.periodic[j])
        if m.any():
            d = _forward_diff(f.values, j, lat.periodic[j])[m]
            total += float(np.dot(d, d))
    return total * lat.h ** (lat.dim - 2)


@dataclass(frozen=True)
class CubeWindow:
    """Closed axis-parallel cube ``Q_d`` of ``m`` cells per axis, ``d = m * h``.

    ``lo`` is the lattice index of the lowest corner.  Along periodic axes
    the window may wrap around.
    """

    lattice: Lattice
    lo: tuple[int, ...]
    m: int
    _index: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        lat = self.lattice
        lo = tuple(int(i) for i in self.lo)
        if len(lo) != lat.dim:
            raise ValueError("corner index dimension mismatch")
        if self.m < 1:
            raise ValueError("a cube needs at least one cell per axis")
        index = []
        for j in range(lat.dim):
            k = lo[j] + np.arange(self.m + 1)
            if lat.periodic[j]:
                if self.m > lat.shape[j]:
                    raise ValueError("cube wider than the period")
                k = k % lat.shape[j]
            elif lo[j] < 0 or lo[j] + self.m > lat.shape[j] - 1:
                raise ValueError(f"cube {lo}+{self.m} leaves the lattice {lat.shape}")
            index.append(k)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "_index", tuple(index))

    @classmethod
    def centered(cls, lattice: Lattice, center, d: float) -> "CubeWindow":
        m = int(round(d / lattice.h))
        if abs(m * lattice.h - d) > 1e-9 * max(d, lattice.h):
            raise ValueError(f"edge {d} is not a multiple of h={lattice.h}")
        center = np.asarray(center, float)
        lo = [int(round((c - o) / lattice.h - m / 2)) for c, o in zip(center, lattice.origin)]
        return cls(lattice, tuple(lo), m)

    @property
    def dim(self) -> int:
        return self.lattice.dim

    @property
    def h(self) -> float:
        return self.lattice.h

    @property
    def d(self) -> float:
        return self.m * self.lattice.h

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.m + 1,) * self.dim

    @property
    def corner(self) -> np.ndarray:
        return np.array([o + i * self.h for o, i in zip(self.lattice.origin, self.lo)])

    @property
    def center(self) -> np.ndarray:
        return self.corner + 0.5 * self.d

    def local_mesh(self) -> tuple[np.ndarray, ...]:
        """Coordinates of the cube nodes (unwrapped)."""
        axes = [c + self.h * np.arange(self.m + 1) for c in self.corner]
        return tuple(np.meshgrid(*axes, indexing="ij"))

    def nodes(self, values: np.ndarray) -> np.ndarray:
        """Restriction of a node array to the cube, shape ``(m+1,)*n``."""
        return np.asarray(values)[np.ix_(*self._index)]

    def edges(self, vf: VectorField) -> tuple[np.ndarray, ...]:
        """Restriction of an edge field; component ``j`` has ``m`` entries along ``j``."""
        out = []
        for j, comp in enumerate(vf.components):
            idx = list(self._index)
            idx[j] = idx[j][:-1]
            out.append(np.asarray(comp)[np.ix_(*idx)])
        return tuple(out)

    def node_volumes(self) -> np.ndarray:
        """Trapezoidal quadrature weights (in units of ``h^n``) on the closed cube."""
        w1 = np.ones(self.m + 1)
        w1[0] = w1[-1] = 0.5
        w = w1
        for _ in range(self.dim - 1):
            w = np.multiply.outer(w, w1)
        return w

    def to_dict(self) -> dict:
        return {"lo": list(self.lo), "m": self.m, "d": self.d, "center": self.center.tolist()}
