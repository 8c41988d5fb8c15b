"""Wiener capacity of node sets through discrete equilibrium potentials.

For ``n = 3`` the capacity is the whole-space one, approximated by
truncating at a concentric box of edge ``T*d`` and extrapolating the leading
``1/T`` error away.  For ``n <= 2`` a set inside ``Q_d`` is measured relative
to the open concentric cube ``Q_{2d}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .grid import CubeWindow

__all__ = [
    "CapacityError",
    "CompactSet",
    "EquilibriumPotential",
    "box_laplacian",
    "box_energy",
    "equilibrium_potential",
    "cap",
    "cube_capacity",
    "is_negligible",
    "rle_encode",
    "rle_decode",
]

CG_RTOL = 1e-8
AMG_THRESHOLD = 40_000
DEFAULT_TRUNCATION = 8.0


class CapacityError(RuntimeError):
    """Raised when an equilibrium-potential solve does not converge."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


def rle_encode(mask: np.ndarray) -> list[int]:
    """Run lengths of a flattened boolean mask, starting with a ``False`` run."""
    flat = np.asarray(mask, bool).ravel()
    if flat.size == 0:
        return []
    change = np.flatnonzero(flat[1:] != flat[:-1]) + 1
    bounds = np.concatenate(([0], change, [flat.size]))
    runs = np.diff(bounds).tolist()
    if flat[0]:
        runs.insert(0, 0)
    return [int(r) for r in runs]


def rle_decode(runs, shape) -> np.ndarray:
    vals = np.zeros(len(runs), bool)
    vals[1::2] = True
    flat = np.repeat(vals, np.asarray(runs, dtype=int))
    if flat.size != int(np.prod(shape)):
        raise ValueError(f"run lengths sum to {flat.size}, shape {tuple(shape)} needs {np.prod(shape)}")
    return flat.reshape(shape)


@dataclass(frozen=True, eq=False)
class CompactSet:
    """Node set inside a cube window; ``member`` has the cube's node shape."""

    cube: CubeWindow
    member: np.ndarray

    def __post_init__(self):
        member = np.array(self.member, dtype=bool, copy=True)
        if member.shape != self.cube.shape:
            raise ValueError(f"member mask {member.shape} does not fit cube {self.cube.shape}")
        member.setflags(write=False)
        object.__setattr__(self, "member", member)

    @classmethod
    def empty(cls, cube: CubeWindow) -> "CompactSet":
        return cls(cube, np.zeros(cube.shape, bool))

    @classmethod
    def whole(cls, cube: CubeWindow) -> "CompactSet":
        return cls(cube, np.ones(cube.shape, bool))

    @property
    def count(self) -> int:
        return int(self.member.sum())

    def __or__(self, other: "CompactSet") -> "CompactSet":
        return CompactSet(self.cube, self.member | other.member)

    def __le__(self, other: "CompactSet") -> bool:
        return bool(np.all(~self.member | other.member))

    def to_csv(self) -> str:
        """Two CSV lines: the node shape, then the run lengths."""
        return ",".join(map(str, self.member.shape)) + "\n" + ",".join(map(str, rle_encode(self.member))) + "\n"

    @classmethod
    def from_csv(cls, cube: CubeWindow, text: str) -> "CompactSet":
        lines = [ln for ln in text.strip().splitlines()]
        shape = tuple(int(x) for x in lines[0].split(","))
        runs = [int(x) for x in lines[1].split(",")] if len(lines) > 1 and lines[1] else []
        return cls(cube, rle_decode(runs, shape))


@dataclass(frozen=True, eq=False)
class EquilibriumPotential:
    values: np.ndarray
    cap: float
    residual: float
    iterations: int


@lru_cache(maxsize=64)
def box_laplacian(shape: tuple[int, ...]) -> sp.csr_matrix:
    """Graph Laplacian of a box of nodes with nearest-neighbour edges (unit spacing)."""
    n = int(np.prod(shape))
    idx = np.arange(n).reshape(shape)
    rows, cols = [], []
    for j in range(len(shape)):
        lo = [slice(None)] * len(shape)
        hi = [slice(None)] * len(shape)
        lo[j] = slice(0, -1)
        hi[j] = slice(1, None)
        rows.append(idx[tuple(lo)].ravel())
        cols.append(idx[tuple(hi)].ravel())
    r = np.concatenate(rows)
    c = np.concatenate(cols)
    adj = sp.coo_matrix((np.ones(r.size), (r, c)), shape=(n, n))
    adj = (adj + adj.T).tocsr()
    deg = np.asarray(adj.sum(axis=1)).ravel()
    lap = (sp.diags(deg) - adj).tocsr()
    lap.sort_indices()
    return lap


def box_energy(u: np.ndarray, h: float = 1.0) -> float:
    """Dirichlet energy ``h^(n-2) * sum of squared differences`` over all box edges."""
    total = 0.0
    for j in range(u.ndim):
        d = np.diff(u, axis=j)
        total += float(np.vdot(d, d).real)
    return total * h ** (u.ndim - 2)


def _solve_spd(a: sp.csr_matrix, b: np.ndarray, rtol: float = CG_RTOL):
    """CG on a symmetric positive definite system; AMG preconditioning when large."""
    n = a.shape[0]
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return np.zeros(n), 0.0, 0
    m = None
    if n > AMG_THRESHOLD:
        import pyamg

        m = pyamg.smoothed_aggregation_solver(a.tocsr(), max_coarse=500).aspreconditioner(cycle="V")
    counter = [0]

    def cb(_):
        counter[0] += 1

    x, info = spla.cg(a, b, rtol=rtol, atol=0.0, maxiter=10 * n, M=m, callback=cb)
    res = float(np.linalg.norm(b - a @ x)) / bnorm
    if info != 0 and res > rtol * 10:
        raise CapacityError(f"CG did not converge (info={info}, relative residual {res:.3e})", res)
    return x, res, counter[0]


def equilibrium_potential(F: np.ndarray, outer: np.ndarray, h: float = 1.0,
                          rtol: float = CG_RTOL) -> EquilibriumPotential:
    """Discrete harmonic function equal to 1 on ``F`` and 0 on ``outer``.

    Both masks live on the same box of nodes.  The capacity is the Dirichlet
    energy of the potential over every edge of the box.
    """
    F = np.asarray(F, bool)
    outer = np.asarray(outer, bool)
    if F.shape != outer.shape:
        raise ValueError("F and outer must share a node box")
    if not F.any():
        raise ValueError("F is empty")
    if (F & outer).any():
        raise ValueError("F meets the outer conductor")
    u = np.zeros(F.shape)
    u[F] = 1.0
    free = ~(F | outer)
    residual, its = 0.0, 0
    if free.any():
        lap = box_laplacian(F.shape)
        fr = np.flatnonzero(free.ravel())
        fi = np.flatnonzero(F.ravel())
        a = lap[fr][:, fr]
        b = -np.asarray(lap[fr][:, fi].sum(axis=1)).ravel()
        x, residual, its = _solve_spd(a, b, rtol)
        u.ravel()[fr] = x
    np.clip(u, 0.0, 1.0, out=u)
    return EquilibriumPotential(u, box_energy(u, h), residual, its)


def _embed(member: np.ndarray, pad: int) -> tuple[np.ndarray, np.ndarray]:
    box = np.pad(np.asarray(member, bool), pad, constant_values=False)
    outer = np.zeros(box.shape, bool)
    for j in range(box.ndim):
        idx = [slice(None)] * box.ndim
        idx[j] = 0
        outer[tuple(idx)] = True
        idx[j] = -1
        outer[tuple(idx)] = True
    return box, outer


@lru_cache(maxsize=200_000)
def _unit_capacity(packed: bytes, shape: tuple[int, ...], truncation: float) -> float:
    member = np.unpackbits(np.frombuffer(packed, np.uint8), count=int(np.prod(shape))).astype(bool)
    member = member.reshape(shape)
    m = shape[0] - 1
    n = len(shape)
    if n <= 2:
        box, outer = _embed(member, math.ceil(m / 2))
        return equilibrium_potential(box, outer).cap
    values = []
    ratios = []
    for t in (truncation, truncation / 2):
        pad = math.ceil(m * (t - 1) / 2)
        box, outer = _embed(member, pad)
        values.append(equilibrium_potential(box, outer).cap)
        ratios.append((m + 2 * pad) / m)
    (t1, t2), (c1, c2) = ratios, values
    return (t1 * c1 - t2 * c2) / (t1 - t2)


def cap(F: CompactSet, truncation: float = DEFAULT_TRUNCATION) -> float:
    """Capacity of ``F`` in the convention of its cube (see module docstring)."""
    if not F.member.any():
        return 0.0
    shape = F.member.shape
    packed = np.packbits(F.member.ravel()).tobytes()
    unit = _unit_capacity(packed, shape, float(truncation))
    return unit * F.cube.h ** (F.cube.dim - 2)


def cube_capacity(cube: CubeWindow, truncation: float = DEFAULT_TRUNCATION) -> float:
    """``cap(Q_d)`` computed with the same discretisation as subsets of ``Q_d``."""
    return cap(CompactSet.whole(cube), truncation)


def is_negligible(F: CompactSet, gamma: float, truncation: float = DEFAULT_TRUNCATION) -> bool:
    """``cap(F) <= gamma * cap(Q_d)`` with identical outer conductors on both sides."""
    if not 0.0 < gamma < 1.0:
        raise ValueError(f"gamma must lie in (0, 1), got {gamma}")
    return cap(F, truncation) <= gamma * cube_capacity(F.cube, truncation)
