"""Capacitary interior diameter and the positivity functional.

A cube ``Q_d`` *qualifies* when some admissible carving makes
``int_{Q_d \\ F} V_eff <= d^(n-2)``.  The diameter ``D`` is the largest
tested edge length with a qualifying cube.  Edge lengths are tested from the
largest down, so the first qualifying ``d`` is ``D`` and every larger tested
``d`` has been swept completely without success.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .capacity import DEFAULT_TRUNCATION
from .carving import CarvingResult, joint_min, json_number
from .gauge import cube_data
from .grid import CubeWindow, DomainMask, ScalarField, VectorField

__all__ = [
    "DiameterResult",
    "PositivityCertificate",
    "LimitResult",
    "cube_positions",
    "diameter",
    "diameter_exterior",
    "diameter_limit",
    "positivity_scan",
    "exterior_mask",
]


@dataclass(frozen=True, eq=False)
class DiameterResult:
    """``D`` with its witness.  ``D = inf`` with ``bracketed = False`` when the largest tested cube qualifies;
    ``D = 0`` when no tested cube qualifies."""

    D: float
    cube: CubeWindow | None
    witness: CarvingResult | None
    d_grid: tuple[float, ...]
    stride: tuple[float, ...]
    bracketed: bool
    table: tuple[dict, ...] = field(default=(), repr=False)

    def to_dict(self) -> dict:
        return {
            "D": json_number(self.D),
            "bracketed": self.bracketed,
            "d_grid": list(self.d_grid),
            "stride": list(self.stride),
            "cube": None if self.cube is None else self.cube.to_dict(),
            "witness": None if self.witness is None else self.witness.to_dict(),
            "table": list(self.table),
        }


@dataclass(frozen=True, eq=False)
class PositivityCertificate:
    d: float
    kappa: float
    cube: CubeWindow | None
    value: float
    cubes: int

    def to_dict(self) -> dict:
        return {"d": self.d, "kappa": json_number(self.kappa), "value": json_number(self.value),
                "cube": None if self.cube is None else self.cube.to_dict(), "cubes": self.cubes}


@dataclass(frozen=True, eq=False)
class LimitResult:
    """Values ``D_R`` over ascending radii and the last one as the limit estimate."""

    radii: tuple[float, ...]
    results: tuple[DiameterResult, ...]
    limit: float
    monotone: bool

    @property
    def values(self) -> tuple[float, ...]:
        return tuple(r.D for r in self.results)

    def to_dict(self) -> dict:
        return {"radii": list(self.radii), "D": [json_number(v) for v in self.values],
                "limit": json_number(self.limit), "monotone": self.monotone}


def cube_positions(lattice, m: int, stride: int, box=None) -> list[tuple[int, ...]]:
    """Lower corners of the swept cubes, in lexicographic order.

    ``box`` is a pair of index tuples ``(lo, hi)`` (inclusive) bounding the
    swept nodes on non-periodic axes; periodic axes are swept over one period.
    """
    axes = []
    for j in range(lattice.dim):
        if lattice.periodic[j]:
            axes.append(list(range(0, lattice.shape[j], stride)))
            continue
        lo, hi = (0, lattice.shape[j] - 1) if box is None else (box[0][j], box[1][j])
        last = hi - m
        if last < lo:
            return []
        pos = list(range(lo, last + 1, stride))
        if pos[-1] != last:
            pos.append(last)
        axes.append(pos)
    grids = np.meshgrid(*[np.asarray(p) for p in axes], indexing="ij")
    return [tuple(int(g) for g in t) for t in zip(*(g.ravel() for g in grids))]


def _max_m(lattice, box=None) -> int:
    out = []
    for j in range(lattice.dim):
        if lattice.periodic[j]:
            out.append(lattice.shape[j] - 1)
        else:
            lo, hi = (0, lattice.shape[j] - 1) if box is None else (box[0][j], box[1][j])
            out.append(hi - lo)
    return min(out)


def _auto_grid(lattice, box=None) -> list[int]:
    top = _max_m(lattice, box)
    ms, m = [], 2
    while m <= top:
        ms.append(m)
        m *= 2
    return ms


def _proxy(cube: CubeWindow, a, V, omega) -> float:
    """Cheap ordering key: the integral with the constant gauge and no carving."""
    inside = cube.nodes(omega.inside)
    if not inside.any():
        return float("inf")
    vol = cube.node_volumes()
    tot = 0.0
    if V is not None:
        tot += float(np.sum(vol * np.where(inside, cube.nodes(V.values), 0.0)))
    if a is not None:
        for c in cube.edges(a):
            tot += float(np.sum(c * c))
    return tot


class _Sweeper:
    def __init__(self, omega, a, V, gamma, gauge_budget, rounds, seed, truncation, box):
        self.omega, self.a, self.V = omega, a, V
        self.gamma, self.gauge_budget, self.rounds, self.seed = gamma, gauge_budget, rounds, seed
        self.truncation, self.box = truncation, box
        self.lattice = omega.lattice
        self.memo: dict = {}

    def cubes(self, m):
        stride = max(1, m // 2)
        cubes = [CubeWindow(self.lattice, lo, m) for lo in cube_positions(self.lattice, m, stride, self.box)]
        keys = [(_proxy(c, self.a, self.V, self.omega), i) for i, c in enumerate(cubes)]
        return [cubes[i] for _, i in sorted(keys)], stride

    def evaluate(self, cube, target):
        data = cube_data(cube, self.a, self.V, self.omega)
        if not data.inside.any():
            return None
        key = (data.key(), target)
        if key not in self.memo:
            self.memo[key] = joint_min(data, self.gamma, self.gauge_budget, self.rounds, self.seed,
                                       target=target, truncation=self.truncation)
        return self.memo[key]

    def test(self, m):
        """Sweep cubes of ``m`` cells; stop at the first qualifying one."""
        lat = self.lattice
        n = lat.dim
        d = m * lat.h
        threshold = d ** (n - 2)
        cubes, stride = self.cubes(m)
        best, best_cube, swept = None, None, 0
        for cube in cubes:
            res = self.evaluate(cube, threshold)
            if res is None:
                continue
            swept += 1
            if best is None or res.key() < best.key():
                best, best_cube = res, cube
            if res.integral <= threshold:
                row = {"d": d, "m": m, "threshold": threshold, "swept": swept, "qualified": True,
                       "best_integral": json_number(res.integral), "corner": list(cube.lo)}
                return True, cube, res, row, stride
        row = {"d": d, "m": m, "threshold": threshold, "swept": swept, "qualified": False,
               "best_integral": json_number(best.integral) if best is not None else "inf",
               "corner": list(best_cube.lo) if best_cube is not None else None}
        return False, best_cube, best, row, stride


def diameter(omega: DomainMask, a: VectorField | None, V: ScalarField | None, gamma: float,
             d_grid=None, box=None, gauge_budget: int = 0, rounds: int = 2, seed: int = 0,
             refine: int | None = None, truncation: float = DEFAULT_TRUNCATION) -> DiameterResult:
    """Capacitary interior diameter over cubes swept at half-edge strides.

    ``d_grid`` is a list of edge lengths (multiples of ``h``) or ``None`` for
    the dyadic grid ``2h, 4h, ...``; with the automatic grid the bracket is
    refined by ``refine`` (default 2) bisection levels.
    """
    lat = omega.lattice
    if d_grid is None:
        ms = _auto_grid(lat, box)
        refine = 2 if refine is None else refine
    else:
        ms = []
        for d in d_grid:
            m = int(round(d / lat.h))
            if m < 1 or abs(m * lat.h - d) > 1e-9 * max(1.0, d):
                raise ValueError(f"edge length {d} is not a positive multiple of h={lat.h}")
            ms.append(m)
        ms = sorted(set(ms))
        refine = 0 if refine is None else refine
    if not ms:
        raise ValueError("empty d grid")
    sweeper = _Sweeper(omega, a, V, gamma, gauge_budget, rounds, seed, truncation, box)
    table, tested, strides = [], [], []

    def run(m):
        ok, cube, res, row, stride = sweeper.test(m)
        table.append(row)
        tested.append(m)
        strides.append(stride * lat.h)
        return ok, cube, res

    found = None
    failed_above = None
    for m in sorted(ms, reverse=True):
        ok, cube, res = run(m)
        if ok:
            found = (m, cube, res)
            break
        failed_above = m
    if found is None:
        return _result(0.0, None, None, tested, strides, True, table, lat.h)
    if failed_above is None:
        return _result(float("inf"), found[1], found[2], tested, strides, False, table, lat.h)
    lo, hi = found[0], failed_above
    for _ in range(refine):
        mid = (lo + hi) // 2
        if mid in (lo, hi):
            break
        ok, cube, res = run(mid)
        if ok:
            lo, found = mid, (mid, cube, res)
        else:
            hi = mid
    m, cube, res = found
    return _result(m * lat.h, cube, res, tested, strides, True, table, lat.h)


def _result(D, cube, res, tested, strides, bracketed, table, h):
    order = np.argsort(tested)
    return DiameterResult(D, cube, res, tuple(tested[i] * h for i in order),
                          tuple(strides[i] for i in order), bracketed,
                          tuple(sorted(table, key=lambda r: r["m"])))


def exterior_mask(omega: DomainMask, R: float, center=None) -> DomainMask:
    """``Omega`` minus the closed ball of radius ``R``."""
    return omega.without_ball(R, center)


def diameter_exterior(R: float, omega: DomainMask, a, V, gamma: float, center=None, **kw) -> DiameterResult:
    """``D`` of ``Omega`` with the closed ball ``B_R(center)`` removed; ``0`` if nothing is left."""
    om = exterior_mask(omega, R, center)
    if not om.inside.any():
        return DiameterResult(0.0, None, None, (), (), True, ())
    return diameter(om, a, V, gamma, **kw)


def diameter_limit(Rs, omega: DomainMask, a, V, gamma: float, center=None, **kw) -> LimitResult:
    """``D_R`` over ascending radii; the last value estimates ``D_inf``."""
    Rs = [float(r) for r in Rs]
    if any(r2 < r1 for r1, r2 in zip(Rs, Rs[1:])):
        raise ValueError("radii must be ascending")
    results = tuple(diameter_exterior(R, omega, a, V, gamma, center, **kw) for R in Rs)
    vals = [r.D for r in results]
    monotone = all(v2 <= v1 for v1, v2 in zip(vals, vals[1:]))
    return LimitResult(tuple(Rs), results, vals[-1] if vals else float("nan"), monotone)


def positivity_scan(d: float, omega: DomainMask, a, V, gamma: float, box=None, gauge_budget: int = 0,
                    rounds: int = 2, seed: int = 0,
                    truncation: float = DEFAULT_TRUNCATION) -> PositivityCertificate:
    """``kappa = min over swept cubes of d^-n * int_{Q_d \\ F} V_eff`` (full sweep, no early exit)."""
    lat = omega.lattice
    m = int(round(d / lat.h))
    if m < 1 or abs(m * lat.h - d) > 1e-9 * max(1.0, d):
        raise ValueError(f"edge length {d} is not a positive multiple of h={lat.h}")
    sweeper = _Sweeper(omega, a, V, gamma, gauge_budget, rounds, seed, truncation, box)
    cubes, _ = sweeper.cubes(m)
    best, best_cube, count = float("inf"), None, 0
    for cube in sorted(cubes, key=lambda c: c.lo):
        res = sweeper.evaluate(cube, None)
        if res is None:
            continue
        count += 1
        val = res.integral / d ** lat.dim
        if val < best:
            best, best_cube = val, cube
    return PositivityCertificate(m * lat.h, best, best_cube, best, count)
