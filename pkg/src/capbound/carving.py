"""Negligible carvings: minimise ``int_{Q\\F} V_eff`` over admissible compact sets ``F``.

A set ``F`` inside a cube ``Q`` is admissible when it contains every node of
``Q`` outside the domain and ``cap(F) <= gamma * cap(Q)``.  The search is a
greedy superlevel carving: nodes are removed in order of decreasing
effective potential, and the longest feasible prefix is located by geometric
block growth followed by bisection.  This gives an upper bound on the
infimum, which is the documented direction of bias.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .capacity import DEFAULT_TRUNCATION, CompactSet, cap, cube_capacity, rle_encode
from .gauge import (CubeData, EffectivePotential, GaugeCandidate, constant_gauge,
                    effective_potential, optimize_gauge, sample_polynomial_gauges)

__all__ = ["CarvingResult", "min_over_F", "joint_min", "carving_order", "json_number"]


def json_number(x: float):
    """Finite floats as-is; infinities and NaN as strings so the output stays strict JSON."""
    x = float(x)
    if math.isfinite(x):
        return x
    if math.isnan(x):
        return "nan"
    return "inf" if x > 0 else "-inf"


@dataclass(frozen=True, eq=False)
class CarvingResult:
    """An admissible carving ``F`` with its gauge and ``int_{Q\\F} V_eff``.

    ``feasible`` is false when ``Q \\ Omega`` (plus any mandatory singular
    nodes) already exceeds the capacity budget; the integral is then ``+inf``.
    """

    F: CompactSet
    omega: GaugeCandidate | None
    integral: float
    cap_used: float
    feasible: bool
    budget: float
    audit: tuple[tuple[int, float], ...] = field(default=(), repr=False)

    def key(self):
        return (self.integral, self.cap_used)

    def to_dict(self) -> dict:
        return {
            "cube": self.F.cube.to_dict(),
            "F": {"shape": list(self.F.member.shape), "runs": rle_encode(self.F.member)},
            "gauge": None if self.omega is None else self.omega.to_dict(),
            "integral": json_number(self.integral),
            "cap_used": json_number(self.cap_used),
            "budget": json_number(self.budget),
            "feasible": self.feasible,
            "audit": [[k, json_number(c)] for k, c in self.audit],
        }


def carving_order(values: np.ndarray, candidates: np.ndarray, cube) -> np.ndarray:
    """Flat indices of ``candidates`` sorted by value (descending), then distance to the centre."""
    idx = np.flatnonzero(candidates.ravel())
    grids = np.meshgrid(*[np.arange(s) for s in candidates.shape], indexing="ij")
    mid = 0.5 * (np.asarray(candidates.shape) - 1)
    dist = sum((g.ravel()[idx] - c) ** 2 for g, c in zip(grids, mid))
    v = values.ravel()[idx]
    order = np.lexsort((idx, dist, -v))
    return idx[order]


def _infeasible(cube, F0, omega, budget, c0, audit=()):
    return CarvingResult(CompactSet(cube, F0), omega, float("inf"), c0, False, budget, tuple(audit))


def min_over_F(vt: EffectivePotential, inside: np.ndarray, gamma: float,
               omega: GaugeCandidate | None = None,
               truncation: float = DEFAULT_TRUNCATION) -> CarvingResult:
    """Greedy superlevel carving of a fixed effective potential.

    ``F`` starts as the nodes outside the domain together with the sentinel
    nodes of ``vt``; the integral is the node quadrature of ``vt`` over the
    complement of ``F``.
    """
    if not 0.0 < gamma < 1.0:
        raise ValueError(f"gamma must lie in (0, 1), got {gamma}")
    cube = vt.cube
    inside = np.asarray(inside, bool)
    budget = gamma * cube_capacity(cube, truncation)
    values = np.where(np.isnan(vt.values), 0.0, vt.values)
    F0 = ~inside | vt.sentinel | np.isinf(values)
    audit = []

    def capacity(mask):
        c = cap(CompactSet(cube, mask), truncation) if mask.any() else 0.0
        audit.append((int(mask.sum()), c))
        return c

    if F0.all():
        return _infeasible(cube, F0, omega, budget, float("inf"))
    c0 = capacity(F0)
    if c0 > budget:
        return _infeasible(cube, F0, omega, budget, c0, audit)

    order = carving_order(values, ~F0 & (values > 0), cube)

    def prefix(k):
        mask = F0.copy()
        mask.ravel()[order[:k]] = True
        return mask

    # geometric growth, then bisection between the last feasible and first infeasible prefix
    good, good_cap, bad = 0, c0, None
    k = 1
    while k <= order.size:
        c = capacity(prefix(k))
        if c <= budget:
            good, good_cap = k, c
            k *= 2
        else:
            bad = k
            break
    if bad is None and good < order.size:
        c = capacity(prefix(order.size))
        if c <= budget:
            good, good_cap = order.size, c
        else:
            bad = order.size
    if bad is not None:
        lo, hi = good, bad
        while hi - lo > 1:
            mid = (lo + hi) // 2
            c = capacity(prefix(mid))
            if c <= budget:
                lo, good_cap = mid, c
            else:
                hi = mid
        good = lo
    F = prefix(good)
    vol = cube.node_volumes()
    integral = float(np.sum(vol[~F] * values[~F])) * cube.h ** cube.dim
    return CarvingResult(CompactSet(cube, F), omega, integral, good_cap, True, budget, tuple(audit))


def _evaluate(data: CubeData, omega: GaugeCandidate, F: CompactSet, budget: float,
              cap_used: float, audit=()) -> CarvingResult:
    """Exact ``int_{Q\\F} V_eff[omega]`` with the effective potential recomputed on ``Q \\ F``."""
    integral = effective_potential(omega, data, F.member).integral()
    return CarvingResult(F, omega, integral, cap_used, True, budget, tuple(audit))


def _better(new: CarvingResult, best: CarvingResult | None) -> bool:
    if best is None:
        return True
    return new.key() < best.key()


def joint_min(data: CubeData, gamma: float, gauge_budget: int = 0, rounds: int = 2,
              seed: int = 0, target: float | None = None,
              truncation: float = DEFAULT_TRUNCATION, incumbents=()) -> CarvingResult:
    """Alternate between carving and gauge optimisation; also try sampled polynomial gauges.

    The best result by ``(integral, cap_used)`` is kept, so the reported
    integral never increases with more rounds or a larger gauge budget.
    When ``target`` is given the search stops as soon as an integral at or
    below it is found.  For ``a = 0`` the constant gauge is optimal and is the
    only one tried.  ``incumbents`` are earlier results on the same cube
    (for instance at a smaller ``gamma``); those still admissible compete
    with the new candidates.
    """
    if rounds < 1:
        raise ValueError("rounds must be at least 1")
    if not 0.0 < gamma < 1.0:
        raise ValueError(f"gamma must lie in (0, 1), got {gamma}")
    cube = data.cube
    F0 = ~data.inside
    budget = gamma * cube_capacity(cube, truncation)
    if F0.all():
        return _infeasible(cube, F0, None, budget, float("inf"))
    c0 = cap(CompactSet(cube, F0), truncation) if F0.any() else 0.0
    if c0 > budget:
        return _infeasible(cube, F0, None, budget, c0)

    def done(best):
        return target is not None and best is not None and best.integral <= target

    best = None
    for inc in incumbents:
        if (inc.feasible and inc.F.cube == cube and inc.cap_used <= budget
                and np.all(inc.F.member | ~F0)):
            cand = CarvingResult(inc.F, inc.omega, inc.integral, inc.cap_used, True, budget, inc.audit)
            if _better(cand, best):
                best = cand

    if all(not np.any(c) for c in data.a):
        omega = constant_gauge(cube)
        res = min_over_F(effective_potential(omega, data, F0), data.inside, gamma, omega, truncation)
        if not res.feasible:
            return res if best is None else best
        cand = _evaluate(data, omega, res.F, budget, res.cap_used, res.audit)
        return cand if _better(cand, best) else best

    omega = optimize_gauge(data, F0)
    cand = _evaluate(data, omega, CompactSet(cube, F0), budget, c0)
    if _better(cand, best):
        best = cand
    for _ in range(rounds):
        if done(best):
            return best
        res = min_over_F(effective_potential(omega, data, F0), data.inside, gamma, omega, truncation)
        if not res.feasible:
            break
        cand = _evaluate(data, omega, res.F, budget, res.cap_used, res.audit)
        if _better(cand, best):
            best = cand
        omega = optimize_gauge(data, res.F.member)
        cand = _evaluate(data, omega, res.F, budget, res.cap_used, res.audit)
        if _better(cand, best):
            best = cand
    if gauge_budget > 0 and not done(best):
        for p in sample_polynomial_gauges(cube, gauge_budget, seed):
            res = min_over_F(effective_potential(p, data, F0), data.inside, gamma, p, truncation)
            if not res.feasible:
                continue
            cand = _evaluate(data, p, res.F, budget, res.cap_used, res.audit)
            if _better(cand, best):
                best = cand
            if done(best):
                break
    return best
