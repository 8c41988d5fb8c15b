"""Unit-modulus test gauges and the effective potential they produce.

Two families of gauges ``omega = exp(i*phi)`` are handled:

* optimized phases: ``grad(phi)`` minimises ``int |grad(phi) + a|^2`` over
  ``Q_d \\ F``; in two dimensions the phase may wind an integer number of
  times around each hole of ``F``;
* polynomial gauges ``P/|P|`` for random complex polynomials of degree <= 3.

All cube-local arrays follow :meth:`CubeWindow.nodes` / :meth:`CubeWindow.edges`
layouts.  The magnetic part of the effective potential at a node is, per
axis, the mean of ``(grad(phi) + a)^2`` over the incident edges that stay in
the region; with trapezoidal node volumes this makes ``int V_eff`` an exact
weighted sum of edge energies, which is what the phase optimisation minimises.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy import ndimage
from scipy.sparse.csgraph import connected_components

from .capacity import rle_decode, rle_encode
from .grid import CubeWindow, DomainMask, ScalarField, VectorField, edge_mask

__all__ = [
    "GaugeError",
    "CubeData",
    "GaugeCandidate",
    "EffectivePotential",
    "cube_data",
    "constant_gauge",
    "edge_weights",
    "find_holes",
    "effective_potential",
    "magnetic_energy",
    "optimize_gauge",
    "polynomial_gauge",
    "sample_polynomial_gauges",
    "cell_circulation",
    "gauge_from_dict",
]

MAX_HOLES = 64
PHASE_RTOL = 1e-11
GENERIC_ANGLE = 1e-3
TIE_TOL = 1e-9


class GaugeError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class CubeData:
    """Restriction of ``(a, V, Omega)`` to one cube."""

    cube: CubeWindow
    a: tuple[np.ndarray, ...]
    V: np.ndarray
    inside: np.ndarray

    @property
    def dim(self) -> int:
        return self.cube.dim

    @property
    def h(self) -> float:
        return self.cube.h

    def key(self) -> bytes:
        """Content fingerprint; equal cubes give equal carving results."""
        parts = [np.asarray([self.cube.m, self.dim], np.int64).tobytes(),
                 np.float64(self.h).tobytes(), np.packbits(self.inside).tobytes(),
                 np.ascontiguousarray(self.V).tobytes()]
        parts += [np.ascontiguousarray(c).tobytes() for c in self.a]
        return b"|".join(parts)


def cube_data(cube: CubeWindow, a: VectorField | None, V: ScalarField | None,
              omega: DomainMask | None = None) -> CubeData:
    lat = cube.lattice
    a = VectorField.zeros(lat) if a is None else a
    Vv = np.zeros(cube.shape) if V is None else cube.nodes(V.values)
    inside = np.ones(cube.shape, bool) if omega is None else cube.nodes(omega.inside)
    return CubeData(cube, tuple(np.array(c, float) for c in cube.edges(a)), np.array(Vv, float),
                    np.array(inside, bool))


def _axis_slices(ndim, j):
    lo = [slice(None)] * ndim
    hi = [slice(None)] * ndim
    lo[j] = slice(0, -1)
    hi[j] = slice(1, None)
    return tuple(lo), tuple(hi)


def _incident_counts(emask: np.ndarray, j: int, shape) -> np.ndarray:
    """Number of masked axis-``j`` edges touching each node."""
    cnt = np.zeros(shape)
    lo, hi = _axis_slices(len(shape), j)
    cnt[lo] += emask
    cnt[hi] += emask
    return cnt


def edge_weights(region: np.ndarray, vol: np.ndarray) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Edge masks of ``region`` and the quadrature weights that make nodal averaging exact."""
    masks, weights = [], []
    for j in range(region.ndim):
        em = edge_mask(region, j)
        cnt = _incident_counts(em, j, region.shape)
        share = np.where(cnt > 0, vol / np.maximum(cnt, 1), 0.0)
        lo, hi = _axis_slices(region.ndim, j)
        masks.append(em)
        weights.append(np.where(em, share[lo] + share[hi], 0.0))
    return masks, weights


def _nodal_average(values: list[np.ndarray], masks: list[np.ndarray], shape) -> np.ndarray:
    out = np.zeros(shape)
    for j, (v, em) in enumerate(zip(values, masks)):
        acc = np.zeros(shape)
        lo, hi = _axis_slices(len(shape), j)
        vv = np.where(em, v, 0.0)
        acc[lo] += vv
        acc[hi] += vv
        cnt = _incident_counts(em, j, shape)
        out += np.where(cnt > 0, acc / np.maximum(cnt, 1), 0.0)
    return out


# ---------------------------------------------------------------------------
# weighted phase solve


def _incidence(region: np.ndarray, masks: list[np.ndarray]):
    idx = np.full(region.shape, -1)
    nodes = np.flatnonzero(region.ravel())
    idx.ravel()[nodes] = np.arange(nodes.size)
    rows, tails, heads, sel = [], [], [], []
    start = 0
    for j, em in enumerate(masks):
        lo, hi = _axis_slices(region.ndim, j)
        t = idx[lo][em]
        hd = idx[hi][em]
        tails.append(t)
        heads.append(hd)
        sel.append(np.flatnonzero(em.ravel()))
        start += t.size
    t = np.concatenate(tails) if tails else np.zeros(0, int)
    hd = np.concatenate(heads) if heads else np.zeros(0, int)
    ne = t.size
    e = np.arange(ne)
    D = sp.csr_matrix((np.concatenate([-np.ones(ne), np.ones(ne)]),
                       (np.concatenate([e, e]), np.concatenate([t, hd]))), shape=(ne, nodes.size))
    return D, nodes, sel


def _flatten_edges(arrays, sel):
    return np.concatenate([np.asarray(a).ravel()[s] for a, s in zip(arrays, sel)])


def _cg(A, b, rtol=PHASE_RTOL):
    bn = float(np.linalg.norm(b))
    if bn == 0.0:
        return np.zeros_like(b)
    x, info = spla.cg(A, b, rtol=rtol, atol=0.0, maxiter=10 * max(A.shape[0], 10))
    res = float(np.linalg.norm(b - A @ x)) / bn
    if info != 0 and res > 100 * rtol:
        raise GaugeError(f"phase solve did not converge (relative residual {res:.2e})")
    return x


class _PhaseSystem:
    """Weighted Neumann problem ``min sum c_e (dphi_e + h b_e)^2`` on a node region.

    One node per connected component is grounded; optionally a set of nodes
    carries prescribed phases (harmonic extension).
    """

    def __init__(self, region, masks, weights, h, fixed=None):
        self.region = region
        self.h = h
        D, nodes, sel = _incidence(region, masks)
        self.D, self.nodes, self.sel = D, nodes, sel
        self.w = _flatten_edges(weights, sel)
        L = (D.T @ sp.diags(self.w) @ D).tocsr()
        n = nodes.size
        fixed_local = np.zeros(n, bool)
        if fixed is not None:
            fixed_local = np.asarray(fixed, bool).ravel()[nodes]
        ncomp, labels = connected_components(abs(L) > 0, directed=False) if n else (0, np.zeros(0, int))
        ground = fixed_local.copy()
        for c in range(ncomp):
            members = labels == c
            if not (members & fixed_local).any():
                ground[np.flatnonzero(members)[0]] = True
        self.free = np.flatnonzero(~ground)
        self.fixed_idx = np.flatnonzero(fixed_local)
        self.L = L
        self.A = L[self.free][:, self.free].tocsr()
        self.B = L[self.free][:, self.fixed_idx].tocsr()

    def solve(self, b_edges, phi_fixed=None) -> np.ndarray:
        """Phase on the region nodes (NaN elsewhere)."""
        b = _flatten_edges(b_edges, self.sel)
        rhs = -(self.D.T @ (self.w * (self.h * b)))
        x = np.zeros(self.nodes.size)
        if self.fixed_idx.size and phi_fixed is not None:
            x[self.fixed_idx] = np.asarray(phi_fixed).ravel()[self.nodes[self.fixed_idx]]
        if self.free.size:
            r = rhs[self.free] - (self.B @ x[self.fixed_idx] if self.fixed_idx.size else 0.0)
            x[self.free] = _cg(self.A, r)
        phi = np.full(self.region.shape, np.nan)
        phi.ravel()[self.nodes] = x
        return phi


def _phase_gradient(phi, h):
    return [np.diff(phi, axis=j) / h for j in range(phi.ndim)]


def magnetic_energy(pg, a, region, vol, h) -> float:
    """``int_{region} |grad(phi) + a|^2`` with the nodal-average quadrature."""
    masks, weights = edge_weights(region, vol)
    total = 0.0
    for p, aj, em, w in zip(pg, a, masks, weights):
        r = np.where(em, p + aj, 0.0)
        total += float(np.sum(w * r * r))
    return total * h ** region.ndim


# ---------------------------------------------------------------------------
# holes and windings (two dimensions)


def find_holes(F: np.ndarray) -> tuple[np.ndarray, int]:
    """Label the 8-connected components of ``F`` that stay off the cube boundary."""
    if F.ndim != 2:
        return np.zeros(F.shape, int), 0
    labels, n = ndimage.label(F, structure=np.ones((3, 3), int))
    boundary = np.zeros(F.shape, bool)
    boundary[0, :] = boundary[-1, :] = boundary[:, 0] = boundary[:, -1] = True
    touching = set(np.unique(labels[boundary & F]).tolist())
    out = np.zeros(F.shape, int)
    k = 0
    for lab in range(1, n + 1):
        if lab in touching:
            continue
        k += 1
        out[labels == lab] = k
    return out, k


def _hole_point(holes: np.ndarray, k: int) -> tuple[int, int]:
    pts = np.argwhere(holes == k)
    c = pts.mean(axis=0)
    best = np.argmin(((pts - c) ** 2).sum(axis=1) * 1.0 + 1e-9 * np.arange(len(pts)))
    return tuple(int(v) for v in pts[best])


def _angle_form(shape, point, h) -> list[np.ndarray]:
    """Wrapped-increment gradient of the angle about ``point``; NaN on edges touching it."""
    i, j = np.meshgrid(np.arange(shape[0]), np.arange(shape[1]), indexing="ij")
    theta = np.arctan2(j - point[1], i - point[0])
    out = []
    for ax in range(2):
        g = np.diff(theta, axis=ax)
        g = (g + np.pi) % (2 * np.pi) - np.pi
        g = g / h
        lo, hi = _axis_slices(2, ax)
        at = np.zeros(shape, bool)
        at[point] = True
        g[at[lo] | at[hi]] = np.nan
        out.append(g)
    return out


def cell_circulation(a: tuple[np.ndarray, ...] | list[np.ndarray], h: float) -> np.ndarray:
    """Counter-clockwise line integral of an edge field around every 2-D cell."""
    ax, ay = a
    return h * (ax[:, :-1] + ay[1:, :] - ax[:, 1:] - ay[:-1, :])


def _hole_cells(holes: np.ndarray, k: int) -> np.ndarray:
    m = holes == k
    return m[:-1, :-1] | m[1:, :-1] | m[:-1, 1:] | m[1:, 1:]


def _round_winding(x: float) -> int:
    """Nearest integer; exact half-integers go to the smaller magnitude, then negative."""
    lo = np.floor(x)
    frac = x - lo
    if abs(frac - 0.5) <= TIE_TOL:
        cands = [int(lo), int(lo) + 1]
        return min(cands, key=lambda m: (abs(m), m))
    return int(np.round(x))


# ---------------------------------------------------------------------------
# gauge candidates


@dataclass(frozen=True, eq=False)
class GaugeCandidate:
    """A test gauge on one cube.

    ``kind`` is ``"optimized"`` (``phase`` on nodes plus integer ``winding``
    about ``hole_points``) or ``"polynomial"`` (``coeffs`` over the monomials
    ``exponents`` in coordinates scaled to ``[-1, 1]^n``).
    """

    kind: str
    cube: CubeWindow
    phase: np.ndarray | None = None
    winding: tuple[int, ...] = ()
    hole_points: tuple[tuple[int, ...], ...] = ()
    circulations: tuple[float, ...] = ()
    coeffs: np.ndarray | None = None
    exponents: tuple[tuple[int, ...], ...] = ()
    zero_cells: np.ndarray | None = None
    energy: float = float("nan")
    support: np.ndarray | None = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def phase_gradient(self, region: np.ndarray | None = None) -> list[np.ndarray]:
        """``grad(phi)`` on all cube edges; NaN where the gauge is singular or undefined."""
        if self.kind == "polynomial":
            return _poly_phase_gradient(self)
        h = self.cube.h
        phi = self.phase
        if region is not None and np.isnan(phi[region]).any():
            phi = _extend_phase(self, region)
        pg = _phase_gradient(phi, h)
        for mk, pt in zip(self.winding, self.hole_points):
            if mk:
                for j, g in enumerate(_angle_form(self.cube.shape, pt, h)):
                    pg[j] = pg[j] + mk * g
        return pg

    def singular_nodes(self) -> np.ndarray:
        """Nodes that must lie in ``F``: winding centres, or corners of zero cells."""
        out = np.zeros(self.cube.shape, bool)
        if self.kind == "optimized":
            for mk, pt in zip(self.winding, self.hole_points):
                if mk:
                    out[pt] = True
        elif self.zero_cells is not None and self.zero_cells.any():
            n = self.cube.dim
            for offs in itertools.product((0, 1), repeat=n):
                out[tuple(slice(o, o + self.cube.m) for o in offs)] |= self.zero_cells
        return out

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "cube": self.cube.to_dict(),
               "energy": self.energy if np.isfinite(self.energy) else None}
        if self.kind == "optimized":
            out.update(winding=list(self.winding), hole_points=[list(p) for p in self.hole_points],
                       circulations=list(self.circulations),
                       optimized_for=None if self.support is None else rle_encode(self.support))
        else:
            out.update(exponents=[list(e) for e in self.exponents],
                       coeffs_re=self.coeffs.real.tolist(), coeffs_im=self.coeffs.imag.tolist(),
                       zero_cells=int(self.zero_cells.sum()))
        return out


def constant_gauge(cube: CubeWindow) -> GaugeCandidate:
    """``omega = 1``."""
    return GaugeCandidate("optimized", cube, phase=np.zeros(cube.shape), energy=float("nan"))


def _extend_phase(g: GaugeCandidate, region: np.ndarray) -> np.ndarray:
    key = ("ext", np.packbits(region).tobytes())
    if key in g._cache:
        return g._cache[key]
    known = ~np.isnan(g.phase)
    reg = region | known
    vol = g.cube.node_volumes()
    masks, weights = edge_weights(reg, vol)
    zero_b = [np.zeros_like(w) for w in weights]
    sysm = _PhaseSystem(reg, masks, weights, g.cube.h, fixed=known & reg)
    phi = sysm.solve(zero_b, phi_fixed=np.nan_to_num(g.phase))
    phi[known] = g.phase[known]
    g._cache[key] = phi
    return phi


def optimize_gauge(data: CubeData, F: np.ndarray) -> GaugeCandidate:
    """Minimise ``int_{Q\\F} |grad(phi) + a|^2`` over phases, with windings around holes in 2-D.

    The single-valued part solves the weighted Neumann problem by CG.  For
    each hole the winding is ``-round(circulation / 2 pi)`` (ties to the
    smaller magnitude, then negative), followed by a +-1 local search on the
    exact quadratic energy; in three dimensions topological sectors are not
    searched.
    """
    cube, h = data.cube, data.h
    F = np.asarray(F, bool)
    region = ~F
    vol = cube.node_volumes()
    if not region.any():
        return GaugeCandidate("optimized", cube, phase=np.full(cube.shape, np.nan), energy=0.0, support=F)
    masks, weights = edge_weights(region, vol)
    system = _PhaseSystem(region, masks, weights, h)
    holes, nholes = find_holes(F) if data.dim == 2 else (None, 0)
    if nholes > MAX_HOLES:
        raise GaugeError(f"{nholes} holes exceed the limit of {MAX_HOLES}")
    a = [np.where(em, aj, 0.0) for aj, em in zip(data.a, masks)]

    def energy_of(b):
        phi = system.solve(b)
        pg = _phase_gradient(phi, h)
        return phi, magnetic_energy(pg, b, region, vol, h)

    if nholes == 0:
        phi, e = energy_of(a)
        return GaugeCandidate("optimized", cube, phase=phi, energy=e, support=F)

    points = tuple(_hole_point(holes, k) for k in range(1, nholes + 1))
    circ_cells = cell_circulation(data.a, h)
    circs = tuple(float(circ_cells[_hole_cells(holes, k)].sum()) for k in range(1, nholes + 1))
    forms = [[np.where(em, np.nan_to_num(g), 0.0) for g, em in zip(_angle_form(cube.shape, p, h), masks)]
             for p in points]

    # residual vectors r(b) = grad(phi_b)/h + b are linear in b
    def residual(b):
        phi = system.solve(b)
        return [np.where(em, p + bj, 0.0) for p, bj, em in zip(_phase_gradient(phi, h), b, masks)]

    r0 = residual(a)
    rk = [residual(f) for f in forms]
    wflat = np.concatenate([w.ravel() for w in weights])
    v0 = np.concatenate([r.ravel() for r in r0])
    vk = np.array([np.concatenate([r.ravel() for r in rr]) for rr in rk])
    G = (vk * wflat) @ vk.T
    f = (vk * wflat) @ v0
    e00 = float(v0 @ (wflat * v0))
    scale = h ** data.dim

    def quad(m):
        m = np.asarray(m, float)
        return scale * (e00 + 2 * m @ f + m @ G @ m)

    m = np.array([-_round_winding(c / (2 * np.pi)) for c in circs], int)
    best = quad(m)
    improved = True
    while improved:
        improved = False
        for k in range(nholes):
            for step in (-1, 1):
                trial = m.copy()
                trial[k] += step
                e = quad(trial)
                if e < best * (1 - 1e-12) - 1e-300:
                    m, best, improved = trial, e, True
    b = [aj + sum(int(mk) * fk[j] for mk, fk in zip(m, forms)) for j, aj in enumerate(a)]
    phi, e = energy_of(b)
    return GaugeCandidate("optimized", cube, phase=phi, winding=tuple(int(x) for x in m),
                          hole_points=points, circulations=circs, energy=e, support=F)


# ---------------------------------------------------------------------------
# polynomial gauges


def _exponents(dim: int, degree: int = 3) -> tuple[tuple[int, ...], ...]:
    out = [e for e in itertools.product(range(degree + 1), repeat=dim) if sum(e) <= degree]
    return tuple(sorted(out, key=lambda e: (sum(e), tuple(-x for x in e))))


def _scaled(cube: CubeWindow, coords):
    half = 0.5 * cube.d
    return [(x - c) / half for x, c in zip(coords, cube.center)], 1.0 / half


def _poly_eval(coeffs, exps, xs):
    val = np.zeros(np.shape(xs[0]), complex)
    for c, e in zip(coeffs, exps):
        term = np.full(np.shape(xs[0]), c, complex)
        for x, k in zip(xs, e):
            if k:
                term = term * x**k
        val += term
    return val


def _poly_deriv(coeffs, exps, xs, j):
    val = np.zeros(np.shape(xs[0]), complex)
    for c, e in zip(coeffs, exps):
        if e[j] == 0:
            continue
        term = np.full(np.shape(xs[0]), c * e[j], complex)
        for i, (x, k) in enumerate(zip(xs, e)):
            kk = k - 1 if i == j else k
            if kk:
                term = term * x**kk
        val += term
    return val


def _face_windings(arg: np.ndarray) -> np.ndarray:
    """Cells (as an ``m^n`` boolean array) with a face around which the argument winds."""
    n = arg.ndim
    cells = np.zeros(tuple(s - 1 for s in arg.shape), bool)
    if n < 2:
        return cells

    def wrap(x):
        return (x + np.pi) % (2 * np.pi) - np.pi

    for j, k in itertools.combinations(range(n), 2):
        dj = wrap(np.diff(arg, axis=j))
        dk = wrap(np.diff(arg, axis=k))
        # face (j,k) circulation at lower corner
        sl = lambda arr, ax, s: np.take(arr, np.arange(s, arr.shape[ax] - 1 + s), axis=ax)
        c = (sl(dj, k, 0) + sl(dk, j, 1) - sl(dj, k, 1) - sl(dk, j, 0))
        faces = np.abs(np.round(c / (2 * np.pi))) > 0
        # faces have full length along the remaining axes; attach to the adjacent cells
        for ax in range(n):
            if ax in (j, k):
                continue
            lo = np.take(faces, np.arange(faces.shape[ax] - 1), axis=ax)
            hi = np.take(faces, np.arange(1, faces.shape[ax]), axis=ax)
            faces = lo | hi
        cells |= faces
    return cells


def polynomial_gauge(cube: CubeWindow, coeffs, exponents=None) -> GaugeCandidate:
    """Gauge ``P/|P|`` for the given coefficients (scaled cube coordinates)."""
    exponents = _exponents(cube.dim) if exponents is None else tuple(map(tuple, exponents))
    coeffs = np.asarray(coeffs, complex)
    xs, _ = _scaled(cube, cube.local_mesh())
    vals = _poly_eval(coeffs, exponents, xs)
    zc = _face_windings(np.angle(vals)) if cube.dim >= 2 else np.zeros((cube.m,) * cube.dim, bool)
    return GaugeCandidate("polynomial", cube, coeffs=coeffs, exponents=exponents, zero_cells=zc)


def _is_generic(g: GaugeCandidate) -> bool:
    cube = g.cube
    xs, _ = _scaled(cube, cube.local_mesh())
    if np.min(np.abs(_poly_eval(g.coeffs, g.exponents, xs))) < 1e-12:
        return False
    if not g.zero_cells.any():
        return True
    centers = [x[tuple(slice(0, -1) for _ in range(cube.dim))] + 0.5 * cube.h for x in cube.local_mesh()]
    xc, _ = _scaled(cube, [c[g.zero_cells] for c in centers])
    grads = np.array([_poly_deriv(g.coeffs, g.exponents, xc, j) for j in range(cube.dim)])
    re, im = grads.real, grads.imag
    nre = np.linalg.norm(re, axis=0)
    nim = np.linalg.norm(im, axis=0)
    cosang = np.abs((re * im).sum(axis=0)) / np.maximum(nre * nim, 1e-300)
    ang = np.arccos(np.clip(cosang, 0.0, 1.0))
    return bool(np.all(ang >= GENERIC_ANGLE) and np.all(nre > 0) and np.all(nim > 0))


def sample_polynomial_gauges(cube: CubeWindow, budget: int, seed: int) -> list[GaugeCandidate]:
    """Random complex polynomials of total degree <= 3, shifted by a constant until generic."""
    if budget < 1:
        raise ValueError("budget must be at least 1")
    exps = _exponents(cube.dim)
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(budget):
        base = (rng.standard_normal(len(exps)) + 1j * rng.standard_normal(len(exps))) / np.sqrt(2)
        for _attempt in range(100):
            c = (rng.standard_normal() + 1j * rng.standard_normal()) / np.sqrt(2)
            coeffs = base.copy()
            coeffs[0] += c
            g = polynomial_gauge(cube, coeffs, exps)
            if _is_generic(g):
                out.append(g)
                break
        else:
            raise GaugeError("no generic shift found in 100 attempts")
    return out


def _poly_phase_gradient(g: GaugeCandidate) -> list[np.ndarray]:
    key = "pg"
    if key in g._cache:
        return g._cache[key]
    cube = g.cube
    n = cube.dim
    out = []
    for j in range(n):
        coords = []
        for k, x in enumerate(cube.corner):
            ax = x + cube.h * np.arange(cube.m + 1)
            if k == j:
                ax = x + cube.h * (np.arange(cube.m) + 0.5)
            coords.append(ax)
        mesh = np.meshgrid(*coords, indexing="ij")
        xs, s = _scaled(cube, mesh)
        P = _poly_eval(g.coeffs, g.exponents, xs)
        dP = _poly_deriv(g.coeffs, g.exponents, xs, j) * s
        with np.errstate(divide="ignore", invalid="ignore"):
            pg = np.imag(dP / P)
        pg[~np.isfinite(pg)] = np.nan
        out.append(pg)
    zc = g.zero_cells
    if zc is not None and zc.any():
        # every edge of a zero cell is singular
        for j in range(n):
            for offs in itertools.product((0, 1), repeat=n - 1):
                sl = []
                it = iter(offs)
                for k in range(n):
                    if k == j:
                        sl.append(slice(None))
                    else:
                        o = next(it)
                        sl.append(slice(o, o + cube.m))
                view = out[j][tuple(sl)]
                view[zc] = np.nan
    g._cache[key] = out
    return out


# ---------------------------------------------------------------------------
# effective potential


@dataclass(frozen=True, eq=False)
class EffectivePotential:
    """Node values of ``|grad(phi) + a|^2 + V`` on ``region``; NaN off the region.

    ``sentinel`` marks region nodes where the gauge is singular; their value
    is ``+inf``.
    """

    values: np.ndarray
    sentinel: np.ndarray
    region: np.ndarray
    cube: CubeWindow

    def integral(self, region: np.ndarray | None = None) -> float:
        region = self.region if region is None else region & self.region
        v = self.values[region]
        if np.isinf(v).any():
            return float("inf")
        w = self.cube.node_volumes()[region]
        return float(np.dot(w, v)) * self.cube.h ** self.cube.dim


def effective_potential(omega: GaugeCandidate, data: CubeData, F: np.ndarray) -> EffectivePotential:
    """Effective potential of ``omega`` on ``Q_d \\ F``."""
    F = np.asarray(F, bool)
    region = ~F
    pg = omega.phase_gradient(region)
    vol = data.cube.node_volumes()
    masks, _ = edge_weights(region, vol)
    shape = data.cube.shape
    w = []
    singular = omega.singular_nodes()
    sentinel = singular.copy()
    for j, (p, aj, em) in enumerate(zip(pg, data.a, masks)):
        bad = em & ~np.isfinite(p)
        if bad.any():
            lo, hi = _axis_slices(len(shape), j)
            touches = singular[lo] | singular[hi]
            stray = bad & ~touches
            sentinel[lo] |= stray
            sentinel[hi] |= stray
        r = np.where(em & np.isfinite(p), p + aj, 0.0)
        w.append(r * r)
    vals = _nodal_average(w, masks, shape) + data.V
    sentinel &= region
    vals = np.where(sentinel, np.inf, vals)
    vals = np.where(region, vals, np.nan)
    return EffectivePotential(vals, sentinel, region, data.cube)


def gauge_from_dict(d: dict, data: CubeData) -> GaugeCandidate:
    """Rebuild a serialized gauge on the cube of ``data`` (optimized phases are re-solved)."""
    cube = data.cube
    if d["kind"] == "polynomial":
        coeffs = np.asarray(d["coeffs_re"]) + 1j * np.asarray(d["coeffs_im"])
        return polynomial_gauge(cube, coeffs, d["exponents"])
    runs = d.get("optimized_for")
    if runs is None:
        return constant_gauge(cube)
    return optimize_gauge(data, rle_decode(runs, cube.shape))
