"""Direct spectral computations for the lattice magnetic Schrodinger operator.

The quadratic form uses Peierls phases,

    q(u) = h^n sum_edges |u_head exp(i h a_e) - u_tail|^2 / h^2 + h^n sum_nodes V |u|^2,

so that replacing ``a`` by ``a + grad(chi)`` (exact lattice differences) is a
unitary conjugation by ``exp(i chi)`` and leaves every eigenvalue unchanged.
Dirichlet conditions freeze all nodes outside the domain at zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .grid import CubeWindow, DomainMask, ScalarField, VectorField

__all__ = [
    "SpectralError",
    "MagneticOperator",
    "SpectralResult",
    "PerssonResult",
    "bottom",
    "neumann_bottom",
    "counting",
    "persson_limit",
    "rayleigh_quotient",
]

RESIDUAL_TOL = 1e-7
SHIFT_BACKOFF = 0.05  # accurate shift sits this fraction of the way back to the Gershgorin floor
DENSE_LIMIT = 4096
DENSE_BOTTOM_LIMIT = 1200
PLATEAU_TOL = 0.01


class SpectralError(RuntimeError):
    def __init__(self, message, rayleigh=None, residual=None):
        super().__init__(message)
        self.rayleigh = rayleigh
        self.residual = residual


@dataclass(frozen=True, eq=False)
class MagneticOperator:
    """``H_{a,V}`` on the lattice nodes of ``omega`` with Dirichlet conditions."""

    omega: DomainMask
    a: VectorField | None = None
    V: ScalarField | None = None

    @property
    def lattice(self):
        return self.omega.lattice

    def restricted(self, mask: np.ndarray | DomainMask) -> "MagneticOperator":
        inside = mask.inside if isinstance(mask, DomainMask) else np.asarray(mask, bool)
        return MagneticOperator(DomainMask(self.lattice, self.omega.inside & inside), self.a, self.V)

    def with_potential(self, a=..., V=...) -> "MagneticOperator":
        """Same domain with ``a`` and/or ``V`` replaced; omitted arguments are kept (``None`` clears)."""
        return MagneticOperator(self.omega, self.a if a is ... else a, self.V if V is ... else V)

    def matrix(self) -> tuple[sp.csr_matrix, np.ndarray]:
        """Hermitian matrix on the inside nodes and their flat lattice indices."""
        lat = self.lattice
        inside = self.omega.inside
        return _assemble(lat, inside, self.a, self.V, neumann_cube=None)


def _assemble(lat, inside, a, V, neumann_cube: CubeWindow | None):
    """Matrix of the form on the unknown nodes.

    With ``neumann_cube`` the unknowns are the cube nodes inside the domain,
    only edges inside the cube are kept (free boundary on the cube faces) and
    nodes outside the domain stay frozen at zero.
    """
    n = lat.dim
    h2 = lat.h**2
    if neumann_cube is None:
        free = np.asarray(inside, bool)
        nodes = np.flatnonzero(free.ravel())
        idx = np.full(lat.shape, -1)
        idx.ravel()[nodes] = np.arange(nodes.size)
        Vn = np.zeros(lat.shape) if V is None else np.asarray(V.values, float)
        diag = np.full(nodes.size, 2.0 * n / h2) + Vn.ravel()[nodes]
        rows, cols, vals = [], [], []
        for j in range(n):
            per = lat.periodic[j]
            ecount = lat.edge_count(j)
            tail = [slice(None)] * n
            tail[j] = slice(0, ecount)
            head_idx = np.roll(idx, -1, axis=j) if per else None
            ti = idx[tuple(tail)]
            if per:
                hi = head_idx
            else:
                hs = [slice(None)] * n
                hs[j] = slice(1, None)
                hi = idx[tuple(hs)]
            aj = np.zeros(lat.edge_shape(j)) if a is None else np.asarray(a.components[j], float)
            ok = (ti >= 0) & (hi >= 0)
            ph = np.exp(1j * lat.h * aj[ok])
            rows += [ti[ok], hi[ok]]
            cols += [hi[ok], ti[ok]]
            vals += [-ph / h2, -np.conj(ph) / h2]
        return _finish(nodes, diag, rows, cols, vals)
    cube = neumann_cube
    loc_inside = cube.nodes(inside)
    nodes_loc = np.flatnonzero(loc_inside.ravel())
    idx = np.full(cube.shape, -1)
    idx.ravel()[nodes_loc] = np.arange(nodes_loc.size)
    Vn = np.zeros(cube.shape) if V is None else cube.nodes(V.values)
    diag = Vn.ravel()[nodes_loc].astype(float)
    comps = cube.edges(a) if a is not None else tuple(np.zeros(tuple(cube.m if k == j else cube.m + 1
                                                                          for k in range(n)))
                                                        for j in range(n))
    rows, cols, vals = [], [], []
    for j in range(n):
        lo = [slice(None)] * n
        hi = [slice(None)] * n
        lo[j] = slice(0, -1)
        hi[j] = slice(1, None)
        ti, hd = idx[tuple(lo)], idx[tuple(hi)]
        for end in (ti, hd):
            np.add.at(diag, end[end >= 0], 1.0 / h2)
        ok = (ti >= 0) & (hd >= 0)
        ph = np.exp(1j * lat.h * np.asarray(comps[j], float)[ok])
        rows += [ti[ok], hd[ok]]
        cols += [hd[ok], ti[ok]]
        vals += [-ph / h2, -np.conj(ph) / h2]
    return _finish(nodes_loc, diag, rows, cols, vals)


def _finish(nodes, diag, rows, cols, vals):
    N = nodes.size
    r = np.concatenate(rows + [np.arange(N)])
    c = np.concatenate(cols + [np.arange(N)])
    v = np.concatenate(vals + [diag.astype(complex)])
    H = sp.coo_matrix((v, (r, c)), shape=(N, N)).tocsr()
    H.sum_duplicates()
    return H, nodes


@dataclass(frozen=True, eq=False)
class SpectralResult:
    """Smallest eigenvalue; ``eigvec`` lives on the lattice (zero on frozen nodes)."""

    lam: float
    eigvec: np.ndarray
    residual: float
    iterations: int

    def to_dict(self) -> dict:
        return {"lambda": self.lam, "residual": self.residual, "iterations": self.iterations}


def rayleigh_quotient(H, u) -> float:
    return float(np.vdot(u, H @ u).real / np.vdot(u, u).real)


def _smallest(H: sp.csr_matrix, seed: int = 0, k: int = 1, tol: float = 1e-10):
    """Lowest ``k`` eigenpairs by shift-invert Lanczos below the spectrum (dense when small).

    A loose first pass locates the bottom from a safe Gershgorin shift; the
    accurate pass then shifts to just below that estimate.  Near-degenerate
    bottoms (Landau levels) stall when the shift stays far away.
    """
    N = H.shape[0]
    if N <= DENSE_BOTTOM_LIMIT or k >= N - 1:
        w, v = sla.eigh(H.toarray(), subset_by_index=(0, min(k, N) - 1))
        return w, v, 1
    # every eigenvalue is >= min of (diagonal - off-diagonal row sum), a Gershgorin bound
    d = H.diagonal().real
    off = np.asarray(abs(H).sum(axis=1)).ravel() - np.abs(d)
    floor = float(min(0.0, np.min(d - off))) - 1.0
    rng = np.random.default_rng(seed)
    v0 = rng.standard_normal(N) + 1j * rng.standard_normal(N)
    count = [0]

    def solve_at(sigma, kk, tol_, ncv):
        lu = spla.splu((H - sigma * sp.identity(N, format="csr")).tocsc())

        def solve(x):
            count[0] += 1
            return lu.solve(np.asarray(x, complex))

        op = spla.LinearOperator((N, N), matvec=solve, dtype=complex)
        return spla.eigsh(H, k=kk, sigma=sigma, which="LM", OPinv=op, v0=v0, tol=tol_, ncv=ncv)

    ncv = min(N - 1, max(2 * k + 1, 40))
    w0, _ = solve_at(floor, 1, 1e-4, min(N - 1, 20))
    rough = float(np.min(w0))
    sigma = rough - SHIFT_BACKOFF * (rough - floor)
    w, v = solve_at(sigma, k, tol, ncv)
    order = np.argsort(w)
    return w[order], v[:, order], count[0]


def bottom(op: MagneticOperator, region: np.ndarray | DomainMask | None = None, seed: int = 0) -> SpectralResult:
    """Bottom of the Dirichlet spectrum of ``op`` on ``region`` (default: the whole domain)."""
    if region is not None:
        op = op.restricted(region)
    H, nodes = op.matrix()
    if nodes.size == 0:
        raise ValueError("the region has no interior node")
    return _bottom_of(H, nodes, op.lattice.shape, seed)


def _bottom_of(H, nodes, shape, seed):
    w, v, its = _smallest(H, seed)
    lam = float(w[0])
    u = v[:, 0]
    res = float(np.linalg.norm(H @ u - lam * u) / np.linalg.norm(u))
    if res > RESIDUAL_TOL * max(1.0, abs(lam)):
        raise SpectralError(f"eigensolve residual {res:.2e} above tolerance", rayleigh_quotient(H, u), res)
    full = np.zeros(int(np.prod(shape)), complex)
    full[nodes] = u
    return SpectralResult(lam, full.reshape(shape), res, its)


def neumann_bottom(cube: CubeWindow, op: MagneticOperator, seed: int = 0) -> SpectralResult:
    """Bottom of the form on ``Q_d`` with free cube faces and zero values on ``Q_d \\ Omega``."""
    H, nodes = _assemble(op.lattice, op.omega.inside, op.a, op.V, neumann_cube=cube)
    if nodes.size == 0:
        raise ValueError("the cube does not meet the domain")
    return _bottom_of(H, nodes, cube.shape, seed)


def counting(lam: float, op: MagneticOperator, region=None, seed: int = 0, gap_tol: float = 1e-8) -> int:
    """Number of eigenvalues strictly below ``lam``.

    Raises :class:`SpectralError` when an eigenvalue lies within
    ``gap_tol * max(1, |lam|)`` of ``lam``, since the count is then ambiguous.
    """
    if region is not None:
        op = op.restricted(region)
    if lam <= 0:
        return 0
    H, nodes = op.matrix()
    N = nodes.size
    if N == 0:
        return 0
    tol = gap_tol * max(1.0, abs(lam))
    if N <= DENSE_LIMIT:
        w = sla.eigh(H.toarray(), eigvals_only=True, subset_by_value=(-np.inf, lam + tol))
    else:
        k = 4
        while True:
            k = min(k, N - 2)
            w, _, _ = _smallest(H, seed, k=k)
            if w[-1] > lam + tol or k >= N - 2:
                break
            k *= 2
    near = np.abs(w - lam) <= tol
    if near.any():
        raise SpectralError(f"eigenvalue {w[near][0]:.10g} within {tol:.1e} of lambda={lam}; count ambiguous")
    return int(np.sum(w < lam))


@dataclass(frozen=True, eq=False)
class PerssonResult:
    radii: tuple[float, ...]
    values: tuple[float, ...]
    limit: float
    monotone: bool
    plateau: bool

    def to_dict(self) -> dict:
        from .carving import json_number

        return {"radii": list(self.radii), "values": [json_number(v) for v in self.values],
                "limit": json_number(self.limit), "monotone": self.monotone, "plateau": self.plateau}


def persson_limit(op: MagneticOperator, Rs, center=None, seed: int = 0) -> PerssonResult:
    """``lambda(Omega \\ closed ball B_R)`` over ascending radii; the last value estimates ``lambda_inf``.

    An empty exterior region gives ``+inf``.  ``plateau`` reports whether the
    last two values differ by at most 1% relative.
    """
    Rs = [float(r) for r in Rs]
    if any(r2 < r1 for r1, r2 in zip(Rs, Rs[1:])):
        raise ValueError("radii must be ascending")
    vals = []
    for R in Rs:
        om = op.omega.without_ball(R, center)
        if not om.inside.any():
            vals.append(float("inf"))
            continue
        vals.append(bottom(MagneticOperator(om, op.a, op.V), seed=seed).lam)
    monotone = all(v2 >= v1 for v1, v2 in zip(vals, vals[1:]))
    plateau = False
    if len(vals) >= 2 and np.isfinite(vals[-1]) and np.isfinite(vals[-2]):
        plateau = abs(vals[-1] - vals[-2]) <= PLATEAU_TOL * max(abs(vals[-1]), 1e-300)
    elif len(vals) >= 2 and np.isinf(vals[-1]) and np.isinf(vals[-2]):
        plateau = True
    return PerssonResult(tuple(Rs), tuple(vals), vals[-1] if vals else float("nan"), monotone, plateau)
