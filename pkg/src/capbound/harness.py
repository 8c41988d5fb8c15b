"""End-to-end comparison of spectral bottoms with capacitary diameters.

The constants relating ``lambda`` and ``D^-2`` are not explicit, so the
checks here are family-wide: every finite ratio ``lambda * D^2`` must fit in
one interval ``[1/C, C]`` with ``C <= 100``, dilation-related presets must
give matching ratios, and degenerate cases must be degenerate on both sides.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .capacity import rle_decode
from .carving import json_number
from .diameter import diameter, diameter_limit, positivity_scan
from .fibered import fibered_diameter, infimum_over_fibers
from .gauge import cube_data, effective_potential, gauge_from_dict
from .grid import CubeWindow
from .presets import Preset, build
from .spectrum import bottom, persson_limit

__all__ = [
    "SCHEMA",
    "Check",
    "BoundReport",
    "Summary",
    "compute_two_sided",
    "compute_essential",
    "verify_two_sided",
    "verify_essential",
    "positivity_link",
    "replay_witness",
    "document",
    "dumps",
    "strip_volatile",
]

SCHEMA = "capbound/1"
ZERO_LAMBDA = 1e-9
C_MAX = 100.0
FAMILY_SPREAD = 0.30
DISCRETE_GROWTH = 10.0


@dataclass
class Check:
    name: str
    passed: bool
    detail: str = ""

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": bool(self.passed), "detail": self.detail}


def _ratio(lam, D):
    """``lambda * D^2``; ``None`` when both sides are degenerate (``lambda = 0``, ``D = inf``)."""
    if lam is None or D is None:
        return None
    zero = lam <= ZERO_LAMBDA
    if zero and np.isinf(D):
        return None
    if zero:
        return 0.0
    if np.isinf(D):
        return float("inf")
    return lam * D * D


@dataclass
class BoundReport:
    preset: str
    gamma: float
    lattice: dict
    lam: float | None = None
    D: float | None = None
    bracketed: bool | None = None
    lam_inf: float | None = None
    D_inf: float | None = None
    witness: dict | None = None
    extras: dict = field(default_factory=dict)
    runtimes: dict = field(default_factory=dict)

    @property
    def ratio(self):
        return _ratio(self.lam, self.D)

    @property
    def ratio_inf(self):
        return _ratio(self.lam_inf, self.D_inf)

    def to_dict(self) -> dict:
        def num(x):
            return None if x is None else json_number(x)

        return {"preset": self.preset, "gamma": self.gamma, "lattice": self.lattice,
                "lambda": num(self.lam), "D": num(self.D), "bracketed": self.bracketed,
                "ratio": num(self.ratio), "lambda_inf": num(self.lam_inf), "D_inf": num(self.D_inf),
                "ratio_inf": num(self.ratio_inf), "witness": self.witness, "extras": self.extras}


@dataclass
class Summary:
    reports: list[BoundReport]
    checks: list[Check]
    C_fit: float | None

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return {"reports": [r.to_dict() for r in self.reports], "checks": [c.to_dict() for c in self.checks],
                "C_fit": None if self.C_fit is None else json_number(self.C_fit), "passed": self.passed}

    def timing(self) -> dict:
        return {r.preset: r.runtimes for r in self.reports}


def _resolve(p, h=None) -> Preset:
    return p if isinstance(p, Preset) else build(p, h)


def compute_two_sided(preset, gamma: float | None = None, seed: int = 0, h=None) -> BoundReport:
    """``lambda`` by eigensolve and ``D`` by cube sweep for one preset."""
    p = _resolve(preset, h)
    gamma = p.gamma if gamma is None else gamma
    rep = BoundReport(p.name, gamma, p.lattice.to_dict())
    t = time.perf_counter()
    if p.fibered is not None:
        curve = infimum_over_fibers(p.fibered)
        rep.lam = curve.lam
        rep.extras["mu_star"] = curve.mu_star
        rep.runtimes["lambda"] = time.perf_counter() - t
        t = time.perf_counter()
        fd = fibered_diameter(p.fibered_coarse or p.fibered, gamma)
        rep.D = fd.D
        rep.bracketed = fd.witness.bracketed if fd.witness is not None else True
        rep.extras["fibered_diameter"] = fd.to_dict()
        rep.runtimes["D"] = time.perf_counter() - t
        return rep
    rep.lam = bottom(p.operator(), seed=seed).lam
    rep.runtimes["lambda"] = time.perf_counter() - t
    t = time.perf_counter()
    dr = diameter(p.omega, p.a, p.V, gamma, gauge_budget=p.gauge_budget, rounds=p.rounds, seed=seed)
    rep.runtimes["D"] = time.perf_counter() - t
    rep.D = dr.D
    rep.bracketed = dr.bracketed
    rep.witness = None if dr.witness is None else dr.witness.to_dict()
    rep.extras["table"] = list(dr.table)
    return rep


def compute_essential(preset, gamma: float | None = None, seed: int = 0, h=None,
                      with_diameter: bool = True) -> BoundReport:
    """Persson sequence and exterior diameters over the preset radii."""
    p = _resolve(preset, h)
    gamma = p.gamma if gamma is None else gamma
    rep = BoundReport(p.name, gamma, p.lattice.to_dict())
    if not p.radii:
        return rep
    t = time.perf_counter()
    pl = persson_limit(p.persson_operator(), p.radii, seed=seed)
    rep.runtimes["lambda_inf"] = time.perf_counter() - t
    rep.lam_inf = pl.limit
    rep.extras["persson"] = pl.to_dict()
    if with_diameter:
        t = time.perf_counter()
        dl = diameter_limit(p.radii, p.omega, p.a, p.V, gamma, gauge_budget=p.gauge_budget,
                            rounds=p.rounds, seed=seed)
        rep.runtimes["D_inf"] = time.perf_counter() - t
        rep.D_inf = dl.limit
        rep.extras["exterior"] = dl.to_dict()
    return rep


def _two_sided_job(args):
    name, gamma, seed, h = args
    return compute_two_sided(name, gamma, seed, h)


def _essential_job(args):
    name, gamma, seed, h, with_diameter = args
    return compute_essential(name, gamma, seed, h, with_diameter)


def _run(fn, jobs_args, jobs):
    if jobs > 1 and len(jobs_args) > 1 and all(isinstance(a[0], str) for a in jobs_args):
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(fn, jobs_args))
    return [fn(a) for a in jobs_args]


def _interval_check(ratios: dict, label: str) -> tuple[Check, float | None]:
    finite = {k: v for k, v in ratios.items() if v is not None and 0 < v < np.inf}
    if not finite:
        return Check(label, True, "no finite ratios"), None
    C = max(max(v, 1.0 / v) for v in finite.values())
    return Check(label, C <= C_MAX, f"C_fit={C:.4g} over {len(finite)} ratios"), C


def _degenerate_checks(reports, lam_attr, D_attr, tag) -> list[Check]:
    out = []
    for r in reports:
        lam, D = getattr(r, lam_attr), getattr(r, D_attr)
        if lam is None or D is None:
            continue
        zero = lam <= ZERO_LAMBDA
        inf = np.isinf(D)
        ok = (zero == inf) and D > 0
        detail = f"lambda={lam:.6g}, D={D}"
        out.append(Check(f"{tag}:{r.preset}", ok, detail if ok else f"one-sided degeneracy: {detail}"))
    return out


def verify_two_sided(presets, gamma: float | None = None, seed: int = 0, jobs: int = 1, h=None) -> Summary:
    """``lambda`` against ``D`` across presets, with the family-wide interval and dilation checks."""
    reports = _run(_two_sided_job, [(p, gamma, seed, h) for p in presets], jobs)
    checks = _degenerate_checks(reports, "lam", "D", "degeneracy")
    chk, C = _interval_check({r.preset: r.ratio for r in reports}, "interval")
    checks.append(chk)
    fam = [r.ratio for r in reports if r.preset.startswith("const-") and r.ratio is not None]
    if len(fam) >= 2:
        spread = max(fam) / min(fam) - 1.0
        checks.append(Check("dilation-family", spread <= FAMILY_SPREAD, f"max/min - 1 = {spread:.4g}"))
    return Summary(reports, checks, C)


def verify_essential(presets, gamma: float | None = None, seed: int = 0, jobs: int = 1, h=None,
                     with_diameter: bool = True) -> Summary:
    """Persson limits against exterior diameters, with monotonicity and discreteness checks."""
    reports = _run(_essential_job, [(p, gamma, seed, h, with_diameter) for p in presets], jobs)
    checks = []
    for r in reports:
        if "persson" not in r.extras:
            continue
        pv = r.extras["persson"]
        checks.append(Check(f"persson-monotone:{r.preset}", pv["monotone"], str(pv["values"])))
        if "exterior" in r.extras:
            ex = r.extras["exterior"]
            checks.append(Check(f"exterior-monotone:{r.preset}", ex["monotone"], str(ex["D"])))
            Ds = [np.inf if v == "inf" else float(v) for v in ex["D"]]
            vals = [np.inf if v == "inf" else float(v) for v in pv["values"]]
            if len(Ds) >= 2 and all(b < a for a, b in zip(Ds, Ds[1:])) and Ds[-1] <= 0.5 * Ds[0]:
                grow = vals[-1] / vals[0] if vals[0] > 0 else np.inf
                checks.append(Check(f"discreteness:{r.preset}", grow >= DISCRETE_GROWTH,
                                    f"lambda growth x{grow:.3g} while D_R shrinks {Ds}"))
    if with_diameter:
        checks += _degenerate_checks([r for r in reports if r.D_inf is not None], "lam_inf", "D_inf",
                                     "degeneracy-inf")
        chk, C = _interval_check({r.preset: r.ratio_inf for r in reports}, "interval-inf")
        checks.append(chk)
    else:
        C = None
    return Summary(reports, checks, C)


def positivity_link(preset, d: float, gamma: float | None = None, C: float = C_MAX, seed: int = 0,
                    h=None, lam: float | None = None) -> dict:
    """``kappa`` from a full cube sweep against ``lambda``.

    The floor ``min(gamma / (C d^2), kappa / 4)`` uses the fitted interval
    constant ``C``; the link holds when ``kappa > 0`` exactly when
    ``lambda > 0`` and, if so, ``lambda`` clears the floor.
    """
    p = _resolve(preset, h)
    gamma = p.gamma if gamma is None else gamma
    cert = positivity_scan(d, p.omega, p.a, p.V, gamma, gauge_budget=p.gauge_budget, rounds=p.rounds, seed=seed)
    lam = bottom(p.operator(), seed=seed).lam if lam is None else lam
    kappa = cert.kappa
    positive = lam > ZERO_LAMBDA
    floor = min(gamma / (C * d * d), kappa / 4.0) if kappa > 0 else 0.0
    ok = (kappa > 0) == positive and (not positive or lam >= floor)
    return {"preset": p.name, "d": d, "kappa": json_number(kappa), "lambda": lam, "floor": floor,
            "certificate": cert.to_dict(), "passed": bool(ok)}


def replay_witness(preset, witness: dict, h=None) -> float:
    """Recompute ``int_{Q\\F} V_eff`` from a serialized carving witness."""
    p = _resolve(preset, h)
    cube = CubeWindow(p.lattice, tuple(witness["cube"]["lo"]), witness["cube"]["m"])
    data = cube_data(cube, p.a, p.V, p.omega)
    F = rle_decode(witness["F"]["runs"], witness["F"]["shape"])
    omega = gauge_from_dict(witness["gauge"], data)
    return effective_potential(omega, data, F).integral()


def document(command: str, config: dict, results: dict, passed: bool, timing: dict | None = None) -> dict:
    """Versioned report document; ``timestamp`` and ``timing`` are the only run-dependent keys."""
    return {"schema": SCHEMA, "command": command, "config": config, "results": results,
            "passed": bool(passed), "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
            "timing": timing or {}}


def strip_volatile(doc: dict) -> dict:
    return {k: v for k, v in doc.items() if k not in ("timestamp", "timing")}


def dumps(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, indent=2, allow_nan=False) + "\n"
