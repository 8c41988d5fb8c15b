import numpy as np
import pytest

from capbound.gauge import (
    GaugeError,
    _angle_form,
    _PhaseSystem,
    constant_gauge,
    cube_data,
    edge_weights,
    effective_potential,
    gauge_from_dict,
    magnetic_energy,
    optimize_gauge,
    polynomial_gauge,
    sample_polynomial_gauges,
)
from capbound.grid import CubeWindow, Lattice, ScalarField, VectorField, gradient
from conftest import smooth_chi


@pytest.fixture(scope="module")
def ab_setup():
    h = 1 / 32
    lat = Lattice.box((0, 0), (1, 1), h)
    cube = CubeWindow(lat, (0, 0), 32)
    X, Y = lat.mesh()
    base = VectorField.from_phase(lat, np.arctan2(Y - 0.5, X - 0.5), 1.0)
    F = cube.nodes((X - 0.5) ** 2 + (Y - 0.5) ** 2 <= 0.2**2)
    return lat, cube, base, F


def _flux_energy(ab_setup, alpha):
    lat, cube, base, F = ab_setup
    data = cube_data(cube, base * (alpha / (2 * np.pi)), None)
    return optimize_gauge(data, F), data


def test_constant_gauge_gives_a_squared_plus_v(unit_square):
    lat, cube = unit_square
    a = VectorField.from_function(lat, lambda x, y: (y, 0.5 * np.ones_like(x)))
    X, _ = lat.mesh()
    V = ScalarField(lat, 1 + X)
    data = cube_data(cube, a, V)
    ep = effective_potential(constant_gauge(cube), data, np.zeros(cube.shape, bool))
    # interior node: average of |a_e|^2 over four incident edges plus V
    i, j = 10, 12
    ax, ay = data.a
    avg = (ax[i - 1, j] ** 2 + ax[i, j] ** 2 + ay[i, j - 1] ** 2 + ay[i, j] ** 2) / 2
    assert ep.values[i, j] == pytest.approx(avg + data.V[i, j], rel=1e-12)


def test_zero_field_zero_potential(unit_square):
    lat, cube = unit_square
    data = cube_data(cube, None, None)
    g = optimize_gauge(data, np.zeros(cube.shape, bool))
    assert g.energy == 0.0
    assert effective_potential(g, data, np.zeros(cube.shape, bool)).integral() == 0.0


@pytest.mark.parametrize("seed", range(3))
def test_exact_field_removed(unit_square, seed):
    lat, cube = unit_square
    a = gradient(ScalarField(lat, smooth_chi(lat, seed)))
    data = cube_data(cube, a, None)
    g = optimize_gauge(data, np.zeros(cube.shape, bool))
    total = sum(float(np.sum(c**2)) for c in data.a) * lat.h**2
    assert g.energy <= 1e-6 * total


@pytest.mark.parametrize("seed", range(5))
def test_gauge_covariance(ab_setup, seed):
    lat, cube, base, F = ab_setup
    a = base * 0.3
    g0 = optimize_gauge(cube_data(cube, a, None), F)
    shifted = a + gradient(ScalarField(lat, smooth_chi(lat, seed)))
    g1 = optimize_gauge(cube_data(cube, shifted, None), F)
    assert g1.energy == pytest.approx(g0.energy, rel=1e-6)
    assert g1.winding == g0.winding


def test_stationarity(ab_setup):
    lat, cube, base, F = ab_setup
    g, data = _flux_energy(ab_setup, 1.0)
    region = ~F
    vol = cube.node_volumes()
    pg = g.phase_gradient(region)
    rng = np.random.default_rng(0)
    delta = rng.normal(size=cube.shape)
    dg = [np.diff(delta, axis=j) / cube.h for j in range(2)]
    eps = 1e-4

    def E(s):
        return magnetic_energy([p + s * d for p, d in zip(pg, dg)], data.a, region, vol, cube.h)

    # the first variation vanishes up to the CG tolerance; the second is O(eps^2)
    first = (E(eps) - E(-eps)) / (2 * eps)
    second = (E(eps) + E(-eps) - 2 * E(0)) / eps**2
    assert abs(first) <= 1e-5 * np.sqrt(E(0) * second)


@pytest.mark.parametrize("alpha,expected", [(0.3, 0), (np.pi / 2, 0), (np.pi, 0), (2 * np.pi - 0.3, -1)])
def test_winding_rule(ab_setup, alpha, expected):
    g, _ = _flux_energy(ab_setup, alpha)
    assert g.winding == (expected,)


def test_winding_energy_law(ab_setup):
    e = {al: _flux_energy(ab_setup, al)[0].energy for al in (0.3, np.pi / 2, np.pi, 2 * np.pi - 0.3)}
    W = e[np.pi / 2] / (np.pi / 2) ** 2 * (2 * np.pi) ** 2
    for al, en in e.items():
        dist = min(abs(al - 2 * np.pi * k) for k in range(-1, 3))
        assert en == pytest.approx(dist**2 * W / (2 * np.pi) ** 2, rel=0.02)


def _sector_energy(data, F, g, m):
    cube, h = data.cube, data.h
    region = ~F
    vol = cube.node_volumes()
    masks, weights = edge_weights(region, vol)
    forms = _angle_form(cube.shape, g.hole_points[0], h)
    b = [np.where(em, aj + m * np.nan_to_num(fj), 0.0) for aj, fj, em in zip(data.a, forms, masks)]
    phi = _PhaseSystem(region, masks, weights, h).solve(b)
    pg = [np.diff(phi, axis=j) / h for j in range(2)]
    return magnetic_energy(pg, b, region, vol, h)


@pytest.mark.parametrize("alpha", [0.3, np.pi, 2 * np.pi - 0.3])
def test_winding_local_optimality(ab_setup, alpha):
    lat, cube, base, F = ab_setup
    g, data = _flux_energy(ab_setup, alpha)
    m = g.winding[0]
    e = _sector_energy(data, F, g, m)
    assert e == pytest.approx(g.energy, rel=1e-8)
    assert _sector_energy(data, F, g, m + 1) >= e * (1 - 1e-12)
    assert _sector_energy(data, F, g, m - 1) >= e * (1 - 1e-12)


def test_flux_pi_symmetric_pair(ab_setup):
    g, data = _flux_energy(ab_setup, np.pi)
    lat, cube, base, F = ab_setup
    e0 = _sector_energy(data, F, g, 0)
    assert _sector_energy(data, F, g, -1) / e0 == pytest.approx(1.0, rel=1e-3)
    assert _sector_energy(data, F, g, 1) / e0 == pytest.approx(9.0, rel=1e-2)


def test_circulation_quantised(ab_setup):
    for alpha in (0.3, 2 * np.pi - 0.3):
        g, _ = _flux_energy(ab_setup, alpha)
        assert g.circulations[0] == pytest.approx(alpha, abs=1e-6)


def test_hole_limit():
    lat = Lattice.box((0, 0), (1, 1), 1 / 64)
    cube = CubeWindow(lat, (0, 0), 64)
    F = np.zeros(cube.shape, bool)
    F[2:-2:3, 2:-2:3] = True  # many isolated holes
    with pytest.raises(GaugeError):
        optimize_gauge(cube_data(cube, None, None), F)


def test_polynomial_constant_is_trivial(unit_square):
    lat, cube = unit_square
    g = polynomial_gauge(cube, [1.0], [(0, 0)])
    assert not g.zero_cells.any()
    a = VectorField.from_function(lat, lambda x, y: (y, x))
    data = cube_data(cube, a, None)
    F = np.zeros(cube.shape, bool)
    ref = effective_potential(constant_gauge(cube), data, F)
    np.testing.assert_allclose(effective_potential(g, data, F).values, ref.values, rtol=1e-12)


def test_polynomial_single_zero_winds_once(unit_square):
    lat, cube = unit_square
    g = polynomial_gauge(cube, [-(0.11 + 0.07j), 1.0, 1j], [(0, 0), (1, 0), (0, 1)])
    assert g.zero_cells.sum() == 1
    gx, gy = g.phase_gradient()
    h = cube.h
    loop = (gx[:, 0].sum() + gy[-1, :].sum() - gx[:, -1].sum() - gy[0, :].sum()) * h
    assert loop == pytest.approx(2 * np.pi, abs=1e-3)


def test_polynomial_zero_gives_infinite_integral(unit_square):
    lat, cube = unit_square
    g = polynomial_gauge(cube, [-(0.11 + 0.07j), 1.0, 1j], [(0, 0), (1, 0), (0, 1)])
    data = cube_data(cube, None, None)
    ep = effective_potential(g, data, np.zeros(cube.shape, bool))
    assert ep.integral() == np.inf
    assert np.isfinite(effective_potential(g, data, g.singular_nodes()).integral())


def test_polynomial_sampling_deterministic(unit_square):
    lat, cube = unit_square
    a = sample_polynomial_gauges(cube, 3, 7)
    b = sample_polynomial_gauges(cube, 3, 7)
    assert [g.to_dict() for g in a] == [g.to_dict() for g in b]


def test_gauge_roundtrip(ab_setup):
    g, data = _flux_energy(ab_setup, 2.0)
    lat, cube, base, F = ab_setup
    g2 = gauge_from_dict(g.to_dict(), data)
    i1 = effective_potential(g, data, F).integral()
    i2 = effective_potential(g2, data, F).integral()
    assert i2 == pytest.approx(i1, rel=1e-9)
