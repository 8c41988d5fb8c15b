import numpy as np
import pytest

from capbound.fibered import (
    BracketError,
    FiberedProblem,
    fiber_bottom,
    fibered_diameter,
    infimum_over_fibers,
    strip_operator,
)
from capbound.grid import Lattice
from capbound.spectrum import bottom


def _line(h=1 / 32, half=6.0):
    return Lattice.box((-half,), (half,), h)


@pytest.fixture(scope="module")
def shifted():
    return FiberedProblem.from_functions(_line(1 / 16), lambda x: x)


def test_shifted_oscillator_flat(shifted):
    lams = [fiber_bottom(shifted, mu) for mu in (-2.0, 0.0, 1.5)]
    np.testing.assert_allclose(lams, 1.0, rtol=0.01)
    assert np.ptp(lams) <= 1e-6


def test_free_fibre_is_mu_squared():
    p = FiberedProblem.from_functions(_line(), lambda x: 0 * x)
    base = fiber_bottom(p, 0.0)
    for mu in (0.5, 1.0, 3.0):
        assert fiber_bottom(p, mu) - base == pytest.approx(mu**2, rel=1e-10)


def test_oscillator_fibre():
    p = FiberedProblem.from_functions(_line(), lambda x: 0 * x, lambda x: x**2)
    for mu in (0.0, 1.0, 2.0):
        assert fiber_bottom(p, mu) == pytest.approx(mu**2 + 1, rel=1e-3)
    c = infimum_over_fibers(p)
    assert c.lam == pytest.approx(1.0, rel=1e-3)
    assert abs(c.mu_star) <= 1e-3


def test_infimum_shifted(shifted):
    c = infimum_over_fibers(shifted)
    assert c.lam == pytest.approx(1.0, rel=0.02)
    assert c.lam <= c.lams.min() + 1e-12


def test_fibre_values_nonnegative(shifted):
    c = infimum_over_fibers(shifted)
    assert np.all(c.lams >= 0)


def test_confining_growth():
    p = FiberedProblem.from_functions(_line(), lambda x: 0 * x, lambda x: x**2)
    c = infimum_over_fibers(p)
    assert c.lams[0] > 10 * c.lam and c.lams[-1] > 10 * c.lam


def test_bracket_error():
    p = FiberedProblem.from_functions(_line(), lambda x: 0 * x, mu_grid=np.linspace(1, 3, 8))
    with pytest.raises(BracketError, match="extend mu grid"):
        infimum_over_fibers(p)


def test_curve_csv(shifted):
    text = infimum_over_fibers(shifted).to_csv()
    rows = text.strip().splitlines()
    assert rows[0] == "mu,lambda_mu" and len(rows) == 65


def test_strip_agrees_with_fibres(shifted):
    c = infimum_over_fibers(shifted)
    r = bottom(strip_operator(shifted, 1.0))
    assert r.lam == pytest.approx(c.lam, rel=0.02)


def test_free_fibered_diameter_infinite():
    # a periodic fibre stands in for the whole line; Dirichlet walls would cap D
    lat = Lattice.box((-4.0,), (4.0,), 1 / 8, periodic=(True,))
    p = FiberedProblem.from_functions(lat, lambda x: 0 * x)
    fd = fibered_diameter(p, 0.5, mus=[-1.0, 0.0, 1.0])
    assert fd.D == np.inf


def test_fibered_diameter_scaling(shifted):
    mus = [-0.5, 0.0, 0.5]
    base = fibered_diameter(shifted, 0.5, mus=mus)
    s = 2.0
    sc = shifted.scaled(s)
    scaled = fibered_diameter(sc, 0.5, mus=[s * m for m in mus])
    assert np.isfinite(base.D)
    assert scaled.D == pytest.approx(base.D / s, rel=0.05)
    assert scaled.lam == pytest.approx(base.lam * s**2, rel=0.05)
    assert scaled.ratio == pytest.approx(base.ratio, rel=0.05)
