import numpy as np
import pytest

from listflow.geometry import build_cache
from listflow.grid import PeriodicGrid
from listflow.scenarios import SCENARIOS, conformal_factor, default_grid, instantiate


@pytest.mark.parametrize("name", sorted(SCENARIOS))
def test_every_preset_instantiates(name):
    g = default_grid(name, 16)
    s = instantiate(name, g, t0=0.25)
    assert s.t == 0.25 and s.u.shape == g.shape


@pytest.mark.parametrize("dim", [2, 3])
def test_fixed_point_has_zero_curvature(dim):
    g = PeriodicGrid.uniform(dim, 8)
    s = instantiate("fixed_point", g)
    c = build_cache(s.h, s.u, g)
    assert np.all(c.ricci == 0) and np.all(c.grad_u_norm_sq == 0)


def test_zero_amplitude_bump_is_fixed_point(grid32):
    a = instantiate("flat_bump_u", grid32, amplitude=0.0)
    b = instantiate("fixed_point", grid32)
    assert np.array_equal(a.h, b.h) and np.array_equal(a.u, b.u)


def test_conformal_bump_curvature():
    g = PeriodicGrid.uniform(2, 64)
    s = instantiate("conformal_bump", g)
    phi = conformal_factor(g)
    x, _ = g.coords()
    lap_phi = -0.3 * (2 * np.pi / g.periods[0]) ** 2 * np.cos(2 * np.pi * x / g.periods[0])
    c = build_cache(s.h, s.u, g)
    exact = -2 * np.exp(-2 * phi) * lap_phi
    assert np.max(np.abs(c.scalar_curv - exact)) < 2e-3 * np.max(np.abs(exact))


def test_bad_requests():
    with pytest.raises(ValueError):
        instantiate("nope", PeriodicGrid.uniform(2, 8))
    with pytest.raises(ValueError):
        instantiate("conformal_bump", PeriodicGrid.uniform(3, 8))
