import numpy as np
import pytest

from listflow.cli import report_cross_check
from listflow.geometry import build_cache
from listflow.grid import PeriodicGrid
from listflow.scenarios import default_grid, instantiate
from listflow.warped import assemble_warped, cross_check, fit_rate, generic_ricci, warped_ricci_closed_form


def _flat(g):
    h = np.zeros((2, 2) + g.shape)
    h[0, 0] = h[1, 1] = 1.0
    return h


def test_product_metric_for_zero_u(grid32):
    s = instantiate("coupled", grid32, amplitude=0.0)
    wm = assemble_warped(s.h, s.u, grid32)
    assert wm.g.shape == (3, 3, 32, 32, 8)
    assert np.all(wm.g[2, 2] == 1.0) and np.all(wm.g[:2, 2] == 0)
    assert np.array_equal(wm.g[:2, :2, ..., 3], s.h)


def test_constant_u_fiber_length(grid32):
    wm = assemble_warped(_flat(grid32), np.full(grid32.shape, 0.3), grid32)
    assert np.allclose(wm.g[2, 2], np.exp(0.6), rtol=1e-15)


def test_extract_roundtrip(grid32, rng):
    s = instantiate("coupled", grid32)
    h, u = assemble_warped(s.h, s.u, grid32).extract()
    assert np.array_equal(h, s.h) and np.array_equal(u, s.u)


def test_closed_form_flat_constant_u_is_zero(grid32):
    c = build_cache(_flat(grid32), np.full(grid32.shape, 0.3), grid32)
    base, fiber = warped_ricci_closed_form(c)
    assert np.all(base == 0) and np.all(fiber == 0)


def test_closed_form_fiber_flat_sine():
    g = PeriodicGrid.uniform(2, 64, 1.0)
    x, _ = g.coords()
    k = 2 * np.pi
    u = np.sin(k * x)
    c = build_cache(_flat(g), u, g)
    _, fiber = warped_ricci_closed_form(c)
    exact = -np.exp(2 * u) * (-k * k * u + k * k * np.cos(k * x) ** 2)
    assert np.max(np.abs(fiber - exact)) < 1e-2 * np.max(np.abs(exact))


def test_direct_product_matches_base_ricci(grid32):
    s = instantiate("coupled", grid32, amplitude=0.0)
    wm = assemble_warped(s.h, s.u, grid32)
    ric, _ = generic_ricci(wm)
    c = build_cache(s.h, s.u, grid32)
    for k in range(8):
        assert np.max(np.abs(ric[:2, :2, ..., k] - c.ricci)) < 1e-10
        assert np.max(np.abs(ric[2, :, ..., k])) < 1e-10


@pytest.mark.parametrize("scenario", ["flat_bump_u", "coupled"])
def test_cross_check_refines_at_stencil_order(scenario):
    reps = []
    for n in (32, 64):
        g = default_grid(scenario, n)
        s = instantiate(scenario, g)
        reps.append(cross_check(assemble_warped(s.h, s.u, g)))
    for block in ("base", "fiber", "scalar"):
        assert getattr(reps[0], block) / getattr(reps[1], block) >= 3.6, block
    for r in reps:
        assert r.mixed <= 1e-12 and r.fiber_variation <= 1e-12


def test_zero_u_ladder_is_exact():
    rep = report_cross_check("conformal_bump", resolutions=(16, 32))
    for row in rep["resolutions"]:
        assert row["fiber"] <= 1e-10 and row["mixed"] <= 1e-10
    assert rep["pass"]


def test_report_is_deterministic():
    a = report_cross_check("coupled", resolutions=(16, 32))
    b = report_cross_check("coupled", resolutions=(16, 32))
    assert a == b


def test_fit_rate():
    dx = [0.1, 0.05, 0.025]
    assert fit_rate(dx, [3 * d ** 2 for d in dx]) == pytest.approx(2.0)
    assert fit_rate(dx, [0.0, 0.0, 1e-3]) is None
