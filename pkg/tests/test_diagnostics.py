import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from listflow.diagnostics import (
    DiagnosticsMonitor, DiagnosticsRecord, check_F_monotone, check_grad_identity_residual,
    check_hessian_inequality, check_monotone_quantity, check_thm1_decay, check_typeIII_monitors, make_record,
    resolve_mu, thm1_bound,
)
from listflow.flow import FlowConfig, run, step
from listflow.geometry import build_cache
from listflow.grid import PeriodicGrid, gradient, hessian
from listflow.scenarios import instantiate


def _rec(t, **kw):
    base = dict(t=t, sup_grad_u_sq=0.0, sup_hess_u_sq=0.0, sup_ric=0.0, sup_rm=0.0, osc_u=0.0, sup_F=0.0,
                sup_F1=0.0, t_sup_rm=0.0, t_sup_hess=0.0, t_sup_grad=0.0, mono_Q=0.0,
                residual_grad_identity=0.0, thm1_decay_ok=True, mono_ok=True, F_monotone_ok=True,
                hess_ineq_ok=True)
    base.update(kw)
    return DiagnosticsRecord(**base)


def _state(name, n=32, **kw):
    return instantiate(name, PeriodicGrid.uniform(2, n), **kw)


def test_record_field_order():
    assert DiagnosticsRecord.field_names()[:3] == ["t", "sup_grad_u_sq", "sup_hess_u_sq"]
    assert _rec(2.0, sup_rm=1.0, sup_hess_u_sq=2.0, sup_grad_u_sq=3.0).typeIII_monitor == 12.0


def test_resolve_mu():
    assert resolve_mu("auto", 1.0, 2.0, 10.0) == 60.0
    assert resolve_mu(3.5, 1.0, 2.0, 10.0) == 3.5


def test_fixed_point_record_all_zero():
    s = _state("fixed_point")
    rec = make_record(s, build_cache(s.h, s.u, s.grid), FlowConfig())
    d = rec.as_dict()
    assert all(d[k] == 0 for k in d if not k.endswith("_ok"))
    assert rec.all_ok


def test_constant_u_monotone_quantity_is_c_squared():
    s = _state("conformal_bump")
    s = type(s)(0.0, s.h, np.full(s.grid.shape, 0.7), s.grid)
    res = run(s, FlowConfig(t_end=0.05, output_every=5))
    assert all(r.mono_Q == pytest.approx(0.49, rel=1e-15) for r in res.records)
    assert all(r.sup_F == 0 and r.sup_grad_u_sq == 0 for r in res.records)
    assert check_monotone_quantity(res.records)
    assert res.flags_ok


def test_records_match_full_rescan():
    """Sup-quantities against an oracle built from per-node matrix algebra."""
    s = _state("coupled")
    res = run(s, FlowConfig(t_end=0.05, output_every=10 ** 6))
    fs = res.final_state
    rec = res.records[-1]
    g = fs.grid
    hn = np.moveaxis(fs.h, (0, 1), (-2, -1))
    inv = np.linalg.inv(hn)
    dh = np.moveaxis(gradient(fs.h, g), (0, 1, 2), (-3, -2, -1))  # [..., l, i, j] = d_l h_ij
    # first kind Gamma_{l ij} = (d_i h_jl + d_j h_il - d_l h_ij) / 2
    first = 0.5 * (np.einsum("...ijl->...lij", dh) + np.einsum("...jil->...lij", dh) - dh)
    gamma = np.einsum("...kl,...lij->...kij", inv, first)
    du = np.moveaxis(gradient(fs.u, g), 0, -1)
    hess = np.moveaxis(hessian(fs.u, g), (0, 1), (-2, -1)) - np.einsum("...kij,...k->...ij", gamma, du)
    grad_sq = np.einsum("...i,...ij,...j->...", du, inv, du)
    hess_sq = np.einsum("...ij,...jk,...kl,...li->...", inv, hess, inv, hess)
    assert rec.sup_grad_u_sq == pytest.approx(grad_sq.max(), rel=1e-10)
    assert rec.sup_hess_u_sq == pytest.approx(hess_sq.max(), rel=1e-10)
    assert rec.osc_u == fs.u.max() - fs.u.min()
    assert rec.mono_Q == pytest.approx(np.max(0.05 * grad_sq + fs.u ** 2), rel=1e-10)


def test_thm1_decay_checker():
    m0 = 0.8
    series = [_rec(t, sup_grad_u_sq=thm1_bound(m0, t, 0.0)) for t in np.linspace(0, 2, 21)]
    assert all(check_thm1_decay(series, m0, 0.0, tol=0.0))
    bad = series[:5] + [_rec(0.5, sup_grad_u_sq=1.1 * thm1_bound(m0, 0.5, 0.0))]
    assert check_thm1_decay(bad, m0, 0.0, tol=0.05)[-1] is False
    zeros = [_rec(t) for t in (0.0, 1.0)]
    assert all(check_thm1_decay(zeros, 0.0, 0.0))
    with pytest.raises(ValueError):
        check_thm1_decay([_rec(0.0), _rec(1.0, sup_grad_u_sq=0.1)], 0.0, 0.0)


def test_monotone_quantity_checker():
    good = [_rec(t, mono_Q=1.0 - 0.1 * t) for t in range(5)]
    assert check_monotone_quantity(good)
    assert not check_monotone_quantity(good + [_rec(5, mono_Q=0.9)])
    with pytest.raises(ValueError):
        check_monotone_quantity(good[:1])


def test_F_monotone_checker():
    recs = [_rec(t, sup_F=2.0 - 0.1 * t, sup_rm=0.1, sup_grad_u_sq=0.1) for t in range(5)]
    assert check_F_monotone(recs, mu=4.0, c_est=10.0).status == "pass"
    assert check_F_monotone(recs, mu=1.0, c_est=10.0).status == "inconclusive"
    up = recs + [_rec(5, sup_F=3.0, sup_rm=0.1, sup_grad_u_sq=0.1)]
    res = check_F_monotone(up, mu=4.0, c_est=10.0)
    assert res.status == "fail" and res.first_violation == 5 and not res.ok


def test_typeIII_checker():
    flat = [_rec(t, sup_rm=1.0 / t) for t in np.linspace(0.1, 2, 20)]
    assert check_typeIII_monitors(flat).bounded
    growing = [_rec(t, sup_rm=1.0) for t in np.linspace(0.1, 2, 20)]
    out = check_typeIII_monitors(growing)
    assert not out.bounded and out.slope == pytest.approx(1.0)
    with pytest.raises(ValueError):
        check_typeIII_monitors([_rec(0.0)])
    zero = [_rec(t) for t in (0.1, 0.2)]
    assert check_typeIII_monitors(zero).max_monitor == 0 and check_typeIII_monitors(zero).bounded


def test_fixed_point_residual_and_hessian_check():
    s = _state("fixed_point")
    c0 = build_cache(s.h, s.u, s.grid)
    s1 = step(s, FlowConfig(), dt=0.01)
    c1 = build_cache(s1.h, s1.u, s1.grid)
    assert check_grad_identity_residual(c0, c1, 0.01) == 0
    assert check_hessian_inequality(c0, c1, 0.01)


def test_constant_u_residual_vanishes():
    s = _state("conformal_bump")
    cfg = FlowConfig()
    c0 = build_cache(s.h, s.u, s.grid)
    s1 = step(s, cfg, dt=1e-3)
    c1 = build_cache(s1.h, s1.u, s1.grid)
    assert check_grad_identity_residual(c0, c1, 1e-3, deturck=True) == 0
    assert check_hessian_inequality(c0, c1, 1e-3, deturck=True)


def _residual_after(n, t_end, **cfg):
    s = _state("flat_bump_u", n)
    config = FlowConfig(t_end=t_end, output_every=10 ** 6, **cfg)
    mid = run(s, config).final_state
    c0 = build_cache(mid.h, mid.u, mid.grid)
    dt = FlowConfig(**cfg).cfl * mid.grid.spacings[0] ** 2 / 4 if "dt" not in cfg else cfg["dt"]
    nxt = step(mid, config, dt=dt, cache=c0)
    return check_grad_identity_residual(c0, build_cache(nxt.h, nxt.u, nxt.grid), dt,
                                        deturck=config.deturck,
                                        evolve_metric=config.evolve_metric, couple_u=config.couple_u)


@pytest.mark.parametrize("cfg", [dict(), dict(evolve_metric=False), dict(couple_u=False)])
def test_residual_variants_converge(cfg):
    r32 = _residual_after(32, 0.05, **cfg)
    r64 = _residual_after(64, 0.05, **cfg)
    assert r32 / r64 >= 3.2


def test_frozen_metric_heat_flow_properties():
    s = _state("flat_bump_u")
    res = run(s, FlowConfig(t_end=3.0, evolve_metric=False, output_every=50))
    assert check_monotone_quantity(res.records)
    assert res.flags_ok
    # t sup|du|^2 eventually decays: exponential decay beats 1/t
    mons = [r.t_sup_grad for r in res.records]
    assert mons[-1] < 0.5 * max(mons)


def test_pure_ricci_constant_u_has_zero_F():
    s = _state("conformal_bump")
    res = run(s, FlowConfig(t_end=0.1, couple_u=False, output_every=5))
    assert all(r.sup_F == 0 and r.sup_hess_u_sq == 0 for r in res.records)
    assert res.flags_ok


def test_flat_bump_short_run_flags():
    s = _state("flat_bump_u", t0=0.1)
    res = run(s, FlowConfig(t0=0.1, t_end=1.1, output_every=25))
    assert res.flags_ok
    assert all(check_thm1_decay(res.records, res.monitor.m0, 0.1))
    assert check_F_monotone(res.records, res.monitor.mu).status == "pass"
    assert check_typeIII_monitors(res.records).bounded


def test_monitor_roundtrip_dict():
    s = _state("coupled")
    res = run(s, FlowConfig(t_end=0.01))
    mon = DiagnosticsMonitor.from_dict(res.monitor.to_dict())
    assert mon == res.monitor


@settings(max_examples=30, deadline=None)
@given(m0=st.floats(1e-3, 1e3), t0=st.floats(0, 5), dts=st.lists(st.floats(0, 10), min_size=1, max_size=10))
def test_comparison_solution_passes_its_own_check(m0, t0, dts):
    ts = t0 + np.cumsum([0.0] + dts)
    recs = [_rec(t, sup_grad_u_sq=thm1_bound(m0, t, t0)) for t in ts]
    assert all(check_thm1_decay(recs, m0, t0, tol=0.0))
    vals = [r.sup_grad_u_sq for r in recs]
    assert all(b <= a for a, b in zip(vals, vals[1:]))
