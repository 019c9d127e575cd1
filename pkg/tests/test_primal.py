import dataclasses

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from fluxks import grids
from fluxks.errors import InconsistentCache
from fluxks.model import InitialDataSpec, ModelParams, RadialField, make_initial_data, source
from fluxks.primal import advance_fixed, make_state, rhs_primal, run_primal, step
from fluxks.stepping import StepperConfig, StopReason


def peaked_setup(nodes=121, grading=1.5, conc=25.0, m0=1.0, **overrides):
    kwargs = dict(dim=3, radius=1.0, alpha=0.1, k=1.1, mu=0.1, lam=1.0)
    kwargs.update(overrides)
    params = ModelParams(**kwargs)
    r = grids.graded_radii(params.radius, nodes, grading)
    u0 = make_initial_data(InitialDataSpec("peaked-exponential", m0, conc), r, params)
    return params, r, u0


def cell_volumes(r, dim):
    faces = 0.5 * (r[:-1] + r[1:])
    bounds = np.concatenate(([0.0], faces**dim, [r[-1] ** dim]))
    return np.diff(bounds) / dim


def test_rhs_steady_state_is_zero():
    params = ModelParams(dim=3, lam=1.0, mu=1.0, k=2.0)
    r = grids.graded_radii(1.0, 101, 2.0)
    state = make_state(RadialField(r, np.ones_like(r)), params)
    assert np.abs(rhs_primal(state, params).values).max() < 1e-12


def test_rhs_constant_reduces_to_source():
    params = ModelParams(dim=3, lam=2.0, mu=0.5, k=1.5)
    r = grids.graded_radii(1.0, 81, 1.5)
    c = 1.7
    state = make_state(RadialField(r, np.full_like(r, c)), params)
    expected = source(c, params)
    assert np.allclose(rhs_primal(state, params).values, expected, rtol=1e-12, atol=1e-12)


def test_rhs_flux_telescoping():
    # oracle: the transport terms are face-flux differences, so their
    # volume-weighted sum telescopes to the boundary fluxes, which vanish
    params, r, u0 = peaked_setup()
    state = make_state(u0, params)
    rhs = rhs_primal(state, params).values
    vols = cell_volumes(r, params.dim)
    transported = float(np.sum(vols * (rhs - source(u0.values, params))))
    scale = float(np.sum(vols * np.abs(rhs)))
    assert abs(transported) <= 1e-10 * max(scale, 1e-30)


def test_rhs_rejects_stale_potential():
    params, r, u0 = peaked_setup()
    state = make_state(u0, params)
    stale = dataclasses.replace(state, u=RadialField(r, u0.values * 2.0))
    with pytest.raises(InconsistentCache):
        rhs_primal(stale, params)


def test_step_keeps_steady_state():
    params = ModelParams(dim=3, lam=1.0, mu=1.0, k=2.0)
    r = grids.graded_radii(1.0, 101, 2.0)
    state = make_state(RadialField(r, np.ones_like(r)), params)
    cfg = StepperConfig(nodes=101, t_end=1.0, dt_max=1e-2)
    new = step(state, cfg, params)
    assert np.abs(new.u.values - 1.0).max() < 1e-12


def test_step_temporal_order_one():
    # Richardson comparison on the fixed-dt kernel: halving dt should
    # roughly halve the error against a small-dt reference
    params, r, u0 = peaked_setup(nodes=81)
    state = make_state(u0, params)
    vr = state.potential.v_r.values

    def advance(dt, substeps):
        u = u0.values.copy()
        for _ in range(substeps):
            u = advance_fixed(u, vr, r, dt / substeps, params)
        return u

    dt = 2e-5
    ref = advance(dt, 64)
    e1 = np.abs(advance(dt, 1) - ref).max()
    e2 = np.abs(advance(dt, 2) - ref).max()
    ratio = e1 / e2
    assert 1.5 <= ratio <= 3.0, (e1, e2, ratio)


def test_step_exponential_growth_small_constant():
    # scalar ODE oracle: small constant data with negligible decay grows
    # like exp(lam dt) per step
    params = ModelParams(dim=3, lam=1.0, mu=1e-8, k=2.0)
    r = grids.graded_radii(1.0, 61, 1.5)
    state = make_state(RadialField(r, np.full_like(r, 1e-3)), params)
    cfg = StepperConfig(nodes=61, t_end=10.0, dt_max=1e-3)
    new = step(state, cfg, params)
    growth = new.u.values.max() / 1e-3
    assert growth == pytest.approx(np.exp(params.lam * new.dt), rel=1e-6)


def test_run_horizon_zero():
    params, r, u0 = peaked_setup()
    cfg = StepperConfig(nodes=121, t_end=0.0)
    state, series, reason = run_primal(u0, cfg, params)
    assert reason is StopReason.HORIZON
    assert len(series.rows) == 1
    assert state.t == 0.0


def test_run_bounded_regime():
    params, r, u0 = peaked_setup(alpha=0.4, k=1.5)
    cfg = StepperConfig(nodes=121, grading=1.5, t_end=0.5, dt_max=5e-3)
    state, series, reason = run_primal(u0, cfg, params)
    assert reason is StopReason.HORIZON
    assert series.column("max_u").max() <= 10.0 * u0.max_value()
    assert np.all(np.diff(series.column("t")) > 0)


def test_run_blowup_regime():
    params, r, u0 = peaked_setup(conc=400.0, m0=5.0, nodes=161, grading=2.0)
    cfg = StepperConfig(nodes=161, grading=2.0, t_end=10.0, dt_max=1e-3, u_stop=1e4 * u0.max_value())
    state, series, reason = run_primal(u0, cfg, params)
    assert reason is StopReason.BLOWUP_SUSPECTED
    assert state.u.max_value() >= 1e4 * u0.max_value()


def test_run_mass_dynamics_follow_logistic_ode():
    # for spatially constant data the transport terms vanish and the
    # total mass follows the logistic ODE; oracle is an adaptive integrator
    params = ModelParams(dim=3, lam=1.2, mu=0.8, k=1.7)
    r = grids.graded_radii(1.0, 81, 1.5)
    u0 = RadialField(r, np.full_like(r, 0.3))
    cfg = StepperConfig(nodes=81, t_end=0.5, dt_max=2e-3)
    state, series, reason = run_primal(u0, cfg, params)
    mass0 = grids.omega_integral(r, u0.values, 3)

    sol = solve_ivp(
        lambda t, z: params.lam * z - params.mu * params.volume ** (1 - params.k) * z[0] ** params.k,
        (0.0, state.t),
        [mass0],
        rtol=1e-10,
        atol=1e-12,
    )
    assert series.column("l1")[-1] == pytest.approx(sol.y[0][-1], rel=2e-3)


def test_mass_rate_equals_source_integral_along_run():
    # flux-form property for non-constant data: the change of the
    # cell-summed mass equals the time integral of the summed source
    # (transport telescopes exactly), up to time-integration error
    params, r, u0 = peaked_setup(conc=16.0)
    cfg = StepperConfig(nodes=121, t_end=0.1, dt_max=5e-4)

    vols = cell_volumes(r, params.dim)

    def fv_sum(values):
        return float(np.sum(vols * values))

    state = make_state(u0, params)
    mass = fv_sum(state.u.values)
    source_acc = 0.0
    while state.t < cfg.t_end:
        g_before = fv_sum(source(state.u.values, params))
        state = step(state, cfg, params)
        source_acc += g_before * state.dt
    mass_end = fv_sum(state.u.values)
    # the splitting applies the source at the old state, so the
    # left-endpoint accumulation matches up to solve/clip roundoff
    assert mass_end - mass == pytest.approx(source_acc, rel=1e-8)


def test_run_mass_bound_monitor():
    params, r, u0 = peaked_setup(conc=25.0)
    cfg = StepperConfig(nodes=121, t_end=0.3, dt_max=2e-3)
    _, series, _ = run_primal(u0, cfg, params)
    assert series.column("l1").max() <= series.m_bar * (1.0 + 1e-6)


def test_run_positivity_and_monotone_fraction():
    params, r, u0 = peaked_setup(conc=100.0, m0=2.0)
    cfg = StepperConfig(nodes=121, t_end=0.05, dt_max=1e-3)
    state, _, _ = run_primal(u0, cfg, params)
    assert state.u.values.min() >= 0.0
    diffs = np.diff(state.u.values)
    violating = np.sum(diffs > 1e-12 * max(state.u.max_value(), 1.0))
    assert violating / len(diffs) < 1e-3
