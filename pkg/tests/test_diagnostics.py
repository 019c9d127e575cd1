import math

import numpy as np
import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from fluxks import grids
from fluxks.diagnostics import (
    DiagnosticsSeries,
    DiagRow,
    detect_blowup,
    lp_norm,
    moment_functional,
    psi,
    select_ab,
)
from fluxks.errors import DivergentIntegrand, EmptyInterval, InsufficientGrowth
from fluxks.massform import MassProfile, transform_to_mass
from fluxks.model import InitialDataSpec, ModelParams, RadialField, make_initial_data
from fluxks.primal import run_primal
from fluxks.stepping import StepperConfig


def series_from(ts, vals):
    rows = [
        DiagRow(t=float(t), dt=0.0, max_u=float(v), l1=0.0, lp={}, psi={}, mass_mean=0.0, y_ab=0.0, monotone_violation=0.0)
        for t, v in zip(ts, vals)
    ]
    return DiagnosticsSeries([], None, 1.0, rows)


def test_lp_norm_constant():
    params = ModelParams(dim=3, radius=1.0)
    r = grids.graded_radii(1.0, 201, 1.5)
    u = RadialField(r, np.full_like(r, 2.0))
    for p in (1.0, 2.0, 3.5):
        assert lp_norm(u, p, params) == pytest.approx(2.0 * params.volume ** (1 / p), rel=1e-12)


def test_lp_norm_against_symbolic_oracle():
    # oracle: omega_3 * integral_0^R (1 - r/R)^2 r^2 dr via sympy
    rr, RR = sympy.symbols("r R", positive=True)
    exact = sympy.integrate((1 - rr / RR) ** 2 * rr**2, (rr, 0, RR))
    assert sympy.simplify(exact - RR**3 / 30) == 0
    params = ModelParams(dim=3, radius=1.0)
    r = np.linspace(0.0, 1.0, 4001)
    u = RadialField(r, 1.0 - r)
    expected = grids.unit_sphere_area(3) * float(exact.subs(RR, 1))
    assert lp_norm(u, 2.0, params) ** 2 == pytest.approx(expected, rel=1e-6)


def test_l1_equals_mass_quadrature():
    params = ModelParams(dim=3, radius=1.0)
    r = grids.graded_radii(1.0, 101, 2.0)
    rng = np.random.default_rng(3)
    u = RadialField(r, rng.uniform(0.0, 2.0, r.size))
    assert lp_norm(u, 1.0, params) == pytest.approx(grids.omega_integral(r, u.values, 3), rel=1e-14)


def test_psi_consistency():
    params = ModelParams(dim=3, radius=1.0)
    r = grids.graded_radii(1.0, 101, 2.0)
    u = RadialField(r, np.exp(-4 * r**2))
    for p in (1.5, 2.0, 6.0):
        assert psi(u, p, params) == lp_norm(u, p, params) ** p / p


def test_select_ab_examples():
    a, b = select_ab(ModelParams(dim=5, k=2.0, alpha=0.1))
    assert b == pytest.approx(5.0 / 6.0)
    assert a == pytest.approx(1.05)
    a2, b2 = select_ab(ModelParams(dim=3, k=1.04, alpha=0.1))
    assert a2 == b2 == pytest.approx(0.35)
    with pytest.raises(EmptyInterval):
        select_ab(ModelParams(dim=4, k=2.0, alpha=0.1))
    with pytest.raises(EmptyInterval):
        select_ab(ModelParams(dim=3, k=2.5, alpha=0.1))


@given(dim=st.integers(3, 8), k=st.floats(1.01, 1.99))
@settings(max_examples=80)
def test_select_ab_satisfies_constraints(dim, k):
    params = ModelParams(dim=dim, k=k, alpha=0.05)
    try:
        a, b = select_ab(params)
    except EmptyInterval:
        assert math.sqrt(k - 1) >= min(1.0, (dim - 2) / 2.0)
        return
    assert 0.0 < b < 1.0
    assert 0.0 < a < (dim - 2) / dim * (b + 1.0)
    assert b - a > -1.0


def test_moment_functional_linear_profile():
    s = np.linspace(0.0, 1.0, 2001) ** 2
    prof = MassProfile(s, s.copy())
    assert moment_functional(prof, 0.5, 0.5) == pytest.approx(1.0, rel=1e-10)
    # general closed form 1/(b - a + 1)
    for a, b in ((0.3, 0.6), (0.9, 0.5), (1.2, 0.8)):
        assert moment_functional(prof, a, b) == pytest.approx(1.0 / (b - a + 1.0), rel=1e-4)


def test_moment_functional_divergence_guard():
    s = np.linspace(0.0, 1.0, 101) ** 2
    prof = MassProfile(s, s.copy())
    with pytest.raises(DivergentIntegrand):
        moment_functional(prof, 1.9, 0.5)


def test_moment_functional_grid_refinement():
    params = ModelParams(dim=3, radius=1.0, alpha=0.1, k=1.1, mu=0.1)
    a, b = select_ab(params)
    vals = []
    for nodes in (201, 401):
        r = grids.graded_radii(1.0, nodes, 2.0)
        u0 = make_initial_data(InitialDataSpec("peaked-exponential", 2.0, 49.0), r, params)
        vals.append(moment_functional(transform_to_mass(u0, params), a, b))
    assert vals[0] == pytest.approx(vals[1], rel=1e-3)


def test_detect_blowup_synthetic_power_law():
    ts = np.linspace(0.9, 0.99, 10)
    est = detect_blowup(series_from(ts, (1.0 - ts) ** -2))
    assert est.t_est == pytest.approx(1.0, abs=0.01)
    assert est.beta_fit == pytest.approx(2.0, abs=0.05)
    assert est.confident


def test_detect_blowup_bounded_series():
    ts = np.linspace(0.0, 1.0, 30)
    with pytest.raises(InsufficientGrowth):
        detect_blowup(series_from(ts, 1.0 + ts))


def test_detect_blowup_exponential_not_confident():
    ts = np.linspace(0.0, 1.0, 50)
    est = detect_blowup(series_from(ts, np.exp(10.0 * ts)))
    assert not est.confident


def test_detect_blowup_needs_rows():
    ts = np.linspace(0.9, 0.99, 5)
    with pytest.raises(InsufficientGrowth):
        detect_blowup(series_from(ts, (1.0 - ts) ** -2))


def test_moment_column_grows_in_blowup_run():
    params = ModelParams(dim=3, radius=1.0, alpha=0.1, k=1.1, mu=0.1, lam=1.0)
    r = grids.graded_radii(1.0, 161, 2.0)
    u0 = make_initial_data(InitialDataSpec("peaked-exponential", 5.0, 400.0), r, params)
    cfg = StepperConfig(nodes=161, grading=2.0, t_end=10.0, dt_max=1e-3, u_stop=1e4 * u0.max_value())
    _, series, _ = run_primal(u0, cfg, params)
    y = series.column("y_ab")
    assert np.isfinite(y).all()
    assert y[-1] >= y[0]


def test_moment_column_nan_when_no_admissible_pair():
    # four dimensions with k = 2: no admissible exponents, column stays NaN
    params = ModelParams(dim=4, radius=1.0, alpha=0.1, k=2.0, mu=0.5, lam=1.0)
    r = grids.graded_radii(1.0, 101, 1.5)
    u0 = make_initial_data(InitialDataSpec("peaked-exponential", 1.0, 16.0), r, params)
    _, series, _ = run_primal(u0, StepperConfig(nodes=101, t_end=0.01, dt_max=1e-3), params)
    assert np.isnan(series.column("y_ab")).all()
    assert series.ab is None


def test_series_csv_round_trip(tmp_path):
    params = ModelParams(dim=3, radius=1.0, alpha=0.4, k=1.5)
    r = grids.graded_radii(1.0, 61, 1.5)
    u0 = make_initial_data(InitialDataSpec("constant", 1.0, 1.0), r, params)
    cfg = StepperConfig(nodes=61, t_end=0.01, dt_max=1e-3)
    _, series, _ = run_primal(u0, cfg, params)
    path = tmp_path / "series.csv"
    with open(path, "w") as handle:
        series.write_csv(handle)
    data = np.genfromtxt(path, delimiter=",", names=True)
    assert data["t"].size == len(series.rows)
    assert set(data.dtype.names) >= {"t", "dt", "max_u", "l1", "mass_mean"}
