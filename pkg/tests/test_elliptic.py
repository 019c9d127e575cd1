import numpy as np
import pytest

from fluxks import grids
from fluxks.elliptic import solve_potential
from fluxks.errors import NegativeInput
from fluxks.model import InitialDataSpec, ModelParams, RadialField, make_initial_data


def manufactured(params, amplitude=0.1):
    """Radial test potential v*(r) = A cos(pi r / R): zero-flux at both ends.

    Returns node evaluators for v*, v*_r and the matching density
    u = m - Lap(v*) for a chosen mean m that keeps u positive.
    """
    R = params.radius
    n = params.dim

    def v_star(r):
        return amplitude * np.cos(np.pi * r / R)

    def v_star_r(r):
        return -amplitude * np.pi / R * np.sin(np.pi * r / R)

    def laplacian(r):
        out = np.empty_like(r)
        core = r > 0
        rc = r[core]
        out[core] = -amplitude * (np.pi / R) ** 2 * np.cos(np.pi * rc / R) + (
            n - 1
        ) / rc * v_star_r(rc)
        out[~core] = -amplitude * n * (np.pi / R) ** 2
        return out

    mean = 1.0 + amplitude * n * (np.pi / R) ** 2  # keeps u > 0

    def density(r):
        return mean - laplacian(r)

    return v_star, v_star_r, density


def solve_error(params, nodes):
    v_star, v_star_r, density = manufactured(params)
    r = grids.graded_radii(params.radius, nodes, 2.0)
    u = RadialField(r, density(r))
    sol = solve_potential(u, params)
    exact = v_star(r)
    exact = exact - grids.omega_integral(r, exact, params.dim) / params.volume
    return float(np.abs(sol.v.values - exact).max()), sol, v_star_r(r)


@pytest.mark.parametrize("dim", [3, 5])
def test_manufactured_convergence(dim):
    params = ModelParams(dim=dim, radius=1.0)
    errs = [solve_error(params, n)[0] for n in (51, 101, 201)]
    rates = [np.log2(errs[i] / errs[i + 1]) for i in range(2)]
    assert min(rates) >= 1.9, (errs, rates)


def test_manufactured_vr_accuracy():
    params = ModelParams(dim=3, radius=1.0)
    _, sol, vr_exact = solve_error(params, 201)
    assert np.abs(sol.v_r.values - vr_exact).max() < 2e-4


def test_constant_density_gives_zero_potential():
    params = ModelParams(dim=4, radius=2.0)
    r = grids.graded_radii(2.0, 101, 1.5)
    sol = solve_potential(RadialField(r, np.full_like(r, 2.5)), params)
    assert np.abs(sol.v.values).max() < 1e-14
    assert np.abs(sol.v_r.values).max() < 1e-14


def test_zero_mean_enforced_random():
    rng = np.random.default_rng(42)
    params = ModelParams(dim=3, radius=1.0)
    r = grids.graded_radii(1.0, 151, 2.0)
    for _ in range(5):
        u = RadialField(r, rng.uniform(0.0, 3.0, size=r.size))
        sol = solve_potential(u, params)
        scale = max(np.abs(sol.v.values).max(), 1e-30)
        assert abs(sol.mean_residual) <= 1e-10 * scale
        assert sol.v_r.values[0] == 0.0
        assert abs(sol.v_r.values[-1]) <= 1e-12 * max(1.0, np.abs(sol.v_r.values).max())


def test_vr_matches_finite_difference_of_v():
    params = ModelParams(dim=3, radius=1.0)
    _, sol, _ = solve_error(params, 201)
    r = sol.v.grid
    v = sol.v.values
    fd = (v[2:] - v[:-2]) / (r[2:] - r[:-2])
    assert np.abs(fd - sol.v_r.values[1:-1]).max() < 5e-4


def test_sign_property_for_decreasing_density():
    params = ModelParams(dim=3, radius=1.0)
    r = grids.graded_radii(1.0, 201, 2.0)
    field = make_initial_data(InitialDataSpec("peaked-exponential", 1.0, 25.0), r, params)
    sol = solve_potential(field, params)
    assert np.all(sol.v_r.values <= 1e-14)


def test_negative_input_rejected():
    params = ModelParams()
    r = grids.graded_radii(1.0, 51, 1.5)
    vals = np.ones_like(r)
    vals[10] = -1e-6
    with pytest.raises(NegativeInput):
        solve_potential(RadialField(r, vals), params)
