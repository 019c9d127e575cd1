"""Time integration of the density equation in radial coordinates.

Conservative finite-volume discretization in the shell measure
r^(N-1) dr: diffusive flux r^(N-1) u_r and chemotactic flux
r^(N-1) u f(v_r^2) v_r are evaluated at cell faces (upwind for the
advective part), with zero flux at r = 0 and r = R.  Stepping is IMEX:
diffusion implicit through a tridiagonal solve, advection and source
explicit; the potential is re-solved after every accepted step.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from .elliptic import PotentialSolution, solve_potential
from .errors import ConfigError, FluxKSError, InconsistentCache, SolverFailure, StepTooSmall
from .model import ModelParams, RadialField, flux_limiter, mass_bound, source
from .stepping import DT_RECOVERY, GROWTH_LIMIT, StepperConfig, StopReason, horizon_reached
from . import grids

CLIP_FLOOR = 1e-12  # roundoff negativity must not feed u^k for fractional k


@dataclass(frozen=True)
class PrimalState:
    t: float
    u: RadialField
    potential: PotentialSolution
    dt: float
    # Field the potential was solved on; construct states via make_state.
    pot_source: RadialField | None = field(default=None, repr=False, compare=False)


def make_state(u: RadialField, params: ModelParams, t: float = 0.0, dt: float = 0.0) -> PrimalState:
    """State with a freshly solved potential for u."""
    return PrimalState(t, u, solve_potential(u, params), dt, pot_source=u)


def _check_cache(state: PrimalState):
    if state.pot_source is not state.u:
        raise InconsistentCache("potential was computed for a different field")


def _geometry(r: np.ndarray, dim: int):
    """Interior face positions/areas, node spacings, and FV cell volumes."""
    faces = 0.5 * (r[:-1] + r[1:])
    face_area = faces ** (dim - 1)
    h = np.diff(r)
    bounds = np.concatenate(([0.0], faces**dim, [r[-1] ** dim]))
    volumes = np.diff(bounds) / dim
    return faces, face_area, h, volumes


def _advective_speed(v_r: np.ndarray, params: ModelParams) -> np.ndarray:
    """Chemotactic velocity f(v_r^2) v_r at interior faces."""
    vr_face = 0.5 * (v_r[:-1] + v_r[1:])
    return flux_limiter(vr_face**2, params) * vr_face


def rhs_primal(state: PrimalState, params: ModelParams) -> RadialField:
    """du/dt for the current state (potential cache must be consistent)."""
    _check_cache(state)
    u = state.u.values
    r = state.u.grid
    _, face_area, h, volumes = _geometry(r, params.dim)

    diff_flux = face_area * np.diff(u) / h
    speed = _advective_speed(state.potential.v_r.values, params)
    upwind = np.where(speed > 0.0, u[:-1], u[1:])
    adv_flux = face_area * upwind * speed

    net = np.diff(np.concatenate(([0.0], diff_flux - adv_flux, [0.0]))) / volumes
    return RadialField(r, net + source(u, params))


def advance_fixed(u: np.ndarray, v_r: np.ndarray, r: np.ndarray, dt: float, params: ModelParams) -> np.ndarray:
    """One IMEX substep of fixed size dt; returns the clipped new field."""
    _, face_area, h, volumes = _geometry(r, params.dim)
    n = len(u)

    speed = _advective_speed(v_r, params)
    upwind = np.where(speed > 0.0, u[:-1], u[1:])
    adv = -np.diff(np.concatenate(([0.0], face_area * upwind * speed, [0.0]))) / volumes
    explicit = u + dt * (adv + source(u, params))

    # (I - dt*Ldiff) with zero-flux boundary faces; tridiagonal banded form.
    conduct = face_area / h
    ab = np.zeros((3, n))
    ab[1, :] = 1.0
    ab[1, :-1] += dt * conduct / volumes[:-1]
    ab[1, 1:] += dt * conduct / volumes[1:]
    ab[0, 1:] = -dt * conduct / volumes[:-1]
    ab[2, :-1] = -dt * conduct / volumes[1:]

    unew = solve_banded((1, 1), ab, explicit)
    # monotone splitting keeps undershoots within -CLIP_FLOOR (roundoff)
    np.clip(unew, 0.0, None, out=unew)
    return unew


def stability_dt(u: np.ndarray, v_r: np.ndarray, r: np.ndarray, params: ModelParams, cfl: float) -> float:
    """Explicit-part stability bound: face CFL plus a source-rate cap."""
    speed = np.abs(_advective_speed(v_r, params))
    h = np.diff(r)
    with np.errstate(divide="ignore"):
        dt_adv = float(np.min(np.where(speed > 0.0, h / np.where(speed > 0.0, speed, 1.0), np.inf)))
    umax = float(u.max())
    rate = params.lam + params.mu * params.k * umax ** (params.k - 1.0) if umax > 0 else params.lam
    return cfl * min(dt_adv, 1.0 / rate)


def step(state: PrimalState, config: StepperConfig, params: ModelParams) -> PrimalState:
    """One adaptive IMEX step; raises StepTooSmall below dt_min."""
    u = state.u.values
    r = state.u.grid
    v_r = state.potential.v_r.values

    dt = min(config.dt_max, stability_dt(u, v_r, r, params, config.cfl))
    if state.dt > 0.0:
        dt = min(dt, DT_RECOVERY * state.dt)
    remaining = config.t_end - state.t
    if 0.0 < remaining <= DT_RECOVERY * dt:
        dt = remaining
    if dt < config.dt_min:
        raise StepTooSmall(f"required dt {dt:.3e} below dt_min")

    scale = max(float(u.max()), 1e-300)
    while True:
        unew = advance_fixed(u, v_r, r, dt, params)
        if float(unew.max()) <= GROWTH_LIMIT * scale:
            break
        dt *= 0.5
        if dt < config.dt_min:
            raise StepTooSmall("growth limit drove dt below dt_min")

    return make_state(RadialField(r, unew), params, state.t + dt, dt)


def run_primal(
    u0: RadialField,
    config: StepperConfig,
    params: ModelParams,
    p_list: list[float] | None = None,
):
    """Advance from u0 until the horizon, suspected blow-up, or a stall.

    Returns (final_state, DiagnosticsSeries, StopReason).  Diagnostics
    are recorded at the configured cadence plus the initial and final
    states.  Errors other than StepTooSmall are re-raised as
    SolverFailure carrying the partial series.
    """
    from .diagnostics import Recorder  # deferred: avoids an import cycle

    if abs(u0.grid[-1] - params.radius) > 1e-12 * params.radius:
        raise ConfigError("field grid must end at the ball radius")
    m_bar = mass_bound(grids.omega_integral(u0.grid, u0.values, params.dim), params)
    u_stop = config.u_stop if config.u_stop is not None else 1e8 * max(u0.max_value(), 1e-300)

    state = make_state(u0, params)
    recorder = Recorder(params, p_list, m_bar)
    recorder.record_field(state.t, state.dt, state.u)

    steps = 0
    while True:
        if horizon_reached(state.t, config.t_end):
            reason = StopReason.HORIZON
            break
        if state.u.max_value() >= u_stop:
            reason = StopReason.BLOWUP_SUSPECTED
            break
        try:
            state = step(state, config, params)
        except StepTooSmall:
            reason = StopReason.STALLED
            break
        except FluxKSError as exc:
            raise SolverFailure(str(exc), series=recorder.build(), cause=exc) from exc
        steps += 1
        if steps % config.record_every == 0:
            recorder.record_field(state.t, state.dt, state.u)
        if steps >= config.max_steps:
            reason = StopReason.STALLED
            break

    if not recorder.rows or recorder.rows[-1].t != state.t:
        recorder.record_field(state.t, state.dt, state.u)
    return state, recorder.build(), reason
