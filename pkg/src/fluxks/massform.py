"""Solver for the scalar nonlocal equation in the mass-accumulation variable.

With s = r^N and w(s, t) the cumulative shell integral of the density up
to radius s^(1/N), the radial system collapses to

    w_t = N^2 s^(2-2/N) w_ss
        + N (w - m(t) s / N) w_s f(s^(2/N-2) (w - m(t) s / N)^2)
        + lam w - mu N^(k-1) integral_0^s w_s^k dsigma,

with w(0, t) = 0 pinned and the outer node advanced by the total-mass
ODE dw/dt = lam w - mu N^(k-1) integral_0^{R^N} w_s^k (mass is not
conserved under the logistic term, so the outer value is m(t) R^N / N
and moves in time).  Stepping mirrors the primal solver: the degenerate
diffusion term is implicit (tridiagonal), advection upwinded and
explicit together with the source and the nonlocal term, which is
accumulated by a single left-endpoint cumulative pass to match the
upwinding bias.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .errors import ConfigError, FluxKSError, NonMonotone, SolverFailure, StepTooSmall
from .model import ModelParams, RadialField, flux_limiter, mass_bound
from .stepping import DT_RECOVERY, GROWTH_LIMIT, StepperConfig, StopReason, horizon_reached
from . import grids

MONOTONE_TOL = -1e-10  # allowed decrement of w between adjacent nodes

# Cells with s_{j+1}/s_j above this are treated as unresolved core and
# slaved to the linear-in-s model (density constant there).  On grids
# graded in r the first s-cells have ratios ~2^(q*N), which makes the
# nonuniform stencils ill-conditioned; the closure removes them from
# the dynamics at O(s_core^(1+2/N)) model error.
CORE_RATIO_CAP = 2.0


@dataclass(frozen=True)
class MassProfile:
    """Cumulative mass w on an s-grid in [0, R^N]."""

    s: np.ndarray
    w: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        s = np.asarray(self.s, dtype=float)
        w = np.asarray(self.w, dtype=float)
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "w", w)
        if s.ndim != 1 or w.shape != s.shape:
            raise ConfigError("s and w must be 1-d arrays of equal length")
        if s[0] != 0.0 or np.any(np.diff(s) <= 0):
            raise ConfigError("s-grid must start at 0 and increase strictly")
        if w[0] != 0.0:
            raise ConfigError("w(0) must vanish")

    @property
    def n(self) -> int:
        return len(self.s)

    def with_w(self, w: np.ndarray, t: float) -> "MassProfile":
        return MassProfile(self.s, w, t)

    def mean_density(self, params: ModelParams) -> float:
        """Spatial mean m(t) = N w(R^N) / R^N read off the outer node."""
        return params.dim * float(self.w[-1]) / float(self.s[-1])


def transform_to_mass(u: RadialField, params: ModelParams, t: float = 0.0) -> MassProfile:
    """Cumulative shell quadrature of the density, mapped to s = r^N nodes."""
    w = grids.cumulative_shell_integral(u.grid, u.values, params.dim)
    return MassProfile(u.grid**params.dim, w, t)


def _require_monotone(w: np.ndarray):
    worst = float(np.diff(w).min()) if len(w) > 1 else 0.0
    if worst < MONOTONE_TOL:
        raise NonMonotone(f"w decreases by {worst:.3e}")


def transform_from_mass(profile: MassProfile, params: ModelParams) -> RadialField:
    """Density u = N w_s mapped back to r-nodes.

    Interior nodes use centered differences in s; the end nodes invert
    the trapezoid cell relation against the adjacent interior value,
    which keeps the round trip with transform_to_mass second order.
    """
    _require_monotone(profile.w)
    s, w = profile.s, profile.w
    n = params.dim
    u = np.empty_like(w)
    u[1:-1] = n * (w[2:] - w[:-2]) / (s[2:] - s[:-2])
    u[0] = 2.0 * n * (w[1] - w[0]) / (s[1] - s[0]) - u[1]
    u[-1] = 2.0 * n * (w[-1] - w[-2]) / (s[-1] - s[-2]) - u[-2]
    r = s ** (1.0 / n)
    r[0] = 0.0
    return RadialField(r, u)


def core_index(s: np.ndarray) -> int:
    """First node whose outward cell ratio is acceptable; nodes below it are slaved."""
    limit = max(1, len(s) // 8)
    j = 1
    while j < limit and s[j + 1] / s[j] > CORE_RATIO_CAP:
        j += 1
    return j


def _nodal_slopes(w: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Backward-biased w_s at nodes (forward at s = 0), matching upwinding."""
    ws = np.empty_like(w)
    ws[1:] = np.diff(w) / np.diff(s)
    ws[0] = ws[1]
    return ws


def _explicit_terms(w: np.ndarray, s: np.ndarray, params: ModelParams):
    """Advective, logistic and nonlocal contributions plus the outer-node ODE rate."""
    n = params.dim
    ds = np.diff(s)
    cell_slope = np.diff(w) / ds
    m = n * w[-1] / s[-1]
    excess = w - m * s / n

    back = _nodal_slopes(w, s)
    fwd = np.empty_like(w)
    fwd[:-1] = cell_slope
    fwd[-1] = back[-1]

    arg = np.zeros_like(w)
    arg[1:] = s[1:] ** (2.0 / n - 2.0) * excess[1:] ** 2
    # the term V*w_s transports the profile toward s = 0 when V > 0, so
    # the upwind side is the forward difference there
    speed = n * excess * flux_limiter(arg, params)
    ws_up = np.where(speed > 0.0, fwd, back)

    # left-cumulative cell quadrature of w_s^k, one pass, matching the
    # piecewise-constant cell slopes of the cumulative transform
    slopes_pos = np.clip(cell_slope, 0.0, None)
    nonlocal_cum = np.empty_like(w)
    nonlocal_cum[0] = 0.0
    np.cumsum(slopes_pos**params.k * ds, out=nonlocal_cum[1:])

    interior = speed * ws_up + params.lam * w - params.mu * n ** (params.k - 1.0) * nonlocal_cum
    boundary_rate = params.lam * w[-1] - params.mu * n ** (params.k - 1.0) * nonlocal_cum[-1]
    return interior, boundary_rate, speed, back


def _diffusion_weights(s: np.ndarray, dim: int):
    """Tridiagonal weights for the degenerate diffusion term N^2 s^(2-2/N) w_ss.

    The term equals the radial flux form r^(N-1) d/dr (N w_s) exactly;
    differencing the per-cell densities in the radial variable keeps the
    stencil conditioned on grids strongly graded in s.  Returns (lo, hi)
    so that the term at interior node j is
    lo_j (w_{j-1} - w_j) ... i.e.  lo_j*w_{j-1} - (lo_j+hi_j)*w_j + hi_j*w_{j+1}.
    """
    r = s ** (1.0 / dim)
    ds = np.diff(s)
    rc = 0.5 * (r[:-1] + r[1:])
    coef = dim * r[1:-1] ** (dim - 1) / (rc[1:] - rc[:-1])
    lo = coef / ds[:-1]
    hi = coef / ds[1:]
    return lo, hi


def rhs_mass(profile: MassProfile, params: ModelParams) -> np.ndarray:
    """dw/dt per node; w(0) pinned, outer node by the total-mass ODE.

    Core nodes below core_index follow the linear closure, so their rate
    is the scaled rate of the first resolved node.
    """
    _require_monotone(profile.w)
    w, s = profile.w, profile.s

    interior, boundary_rate, _, _ = _explicit_terms(w, s, params)

    lo, hi = _diffusion_weights(s, params.dim)
    diffusion = np.zeros_like(w)
    diffusion[1:-1] = lo * (w[:-2] - w[1:-1]) + hi * (w[2:] - w[1:-1])

    out = diffusion + interior
    out[0] = 0.0
    out[-1] = boundary_rate
    jc = core_index(s)
    out[1:jc] = s[1:jc] / s[jc] * out[jc]
    return out


def advance_fixed_mass(w: np.ndarray, s: np.ndarray, dt: float, params: ModelParams) -> np.ndarray:
    """One IMEX substep: implicit degenerate diffusion, explicit remainder."""
    npts = len(w)

    interior, boundary_rate, _, _ = _explicit_terms(w, s, params)
    explicit = w + dt * interior
    explicit[0] = 0.0
    explicit[-1] = w[-1] + dt * boundary_rate

    lo, hi = _diffusion_weights(s, params.dim)
    ab = np.zeros((3, npts))
    ab[1, :] = 1.0
    ab[1, 1:-1] += dt * (lo + hi)
    ab[0, 2:] = -dt * hi
    ab[2, :-2] = -dt * lo
    # rows 0 and npts-1 stay identity: pinned origin, explicit outer ODE
    ab[0, 1] = 0.0
    ab[2, -2] = 0.0

    # unresolved-core closure rows: w_j = (s_j/s_{j+1}) w_{j+1}
    jc = core_index(s)
    for j in range(1, jc):
        ab[1, j] = 1.0
        ab[0, j + 1] = -s[j] / s[j + 1]
        ab[2, j - 1] = 0.0
        explicit[j] = 0.0

    wnew = solve_banded((1, 1), ab, explicit)
    wnew[0] = 0.0  # re-pin: partial pivoting can smear roundoff into row 0
    wnew[-1] = explicit[-1]
    return wnew


def stability_dt_mass(w: np.ndarray, s: np.ndarray, params: ModelParams, cfl: float) -> float:
    """CFL bound from the advective speed plus a source-rate cap.

    Slaved core nodes take no explicit advection, so they do not
    constrain the step.
    """
    _, _, speed, back = _explicit_terms(w, s, params)
    ds = np.diff(s)
    jc = core_index(s)
    local = np.minimum(ds[jc - 1 : -1], ds[jc:])
    sp = np.abs(speed[jc:-1])
    with np.errstate(divide="ignore"):
        dt_adv = float(np.min(np.where(sp > 0.0, local / np.where(sp > 0.0, sp, 1.0), np.inf)))
    umax = params.dim * max(float(back.max()), 0.0)
    rate = params.lam + params.mu * params.k * umax ** (params.k - 1.0) if umax > 0 else params.lam
    return cfl * min(dt_adv, 1.0 / rate)


def step_mass(profile: MassProfile, prev_dt: float, config: StepperConfig, params: ModelParams):
    """One adaptive step; returns (new_profile, dt_used)."""
    w, s = profile.w, profile.s
    dt = min(config.dt_max, stability_dt_mass(w, s, params, config.cfl))
    if prev_dt > 0.0:
        dt = min(dt, DT_RECOVERY * prev_dt)
    remaining = config.t_end - profile.t
    if 0.0 < remaining <= DT_RECOVERY * dt:
        dt = remaining
    if dt < config.dt_min:
        raise StepTooSmall(f"required dt {dt:.3e} below dt_min")

    scale = max(params.dim * float(_nodal_slopes(w, s).max()), 1e-300)
    while True:
        wnew = advance_fixed_mass(w, s, dt, params)
        if params.dim * float(_nodal_slopes(wnew, s).max()) <= GROWTH_LIMIT * scale:
            break
        dt *= 0.5
        if dt < config.dt_min:
            raise StepTooSmall("growth limit drove dt below dt_min")
    return profile.with_w(wnew, profile.t + dt), dt


def run_mass(
    w0: MassProfile,
    config: StepperConfig,
    params: ModelParams,
    p_list: list[float] | None = None,
):
    """Advance the mass profile; same contract as run_primal.

    The blow-up proxy is the sup of N w_s over nodes (backward slopes).
    """
    from .diagnostics import Recorder  # deferred: avoids an import cycle

    if abs(w0.s[-1] - params.radius**params.dim) > 1e-10 * params.radius**params.dim:
        raise ConfigError("profile grid must end at R^N")
    m_bar = mass_bound(params.omega * float(w0.w[-1]), params)
    proxy0 = params.dim * float(_nodal_slopes(w0.w, w0.s).max())
    u_stop = config.u_stop if config.u_stop is not None else 1e8 * max(proxy0, 1e-300)

    profile = w0
    dt = 0.0
    recorder = Recorder(params, p_list, m_bar)
    recorder.record_profile(profile.t, dt, profile)

    steps = 0
    while True:
        if horizon_reached(profile.t, config.t_end):
            reason = StopReason.HORIZON
            break
        if params.dim * float(_nodal_slopes(profile.w, profile.s).max()) >= u_stop:
            reason = StopReason.BLOWUP_SUSPECTED
            break
        try:
            profile, dt = step_mass(profile, dt, config, params)
        except StepTooSmall:
            reason = StopReason.STALLED
            break
        except FluxKSError as exc:
            raise SolverFailure(str(exc), series=recorder.build(), cause=exc) from exc
        steps += 1
        if steps % config.record_every == 0:
            recorder.record_profile(profile.t, dt, profile)
        if steps >= config.max_steps:
            reason = StopReason.STALLED
            break

    if not recorder.rows or recorder.rows[-1].t != profile.t:
        recorder.record_profile(profile.t, dt, profile)
    return profile, recorder.build(), reason


def check_monotone_bound(profile: MassProfile) -> float:
    """Worst violation of the concavity bound w_s <= w/s over interior nodes.

    Uses centered slopes; at s -> 0 the quotient tends to w_s(0) so the
    origin contributes nothing.  Nonpositive up to grid tolerance is
    expected for profiles descending from radially nonincreasing data.
    """
    s, w = profile.s, profile.w
    if len(s) < 3:
        return 0.0
    ws = (w[2:] - w[:-2]) / (s[2:] - s[:-2])
    return float(np.max(ws - w[1:-1] / s[1:-1]))
