"""Tracked functionals, runtime monitors, and blow-up detection.

Everything here consumes immutable fields/profiles and the shared shell
quadrature, so the p = 1 norm, the mass integral and the mean m(t) are
literally the same number.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import grids, massform, model
from .errors import DivergentIntegrand, EmptyInterval, InsufficientGrowth
from .model import ModelParams, RadialField

GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


def default_p_list(params: ModelParams) -> list[float]:
    """Norm exponents bracketing the p > N/2 threshold."""
    n = params.dim
    return [1.0, n / 2.0 + 0.5, float(n), 2.0 * n]


def lp_norm(u: RadialField, p: float, params: ModelParams) -> float:
    """L^p norm over the ball by shell quadrature; p >= 1."""
    if p < 1:
        raise ValueError("p must be >= 1")
    total = grids.omega_integral(u.grid, np.abs(u.values) ** p, params.dim)
    return float(total ** (1.0 / p))


def psi(u: RadialField, p: float, params: ModelParams) -> float:
    """Lyapunov-type functional: the p-th power of the L^p norm over p."""
    return lp_norm(u, p, params) ** p / p


def select_ab(params: ModelParams) -> tuple[float, float]:
    """Midpoint choice of the moment exponents (a, b).

    Quadratic source (k = 2, needs N >= 5): b midway in (2/(N-2), 1),
    a midway in (1, (N-2)(b+1)/N).  Subquadratic 1 < k < 2: a = b at the
    midpoint of (sqrt(k-1), min{1, (N-2)/2}).  Caller is responsible for
    blow-up eligibility; infeasible constraints raise EmptyInterval.
    """
    n = params.dim
    k = params.k
    if k == 2.0:
        lo = 2.0 / (n - 2.0)
        if lo >= 1.0:
            raise EmptyInterval(f"k = 2 needs N >= 5 (got N = {n})")
        b = 0.5 * (lo + 1.0)
        a = 0.5 * (1.0 + (n - 2.0) * (b + 1.0) / n)
        return a, b
    if 1.0 < k < 2.0:
        lo = np.sqrt(k - 1.0)
        hi = min(1.0, (n - 2.0) / 2.0)
        if lo >= hi:
            raise EmptyInterval(f"sqrt(k-1) = {lo:.4f} meets min(1, (N-2)/2) = {hi:.4f}")
        a = 0.5 * (lo + hi)
        return a, a
    raise EmptyInterval(f"no admissible pair for k = {k}")


def moment_functional(profile: massform.MassProfile, a: float, b: float) -> float:
    """Singular moment y = integral_0^{R^N} s^(-a) w^b ds.

    The first cell is integrated in closed form against the linear model
    w ~ w_s(0+) s, which tames the s^(-a) singularity; the rest is
    trapezoid in s.
    """
    if not 0.0 < b < 1.0:
        raise ValueError("b must lie in (0, 1)")
    if b - a <= -1.0:
        raise DivergentIntegrand(f"b - a = {b - a:.4f} <= -1: integral diverges near 0")
    s, w = profile.s, profile.w
    slope0 = w[1] / s[1]
    first = slope0**b * s[1] ** (b - a + 1.0) / (b - a + 1.0)
    integrand = s[1:] ** (-a) * w[1:] ** b
    rest = float(np.trapezoid(integrand, s[1:]))
    return first + rest


@dataclass(frozen=True)
class BlowupEstimate:
    t_est: float
    beta_fit: float
    residual: float
    confident: bool

    def to_dict(self) -> dict:
        return {
            "t_est": self.t_est,
            "beta_fit": self.beta_fit,
            "residual": self.residual,
            "confident": self.confident,
        }


def _power_fit_sse(tw: np.ndarray, logm: np.ndarray, t_candidate: float):
    x = np.log(t_candidate - tw)
    a_mat = np.vstack([np.ones_like(x), x]).T
    coef, *_ = np.linalg.lstsq(a_mat, logm, rcond=None)
    resid = logm - a_mat @ coef
    return float(resid @ resid), -float(coef[1])


def detect_blowup(
    series: "DiagnosticsSeries",
    *,
    growth_factor: float = 100.0,
    window_factor: float = 1000.0,
    min_rows: int = 8,
    span_decades: float = 2.0,
    rms_threshold: float = 0.05,
) -> BlowupEstimate:
    """Fit log max_u against log(T - t) over candidate singularity times T.

    The fit window is the terminal segment within window_factor of the
    peak value; the series must have grown by growth_factor overall and
    supply at least min_rows window rows, else InsufficientGrowth.
    Confidence requires a small RMS residual, a window spanning
    span_decades, an interior optimum, and the power-law model beating a
    pure exponential on the same window.
    """
    t = series.column("t")
    m = series.column("max_u")
    if len(t) < 2 or m[0] <= 0 or m.max() * (1.0 + 1e-9) < growth_factor * m[0]:
        raise InsufficientGrowth("sup norm never exceeded the growth factor")
    mask = m >= m.max() / window_factor
    if int(mask.sum()) < min_rows:
        raise InsufficientGrowth(f"only {int(mask.sum())} rows in the terminal window")
    tw, mw = t[mask], m[mask]
    span = tw[-1] - tw[0]
    if span <= 0:
        raise InsufficientGrowth("degenerate window")
    logm = np.log(mw)

    lo = tw[-1] + 1e-9 * span
    hi = tw[-1] + 10.0 * span
    a, b = lo, hi
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, _ = _power_fit_sse(tw, logm, c)
    fd, _ = _power_fit_sse(tw, logm, d)
    for _ in range(80):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc, _ = _power_fit_sse(tw, logm, c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd, _ = _power_fit_sse(tw, logm, d)
    t_best = 0.5 * (a + b)
    sse, beta = _power_fit_sse(tw, logm, t_best)
    rms = np.sqrt(sse / len(tw))

    # Model-selection guard: algebraic blow-up must beat pure exponential.
    a_exp = np.vstack([np.ones_like(tw), tw]).T
    coef, *_ = np.linalg.lstsq(a_exp, logm, rcond=None)
    resid = logm - a_exp @ coef
    rms_exp = np.sqrt(float(resid @ resid) / len(tw))

    decades = np.log10(mw[-1] / mw[0])
    interior = t_best < lo + 0.99 * (hi - lo)
    confident = bool(
        rms <= rms_threshold and decades + 1e-9 >= span_decades and rms < rms_exp and interior
    )
    return BlowupEstimate(float(t_best), float(beta), float(rms), confident)


@dataclass(frozen=True)
class DiagRow:
    t: float
    dt: float
    max_u: float
    l1: float
    lp: dict
    psi: dict
    mass_mean: float
    y_ab: float
    monotone_violation: float


def format_p(p: float) -> str:
    return str(int(p)) if float(p).is_integer() else repr(float(p))


@dataclass
class DiagnosticsSeries:
    p_list: list
    ab: tuple | None
    m_bar: float
    rows: list = field(default_factory=list)

    def header(self) -> list[str]:
        cols = ["t", "dt", "max_u", "l1"]
        cols += [f"lp_{format_p(p)}" for p in self.p_list]
        cols += [f"psi_{format_p(p)}" for p in self.p_list]
        cols += ["mass_mean", "y_ab", "monotone_violation"]
        return cols

    def column(self, name: str) -> np.ndarray:
        if name in ("t", "dt", "max_u", "l1", "mass_mean", "y_ab", "monotone_violation"):
            return np.array([getattr(row, name) for row in self.rows])
        kind, _, ptag = name.partition("_")
        p = float(ptag)
        store = "lp" if kind == "lp" else "psi"
        return np.array([getattr(row, store)[p] for row in self.rows])

    def row_values(self, row: DiagRow) -> list[float]:
        vals = [row.t, row.dt, row.max_u, row.l1]
        vals += [row.lp[p] for p in self.p_list]
        vals += [row.psi[p] for p in self.p_list]
        vals += [row.mass_mean, row.y_ab, row.monotone_violation]
        return vals

    def write_csv(self, handle):
        handle.write(",".join(self.header()) + "\n")
        for row in self.rows:
            handle.write(",".join(repr(float(v)) for v in self.row_values(row)) + "\n")


class Recorder:
    """Accumulates diagnostics rows from either solver's state."""

    def __init__(self, params: ModelParams, p_list: list[float] | None, m_bar: float):
        self.params = params
        self.p_list = list(p_list) if p_list is not None else default_p_list(params)
        self.m_bar = m_bar
        try:
            verdict = model.classify_regime(params)
            self.ab = select_ab(params) if verdict.verdict != model.GLOBAL_BOUNDED else None
        except EmptyInterval:
            self.ab = None
        self.rows: list[DiagRow] = []

    def record_field(self, t: float, dt: float, u: RadialField):
        self._record(t, dt, u, massform.transform_to_mass(u, self.params, t))

    def record_profile(self, t: float, dt: float, profile: massform.MassProfile):
        self._record(t, dt, massform.transform_from_mass(profile, self.params), profile)

    def _record(self, t, dt, u: RadialField, w: massform.MassProfile):
        lp = {p: lp_norm(u, p, self.params) for p in self.p_list}
        psi_vals = {p: lp[p] ** p / p for p in self.p_list}
        l1 = lp.get(1.0, lp_norm(u, 1.0, self.params))
        if self.ab is not None:
            try:
                y = moment_functional(w, *self.ab)
            except DivergentIntegrand:
                y = float("nan")
        else:
            y = float("nan")
        self.rows.append(
            DiagRow(
                t=float(t),
                dt=float(dt),
                max_u=u.max_value(),
                l1=l1,
                lp=lp,
                psi=psi_vals,
                mass_mean=l1 / self.params.volume,
                y_ab=y,
                monotone_violation=massform.check_monotone_bound(w),
            )
        )

    def build(self) -> DiagnosticsSeries:
        return DiagnosticsSeries(self.p_list, self.ab, self.m_bar, list(self.rows))
