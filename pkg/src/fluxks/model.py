"""Model data and analytic structure.

Holds the physical parameters, the gradient-dependent flux limiter and
the logistic source, the blow-up/boundedness regime classifier with its
thresholds, the a-priori mass bound, and construction of radially
nonincreasing initial data.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import grids
from .errors import ConfigError, InvalidRegime, NegativeProfile

BLOWUP_POSSIBLE = "BlowupPossible"
GLOBAL_BOUNDED = "GlobalBounded"
UNDETERMINED = "Undetermined"

PROFILES = ("constant", "peaked-power", "peaked-exponential")

# Additive floor keeping the peaked-power profile strictly positive and
# continuous; relative to the unit peak height before renormalization.
POWER_PROFILE_FLOOR = 1e-6


@dataclass(frozen=True)
class ModelParams:
    """Physical and analytic parameters.

    dim     space dimension N >= 3
    radius  ball radius R > 0
    k_f     flux-limiter amplitude
    alpha   limiter exponent
    lam     logistic growth rate
    mu      logistic decay rate
    k       logistic exponent, k > 1

    The chemotactic sensitivity is fixed to 1.
    """

    dim: int = 3
    radius: float = 1.0
    k_f: float = 1.0
    alpha: float = 0.1
    lam: float = 1.0
    mu: float = 1.0
    k: float = 1.5

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 3:
            raise ConfigError(f"dim must be an integer >= 3, got {self.dim}")
        for name in ("radius", "k_f", "alpha", "lam", "mu"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if self.k <= 1:
            raise ConfigError(f"k must exceed 1, got {self.k}")

    @property
    def omega(self) -> float:
        """Unit-sphere surface area in R^dim."""
        return grids.unit_sphere_area(self.dim)

    @property
    def volume(self) -> float:
        """Domain volume |Omega| = omega_N R^N / N."""
        return grids.ball_volume(self.dim, self.radius)

    @property
    def alpha_critical(self) -> float:
        """Critical limiter exponent (N-2)/(2(N-1))."""
        return (self.dim - 2) / (2.0 * (self.dim - 1))

    @property
    def k_blowup_cap(self) -> float:
        """Upper end min{2, 1+(N-2)^2/4} of the subquadratic blow-up range."""
        return min(2.0, 1.0 + (self.dim - 2) ** 2 / 4.0)


@dataclass(frozen=True)
class RadialField:
    """Values of a radial function on a node grid in [0, R]."""

    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "values", v)
        if g.ndim != 1 or v.shape != g.shape:
            raise ConfigError("grid and values must be 1-d arrays of equal length")
        if g[0] != 0.0:
            raise ConfigError("grid must start at r = 0")
        if np.any(np.diff(g) <= 0):
            raise ConfigError("grid must be strictly increasing")
        if not np.all(np.isfinite(v)):
            raise ConfigError("field values must be finite")

    @property
    def n(self) -> int:
        return len(self.grid)

    def max_value(self) -> float:
        return float(self.values.max())

    def with_values(self, values: np.ndarray) -> "RadialField":
        return RadialField(self.grid, values)


@dataclass(frozen=True)
class RegimeVerdict:
    """Classification outcome with the clause that fired and its thresholds."""

    verdict: str
    clause: str
    thresholds: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "clause": self.clause,
            "thresholds": dict(self.thresholds),
        }


@dataclass(frozen=True)
class InitialDataSpec:
    """Radially nonincreasing initial-data family."""

    profile: str = "peaked-exponential"
    m0: float = 1.0
    concentration: float = 16.0

    def __post_init__(self):
        if self.profile not in PROFILES:
            raise ConfigError(f"profile must be one of {PROFILES}, got {self.profile!r}")
        if self.m0 <= 0:
            raise ConfigError("m0 must be positive")
        if self.concentration <= 0:
            raise ConfigError("concentration must be positive")


def flux_limiter(grad_sq, params: ModelParams):
    """Gradient-dependent damping k_f (1 + |grad v|^2)^(-alpha); in (0, k_f]."""
    return params.k_f * (1.0 + grad_sq) ** (-params.alpha)


def source(u, params: ModelParams):
    """Logistic source lam*u - mu*u^k."""
    return params.lam * u - params.mu * u**params.k


def source_root(params: ModelParams) -> float:
    """Positive zero (lam/mu)^(1/(k-1)) of the source; the spatially uniform steady state."""
    return (params.lam / params.mu) ** (1.0 / (params.k - 1.0))


def source_max(params: ModelParams) -> float:
    """Maximum of the source over u >= 0, attained at (lam/(mu*k))^(1/(k-1)).

    Note source(source_root) = 0; the root is not the maximizer.  Bound
    computations use this true maximum.
    """
    u_star = (params.lam / (params.mu * params.k)) ** (1.0 / (params.k - 1.0))
    return float(source(u_star, params))


def mass_bound(u0_integral: float, params: ModelParams) -> float:
    """A-priori bound on the total mass integral, valid for all time."""
    if u0_integral <= 0:
        raise ConfigError("u0_integral must be positive")
    kk = params.k - 1.0
    logistic_cap = (params.lam / params.mu * params.volume**kk) ** (1.0 / kk)
    return max(float(u0_integral), float(logistic_cap))


def mu0_estimate(params: ModelParams, m_bar: float | None = None, resolution: int = 1000) -> float:
    """Largest admissible logistic decay in the critical quadratic case.

    Maximizes (a-1)*c1(a,b)/(4N) by grid search over a > 1,
    b in (2/(N-2), 1), a < (N-2)(b+1)/N, with
    c1 = min{N^2(1-b), a N k_f Cbar / (2(b+1))}.

    When no mass bound is supplied, the data-independent floor
    |Omega| (lam/mu)^(1/(k-1)) is used so the estimate depends on the
    parameters alone.
    """
    if params.dim < 5 or params.k != 2.0:
        raise InvalidRegime(f"requires dim >= 5 and k = 2, got dim={params.dim}, k={params.k}")
    n = params.dim
    if m_bar is None:
        m_bar = params.volume * source_root(params)
    c_bar = critical_damping(params, m_bar)
    frac = np.arange(1, resolution + 1) / (resolution + 1.0)
    b = 2.0 / (n - 2.0) + (1.0 - 2.0 / (n - 2.0)) * frac
    a_hi = (n - 2.0) * (b + 1.0) / n
    a = 1.0 + (a_hi[:, None] - 1.0) * frac[None, :]
    c1 = np.minimum(n**2 * (1.0 - b)[:, None], a * n * params.k_f * c_bar / (2.0 * (b[:, None] + 1.0)))
    return float(((a - 1.0) * c1 / (4.0 * n)).max())


def critical_damping(params: ModelParams, m_bar: float) -> float:
    """Worst-case limiter value Cbar = (1 + Mbar^2)^(-alpha) in the mass variable.

    Mbar^2 = 2 m_bar^2 R^(2N) / (N^2 |Omega|^2), from m(t) <= m_bar/|Omega|,
    w <= m(t) R^N / N and s <= R^N.
    """
    m2 = 2.0 * m_bar**2 * params.radius ** (2 * params.dim) / (params.dim**2 * params.volume**2)
    return (1.0 + m2) ** (-params.alpha)


def classify_regime(params: ModelParams, mu0_resolution: int = 1000) -> RegimeVerdict:
    """Decide blow-up eligibility versus guaranteed boundedness.

    Exactly one verdict is returned; Undetermined covers the critical
    exponent alpha = (N-2)/(2(N-1)) and the k-ranges no clause covers.
    The quadratic branch (k = 2) is matched at exact float equality.
    """
    a_crit = params.alpha_critical
    k_cap = params.k_blowup_cap
    thresholds = {"alpha_critical": a_crit, "k_blowup_cap": k_cap}

    if params.alpha > a_crit and params.k > 1.0:
        return RegimeVerdict(GLOBAL_BOUNDED, "large-alpha", thresholds)
    if params.k > 2.0:
        return RegimeVerdict(GLOBAL_BOUNDED, "superquadratic-source", thresholds)
    if params.alpha < a_crit:
        if 1.0 < params.k < k_cap:
            return RegimeVerdict(BLOWUP_POSSIBLE, "subcritical-k", thresholds)
        if params.k == 2.0 and params.dim >= 5:
            mu0 = mu0_estimate(params, resolution=mu0_resolution)
            thresholds["mu0"] = mu0
            if params.mu <= mu0:
                return RegimeVerdict(BLOWUP_POSSIBLE, "critical-k2-small-mu", thresholds)
            return RegimeVerdict(UNDETERMINED, "critical-k2-mu-above-mu0", thresholds)
        return RegimeVerdict(UNDETERMINED, "k-range-uncovered", thresholds)
    return RegimeVerdict(UNDETERMINED, "alpha-at-critical-threshold", thresholds)


def make_initial_data(spec: InitialDataSpec, grid: np.ndarray, params: ModelParams) -> RadialField:
    """Generate a nonnegative, radially nonincreasing field with mean m0.

    The profile is evaluated, rejected if negative anywhere, then
    rescaled multiplicatively so the discrete spatial mean equals m0
    (rescaling preserves monotonicity).
    """
    r = np.asarray(grid, dtype=float)
    if abs(r[-1] - params.radius) > 1e-12 * params.radius:
        raise ConfigError("grid must end at the ball radius")
    x = r / params.radius
    if spec.profile == "constant":
        base = np.ones_like(r)
    elif spec.profile == "peaked-power":
        base = np.clip(1.0 - x, 0.0, None) ** spec.concentration + POWER_PROFILE_FLOOR
    else:  # peaked-exponential
        base = np.exp(-spec.concentration * x**2)
    if base.min() < 0.0:
        raise NegativeProfile(f"profile {spec.profile!r} evaluated negative")
    mean = grids.spatial_mean(r, base, params.dim)
    return RadialField(r, base * (spec.m0 / mean))
