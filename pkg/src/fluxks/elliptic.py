"""Radial elliptic solve for the chemoattractant potential.

Solves 0 = Lap(v) - m + u on the ball with zero Neumann flux and zero
mean, where m is the spatial mean of u.  In radial coordinates the flux
r^(N-1) v_r has the exact integral representation

    r^(N-1) v_r(r) = m r^N / N - integral_0^r rho^(N-1) u(rho) drho,

which this module evaluates with the shared shell-measure quadrature.
v_r(R) = 0 then holds identically because m is computed from the same
cumulative integral; near r = 0 the quotient is regular because both
terms carry the exact r^N/N cell weight.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import grids
from .errors import NegativeInput
from .model import ModelParams, RadialField

NEGATIVE_FLOOR = -1e-12


@dataclass(frozen=True)
class PotentialSolution:
    v: RadialField
    v_r: RadialField
    mean_residual: float


def solve_potential(u: RadialField, params: ModelParams) -> PotentialSolution:
    """Potential and its radial derivative for a nonnegative density field."""
    vals = u.values
    if vals.min() < NEGATIVE_FLOOR:
        raise NegativeInput(f"density has negative nodes below {NEGATIVE_FLOOR}")
    vals = np.clip(vals, 0.0, None)
    r = u.grid
    n = params.dim

    cum = grids.cumulative_shell_integral(r, vals, n)
    mean = n * cum[-1] / r[-1] ** n

    v_r = np.zeros_like(vals)
    v_r[1:] = mean * r[1:] / n - cum[1:] / r[1:] ** (n - 1)

    v = np.empty_like(vals)
    v[0] = 0.0
    np.cumsum(0.5 * (v_r[:-1] + v_r[1:]) * np.diff(r), out=v[1:])
    v -= grids.omega_integral(r, v, n) / params.volume
    residual = grids.omega_integral(r, v, n) / params.volume

    return PotentialSolution(RadialField(r, v), RadialField(r, v_r), float(residual))
