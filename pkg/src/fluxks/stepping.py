"""Shared time-stepping configuration and stop semantics."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .errors import ConfigError

# Accepted relative L-infinity growth per step; steps that exceed it are
# retried with a halved dt.
GROWTH_LIMIT = 1.1

# dt may grow at most this factor per accepted step.
DT_RECOVERY = 1.25


class StopReason(str, Enum):
    HORIZON = "Horizon"
    BLOWUP_SUSPECTED = "BlowupSuspected"
    STALLED = "Stalled"


@dataclass(frozen=True)
class StepperConfig:
    """Grid and step-control settings for a single run.

    u_stop is the absolute blow-up threshold on the sup norm; when None
    it is resolved at run start to 1e8 times the initial maximum.
    """

    nodes: int = 201
    grading: float = 1.5
    cfl: float = 0.4
    dt_min: float = 1e-12
    dt_max: float = 1e-2
    t_end: float = 1.0
    u_stop: float | None = None
    record_every: int = 1
    max_steps: int = 500_000

    def __post_init__(self):
        if not 0.0 < self.cfl < 1.0:
            raise ConfigError("cfl must lie in (0, 1)")
        if not 0.0 < self.dt_min < self.dt_max:
            raise ConfigError("need 0 < dt_min < dt_max")
        if self.u_stop is not None and self.u_stop <= 0:
            raise ConfigError("u_stop must be positive")
        if self.t_end < 0:
            raise ConfigError("t_end must be nonnegative")
        if self.nodes < 8:
            raise ConfigError("need at least 8 nodes")
        if self.grading < 1.0:
            raise ConfigError("grading exponent must be >= 1")
        if self.record_every < 1:
            raise ConfigError("record_every must be >= 1")


def horizon_reached(t: float, t_end: float) -> bool:
    return t >= t_end - 1e-9 * max(abs(t_end), 1.0)
