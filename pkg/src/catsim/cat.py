"""Channel-aware transmission (CAT): probabilistic transmit decisions."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple


class Cause(str, enum.Enum):
    BELOW_TMIN = "BELOW_TMIN"
    PROBABILISTIC = "PROBABILISTIC"
    FORCED_TMAX = "FORCED_TMAX"
    FORCED_PHIMAX = "FORCED_PHIMAX"
    PERIODIC = "PERIODIC"  # fixed-interval baseline, not produced by CAT


@dataclass(frozen=True)
class SchedulerTimers:
    t_min: float = 10.0
    t_max: float = 120.0
    t_p: float = 1.0

    def __post_init__(self):
        if not 0 < self.t_min < self.t_max:
            raise ValueError("timers require 0 < t_min < t_max")
        if not self.t_p > 0:
            raise ValueError("t_p must be positive")


class Assessment(NamedTuple):
    probability: float
    cause: Cause


@dataclass(frozen=True)
class Decision:
    probability: float
    transmit: bool
    cause: Cause

    def __post_init__(self):
        if self.cause is Cause.BELOW_TMIN and (self.probability != 0 or self.transmit):
            raise ValueError("BELOW_TMIN decisions never transmit")
        if self.cause in (Cause.FORCED_TMAX, Cause.FORCED_PHIMAX) and (
            self.probability != 1 or not self.transmit
        ):
            raise ValueError("forced decisions always transmit")


def cat_probability(theta: float, clamp_high: bool, delta_t: float,
                    timers: SchedulerTimers, alpha: float) -> Assessment:
    """Transmission probability for normalized metric ``theta``.

    ``delta_t == t_max`` still belongs to the probabilistic branch; the
    timeout wins over ``clamp_high`` when both apply.
    """
    return _probability(theta, clamp_high, delta_t, timers, alpha)


def _probability(theta, clamp_high, delta_t, timers, exponent) -> Assessment:
    if delta_t < 0:
        raise ValueError("delta_t must be non-negative")
    if delta_t <= timers.t_min:
        return Assessment(0.0, Cause.BELOW_TMIN)
    if delta_t > timers.t_max:
        return Assessment(1.0, Cause.FORCED_TMAX)
    if clamp_high:
        return Assessment(1.0, Cause.FORCED_PHIMAX)
    return Assessment(float(theta) ** exponent, Cause.PROBABILISTIC)


def draw(probability: float, rng) -> bool:
    """One Bernoulli trial from a numpy ``Generator``; always consumes one variate."""
    if not 0.0 <= probability <= 1.0:
        raise ValueError(f"probability outside [0, 1]: {probability}")
    return bool(rng.random() < probability)


def decide(assessment: Assessment, rng) -> Decision:
    return Decision(assessment.probability, draw(assessment.probability, rng), assessment.cause)
