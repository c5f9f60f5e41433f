"""Metric specs, normalization into [0, 1] and cross-metric beta scaling."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple


@dataclass(frozen=True)
class MetricSpec:
    name: str
    phi_min: float
    phi_max: float
    alpha: float = 8.0
    beta: float = 0.5

    def __post_init__(self):
        if not self.phi_max > self.phi_min:
            raise ValueError(f"{self.name}: phi_max must exceed phi_min")
        if not self.alpha > 0:
            raise ValueError(f"{self.name}: alpha must be positive")
        if not self.beta >= 0:
            raise ValueError(f"{self.name}: beta must be non-negative")

    @property
    def span(self) -> float:
        return self.phi_max - self.phi_min

    def with_overrides(self, **kw) -> "MetricSpec":
        return replace(self, **kw)


# Reference parameterization of the five metrics. The M5T beta is the
# tabulated 1.0; scale_beta() on the M5T range gives M5T_BETA_FROM_SCALING.
DEFAULT_SPECS = {
    "RSRP": MetricSpec("RSRP", -120.0, -70.0, 8.0, 0.3),
    "RSRQ": MetricSpec("RSRQ", -11.0, -4.0, 8.0, 2.14),
    "SINR": MetricSpec("SINR", 0.0, 30.0, 8.0, 0.5),
    "CQI": MetricSpec("CQI", 2.0, 16.0, 8.0, 1.07),
    "M5T": MetricSpec("M5T", 0.0, 18.0, 8.0, 1.0),
}
M5T_BETA_TABULATED = 1.0
M5T_BETA_FROM_SCALING = 0.5 * 30.0 / 18.0


class Normalized(NamedTuple):
    theta: float
    clamped: bool
    at_max: bool  # phi >= phi_max: forced-transmission condition


def normalize(spec: MetricSpec, phi: float) -> Normalized:
    if not math.isfinite(phi):
        raise ValueError(f"metric value must be finite, got {phi}")
    if phi >= spec.phi_max:
        return Normalized(1.0, True, True)
    if phi <= spec.phi_min:
        return Normalized(0.0, phi < spec.phi_min, False)
    return Normalized((phi - spec.phi_min) / spec.span, False, False)


def scale_beta(target_spec: MetricSpec, sinr_spec: MetricSpec, sinr_beta: float) -> float:
    """Beta for ``target_spec`` giving the same weight per range as SINR."""
    return sinr_beta * sinr_spec.span / target_spec.span


def get_spec(name: str) -> MetricSpec:
    try:
        return DEFAULT_SPECS[name.upper()]
    except KeyError:
        raise KeyError(f"unknown metric {name!r}; known: {', '.join(DEFAULT_SPECS)}") from None
