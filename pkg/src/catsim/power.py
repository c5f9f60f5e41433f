"""Uplink power estimation: TX-power model, device curve and four-state dwell model."""

from __future__ import annotations

import configparser
import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple, Optional

from .predictor import RegressionModel, predict

TX_POWER_FLOOR = -40.0
CURVE_RANGE = (-10.0, 23.0)


class PowerState(enum.IntEnum):
    IDLE = 0
    LOW = 1
    HIGH = 2
    MAX = 3


@dataclass(frozen=True)
class NetworkPowerParams:
    p_max: float = 23.0
    p0: float = -100.0
    alpha_fpc: float = 1.0
    delta_mcs_table: Mapping[int, float] = field(default_factory=lambda: {i: 0.0 for i in range(29)})
    delta_closed_loop: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.p_max):
            raise ValueError("p_max must be finite")
        if not 0.0 <= self.alpha_fpc <= 1.0:
            raise ValueError("alpha_fpc must lie in [0, 1]")


def analytic_tx_power(params: NetworkPowerParams, m_prbs: int, path_loss: float, mcs: int = 0) -> float:
    """Open-loop LTE uplink power control, capped at ``p_max`` [dBm]."""
    if m_prbs < 1:
        raise ValueError("m_prbs must be >= 1")
    if path_loss < 0:
        raise ValueError("path_loss must be non-negative")
    try:
        delta_mcs = params.delta_mcs_table[mcs]
    except KeyError:
        raise KeyError(f"unknown MCS index {mcs}") from None
    p = (params.p0 + 10.0 * math.log10(m_prbs) + params.alpha_fpc * path_loss
         + delta_mcs + params.delta_closed_loop)
    return min(params.p_max, p)


def path_loss_from_rsrp(rsrp: float, reference_tx_power: float = 18.0) -> float:
    return max(reference_tx_power - rsrp, 0.0)


def predict_tx_power(model: RegressionModel, features, p_max: float = 23.0) -> float:
    """ML-estimated TX power clamped to ``[-40, p_max]`` dBm."""
    return min(max(predict(model, features), TX_POWER_FLOOR), p_max)


class Segment(NamedTuple):
    slope: float  # W per dB
    intercept: float  # W at 0 dBm

    def __call__(self, tx_dbm: float) -> float:
        return self.intercept + self.slope * tx_dbm


@dataclass(frozen=True)
class DeviceProfile:
    """Two-segment power curve split at the amplifier break point ``gamma_break``.

    ``high_upper`` is the TX power from which the device counts as operating
    at its cap (Max state). Defaults describe a synthetic device.
    """

    gamma_break: float = 10.0
    low_segment: Segment = Segment(0.01, 1.0)
    high_segment: Segment = Segment(0.08, 0.3)
    idle_power: float = 0.1
    high_upper: float = 22.0
    p_max: float = 23.0
    continuity_tolerance: float = 0.05
    name: str = "synthetic"

    def __post_init__(self):
        object.__setattr__(self, "low_segment", Segment(*self.low_segment))
        object.__setattr__(self, "high_segment", Segment(*self.high_segment))
        if self.idle_power < 0:
            raise ValueError("idle_power must be non-negative")
        if not self.gamma_break < self.high_upper <= self.p_max:
            raise ValueError("require gamma_break < high_upper <= p_max")
        if self.low_segment.slope < 0 or self.high_segment.slope < 0:
            raise ValueError("power curve must be non-decreasing")
        gap = abs(self.low_segment(self.gamma_break) - self.high_segment(self.gamma_break))
        if gap > self.continuity_tolerance:
            raise ValueError(f"curve discontinuous at break point by {gap:.3f} W")

    def curve(self, tx_dbm: float) -> float:
        """Device power [W] while transmitting at ``tx_dbm``."""
        seg = self.low_segment if tx_dbm <= self.gamma_break else self.high_segment
        return seg(tx_dbm)

    def representative_levels(self) -> dict[PowerState, float]:
        lo = CURVE_RANGE[0]
        return {
            PowerState.LOW: 0.5 * (lo + self.gamma_break),
            PowerState.HIGH: 0.5 * (self.gamma_break + self.high_upper),
            PowerState.MAX: self.p_max,
        }


def map_to_state(tx_power: float, profile: DeviceProfile, transmitting: bool) -> PowerState:
    if not transmitting:
        return PowerState.IDLE
    if tx_power <= profile.gamma_break:
        return PowerState.LOW
    if tx_power >= profile.high_upper:
        return PowerState.MAX
    return PowerState.HIGH


@dataclass(frozen=True)
class PowerStateDistribution:
    pi_idle: float
    pi_low: float
    pi_high: float
    pi_max: float

    def __post_init__(self):
        vals = self.as_tuple()
        if any(not 0.0 <= p <= 1.0 for p in vals):
            raise ValueError("state probabilities must lie in [0, 1]")
        if abs(math.fsum(vals) - 1.0) > 1e-9:
            raise ValueError("state probabilities must sum to 1")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.pi_idle, self.pi_low, self.pi_high, self.pi_max)

    def __getitem__(self, state: PowerState) -> float:
        return self.as_tuple()[int(state)]


def state_distribution(samples: Iterable[tuple[PowerState, float]]) -> PowerStateDistribution:
    """Dwell-time fraction per state from ``(state, seconds)`` pairs."""
    dwell = [0.0] * 4
    for state, seconds in samples:
        if seconds < 0:
            raise ValueError("dwell times must be non-negative")
        dwell[int(state)] += seconds
    total = math.fsum(dwell)
    if total <= 0:
        raise ValueError("total dwell time must be positive")
    return PowerStateDistribution(*(d / total for d in dwell))


def average_power(dist: PowerStateDistribution, profile: DeviceProfile,
                  representative_power: Optional[Mapping[PowerState, float]] = None) -> float:
    """Expected device power [W] under the state distribution."""
    levels = representative_power or profile.representative_levels()
    total = dist.pi_idle * profile.idle_power
    for state in (PowerState.LOW, PowerState.HIGH, PowerState.MAX):
        total += dist[state] * profile.curve(levels[state])
    return total


def read_device_profile(path) -> DeviceProfile:
    """Load a ``[device]`` section: gamma_break, low/high slope+intercept, idle_power, ..."""
    cp = configparser.ConfigParser()
    if not cp.read(path, encoding="utf-8"):
        raise FileNotFoundError(path)
    return device_profile_from_section(cp["device"])


def device_profile_from_section(sec) -> DeviceProfile:
    d = DeviceProfile()
    return DeviceProfile(
        gamma_break=sec.getfloat("gamma_break", d.gamma_break),
        low_segment=Segment(sec.getfloat("low_slope", d.low_segment.slope),
                            sec.getfloat("low_intercept", d.low_segment.intercept)),
        high_segment=Segment(sec.getfloat("high_slope", d.high_segment.slope),
                             sec.getfloat("high_intercept", d.high_segment.intercept)),
        idle_power=sec.getfloat("idle_power", d.idle_power),
        high_upper=sec.getfloat("high_upper", d.high_upper),
        p_max=sec.getfloat("p_max", d.p_max),
        continuity_tolerance=sec.getfloat("continuity_tolerance", d.continuity_tolerance),
        name=sec.get("name", d.name),
    )
