"""Ground-truth channel for the simulator: spatial indicator fields and upload rates."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .indicators import ChannelContext, compute_rsrq
from .mobility import Trajectory
from .power import NetworkPowerParams, analytic_tx_power, path_loss_from_rsrp

FIELDS = ("constant", "sinusoid", "hotspot")


@dataclass(frozen=True)
class ChannelModelConfig:
    """Spatial SINR field plus the payload-dependent rate model.

    The achievable rate maps SINR on ``[sinr_min, sinr_max]`` through a
    normalized logistic onto ``[r_floor, r_ceiling]`` MBit/s. An upload of
    ``P`` bytes then reaches ``r_max * P / (P + s_half)`` (TCP slow start
    penalizes small uploads) times lognormal noise of scale ``sigma``.
    """

    s_half: float = 1e6
    sigma: float = 0.2
    r_floor: float = 0.5
    r_ceiling: float = 18.0
    steepness: float = 8.0
    sinr_min: float = 0.0
    sinr_max: float = 30.0

    field: str = "sinusoid"
    sinr_mean: float = 15.0
    sinr_amplitude: float = 15.0
    period_m: float = 500.0
    sinr_base: float = 10.0
    sinr_peak: float = 32.0
    hotspot_spacing_m: float = 1500.0
    hotspot_width_m: float = 60.0
    sinr_noise_db: float = 0.0

    rsrp_offset: float = -115.0
    rsrp_slope: float = 1.5
    n_prb: int = 50
    speed: float = 15.0
    speed_jitter: float = 0.0

    def __post_init__(self):
        if self.field not in FIELDS:
            raise ValueError(f"unknown field {self.field!r}; choose from {FIELDS}")
        if not (self.s_half > 0 and self.sigma >= 0 and 0 < self.r_floor < self.r_ceiling):
            raise ValueError("invalid rate-model parameters")
        if not self.sinr_max > self.sinr_min:
            raise ValueError("sinr_max must exceed sinr_min")
        if self.speed <= 0 or self.speed_jitter < 0 or self.n_prb < 1:
            raise ValueError("invalid kinematics or n_prb")


# Sparse hotspots: one every 200 s of driving, longer than t_max, over a
# 10 dB floor with 3 dB fading. Rate noise is off so seeds differ only in
# fading and scheduling draws.
HOTSPOT_CHANNEL = ChannelModelConfig(field="hotspot", sigma=0.0, sinr_peak=28.0, hotspot_spacing_m=2000.0,
                                     hotspot_width_m=300.0, speed=10.0, sinr_noise_db=3.0)


def _unit_logistic(theta: float, k: float) -> float:
    lo = 1.0 / (1.0 + math.exp(k / 2))
    hi = 1.0 / (1.0 + math.exp(-k / 2))
    return (1.0 / (1.0 + math.exp(-k * (theta - 0.5))) - lo) / (hi - lo)


def max_rate(channel: ChannelModelConfig, sinr: float) -> float:
    """Saturation rate [MBit/s] for a very large upload at this SINR."""
    theta = (sinr - channel.sinr_min) / (channel.sinr_max - channel.sinr_min)
    theta = min(max(theta, 0.0), 1.0)
    return channel.r_floor + (channel.r_ceiling - channel.r_floor) * _unit_logistic(theta, channel.steepness)


def realize_rate(channel: ChannelModelConfig, context: ChannelContext, payload: float, rng) -> float:
    """Achieved upload rate [MBit/s]; draws one normal variate from ``rng``."""
    if not payload > 0:
        raise ValueError("payload must be positive")
    noise = rng.standard_normal()
    rate = max_rate(channel, context.sinr) * payload / (payload + channel.s_half)
    return rate * math.exp(channel.sigma * noise)


def sinr_field(channel: ChannelModelConfig, s):
    """Noise-free SINR [dB] at arc length ``s`` along the route."""
    s = np.asarray(s, dtype=np.float64)
    if channel.field == "constant":
        return np.full_like(s, channel.sinr_mean)
    if channel.field == "sinusoid":
        return channel.sinr_mean + channel.sinr_amplitude * np.sin(2 * np.pi * s / channel.period_m)
    spacing = channel.hotspot_spacing_m
    # hotspot centres sit at (k + 1/2) * spacing
    d = np.abs(np.mod(s, spacing) - spacing / 2)
    bump = np.exp(-0.5 * (d / channel.hotspot_width_m) ** 2)
    return channel.sinr_base + (channel.sinr_peak - channel.sinr_base) * bump


def indicators_for_sinr(channel: ChannelModelConfig, sinr: float) -> dict:
    """RSRP, RSRQ, RSSI and CQI consistent with a SINR value."""
    rsrp = channel.rsrp_offset + channel.rsrp_slope * sinr
    frac = min(max((sinr - channel.sinr_min) / (channel.sinr_max - channel.sinr_min), 0.0), 1.0)
    rsrq = -11.0 + 7.0 * frac
    rssi = 10.0 * math.log10(channel.n_prb) + rsrp - rsrq
    cqi = int(min(max(round(sinr / 2.0 + 1.0), 0), 15))
    return {"rsrp": rsrp, "rssi": rssi, "rsrq": compute_rsrq(channel.n_prb, rsrp, rssi), "cqi": cqi}


def default_route(length: float, leg: float = 400.0, lateral: float = 60.0) -> Trajectory:
    """Zig-zag route of at least ``length`` meters heading mostly north."""
    n = max(2, int(math.ceil(length / leg)) + 2)
    pts = [(i * leg, lateral if i % 2 else 0.0) for i in range(n)]
    return Trajectory(pts)


def synthetic_route(config: ChannelModelConfig, duration: float) -> Trajectory:
    """Route long enough for ``duration`` seconds of driving under ``config``."""
    return default_route(duration * (config.speed + 5.0 * config.speed_jitter) + 1000.0)


def generate_synthetic_trace(config: ChannelModelConfig, duration: float, route: Trajectory | None = None,
                             seed: int = 0, t_p: float = 1.0) -> list[ChannelContext]:
    """Drive along ``route`` and sample the indicator fields every ``t_p`` seconds.

    Samples cover ``t = 0, t_p, ..., >= duration``; identical seeds give
    identical traces.
    """
    if not duration > 0:
        raise ValueError("duration must be positive")
    if not t_p > 0:
        raise ValueError("t_p must be positive")
    rng = np.random.default_rng(seed)
    n = int(math.ceil(duration / t_p - 1e-9)) + 1
    times = np.arange(n) * t_p
    speeds = config.speed + config.speed_jitter * rng.standard_normal(n)
    speeds = np.maximum(speeds, 0.1)
    s = np.concatenate([[0.0], np.cumsum(speeds[:-1] * t_p)])
    if route is None:
        route = synthetic_route(config, duration)
    if s[-1] > route.length:
        raise ValueError(f"route ({route.length:.0f} m) shorter than the distance driven ({s[-1]:.0f} m)")
    sinr = sinr_field(config, s) + config.sinr_noise_db * rng.standard_normal(n)
    cum = route.cumulative_distance
    seg = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(route) - 2)

    out = []
    for k in range(n):
        pos, _ = route.point_at(float(s[k]))
        ind = indicators_for_sinr(config, float(sinr[k]))
        out.append(ChannelContext(
            timestamp=float(times[k]), rsrp=ind["rsrp"], rsrq=ind["rsrq"], sinr=float(sinr[k]),
            cqi=ind["cqi"], position=pos, velocity=float(speeds[k]), rssi=ind["rssi"],
            n_prb=config.n_prb, heading=route.heading_at(int(seg[k])),
        ))
    return out


def prbs_for_rate(config: ChannelModelConfig, rate: float) -> int:
    """Allocated PRBs, proportional to the achieved share of the peak rate."""
    return int(min(max(math.ceil(config.n_prb * rate / config.r_ceiling), 1), config.n_prb))


def upload_tx_power(config: ChannelModelConfig, network: NetworkPowerParams, ctx: ChannelContext,
                    rate: float, reference_tx_power: float = 18.0) -> float:
    """TX power [dBm] of an upload under open-loop power control."""
    pl = path_loss_from_rsrp(ctx.rsrp, reference_tx_power)
    return analytic_tx_power(network, prbs_for_rate(config, rate), pl)


def generate_labeled_samples(config: ChannelModelConfig, trace, seed: int = 0,
                             payload_range: tuple[float, float] = (5e4, 6e6),
                             network: NetworkPowerParams | None = None,
                             reference_tx_power: float = 18.0) -> list[ChannelContext]:
    """Attach random upload sizes, realized rates and TX powers to trace samples.

    Training data for the data-rate and TX-power predictors, drawn from the
    same channel the simulator uses.
    """
    network = network or NetworkPowerParams()
    rng = np.random.default_rng(seed)
    lo, hi = payload_range
    out = []
    for ctx in trace:
        payload = float(np.exp(rng.uniform(math.log(lo), math.log(hi))))
        rate = realize_rate(config, ctx, payload, rng)
        tx = upload_tx_power(config, network, ctx, rate, reference_tx_power)
        out.append(replace(ctx, payload=payload, datarate=rate, txpower=tx))
    return out

