"""Discrete-time scenario engine: sensing, buffering, scheduling, uploads and KPIs."""

from __future__ import annotations

import csv
import enum
import io
import json
import math
from collections import deque
from dataclasses import asdict, dataclass, fields
from typing import Callable, Optional, Sequence

import numpy as np

from .cat import Cause, SchedulerTimers, cat_probability, draw
from .channel import ChannelModelConfig, realize_rate, upload_tx_power
from .connmap import ConnectivityMap, pfr
from .indicators import ChannelContext
from .metric import DEFAULT_SPECS, MetricSpec, normalize
from .mobility import DEFAULT_SNAP_RADIUS, Trajectory, predict_along_trajectory
from .pcat import pcat_exponent_factor, pcat_probability, predict_context
from .power import (DeviceProfile, NetworkPowerParams, PowerState, average_power,
                    map_to_state, predict_tx_power, state_distribution)
from .predictor import FeatureVector, RegressionModel, predict

EPS = 1e-9


class Scheme(str, enum.Enum):
    PERIODIC = "PERIODIC"
    CAT = "CAT"
    PCAT = "PCAT"
    ML_CAT = "ML_CAT"
    ML_PCAT = "ML_PCAT"

    @property
    def predictive(self) -> bool:
        return self in (Scheme.PCAT, Scheme.ML_PCAT)

    @property
    def learned(self) -> bool:
        return self in (Scheme.ML_CAT, Scheme.ML_PCAT)


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class ScenarioConfig:
    """One simulation cell. Defaults reproduce the reference scenario."""

    scheme: Scheme = Scheme.CAT
    metric: MetricSpec = DEFAULT_SPECS["SINR"]
    sensor_frequency: float = 1.0  # Hz
    sensor_payload: float = 50_000.0  # bytes
    timers: SchedulerTimers = SchedulerTimers()
    tau: float = 30.0
    period: float = 30.0
    seed: int = 0
    duration: Optional[float] = None  # defaults to the trace span
    channel: ChannelModelConfig = ChannelModelConfig()
    network: NetworkPowerParams = NetworkPowerParams()
    device: DeviceProfile = DeviceProfile()
    reference_tx_power: float = 18.0
    snap_radius: float = DEFAULT_SNAP_RADIUS
    map_path: Optional[str] = None
    model_path: Optional[str] = None
    trajectory_path: Optional[str] = None
    tx_model_path: Optional[str] = None
    forecast_buffer_growth: bool = True

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        if not self.sensor_frequency > 0:
            raise ScenarioError("sensor_frequency must be positive")
        if not self.sensor_payload > 0:
            raise ScenarioError("sensor_payload must be positive")
        if not self.tau >= 0 or not self.period > 0:
            raise ScenarioError("tau must be >= 0 and period > 0")
        if self.duration is not None and not self.duration > 0:
            raise ScenarioError("duration must be positive")


@dataclass
class Resources:
    """Loaded artifacts a scheme may need."""

    conn_map: Optional[ConnectivityMap] = None
    rate_model: Optional[RegressionModel] = None
    trajectory: Optional[Trajectory] = None
    tx_model: Optional[RegressionModel] = None


def check_resources(config: ScenarioConfig, res: Resources) -> None:
    missing = []
    if config.scheme.predictive:
        if res.conn_map is None:
            missing.append("connectivity map")
        if res.trajectory is None:
            missing.append("trajectory")
    if config.scheme.learned and res.rate_model is None:
        missing.append("data-rate model")
    if missing:
        raise ScenarioError(f"scheme {config.scheme.value} needs: {', '.join(missing)}")


class SensorBuffer:
    """FIFO of ``(generation_time, size)`` entries awaiting upload."""

    def __init__(self):
        self.entries: deque[tuple[float, float]] = deque()
        self.total = 0.0

    def add(self, generation_time: float, size: float) -> None:
        if self.entries and generation_time < self.entries[-1][0]:
            raise ValueError("generation times must be non-decreasing")
        self.entries.append((generation_time, size))
        self.total += size

    def __len__(self):
        return len(self.entries)

    def oldest(self) -> Optional[float]:
        return self.entries[0][0] if self.entries else None

    def drain(self) -> list[tuple[float, float]]:
        out = list(self.entries)
        self.entries.clear()
        self.total = 0.0
        return out


def compute_aoi(buffer, reception_time: float) -> float:
    """Mean age of the buffered measurements at ``reception_time``."""
    entries = buffer.entries if isinstance(buffer, SensorBuffer) else buffer
    entries = list(entries)
    if not entries:
        raise ValueError("empty buffer has no age")
    if reception_time < entries[-1][0] - EPS:
        raise ValueError("reception precedes generation")
    return math.fsum(reception_time - t for t, _ in entries) / len(entries)


@dataclass(frozen=True)
class TransmissionRecord:
    start_time: float
    payload: float  # bytes
    achieved_rate: float  # MBit/s
    duration: float  # s
    cause: Cause
    aoi_mean: float  # s
    tx_power: float  # dBm
    power_state: PowerState
    n_packets: int = 0
    oldest_age: float = 0.0  # s, at start_time
    sinr: float = math.nan
    phi: float = math.nan
    probability: float = math.nan

    def __post_init__(self):
        if not self.payload > 0:
            raise ValueError("payload must be positive")

    @property
    def end_time(self) -> float:
        return self.start_time + self.duration


@dataclass(frozen=True)
class KpiReport:
    mean_data_rate: float
    mean_aoi: float
    mean_power: float
    transmission_count: int
    forced_tmax_count: int
    forced_phimax_count: int
    pfr: Optional[float] = None
    mean_sinr: float = math.nan
    generated_bytes: float = 0.0
    transmitted_bytes: float = 0.0
    terminal_buffer_bytes: float = 0.0
    timeline: float = 0.0
    power_distribution: tuple = (1.0, 0.0, 0.0, 0.0)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["power_distribution"] = dict(zip(("idle", "low", "high", "max"), self.power_distribution))
        return d


def power_timeline(records: Sequence[TransmissionRecord], horizon: float) -> list[tuple[PowerState, float]]:
    """Dwell per state over ``[0, horizon]``; overlapping uploads take the highest state."""
    events = sorted({0.0, horizon, *(r.start_time for r in records), *(r.end_time for r in records)})
    out = []
    for a, b in zip(events, events[1:]):
        if b <= a:
            continue
        mid = 0.5 * (a + b)
        state = PowerState.IDLE
        for r in records:
            if r.start_time <= mid < r.end_time and r.power_state > state:
                state = r.power_state
        out.append((state, b - a))
    return out


def compute_kpis(records: Sequence[TransmissionRecord], duration: float,
                 device: DeviceProfile = DeviceProfile(), *, hits: int = 0, misses: int = 0,
                 generated_bytes: float = 0.0, terminal_buffer_bytes: float = 0.0) -> KpiReport:
    """Aggregate per-upload records; power averages over the whole timeline."""
    if not records:
        raise ValueError("no transmission records")
    horizon = max(duration, max(r.end_time for r in records))
    dist = state_distribution(power_timeline(records, horizon))
    n = len(records)
    return KpiReport(
        mean_data_rate=math.fsum(r.achieved_rate for r in records) / n,
        mean_aoi=math.fsum(r.aoi_mean for r in records) / n,
        mean_power=average_power(dist, device),
        transmission_count=n,
        forced_tmax_count=sum(r.cause is Cause.FORCED_TMAX for r in records),
        forced_phimax_count=sum(r.cause is Cause.FORCED_PHIMAX for r in records),
        pfr=pfr(hits, misses) if hits + misses else None,
        mean_sinr=math.fsum(r.sinr for r in records) / n,
        generated_bytes=generated_bytes,
        transmitted_bytes=math.fsum(r.payload for r in records),
        terminal_buffer_bytes=terminal_buffer_bytes,
        timeline=horizon,
        power_distribution=dist.as_tuple(),
    )


def _empty_report(duration, device, hits, misses, generated, terminal) -> KpiReport:
    return KpiReport(math.nan, math.nan, device.idle_power, 0, 0, 0,
                     pfr(hits, misses) if hits + misses else None, math.nan,
                     generated, 0.0, terminal, duration)


_INDICATOR_OF_METRIC = {"RSRP": "rsrp", "RSRQ": "rsrq", "SINR": "sinr", "CQI": "cqi"}


def run_scenario(config: ScenarioConfig, trace: Sequence[ChannelContext],
                 resources: Optional[Resources] = None):
    """Simulate one scenario; returns ``(records, KpiReport)``.

    Ticks run at ``t = k * t_p`` for ``k = 1..N``. Each tick generates the
    due sensor packets, senses the channel, computes the scheme's
    probability, draws once and on success uploads the whole buffer. Uploads
    do not block later decisions; the time between upload starts is Δt.
    """
    res = resources or Resources()
    check_resources(config, res)
    if not trace:
        raise ScenarioError("empty trace")
    timers = config.timers
    times = np.array([c.timestamp for c in trace])
    duration = config.duration if config.duration is not None else float(times[-1])
    if times[-1] < duration - EPS:
        raise ScenarioError(f"trace ends at {times[-1]} s, before the scenario duration {duration} s")
    n_ticks = int(math.floor(duration / timers.t_p + EPS))
    if n_ticks < 1:
        raise ScenarioError("duration shorter than one assessment interval")
    if times[0] > timers.t_p + EPS:
        raise ScenarioError("trace starts after the first assessment tick")

    spec = config.metric
    scheme = config.scheme
    decision_rng, channel_rng = (np.random.default_rng(s) for s in np.random.SeedSequence(config.seed).spawn(2))
    indicator = _INDICATOR_OF_METRIC.get(spec.name.upper())
    if not scheme.learned and scheme is not Scheme.PERIODIC and indicator is None:
        raise ScenarioError(f"metric {spec.name!r} is not a trace indicator; use an ML scheme")
    model = res.rate_model

    def phi_of(ctx: ChannelContext, payload: float) -> float:
        if scheme.learned:
            return predict(model, FeatureVector.from_context(ctx, payload))
        return ctx.indicator(indicator)

    buffer = SensorBuffer()
    records: list[TransmissionRecord] = []
    generated = 0
    last_tx = 0.0
    hits = misses = 0
    f = config.sensor_frequency
    # bytes the sensor adds before the forecast horizon, if nothing is uploaded meanwhile
    future_bytes = math.floor(config.tau * f + EPS) * config.sensor_payload if config.forecast_buffer_growth else 0.0

    for k in range(1, n_ticks + 1):
        t = k * timers.t_p
        # (1) sensor packets generated at j / f for j = 1, 2, ...
        due = int(math.floor(t * f + EPS))
        while generated < due:
            generated += 1
            buffer.add(generated / f, config.sensor_payload)
        # (2) sense
        ctx = trace[int(np.searchsorted(times, t + EPS, side="right")) - 1]
        delta_t = t - last_tx

        # (3) probability, (4) draw
        phi = theta = math.nan
        if scheme is Scheme.PERIODIC:
            probability = 1.0 if delta_t >= config.period - EPS else 0.0
            cause = Cause.PERIODIC
            transmit = probability == 1.0
        else:
            phi = phi_of(ctx, buffer.total)
            norm = normalize(spec, phi)
            theta = norm.theta
            assessment = cat_probability(theta, norm.at_max, delta_t, timers, spec.alpha)
            if scheme.predictive and assessment.cause is Cause.PROBABILISTIC:
                outcome = predict_context(
                    res.conn_map,
                    lambda tau: predict_along_trajectory(res.trajectory, ctx.position, ctx.velocity,
                                                         tau, config.snap_radius).position,
                    config.tau,
                    _future_rate(model, ctx, buffer.total + future_bytes) if scheme.learned else indicator,
                    phi,
                )
                if outcome.fallback:
                    misses += 1
                else:
                    hits += 1
                    z = pcat_exponent_factor(outcome.delta_phi, theta, spec.beta)
                    assessment = pcat_probability(theta, norm.at_max, delta_t, timers, spec.alpha, z)
            probability, cause = assessment
            transmit = draw(probability, decision_rng)

        # (5) upload the whole buffer
        if not transmit or not len(buffer):
            continue
        oldest = buffer.oldest()
        entries = buffer.drain()
        payload = math.fsum(size for _, size in entries)
        rate = realize_rate(config.channel, ctx, payload, channel_rng)
        tx_duration = payload * 8.0 / (rate * 1e6)
        if res.tx_model is not None:
            tx_power = predict_tx_power(res.tx_model, FeatureVector.from_context(ctx, payload),
                                        config.network.p_max)
        else:
            tx_power = upload_tx_power(config.channel, config.network, ctx, rate, config.reference_tx_power)
        records.append(TransmissionRecord(
            start_time=t, payload=payload, achieved_rate=rate, duration=tx_duration, cause=cause,
            aoi_mean=compute_aoi(entries, t + tx_duration), tx_power=tx_power,
            power_state=map_to_state(tx_power, config.device, True),
            n_packets=len(entries), oldest_age=t - oldest, sinr=ctx.sinr, phi=phi,
            probability=probability,
        ))
        last_tx = t

    generated_bytes = generated * config.sensor_payload
    if records:
        report = compute_kpis(records, duration, config.device, hits=hits, misses=misses,
                              generated_bytes=generated_bytes, terminal_buffer_bytes=buffer.total)
    else:
        report = _empty_report(duration, config.device, hits, misses, generated_bytes, buffer.total)
    return records, report


def _future_rate(model: RegressionModel, ctx: ChannelContext, payload: float) -> Callable[[dict], float]:
    """Predicted rate for map cell means, keeping the current velocity and payload."""
    def rate(cell: dict) -> float:
        return predict(model, FeatureVector(cell["rsrp"], cell["rsrq"], cell["sinr"], cell["cqi"],
                                            ctx.velocity, payload))
    return rate


# -- result files ------------------------------------------------------------

RECORD_FIELDS = tuple(f.name for f in fields(TransmissionRecord))


def records_to_csv(records: Sequence[TransmissionRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RECORD_FIELDS)
    for r in records:
        row = []
        for name in RECORD_FIELDS:
            v = getattr(r, name)
            if isinstance(v, Cause):
                row.append(v.value)
            elif isinstance(v, PowerState):
                row.append(v.name)
            elif isinstance(v, float):
                row.append(repr(v))
            else:
                row.append(str(v))
        w.writerow(row)
    return buf.getvalue()


def records_from_csv(text: str) -> list[TransmissionRecord]:
    out = []
    for row in csv.DictReader(io.StringIO(text)):
        kw = {}
        for name in RECORD_FIELDS:
            v = row[name]
            if name == "cause":
                kw[name] = Cause(v)
            elif name == "power_state":
                kw[name] = PowerState[v]
            elif name == "n_packets":
                kw[name] = int(v)
            else:
                kw[name] = float(v)
        out.append(TransmissionRecord(**kw))
    return out


def json_safe(value):
    """Replace non-finite floats (undefined KPIs) by ``None`` for strict JSON."""
    if isinstance(value, dict):
        return {k: json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [json_safe(v) for v in value]
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def kpis_to_json(report: KpiReport, extra: Optional[dict] = None) -> str:
    doc = report.to_dict()
    if extra:
        doc.update(extra)
    return json.dumps(json_safe(doc), indent=1, sort_keys=True, allow_nan=False) + "\n"
