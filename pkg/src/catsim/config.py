"""INI scenario files and sweep manifests.

A scenario file has optional sections ``[scenario]``, ``[metric]``,
``[channel]``, ``[network]`` and ``[device]``. Keys left out keep their
defaults; command-line flags override both.
"""

from __future__ import annotations

import configparser
import dataclasses
import os
import re
from dataclasses import dataclass, replace
from typing import Mapping, Optional

from .cat import SchedulerTimers
from .channel import HOTSPOT_CHANNEL, ChannelModelConfig
from .metric import DEFAULT_SPECS, get_spec
from .power import NetworkPowerParams, device_profile_from_section
from .sim import ScenarioConfig, Scheme

SYNTHETIC_TRACE = "@synthetic"
TRACE_MAP = "@trace"  # perfect map built from the run's own trace
SYNTHETIC_ROUTE = "@route"
TRAIN_ON_CHANNEL = "@train"

CHANNEL_PRESETS = {"default": ChannelModelConfig(), "hotspot": HOTSPOT_CHANNEL}


class ConfigError(ValueError):
    pass


def read_ini(path) -> configparser.ConfigParser:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return cp


def _coerce(cls, name: str, raw: str):
    """Parse ``raw`` to the type of field ``name`` on dataclass ``cls``."""
    default = {f.name: f for f in dataclasses.fields(cls)}[name].default
    try:
        if isinstance(default, bool):
            return raw.strip().lower() in ("1", "true", "yes", "on")
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
    except ValueError:
        raise ConfigError(f"{cls.__name__}.{name}: cannot parse {raw!r}") from None
    return raw.strip()


def _section_overrides(cls, section: Mapping[str, str], skip=()) -> dict:
    known = {f.name for f in dataclasses.fields(cls)}
    out = {}
    for key, raw in section.items():
        if key in skip:
            continue
        if key not in known:
            raise ConfigError(f"[{getattr(section, 'name', cls.__name__)}] unknown key {key!r}")
        out[key] = _coerce(cls, key, raw)
    return out


def channel_from_section(section: Optional[Mapping[str, str]]) -> ChannelModelConfig:
    if section is None:
        return ChannelModelConfig()
    preset = section.get("preset", "default")
    if preset not in CHANNEL_PRESETS:
        raise ConfigError(f"unknown channel preset {preset!r}; choose from {sorted(CHANNEL_PRESETS)}")
    try:
        return replace(CHANNEL_PRESETS[preset], **_section_overrides(ChannelModelConfig, section, ("preset",)))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[channel] {exc}") from None


_SCENARIO_KEYS = {
    "scheme", "metric", "sensor_frequency", "sensor_payload", "t_min", "t_max", "t_p", "tau", "period",
    "seed", "duration", "snap_radius", "reference_tx_power", "map", "model", "trajectory", "tx_model",
    "forecast_buffer_growth",
}


def scenario_from_parser(cp: configparser.ConfigParser, base_dir: str = ".",
                         overrides: Optional[dict] = None) -> ScenarioConfig:
    """Build a config from parsed sections; ``overrides`` (flag values) win."""
    sc = dict(cp["scenario"]) if cp.has_section("scenario") else {}
    sc.update({k: str(v) for k, v in (overrides or {}).items() if v is not None})
    unknown = set(sc) - _SCENARIO_KEYS
    if unknown:
        raise ConfigError(f"[scenario] unknown keys: {', '.join(sorted(unknown))}")

    try:
        scheme = Scheme(sc.get("scheme", "CAT").upper())
    except ValueError:
        raise ConfigError(f"unknown scheme {sc.get('scheme')!r}; choose from {[s.value for s in Scheme]}") from None
    # learned schemes rank on the predicted rate
    metric_name = sc.get("metric", "M5T" if scheme.learned else "SINR")
    try:
        spec = get_spec(metric_name)
    except KeyError:
        raise ConfigError(f"unknown metric {metric_name!r}; choose from {sorted(DEFAULT_SPECS)}") from None
    if cp.has_section("metric"):
        try:
            spec = spec.with_overrides(**_section_overrides(type(spec), cp["metric"], ("name",)))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    d = ScenarioConfig()
    t = SchedulerTimers()

    def num(key, default, conv=float):
        if key not in sc:
            return default
        try:
            return conv(sc[key])
        except ValueError:
            raise ConfigError(f"[scenario] {key}: cannot parse {sc[key]!r}") from None

    def path(key):
        v = sc.get(key)
        if v is None or v.startswith("@"):
            return v
        return os.path.normpath(os.path.join(base_dir, v))

    network = NetworkPowerParams()
    if cp.has_section("network"):
        kw = _section_overrides(NetworkPowerParams, cp["network"])
        network = replace(network, **kw)
    device = device_profile_from_section(cp["device"]) if cp.has_section("device") else d.device
    try:
        return ScenarioConfig(
            scheme=scheme, metric=spec,
            sensor_frequency=num("sensor_frequency", d.sensor_frequency),
            sensor_payload=num("sensor_payload", d.sensor_payload),
            timers=SchedulerTimers(num("t_min", t.t_min), num("t_max", t.t_max), num("t_p", t.t_p)),
            tau=num("tau", d.tau), period=num("period", d.period), seed=num("seed", d.seed, int),
            duration=num("duration", d.duration),
            channel=channel_from_section(cp["channel"] if cp.has_section("channel") else None),
            network=network, device=device,
            reference_tx_power=num("reference_tx_power", d.reference_tx_power),
            snap_radius=num("snap_radius", d.snap_radius),
            map_path=path("map"), model_path=path("model"), trajectory_path=path("trajectory"),
            tx_model_path=path("tx_model"),
            forecast_buffer_growth=sc.get("forecast_buffer_growth", "true").lower() in ("1", "true", "yes", "on"),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def load_scenario(path, overrides: Optional[dict] = None) -> ScenarioConfig:
    return scenario_from_parser(read_ini(path), os.path.dirname(os.path.abspath(path)), overrides)


# -- sweep manifests -----------------------------------------------------------

@dataclass(frozen=True)
class GridCell:
    key: str
    config: ScenarioConfig


@dataclass(frozen=True)
class SweepManifest:
    """Scheme x metric x tau x seed grid over one base scenario."""

    cells: tuple[GridCell, ...]
    trace: str
    output: str
    jobs: int = 1
    model_seed: int = 0

    def __post_init__(self):
        if not self.cells:
            raise ConfigError("manifest grid is empty")
        keys = [c.key for c in self.cells]
        if len(set(keys)) != len(keys):
            raise ConfigError("manifest grid has duplicate cell keys")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")


def _list(raw: str) -> list[str]:
    return [p for p in re.split(r"[,\s]+", raw.strip()) if p]


def parse_seeds(raw: str) -> list[int]:
    """``"0-9"`` or ``"1, 5, 7"`` (ranges inclusive)."""
    out = []
    for part in _list(raw):
        m = re.fullmatch(r"(-?\d+)-(-?\d+)", part)
        try:
            if m:
                lo, hi = int(m.group(1)), int(m.group(2))
                if hi < lo:
                    raise ConfigError(f"empty seed range {part!r}")
                out.extend(range(lo, hi + 1))
            else:
                out.append(int(part))
        except ValueError:
            raise ConfigError(f"bad seed {part!r}") from None
    if len(set(out)) != len(out):
        raise ConfigError("duplicate seeds in manifest")
    return out


def load_manifest(path) -> SweepManifest:
    """Read a manifest: a scenario file plus a ``[sweep]`` section.

    Non-predictive schemes ignore ``taus`` and learned schemes ignore
    ``metrics``, so each distinct run appears once in the grid.
    """
    cp = read_ini(path)
    base_dir = os.path.dirname(os.path.abspath(path))
    if not cp.has_section("sweep"):
        raise ConfigError(f"{path}: missing [sweep] section")
    sw = cp["sweep"]
    known = {"schemes", "metrics", "taus", "seeds", "trace", "output", "jobs", "model_seed"}
    unknown = set(sw) - known
    if unknown:
        raise ConfigError(f"[sweep] unknown keys: {', '.join(sorted(unknown))}")
    for key in ("schemes", "seeds", "trace", "output"):
        if key not in sw:
            raise ConfigError(f"[sweep] missing {key!r}")
    schemes = [s.upper() for s in _list(sw["schemes"])]
    metrics = _list(sw.get("metrics", "SINR"))
    taus = [float(v) for v in _list(sw.get("taus", "30"))]
    seeds = parse_seeds(sw["seeds"])

    cells = []
    for scheme in schemes:
        if scheme.startswith("ML_"):
            scheme_metrics = ["M5T"]
        elif scheme == "PERIODIC":
            scheme_metrics = [None]  # the fixed-interval baseline ignores the metric
        else:
            scheme_metrics = metrics
        for metric in scheme_metrics:
            for tau in (taus if scheme in ("PCAT", "ML_PCAT") else [None]):
                for seed in seeds:
                    ov = {"scheme": scheme, "seed": seed, "metric": metric, "tau": tau}
                    cfg = scenario_from_parser(cp, base_dir, ov)
                    parts = [scheme] + ([cfg.metric.name] if metric else [])
                    parts += [f"tau{tau:g}"] if tau is not None else []
                    cells.append(GridCell("_".join(parts + [f"s{seed}"]), cfg))

    trace = sw["trace"].strip()
    if not trace.startswith("@"):
        trace = os.path.normpath(os.path.join(base_dir, trace))
    try:
        jobs = int(sw.get("jobs", "1"))
        model_seed = int(sw.get("model_seed", "0"))
    except ValueError:
        raise ConfigError("[sweep] jobs and model_seed must be integers") from None
    return SweepManifest(tuple(cells), trace, os.path.normpath(os.path.join(base_dir, sw["output"])),
                         jobs, model_seed)
