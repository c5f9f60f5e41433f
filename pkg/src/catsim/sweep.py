"""Grid execution for sweep manifests and box-plot style summaries."""

from __future__ import annotations

import csv
import io
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from ._io import atomic_write
from .channel import ChannelModelConfig, generate_labeled_samples, generate_synthetic_trace, synthetic_route
from .config import SYNTHETIC_ROUTE, SYNTHETIC_TRACE, TRACE_MAP, TRAIN_ON_CHANNEL, GridCell, SweepManifest
from .connmap import ConnectivityMap, build_map
from .indicators import read_trace
from .mobility import read_trajectory
from .predictor import FEATURES, load_model, train_model_tree
from .sim import KpiReport, Resources, ScenarioConfig, ScenarioError, kpis_to_json, records_to_csv, run_scenario

log = logging.getLogger(__name__)

DEFAULT_SYNTHETIC_DURATION = 3600.0
SUMMARY_KPIS = ("mean_data_rate", "mean_aoi", "mean_power", "transmission_count", "forced_tmax_count",
                "forced_phimax_count", "pfr")


class ResourceError(ScenarioError):
    pass


def _duration(config: ScenarioConfig) -> float:
    return config.duration if config.duration is not None else DEFAULT_SYNTHETIC_DURATION


def check_cell_resources(config: ScenarioConfig, trace: str) -> None:
    """Fail before any run if a referenced resource is missing or unusable."""
    problems = []
    if trace != SYNTHETIC_TRACE and not os.path.isfile(trace):
        problems.append(f"trace {trace!r} not found")
    if config.scheme.predictive:
        if config.map_path is None:
            problems.append("no connectivity map configured")
        elif config.map_path != TRACE_MAP and not os.path.isdir(config.map_path):
            problems.append(f"map directory {config.map_path!r} not found")
        if config.trajectory_path is None:
            problems.append("no trajectory configured")
        elif config.trajectory_path == SYNTHETIC_ROUTE and trace != SYNTHETIC_TRACE:
            problems.append(f"{SYNTHETIC_ROUTE} requires trace = {SYNTHETIC_TRACE}")
        elif config.trajectory_path != SYNTHETIC_ROUTE and not os.path.isfile(config.trajectory_path):
            problems.append(f"trajectory {config.trajectory_path!r} not found")
    if config.scheme.learned:
        if config.model_path is None:
            problems.append("no data-rate model configured")
        elif config.model_path != TRAIN_ON_CHANNEL and not os.path.isfile(config.model_path):
            problems.append(f"model {config.model_path!r} not found")
    if config.tx_model_path is not None and not os.path.isfile(config.tx_model_path):
        problems.append(f"TX-power model {config.tx_model_path!r} not found")
    if problems:
        raise ResourceError(f"{config.scheme.value}: " + "; ".join(problems))


# Loaders are cached per process; workers reuse traces, maps and models across cells.

@lru_cache(maxsize=8)
def _file_trace(path: str):
    return tuple(read_trace(path))


@lru_cache(maxsize=8)
def _synthetic_trace(channel: ChannelModelConfig, duration: float, seed: int):
    return tuple(generate_synthetic_trace(channel, duration, synthetic_route(channel, duration), seed))


@lru_cache(maxsize=8)
def _map_dir(path: str) -> ConnectivityMap:
    return ConnectivityMap.read(path)


@lru_cache(maxsize=4)
def _model_file(path: str):
    return load_model(path)


@lru_cache(maxsize=4)
def _channel_model(channel: ChannelModelConfig, model_seed: int):
    """Model tree trained on labeled uploads over an independent drive of the same channel."""
    duration = 3000.0
    drive = generate_synthetic_trace(channel, duration, synthetic_route(channel, duration), seed=10**6 + model_seed)
    labeled = generate_labeled_samples(channel, drive, seed=model_seed)
    X = np.array([[c.rsrp, c.rsrq, c.sinr, float(c.cqi), c.velocity, c.payload] for c in labeled])
    y = np.array([c.datarate for c in labeled])
    return train_model_tree((X, y), feature_names=FEATURES, target="datarate")


def load_cell(config: ScenarioConfig, trace_ref: str, model_seed: int = 0):
    """Trace and resources for one grid cell."""
    if trace_ref == SYNTHETIC_TRACE:
        trace = _synthetic_trace(config.channel, _duration(config), config.seed)
    else:
        trace = _file_trace(trace_ref)
    res = Resources()
    if config.scheme.predictive:
        res.conn_map = (build_map([trace]).freeze() if config.map_path == TRACE_MAP
                        else _map_dir(config.map_path))
        res.trajectory = (synthetic_route(config.channel, _duration(config))
                          if config.trajectory_path == SYNTHETIC_ROUTE else read_trajectory(config.trajectory_path))
    if config.scheme.learned:
        res.rate_model = (_channel_model(config.channel, model_seed) if config.model_path == TRAIN_ON_CHANNEL
                          else _model_file(config.model_path))
    if config.tx_model_path is not None:
        res.tx_model = _model_file(config.tx_model_path)
    return list(trace), res


def run_cell(cell: GridCell, trace_ref: str, output: str, model_seed: int = 0) -> tuple[str, KpiReport]:
    """Run one cell and write ``<output>/cells/<key>/{records.csv,kpis.json}``."""
    config = cell.config
    if trace_ref == SYNTHETIC_TRACE and config.duration is None:
        config = replace(config, duration=DEFAULT_SYNTHETIC_DURATION)
    trace, res = load_cell(config, trace_ref, model_seed)
    records, report = run_scenario(config, trace, res)
    d = os.path.join(output, "cells", cell.key)
    atomic_write(os.path.join(d, "records.csv"), records_to_csv(records))
    atomic_write(os.path.join(d, "kpis.json"), kpis_to_json(report, {
        "key": cell.key, "scheme": config.scheme.value, "metric": config.metric.name,
        "tau": config.tau if config.scheme.predictive else None, "seed": config.seed}))
    return cell.key, report


def _run_cell_args(args):
    return run_cell(*args)


def run_sweep(manifest: SweepManifest, jobs: Optional[int] = None) -> list[tuple[GridCell, KpiReport]]:
    """Check all resources, then execute every cell on at most ``jobs`` processes."""
    for cell in manifest.cells:
        check_cell_resources(cell.config, manifest.trace)
    jobs = jobs or manifest.jobs
    args = [(c, manifest.trace, manifest.output, manifest.model_seed) for c in manifest.cells]
    if jobs == 1:
        results = [_run_cell_args(a) for a in args]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_cell_args, args, chunksize=max(1, len(args) // (4 * jobs))))
    by_key = dict(results)
    return [(c, by_key[c.key]) for c in manifest.cells]


def box_stats(values: Sequence[float]) -> dict:
    """Mean, quartiles and 1.5 IQR whiskers (clipped to the data, as in box plots)."""
    v = np.sort(np.asarray([x for x in values if x is not None and np.isfinite(x)], dtype=np.float64))
    if len(v) == 0:
        return {k: None for k in ("n", "mean", "q1", "median", "q3", "whisker_low", "whisker_high")}
    q1, med, q3 = np.percentile(v, [25, 50, 75])
    iqr = q3 - q1
    inside = v[(v >= q1 - 1.5 * iqr) & (v <= q3 + 1.5 * iqr)]
    return {"n": int(len(v)), "mean": float(np.mean(v)), "q1": float(q1), "median": float(med),
            "q3": float(q3), "whisker_low": float(inside.min()), "whisker_high": float(inside.max())}


def group_key(cell: GridCell) -> str:
    """Cell key without the seed suffix."""
    return cell.key.rsplit("_s", 1)[0]


def summarize(results: Sequence[tuple[GridCell, KpiReport]]) -> list[dict]:
    groups: dict[str, list[KpiReport]] = {}
    for cell, report in results:
        groups.setdefault(group_key(cell), []).append(report)
    rows = []
    for name, reports in groups.items():
        for kpi in SUMMARY_KPIS:
            stats = box_stats([getattr(r, kpi) for r in reports])
            rows.append({"group": name, "kpi": kpi, **stats})
    return rows


def summary_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    cols = ["group", "kpi", "n", "mean", "q1", "median", "q3", "whisker_low", "whisker_high"]
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow(["" if r[c] is None else (repr(r[c]) if isinstance(r[c], float) else r[c]) for c in cols])
    return buf.getvalue()


def summary_table(rows: Sequence[dict]) -> str:
    """Compact text table: one line per group, mean and median of the main KPIs."""
    kpis = ("mean_data_rate", "mean_aoi", "mean_power", "forced_tmax_count")
    by_group: dict[str, dict] = {}
    for r in rows:
        by_group.setdefault(r["group"], {})[r["kpi"]] = r
    width = max(len(g) for g in by_group) if by_group else 5
    head = f"{'group':<{width}}  " + "  ".join(f"{k:>22}" for k in kpis)
    lines = [head, "-" * len(head)]
    for g, d in by_group.items():
        cells = []
        for k in kpis:
            r = d[k]
            cells.append(f"{'n/a':>22}" if r["mean"] is None else f"{r['mean']:>10.4g} (med {r['median']:>6.4g})")
        lines.append(f"{g:<{width}}  " + "  ".join(cells))
    return "\n".join(lines) + "\n"
