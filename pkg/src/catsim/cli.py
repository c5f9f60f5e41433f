"""``catsim`` command line: train, map-build, simulate, evaluate, trace-gen."""

from __future__ import annotations

import argparse
import io
import json
import logging
import os
import sys
import warnings
from dataclasses import replace

from ._io import atomic_write
from .channel import generate_labeled_samples, generate_synthetic_trace, synthetic_route
from .config import CHANNEL_PRESETS, ConfigError, channel_from_section, read_ini, load_manifest
from .connmap import DEFAULT_CELL_WIDTH, build_map
from .indicators import TraceError, read_trace, serialize_trace
from .power import DeviceProfile, read_device_profile
from .predictor import (FEATURES, TX_FEATURES, LabeledDataError, RankDeficiencyWarning, cross_validate,
                        mean_learner, model_to_dict, read_labeled_csv, train_linear, train_model_tree)
from .sim import ScenarioError, compute_kpis, kpis_to_json, records_from_csv
from .sweep import run_sweep, summarize, summary_csv, summary_table

log = logging.getLogger("catsim")


class CliError(Exception):
    pass


def _json(doc) -> str:
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


# -- train --------------------------------------------------------------------

def cmd_train(args) -> int:
    names = FEATURES if args.target == "datarate" else TX_FEATURES
    X, y = read_labeled_csv(args.data, label=args.target, feature_names=names)
    if args.learner == "tree":
        def learner(data, feature_names, target):
            return train_model_tree(data, min_leaf=args.min_leaf, max_depth=args.max_depth,
                                    feature_names=feature_names, target=target)
    elif args.learner == "linear":
        learner = train_linear
    else:
        learner = mean_learner
    if args.k > len(y):
        raise CliError(f"k={args.k} folds requested but {args.data} has only {len(y)} rows")
    cv = cross_validate((X, y), k=args.k, learner=learner, seed=args.seed, feature_names=names, target=args.target)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", RankDeficiencyWarning)
        model = learner((X, y), feature_names=names, target=args.target)
    for w in caught:
        log.warning("%s", w.message)
    model.meta.update({"learner": args.learner, "n_train": int(len(y))})
    report = {"learner": args.learner, "target": args.target, "n_leaves": model.n_leaves,
              "depth": model.depth, "cross_validation": cv.report()}
    atomic_write(args.out, _json(model_to_dict(model)))
    report_path = args.report or os.path.splitext(args.out)[0] + ".report.json"
    atomic_write(report_path, _json(report))
    p = cv.report()["pooled"]
    print(f"{args.learner} model, {model.n_leaves} leaves; {args.k}-fold CV: "
          f"MAE {p['mae']:.4g}  RMSE {p['rmse']:.4g}  r {p['correlation']:.4f}")
    return 0


# -- map-build ----------------------------------------------------------------

def cmd_map_build(args) -> int:
    if not args.cell_width > 0:
        raise CliError(f"cell width must be positive, got {args.cell_width}")
    traces = [read_trace(p) for p in args.traces]
    cmap = build_map(traces, args.cell_width)
    written = cmap.write(args.out)
    print(f"{len(cmap)} cells, {len(written)} layers -> {args.out}")
    return 0


# -- simulate -----------------------------------------------------------------

def cmd_simulate(args) -> int:
    manifest = load_manifest(args.manifest)
    if args.output:
        manifest = replace(manifest, output=args.output)
    results = run_sweep(manifest, jobs=args.jobs)
    rows = summarize(results)
    atomic_write(os.path.join(manifest.output, "summary.csv"), summary_csv(rows))
    table = summary_table(rows)
    atomic_write(os.path.join(manifest.output, "summary.txt"), table)
    sys.stdout.write(table)
    return 0


# -- evaluate -----------------------------------------------------------------

def cmd_evaluate(args) -> int:
    try:
        with open(args.records, encoding="utf-8") as fh:
            records = records_from_csv(fh.read())
    except (KeyError, ValueError) as exc:
        raise CliError(f"{args.records}: malformed records file ({exc})") from None
    device = read_device_profile(args.device) if args.device else DeviceProfile()
    duration = args.duration if args.duration is not None else max(r.end_time for r in records)
    report = compute_kpis(records, duration, device)
    text = kpis_to_json(report)
    if args.out:
        atomic_write(args.out, text)
    else:
        sys.stdout.write(text)
    return 0


# -- trace-gen ----------------------------------------------------------------

def cmd_trace_gen(args) -> int:
    if args.config:
        cp = read_ini(args.config)
        channel = channel_from_section(cp["channel"] if cp.has_section("channel") else None)
    else:
        channel = CHANNEL_PRESETS[args.channel]
    route = synthetic_route(channel, args.duration)
    trace = generate_synthetic_trace(channel, args.duration, route, seed=args.seed)
    if args.labeled:
        trace = generate_labeled_samples(channel, trace, seed=args.seed)
    buf = io.StringIO()
    serialize_trace(trace, buf)
    atomic_write(args.out, buf.getvalue())
    if args.route_out:
        atomic_write(args.route_out, "x,y\n" + "".join(f"{float(x)!r},{float(y)!r}\n" for x, y in route.waypoints))
    print(f"{len(trace)} samples -> {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="catsim", description="Channel-aware uplink scheduling: training, maps, sweeps.")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="fit a data-rate or TX-power model with k-fold cross-validation")
    t.add_argument("data", help="labeled CSV: rsrp,rsrq,sinr,cqi,v,payload plus the label column")
    t.add_argument("--out", required=True, help="model JSON")
    t.add_argument("--report", help="metrics JSON (default: <out>.report.json)")
    t.add_argument("--learner", choices=("tree", "linear", "mean"), default="tree")
    t.add_argument("--target", choices=("datarate", "txpower"), default="datarate")
    t.add_argument("-k", "--k", type=int, default=10, help="folds (default 10)")
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--min-leaf", type=int, default=10)
    t.add_argument("--max-depth", type=int, default=8)
    t.set_defaults(func=cmd_train)

    m = sub.add_parser("map-build", help="aggregate traces into per-indicator cell maps")
    m.add_argument("traces", nargs="+")
    m.add_argument("--cell-width", type=float, default=DEFAULT_CELL_WIDTH, help="meters (default 25)")
    m.add_argument("--out", required=True, help="output directory")
    m.set_defaults(func=cmd_map_build)

    s = sub.add_parser("simulate", help="run a scheme x metric x tau x seed sweep")
    s.add_argument("manifest", help="INI manifest with a [sweep] section")
    s.add_argument("--jobs", type=int, help="worker processes (overrides the manifest)")
    s.add_argument("--output", help="output directory (overrides the manifest)")
    s.set_defaults(func=cmd_simulate)

    e = sub.add_parser("evaluate", help="recompute KPIs from a records CSV")
    e.add_argument("records")
    e.add_argument("--duration", type=float, help="scenario length in s (default: end of the last upload)")
    e.add_argument("--device", help="INI file with a [device] section")
    e.add_argument("--out", help="KPI JSON (default: stdout)")
    e.set_defaults(func=cmd_evaluate)

    g = sub.add_parser("trace-gen", help="synthesize a drive over the model channel")
    g.add_argument("--out", required=True)
    g.add_argument("--duration", type=float, default=3600.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--channel", choices=sorted(CHANNEL_PRESETS), default="default")
    g.add_argument("--config", help="scenario INI whose [channel] section is used")
    g.add_argument("--labeled", action="store_true", help="add payload, datarate and txpower columns")
    g.add_argument("--route-out", help="also write the driven route as x,y CSV")
    g.set_defaults(func=cmd_trace_gen)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "jobs", None) is not None and args.jobs < 1:
        parser.error("--jobs must be >= 1")
    try:
        return args.func(args)
    except (CliError, ConfigError, ScenarioError, TraceError, LabeledDataError, OSError, ValueError) as exc:
        print(f"catsim {args.command}: error: {exc}", file=sys.stderr)
    return 1


if __name__ == "__main__":
    sys.exit(main())
