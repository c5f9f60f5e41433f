import csv
import filecmp
import json
import os

import numpy as np
import pytest

from catsim.cli import main
from catsim.config import ConfigError, load_manifest, load_scenario, parse_seeds
from catsim.connmap import ConnectivityMap
from catsim.sim import Scheme
from catsim.sweep import box_stats


def write(path, text):
    path.write_text(text)
    return str(path)


def linear_csv(path, n=40, seed=0):
    rng = np.random.default_rng(seed)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["rsrp", "rsrq", "sinr", "cqi", "v", "payload", "datarate"])
        for _ in range(n):
            rsrp, rsrq, sinr = rng.uniform(-120, -70), rng.uniform(-11, -4), rng.uniform(0, 30)
            cqi, v, pay = int(rng.integers(0, 16)), rng.uniform(0, 30), rng.uniform(5e4, 6e6)
            w.writerow([rsrp, rsrq, sinr, cqi, v, pay, 0.4 * sinr + 1e-6 * pay + 0.5])
    return str(path)


# -- config ---------------------------------------------------------------------

def test_parse_seeds():
    assert parse_seeds("0-3, 7") == [0, 1, 2, 3, 7]
    for bad in ("3-1", "1,1", "x"):
        with pytest.raises(ConfigError):
            parse_seeds(bad)


def test_scenario_precedence(tmp_path):
    p = write(tmp_path / "s.ini", "[scenario]\nscheme = pcat\ntau = 60\nt_min = 5\nmap = maps\n"
                                  "[channel]\npreset = hotspot\nsigma = 0.1\n[metric]\nalpha = 4\n")
    cfg = load_scenario(p, {"tau": 10, "seed": None})
    assert cfg.scheme is Scheme.PCAT and cfg.tau == 10.0 and cfg.timers.t_min == 5.0
    assert cfg.metric.name == "SINR" and cfg.metric.alpha == 4.0
    assert cfg.channel.field == "hotspot" and cfg.channel.sigma == 0.1
    assert cfg.map_path == str(tmp_path / "maps")
    assert load_scenario(write(tmp_path / "m.ini", "[scenario]\nscheme = ML_CAT\n")).metric.name == "M5T"


@pytest.mark.parametrize("text, match", [
    ("[scenario]\nbogus = 1\n", "bogus"),
    ("[scenario]\nscheme = FAST\n", "scheme"),
    ("[scenario]\nmetric = XYZ\n", "metric"),
    ("[scenario]\ntau = soon\n", "tau"),
    ("[channel]\npreset = moon\n", "preset"),
    ("[scenario]\nsensor_frequency = 0\n", "sensor_frequency"),
])
def test_scenario_errors(tmp_path, text, match):
    with pytest.raises(ConfigError, match=match):
        load_scenario(write(tmp_path / "s.ini", text))


def test_manifest_grid(tmp_path):
    p = write(tmp_path / "g.ini", "[sweep]\nschemes = PERIODIC, CAT, PCAT, ML_PCAT\nmetrics = SINR, RSRP\n"
                                  "taus = 10, 30\nseeds = 0-1\ntrace = t.csv\noutput = out\n")
    m = load_manifest(p)
    keys = [c.key for c in m.cells]
    assert keys[:4] == ["PERIODIC_s0", "PERIODIC_s1", "CAT_SINR_s0", "CAT_SINR_s1"]
    assert "PCAT_RSRP_tau10_s1" in keys and "ML_PCAT_M5T_tau30_s0" in keys
    assert len(keys) == 2 + 4 + 8 + 4
    assert m.trace == str(tmp_path / "t.csv") and m.output == str(tmp_path / "out")
    with pytest.raises(ConfigError, match="sweep"):
        load_manifest(write(tmp_path / "n.ini", "[scenario]\n"))


def test_box_stats():
    s = box_stats([1, 2, 3, 4, 100])
    assert (s["q1"], s["median"], s["q3"]) == (2.0, 3.0, 4.0)
    assert s["whisker_low"] == 1.0 and s["whisker_high"] == 4.0 and s["mean"] == 22.0
    assert box_stats([])["n"] is None


# -- train ----------------------------------------------------------------------

def test_train_exact_linear(tmp_path, capsys):
    data = linear_csv(tmp_path / "d.csv")
    out = str(tmp_path / "m.json")
    assert main(["train", data, "--out", out, "--learner", "linear", "-k", "10"]) == 0
    report = json.loads((tmp_path / "m.report.json").read_text())
    assert report["cross_validation"]["pooled"]["mae"] <= 1e-6
    assert len(report["cross_validation"]["folds"]) == 10
    assert json.loads((tmp_path / "m.json").read_text())["target"] == "datarate"


def test_train_deterministic(tmp_path):
    data = linear_csv(tmp_path / "d.csv", n=60)
    for name in ("a", "b"):
        assert main(["train", data, "--out", str(tmp_path / f"{name}.json"), "--seed", "7"]) == 0
    assert filecmp.cmp(tmp_path / "a.json", tmp_path / "b.json", shallow=False)
    assert filecmp.cmp(tmp_path / "a.report.json", tmp_path / "b.report.json", shallow=False)


def test_train_k_too_large(tmp_path, capsys):
    data = linear_csv(tmp_path / "d.csv", n=5)
    assert main(["train", data, "--out", str(tmp_path / "m.json"), "-k", "10"]) == 1
    err = capsys.readouterr().err
    assert "10" in err and "5" in err
    assert not (tmp_path / "m.json").exists()


def test_train_schema_error(tmp_path, capsys):
    p = write(tmp_path / "d.csv", "rsrp,rsrq,sinr,cqi,v,payload,datarate\n-90,-8,ten,7,10,1e6,5\n")
    assert main(["train", p, "--out", str(tmp_path / "m.json")]) == 1
    assert "row 1, column 'sinr'" in capsys.readouterr().err


# -- map-build ------------------------------------------------------------------

TRACE_A = "t,x,y,v,rsrp,rsrq,sinr,cqi\n0,1,1,10,-90,-8,10,7\n1,2,2,10,-92,-8,14,7\n"
TRACE_B = "t,x,y,v,rsrp,rsrq,sinr,cqi\n0,3,3,10,-94,-9,18,9\n"


def test_map_build_single_cell(tmp_path):
    a = write(tmp_path / "a.csv", TRACE_A)
    assert main(["map-build", a, "--out", str(tmp_path / "map")]) == 0
    rows = (tmp_path / "map" / "sinr.csv").read_text().splitlines()
    assert rows[1] == "ix,iy,mean,count,m2" and len(rows) == 3
    assert rows[2].startswith("0,0,12.0,2,")


def test_map_build_pools_and_ignores_order(tmp_path):
    a, b = write(tmp_path / "a.csv", TRACE_A), write(tmp_path / "b.csv", TRACE_B)
    assert main(["map-build", a, b, "--out", str(tmp_path / "m1")]) == 0
    assert main(["map-build", b, a, "--out", str(tmp_path / "m2")]) == 0
    for name in os.listdir(tmp_path / "m1"):
        assert filecmp.cmp(tmp_path / "m1" / name, tmp_path / "m2" / name, shallow=False)
    cell = ConnectivityMap.read(str(tmp_path / "m1")).layers["sinr"]
    (stats,) = cell.values()
    assert stats.count == 3 and stats.mean == pytest.approx(14.0)


def test_map_build_errors(tmp_path, capsys):
    a = write(tmp_path / "a.csv", TRACE_A)
    assert main(["map-build", a, "--cell-width", "0", "--out", str(tmp_path / "m")]) == 1
    assert "cell width" in capsys.readouterr().err
    assert main(["map-build", str(tmp_path / "nope.csv"), "--out", str(tmp_path / "m")]) == 1


# -- trace-gen, simulate, evaluate ----------------------------------------------

def small_manifest(tmp_path, schemes="CAT", seeds="0", trace="trace.csv", extra=""):
    return write(tmp_path / "grid.ini", f"[sweep]\nschemes = {schemes}\nseeds = {seeds}\ntrace = {trace}\n"
                                        f"output = out\n{extra}[scenario]\nduration = 300\n")


def test_single_cell_pipeline(tmp_path, capsys):
    assert main(["trace-gen", "--out", str(tmp_path / "trace.csv"), "--duration", "300", "--seed", "1"]) == 0
    assert main(["simulate", small_manifest(tmp_path)]) == 0
    cell = tmp_path / "out" / "cells" / "CAT_SINR_s0"
    assert sorted(os.listdir(cell)) == ["kpis.json", "records.csv"]
    kpis = json.loads((cell / "kpis.json").read_text())
    assert kpis["scheme"] == "CAT" and kpis["transmission_count"] >= 1
    assert (tmp_path / "out" / "summary.csv").exists()
    out = str(tmp_path / "k.json")
    assert main(["evaluate", str(cell / "records.csv"), "--duration", "300", "--out", out]) == 0
    again = json.loads((tmp_path / "k.json").read_text())
    for key in ("mean_data_rate", "mean_aoi", "mean_power", "transmission_count"):
        assert again[key] == kpis[key]


def test_simulate_fails_fast_on_missing_resource(tmp_path, capsys):
    p = small_manifest(tmp_path, schemes="CAT, PCAT", trace="@synthetic")
    assert main(["simulate", p]) == 1
    assert "map" in capsys.readouterr().err
    assert not (tmp_path / "out").exists()


def test_simulate_parallel_matches_serial(tmp_path):
    p = write(tmp_path / "grid.ini", "[sweep]\nschemes = PERIODIC, CAT, ML_PCAT\nseeds = 0-2\ntrace = @synthetic\n"
                                     "output = out\n[scenario]\nduration = 600\nmap = @trace\ntrajectory = @route\n"
                                     "model = @train\n[channel]\npreset = hotspot\n")
    assert main(["simulate", p, "--output", str(tmp_path / "serial")]) == 0
    assert main(["simulate", p, "--jobs", "2", "--output", str(tmp_path / "par")]) == 0
    cmp = filecmp.dircmp(tmp_path / "serial", tmp_path / "par")
    assert not cmp.diff_files and not cmp.left_only and not cmp.right_only
    for sub in os.listdir(tmp_path / "serial" / "cells"):
        for f in ("records.csv", "kpis.json"):
            assert filecmp.cmp(tmp_path / "serial" / "cells" / sub / f, tmp_path / "par" / "cells" / sub / f,
                               shallow=False)


def test_cat_beats_periodic_on_hotspot(tmp_path):
    p = write(tmp_path / "grid.ini", "[sweep]\nschemes = CAT, PERIODIC\nseeds = 0-9\ntrace = @synthetic\n"
                                     "output = out\n[scenario]\nduration = 3600\n[channel]\npreset = hotspot\n")
    assert main(["simulate", p]) == 0
    rows = list(csv.DictReader(open(tmp_path / "out" / "summary.csv")))
    rate = {r["group"]: float(r["mean"]) for r in rows if r["kpi"] == "mean_data_rate"}
    assert rate["CAT_SINR"] >= rate["PERIODIC"]


def test_shipped_manifest_parses():
    from importlib.resources import files
    m = load_manifest(str(files("catsim") / "data" / "hotspot_sweep.ini"))
    assert len(m.cells) == 40 and m.trace == "@synthetic"


def test_evaluate_errors(tmp_path, capsys):
    bad = write(tmp_path / "r.csv", "start_time,payload\n1,2\n")
    assert main(["evaluate", bad]) == 1
    assert "malformed" in capsys.readouterr().err


def test_bad_jobs_flag(tmp_path):
    with pytest.raises(SystemExit):
        main(["simulate", "x.ini", "--jobs", "0"])
