
import numpy as np
import pytest

import oracles
from catsim.channel import (HOTSPOT_CHANNEL, ChannelModelConfig, default_route, generate_labeled_samples,
                            generate_synthetic_trace, max_rate, realize_rate, sinr_field)
from catsim.indicators import ChannelContext, PlanarPoint

QUIET = ChannelModelConfig(sigma=0.0)


def ctx(sinr):
    return ChannelContext(timestamp=0.0, rsrp=-90.0, rsrq=-8.0, sinr=sinr, cqi=7,
                          position=PlanarPoint(0, 0), velocity=10.0)


def test_rate_saturation_and_half_rate():
    rng = np.random.default_rng(0)
    c = ctx(12.0)
    assert realize_rate(QUIET, c, 1e22, rng) == pytest.approx(max_rate(QUIET, 12.0), rel=1e-9)
    assert realize_rate(QUIET, c, QUIET.s_half, rng) == pytest.approx(max_rate(QUIET, 12.0) / 2, rel=1e-12)


def test_rate_ceiling_and_floor():
    rng = np.random.default_rng(0)
    assert realize_rate(QUIET, ctx(30.0), 1e22, rng) == pytest.approx(18.0, rel=1e-9)
    assert max_rate(QUIET, 0.0) == pytest.approx(0.5, rel=1e-12)
    assert max_rate(QUIET, 45.0) == max_rate(QUIET, 30.0)


def test_rate_monotone_in_sinr_and_payload():
    s = np.linspace(-5, 35, 81)
    r = [max_rate(QUIET, x) for x in s]
    assert all(a <= b for a, b in zip(r, r[1:]))
    rng = np.random.default_rng(0)
    p = [realize_rate(QUIET, ctx(15), x, rng) for x in (1e4, 1e5, 1e6, 4e6)]
    assert p == sorted(p)


def test_rate_noise_positive_and_seeded():
    noisy = ChannelModelConfig(sigma=0.5)
    a = [realize_rate(noisy, ctx(15), 1e6, np.random.default_rng(3)) for _ in range(2)]
    assert a[0] == a[1] > 0
    with pytest.raises(ValueError):
        realize_rate(noisy, ctx(15), 0.0, np.random.default_rng(0))


def test_constant_field():
    cfg = ChannelModelConfig(field="constant", sinr_mean=12.0, sinr_noise_db=0.0)
    trace = generate_synthetic_trace(cfg, 50.0, seed=1)
    keys = {(c.rsrp, c.rsrq, c.sinr, c.cqi, c.velocity) for c in trace}
    assert len(keys) == 1
    assert len({c.position for c in trace}) == len(trace)


def test_sinusoid_covers_sinr_range():
    s = np.linspace(0, 500, 100_001)
    field = sinr_field(ChannelModelConfig(sinr_noise_db=0.0), s)
    assert field.min() == pytest.approx(0.0, abs=1e-6)
    assert field.max() == pytest.approx(30.0, abs=1e-6)


def test_hotspot_field_peaks_between_floor_and_peak():
    s = np.linspace(0, 4 * HOTSPOT_CHANNEL.hotspot_spacing_m, 4001)
    f = sinr_field(HOTSPOT_CHANNEL, s)
    assert f.max() == pytest.approx(HOTSPOT_CHANNEL.sinr_peak, abs=1e-9)
    assert f.min() >= HOTSPOT_CHANNEL.sinr_base


def test_trace_determinism_and_timing():
    a = generate_synthetic_trace(HOTSPOT_CHANNEL, 100.0, seed=5)
    b = generate_synthetic_trace(HOTSPOT_CHANNEL, 100.0, seed=5)
    c = generate_synthetic_trace(HOTSPOT_CHANNEL, 100.0, seed=6)
    assert a == b and a != c
    assert [x.timestamp for x in a] == [float(k) for k in range(101)]


def test_trace_rsrq_consistent():
    for c in generate_synthetic_trace(ChannelModelConfig(sinr_noise_db=2.0), 60.0, seed=2):
        assert c.rsrq == pytest.approx(oracles.rsrq(c.n_prb, c.rsrp, c.rssi), abs=1e-9)


def test_trace_errors():
    with pytest.raises(ValueError):
        generate_synthetic_trace(QUIET, 0.0)
    with pytest.raises(ValueError, match="route"):
        generate_synthetic_trace(QUIET, 1000.0, route=default_route(100.0))
    with pytest.raises(ValueError):
        ChannelModelConfig(field="spiral")


def test_labeled_samples():
    trace = generate_synthetic_trace(QUIET, 30.0, seed=0)
    lab = generate_labeled_samples(QUIET, trace, seed=1)
    assert all(5e4 <= c.payload <= 6e6 and c.datarate > 0 and c.txpower <= 23.0 for c in lab)
    for c in lab:
        expect = max_rate(QUIET, c.sinr) * c.payload / (c.payload + QUIET.s_half)
        assert c.datarate == pytest.approx(expect, rel=1e-12)
    assert lab == generate_labeled_samples(QUIET, trace, seed=1)
