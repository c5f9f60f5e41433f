import pytest
from hypothesis import given, strategies as st

import oracles
from catsim.cat import Cause, SchedulerTimers, cat_probability
from catsim.connmap import ConnectivityMap
from catsim.indicators import ChannelContext, PlanarPoint
from catsim.mobility import MatchError
from catsim.pcat import delta_phi, pcat_exponent_factor, pcat_probability, predict_context

T = SchedulerTimers()


def test_delta_phi():
    assert delta_phi(10, 10) == 0
    assert delta_phi(20, 10) == 10
    assert delta_phi(-95, -85) == -10


def test_exponent_factor_examples():
    assert pcat_exponent_factor(0.0, 0.3, 0.5) == 1.0
    assert pcat_exponent_factor(10.0, 0.5, 0.5) == 2.5
    assert pcat_exponent_factor(-10.0, 0.5, 0.5) == 0.4


@given(st.floats(-100, 100), st.floats(0, 1), st.floats(0, 5))
def test_exponent_factor_oracle_and_sign(d, theta, beta):
    z = pcat_exponent_factor(d, theta, beta)
    assert z == pytest.approx(oracles.z_factor(d, theta, beta), rel=1e-12)
    assert z >= 1.0 if d > 0 else 0.0 < z <= 1.0


def test_probability_examples():
    assert pcat_probability(0.5, False, 30.0, T, 8.0, 1.0) == cat_probability(0.5, False, 30.0, T, 8.0)
    assert pcat_probability(0.5, False, 30.0, T, 8.0, 1.0).probability == 0.00390625
    assert pcat_probability(0.5, False, 30.0, T, 8.0, 2.5).probability == pytest.approx(9.5367431640625e-07, rel=1e-12)
    assert pcat_probability(0.5, False, 30.0, T, 8.0, 0.4).probability == pytest.approx(0.1088188204120155, rel=1e-12)


def test_forced_branches_ignore_z():
    assert pcat_probability(0.1, False, 130.0, T, 8.0, 50.0) == (1.0, Cause.FORCED_TMAX)
    assert pcat_probability(1.0, True, 30.0, T, 8.0, 50.0) == (1.0, Cause.FORCED_PHIMAX)
    assert pcat_probability(0.9, False, 3.0, T, 8.0, 0.01) == (0.0, Cause.BELOW_TMIN)
    with pytest.raises(ValueError):
        pcat_probability(0.5, False, 30.0, T, 8.0, 0.0)


@given(st.floats(0.01, 0.99), st.floats(10.5, 120))
def test_non_increasing_in_delta_phi(theta, dt):
    ps = [pcat_probability(theta, False, dt, T, 4.0, pcat_exponent_factor(d, theta, 0.5)).probability
          for d in (-20, -10, 0, 10, 20)]
    assert all(a >= b for a, b in zip(ps, ps[1:]))


def seeded_map():
    m = ConnectivityMap()
    m.insert(ChannelContext(timestamp=0, rsrp=-90, rsrq=-8, sinr=12.0, cqi=7,
                            position=PlanarPoint(110, 10), velocity=10))
    return m.freeze()


def test_predict_context_examples():
    hit = predict_context(seeded_map(), lambda tau: PlanarPoint(105, 5), 30, "sinr", 10.0)
    assert hit == (12.0, 2.0, False)
    assert predict_context(ConnectivityMap(), lambda tau: PlanarPoint(105, 5), 30, "sinr", 10.0).fallback

    def lost(tau):
        raise MatchError("off route")
    assert predict_context(seeded_map(), lost, 30, "sinr", 10.0).fallback
    assert predict_context(seeded_map(), lambda tau: None, 30, "sinr", 10.0).fallback


def test_predict_context_with_model_function():
    out = predict_context(seeded_map(), lambda tau: PlanarPoint(105, 5), 30, lambda cell: cell["sinr"] / 2, 4.0)
    assert out == (6.0, 2.0, False)
