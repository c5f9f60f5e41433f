import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles
from catsim.cat import Assessment, Cause, Decision, SchedulerTimers, cat_probability, decide, draw

T = SchedulerTimers()


def test_timer_defaults():
    assert (T.t_min, T.t_max, T.t_p) == (10.0, 120.0, 1.0)
    with pytest.raises(ValueError):
        SchedulerTimers(t_min=120, t_max=10)


def test_examples():
    assert cat_probability(0.9, False, 5.0, T, 8.0) == (0.0, Cause.BELOW_TMIN)
    assert cat_probability(0.5, False, 30.0, T, 8.0) == (0.00390625, Cause.PROBABILISTIC)
    assert cat_probability(0.2, False, 121.0, T, 8.0) == (1.0, Cause.FORCED_TMAX)


def test_boundaries():
    assert cat_probability(0.9, False, 10.0, T, 8.0).cause is Cause.BELOW_TMIN
    assert cat_probability(0.5, False, 120.0, T, 8.0).cause is Cause.PROBABILISTIC
    assert cat_probability(1.0, True, 50.0, T, 8.0) == (1.0, Cause.FORCED_PHIMAX)
    # timeout outranks the clamp
    assert cat_probability(1.0, True, 130.0, T, 8.0).cause is Cause.FORCED_TMAX
    assert cat_probability(1.0, True, 5.0, T, 8.0).cause is Cause.BELOW_TMIN


@given(st.floats(0, 1), st.floats(0, 300), st.sampled_from([1.0, 2.0, 4.0, 8.0, 16.0]))
def test_matches_oracle(theta, dt, alpha):
    p, _ = cat_probability(theta, False, dt, T, alpha)
    assert 0.0 <= p <= 1.0
    assert p == pytest.approx(oracles.cat_p(theta, dt, 10, 120, alpha), abs=1e-15)


@given(st.floats(0, 1), st.floats(0, 1), st.floats(10.001, 120))
def test_monotone_in_theta(a, b, dt):
    lo, hi = sorted((a, b))
    assert cat_probability(lo, False, dt, T, 8).probability <= cat_probability(hi, False, dt, T, 8).probability


def test_draw_extremes():
    rng = np.random.default_rng(0)
    assert not any(draw(0.0, rng) for _ in range(1000))
    assert all(draw(1.0, rng) for _ in range(1000))


def test_draw_frequency():
    rng = np.random.default_rng(42)
    frac = np.mean([draw(0.5, rng) for _ in range(100_000)])
    assert abs(frac - 0.5) <= 0.01


def test_draw_consumes_one_variate():
    a, b = np.random.default_rng(7), np.random.default_rng(7)
    draw(0.0, a)
    b.random()
    assert a.random() == b.random()


def test_draw_rejects_bad_probability():
    with pytest.raises(ValueError):
        draw(1.5, np.random.default_rng(0))


def test_decision_invariants():
    d = decide(Assessment(1.0, Cause.FORCED_TMAX), np.random.default_rng(0))
    assert d.transmit
    with pytest.raises(ValueError):
        Decision(0.5, True, Cause.BELOW_TMIN)
    with pytest.raises(ValueError):
        Decision(0.5, False, Cause.FORCED_PHIMAX)
