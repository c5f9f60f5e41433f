"""Context-predictive CAT: the exponent factor from the expected metric change."""

from __future__ import annotations

from typing import Callable, NamedTuple, Optional, Union

from .cat import Assessment, SchedulerTimers, _probability
from .connmap import ConnectivityMap
from .mobility import MatchError


class PredictionOutcome(NamedTuple):
    predicted_phi: Optional[float]  # None: map miss
    delta_phi: Optional[float]
    fallback: bool


def delta_phi(predicted_phi: float, current_phi: float) -> float:
    return predicted_phi - current_phi


def pcat_exponent_factor(delta_phi: float, theta: float, beta: float) -> float:
    """Exponent factor z: >= 1 when an improvement is expected, <= 1 otherwise."""
    if delta_phi > 0:
        return max(abs(delta_phi * (1.0 - theta) * beta), 1.0)
    return 1.0 / max(abs(delta_phi * theta * beta), 1.0)


def pcat_probability(theta: float, clamp_high: bool, delta_t: float, timers: SchedulerTimers,
                     alpha: float, z: float) -> Assessment:
    """CAT probability with exponent ``alpha * z``; forced branches ignore z."""
    if not z > 0:
        raise ValueError("z must be positive")
    return _probability(theta, clamp_high, delta_t, timers, alpha * z)


MetricOfContext = Callable[[dict], float]


def predict_context(conn_map: ConnectivityMap, predict_position: Callable[[float], object],
                    tau: float, indicator: Union[str, MetricOfContext],
                    current_phi: float) -> PredictionOutcome:
    """Mobility prediction, then map lookup, then the expected metric change.

    ``predict_position(tau)`` returns the forecast position and raises
    :class:`~catsim.mobility.MatchError` (or returns ``None``) on failure.
    ``indicator`` is a layer name or a function of the looked-up cell means,
    e.g. a data-rate model evaluated on the predicted context.
    Any failure yields ``fallback=True`` and the caller applies plain CAT.
    """
    try:
        position = predict_position(tau)
    except MatchError:
        position = None
    if position is None:
        return PredictionOutcome(None, None, True)

    if isinstance(indicator, str):
        predicted = conn_map.lookup(position, indicator)
    else:
        cell = conn_map.lookup_context(position)
        predicted = None if cell is None else indicator(cell)
    if predicted is None:
        return PredictionOutcome(None, None, True)
    return PredictionOutcome(predicted, delta_phi(predicted, current_phi), False)
