"""Channel-aware and context-predictive vehicular data transmission."""

from ._kernels import BACKEND
from .cat import Cause, SchedulerTimers, cat_probability
from .connmap import ConnectivityMap
from .indicators import ChannelContext, PlanarPoint, parse_trace, read_trace
from .metric import DEFAULT_SPECS, MetricSpec, normalize
from .mobility import Trajectory
from .pcat import pcat_probability
from .predictor import RegressionModel, train_linear, train_model_tree
from .sim import KpiReport, ScenarioConfig, Scheme, run_scenario

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "Cause", "ChannelContext", "ConnectivityMap", "DEFAULT_SPECS", "KpiReport",
    "MetricSpec", "PlanarPoint", "RegressionModel", "ScenarioConfig", "SchedulerTimers", "Scheme",
    "Trajectory", "cat_probability", "normalize", "parse_trace", "pcat_probability", "read_trace",
    "run_scenario", "train_linear", "train_model_tree",
]
