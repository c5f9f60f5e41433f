"""Future-position forecasting: GPS extrapolation and trajectory-based prediction."""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from . import _kernels
from .indicators import PlanarPoint

DEFAULT_SNAP_RADIUS = 50.0
DEFAULT_RESAMPLE_SPACING = 5.0
DEFAULT_HEADING_WEIGHT = 1.0  # meters per degree


class MatchError(ValueError):
    """The position is farther than the snap radius from the trajectory."""


class Trajectory:
    """Immutable polyline with cumulative arc length per waypoint."""

    __slots__ = ("waypoints", "cumulative_distance")

    def __init__(self, waypoints):
        pts = np.array(waypoints, dtype=np.float64).reshape(-1, 2)
        if len(pts) < 2:
            raise ValueError("a trajectory needs at least two waypoints")
        if not np.all(np.isfinite(pts)):
            raise ValueError("waypoints must be finite")
        seg = np.hypot(*np.diff(pts, axis=0).T)
        if np.any(seg <= 0):
            raise ValueError("consecutive waypoints must differ")
        cum = np.concatenate([[0.0], np.cumsum(seg)])
        pts.flags.writeable = False
        cum.flags.writeable = False
        object.__setattr__(self, "waypoints", pts)
        object.__setattr__(self, "cumulative_distance", cum)

    def __setattr__(self, name, value):
        raise AttributeError("Trajectory is immutable")

    def __len__(self):
        return len(self.waypoints)

    def __repr__(self):
        return f"Trajectory({len(self)} waypoints, {self.length:.1f} m)"

    @property
    def length(self) -> float:
        return float(self.cumulative_distance[-1])

    def project(self, point) -> tuple[float, float, int]:
        """``(arc_length, distance, segment)`` of the nearest point on the polyline."""
        x, y = point
        return _kernels.project_polyline(self.waypoints, self.cumulative_distance, float(x), float(y))

    def point_at(self, s: float) -> tuple[PlanarPoint, bool]:
        """Point at arc length ``s`` (clamped to the ends) and an overshoot flag."""
        cum = self.cumulative_distance
        if s >= cum[-1]:
            x, y = self.waypoints[-1]
            return PlanarPoint(float(x), float(y)), s > cum[-1]
        if s <= 0:
            x, y = self.waypoints[0]
            return PlanarPoint(float(x), float(y)), False
        # segment i..j with cum[i] <= s < cum[j]
        i = int(np.searchsorted(cum, s, side="right")) - 1
        wi, wj = self.waypoints[i], self.waypoints[i + 1]
        d_ij = cum[i + 1] - cum[i]
        # offset past W_i is d_ij minus the overshoot beyond W_j, so it stays in [0, d_ij)
        offset = d_ij - (cum[i + 1] - s)
        p = wi + (wj - wi) / d_ij * offset
        return PlanarPoint(float(p[0]), float(p[1])), False

    def heading_at(self, segment: int) -> float:
        """Heading of a segment in degrees, using the (cos, sin) convention."""
        dx, dy = self.waypoints[segment + 1] - self.waypoints[segment]
        return math.degrees(math.atan2(dy, dx)) % 360.0


@dataclass(frozen=True)
class MobilityFix:
    position: PlanarPoint
    heading_deg: float
    velocity: float

    def __post_init__(self):
        if not self.velocity >= 0:
            raise ValueError("velocity must be non-negative")
        if not 0.0 <= self.heading_deg < 360.0:
            raise ValueError("heading must lie in [0, 360)")


class TrajectoryPrediction(NamedTuple):
    position: PlanarPoint
    arc_length: float
    overshoot: bool


def extrapolate_gps(fix: MobilityFix, tau: float) -> PlanarPoint:
    """Dead reckoning: move ``tau * velocity`` along the current heading."""
    if tau < 0:
        raise ValueError("tau must be non-negative")
    lam = math.radians(fix.heading_deg)
    step = tau * fix.velocity
    return PlanarPoint(fix.position.x + math.cos(lam) * step,
                       fix.position.y + math.sin(lam) * step)


def predict_along_trajectory(traj: Trajectory, current_position, velocity: float, tau: float,
                             snap_radius: float = DEFAULT_SNAP_RADIUS) -> TrajectoryPrediction:
    """Walk ``velocity * tau`` meters along ``traj`` from the projection of the current position."""
    if velocity < 0 or tau < 0:
        raise ValueError("velocity and tau must be non-negative")
    s0, dist, _ = traj.project(current_position)
    if dist > snap_radius:
        raise MatchError(f"position is {dist:.1f} m from the trajectory (snap radius {snap_radius} m)")
    s = s0 + velocity * tau
    point, overshoot = traj.point_at(s)
    return TrajectoryPrediction(point, min(s, traj.length), overshoot)


def resample(traj: Trajectory, count: int) -> np.ndarray:
    """``count`` points at equal arc-length fractions k/(count-1)."""
    s = np.linspace(0.0, traj.length, count)
    cum = traj.cumulative_distance
    x = np.interp(s, cum, traj.waypoints[:, 0])
    y = np.interp(s, cum, traj.waypoints[:, 1])
    return np.column_stack([x, y])


def build_mean_trajectory(trips: Sequence[Trajectory],
                          spacing: float = DEFAULT_RESAMPLE_SPACING) -> Trajectory:
    """Segment-wise mean of several trips over the same route."""
    trips = list(trips)
    if not trips:
        raise ValueError("at least one trip is required")
    mean_length = sum(t.length for t in trips) / len(trips)
    count = max(2, int(round(mean_length / spacing)) + 1)
    stacked = np.stack([resample(t, count) for t in trips])
    # sort along the trip axis so the float sum does not depend on input order
    stacked = np.sort(stacked, axis=0)
    mean = stacked.mean(axis=0)
    keep = np.concatenate([[True], np.any(np.diff(mean, axis=0) != 0, axis=1)])
    return Trajectory(mean[keep])


def _angle_diff(a: float, b: float) -> float:
    d = abs(a - b) % 360.0
    return min(d, 360.0 - d)


def match_trip(candidates: Sequence[Trajectory], fix: MobilityFix,
               heading_weight: float = DEFAULT_HEADING_WEIGHT) -> Trajectory:
    """Candidate with the lowest distance + weighted heading mismatch."""
    if not candidates:
        raise ValueError("no candidate trajectories")
    best, best_score = None, math.inf
    for traj in candidates:
        _, dist, seg = traj.project(fix.position)
        score = dist + heading_weight * _angle_diff(fix.heading_deg, traj.heading_at(seg))
        if score < best_score:
            best, best_score = traj, score
    return best


def read_trajectory(path) -> Trajectory:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"x", "y"} <= {f.strip() for f in reader.fieldnames}:
            raise ValueError(f"{path}: trajectory CSV needs x,y columns")
        pts = [(float(r["x"]), float(r["y"])) for r in reader]
    return Trajectory(pts)


def write_trajectory(path, traj: Trajectory) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write("x,y\n")
        for x, y in traj.waypoints:
            fh.write(f"{float(x)!r},{float(y)!r}\n")


def read_trip_directory(path) -> list[Trajectory]:
    names = sorted(n for n in os.listdir(path) if n.endswith(".csv"))
    if not names:
        raise ValueError(f"{path}: no trip CSV files")
    return [read_trajectory(os.path.join(path, n)) for n in names]
