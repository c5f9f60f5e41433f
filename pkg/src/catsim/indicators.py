"""LTE downlink indicators, channel contexts and the CSV trace format."""

from __future__ import annotations

import csv
import io
import math
import warnings
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import IO, Iterable, Mapping, Optional, Sequence

EARTH_RADIUS_M = 6371008.8

# Indicator fields that are carried forward when a row leaves them empty.
# RSSI is not held: a stale RSSI next to a fresh RSRQ would break the RSRQ relation.
HOLD_FIELDS = ("rsrp", "rsrq", "sinr", "cqi", "v", "n_prb", "heading")

KNOWN_COLUMNS = frozenset(
    {"t", "x", "y", "lat", "lon", "v", "rsrp", "rsrq", "rssi", "sinr", "cqi",
     "n_prb", "payload", "datarate", "txpower", "heading"}
)
ALIASES = {"timestamp": "t", "velocity": "v"}
REQUIRED = ("t", "rsrp", "rsrq", "sinr", "cqi", "v")


class TraceError(ValueError):
    """Malformed trace input. ``row`` is the 1-based data row, if known."""

    def __init__(self, message: str, row: Optional[int] = None):
        self.row = row
        super().__init__(message if row is None else f"row {row}: {message}")


class TraceWarning(UserWarning):
    pass


@dataclass(frozen=True)
class PlanarPoint:
    """Position in the local planar frame, meters.

    ``x`` points north and ``y`` east, so a compass heading ``h`` maps to the
    direction ``(cos h, sin h)``.
    """

    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite coordinates ({self.x}, {self.y})")

    def __iter__(self):
        yield self.x
        yield self.y

    def distance_to(self, other: "PlanarPoint") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


def compute_rsrq(n_prb: int, rsrp: float, rssi: float) -> float:
    """RSRQ [dB] from the number of PRBs, RSRP [dBm] and RSSI [dBm]."""
    if n_prb < 1:
        raise ValueError(f"n_prb must be >= 1, got {n_prb}")
    if not (math.isfinite(rsrp) and math.isfinite(rssi)):
        raise ValueError("rsrp and rssi must be finite")
    return 10.0 * math.log10(n_prb) + rsrp - rssi


@dataclass(frozen=True)
class ChannelContext:
    """One timestamped sample of downlink indicators plus kinematics."""

    timestamp: float
    rsrp: float
    rsrq: float
    sinr: float
    cqi: int
    position: PlanarPoint
    velocity: float
    rssi: Optional[float] = None
    n_prb: Optional[int] = None
    heading: Optional[float] = None
    payload: Optional[float] = None
    datarate: Optional[float] = None
    txpower: Optional[float] = None
    # consecutive carried-forward samples per field, diagnostics only
    staleness: Mapping[str, int] = field(
        default_factory=lambda: MappingProxyType({}), compare=False, repr=False
    )

    def __post_init__(self):
        if not 0 <= self.cqi <= 15:
            raise ValueError(f"cqi out of range [0, 15]: {self.cqi}")
        if not self.velocity >= 0:
            raise ValueError(f"velocity must be >= 0, got {self.velocity}")
        for name in ("timestamp", "rsrp", "rsrq", "sinr"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.rssi is not None and self.n_prb is not None:
            expected = compute_rsrq(self.n_prb, self.rsrp, self.rssi)
            if abs(expected - self.rsrq) > 1e-9:
                raise ValueError(
                    f"rsrq {self.rsrq} inconsistent with rsrp/rssi/n_prb (expected {expected})"
                )

    def indicator(self, name: str) -> float:
        if name == "cqi":
            return float(self.cqi)
        return getattr(self, name)


def project_latlon(lat: float, lon: float, lat0: float, lon0: float) -> tuple[float, float]:
    """Equirectangular projection onto the tangent plane at ``(lat0, lon0)``.

    Returns ``(north, east)`` in meters, i.e. ``(x, y)`` of the local frame.
    """
    north = math.radians(lat - lat0) * EARTH_RADIUS_M
    east = math.radians(lon - lon0) * EARTH_RADIUS_M * math.cos(math.radians(lat0))
    return north, east


def _canonical(name: str) -> str:
    name = name.strip().lower()
    return ALIASES.get(name, name)


def parse_trace(source: IO | str | bytes) -> list[ChannelContext]:
    """Read a CSV trace into contexts ordered by strictly increasing time.

    ``source`` may be a text or binary stream, raw bytes, or CSV text.
    Empty indicator cells repeat the previous sample (zero-order hold).
    """
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    if isinstance(source, str):
        source = io.StringIO(source)
    elif isinstance(source, io.BufferedIOBase) or "b" in getattr(source, "mode", ""):
        source = io.TextIOWrapper(source, encoding="utf-8")

    reader = csv.reader(source)
    try:
        header = [_canonical(h) for h in next(reader)]
    except StopIteration:
        raise TraceError("empty trace: header row missing") from None

    unknown = [h for h in header if h not in KNOWN_COLUMNS]
    if unknown:
        warnings.warn(f"ignoring unknown trace columns: {', '.join(unknown)}", TraceWarning,
                      stacklevel=2)
    cols = {h: i for i, h in enumerate(header) if h in KNOWN_COLUMNS}

    missing = [c for c in REQUIRED if c not in cols]
    has_xy = "x" in cols and "y" in cols
    has_ll = "lat" in cols and "lon" in cols
    if has_xy == has_ll:
        missing.append("x,y" if not has_xy else "exactly one of {x,y} / {lat,lon}")
    if missing:
        raise TraceError(f"trace schema missing fields: {', '.join(missing)}")

    contexts: list[ChannelContext] = []
    held: dict[str, float] = {}
    stale: dict[str, int] = {}
    anchor = None
    for rowno, row in enumerate(reader, start=1):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise TraceError(f"expected {len(header)} fields, found {len(row)}", rowno)
        values: dict[str, Optional[float]] = {}
        for name, i in cols.items():
            cell = row[i].strip()
            if not cell:
                values[name] = None
                continue
            try:
                values[name] = float(cell)
            except ValueError:
                raise TraceError(f"column {name!r}: cannot parse {cell!r}", rowno) from None

        for name in HOLD_FIELDS:
            if name not in cols:
                continue
            if values[name] is None:
                if name not in held:
                    if name in REQUIRED:
                        raise TraceError(f"column {name!r} empty with no earlier value", rowno)
                    continue
                values[name] = held[name]
                stale[name] = stale.get(name, 0) + 1
            else:
                held[name] = values[name]
                stale[name] = 0

        if values["t"] is None:
            raise TraceError("timestamp missing", rowno)
        if has_xy:
            if values["x"] is None or values["y"] is None:
                raise TraceError("position missing", rowno)
            x, y = values["x"], values["y"]
        else:
            if values["lat"] is None or values["lon"] is None:
                raise TraceError("position missing", rowno)
            if anchor is None:
                anchor = (values["lat"], values["lon"])
            x, y = project_latlon(values["lat"], values["lon"], *anchor)

        if contexts and not values["t"] > contexts[-1].timestamp:
            raise TraceError(
                f"timestamps must increase strictly ({values['t']!r} after "
                f"{contexts[-1].timestamp!r})", rowno)

        cqi = values["cqi"]
        n_prb = values.get("n_prb")
        try:
            if cqi != int(cqi) or (n_prb is not None and n_prb != int(n_prb)):
                raise ValueError("cqi and n_prb must be integers")
            ctx = ChannelContext(
                timestamp=values["t"],
                rsrp=values["rsrp"],
                rsrq=values["rsrq"],
                sinr=values["sinr"],
                cqi=int(cqi),
                position=PlanarPoint(x, y),
                velocity=values["v"],
                rssi=values.get("rssi"),
                n_prb=None if n_prb is None else int(n_prb),
                heading=values.get("heading"),
                payload=values.get("payload"),
                datarate=values.get("datarate"),
                txpower=values.get("txpower"),
                staleness=MappingProxyType({k: v for k, v in stale.items() if v}),
            )
        except ValueError as exc:
            raise TraceError(str(exc), rowno) from None
        contexts.append(ctx)
    return contexts


def read_trace(path) -> list[ChannelContext]:
    with open(path, newline="", encoding="utf-8") as fh:
        return parse_trace(fh)


_OPTIONAL = ("rssi", "n_prb", "heading", "payload", "datarate", "txpower")


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, int):
        return str(value)
    return repr(float(value))


def serialize_trace(contexts: Sequence[ChannelContext], out: Optional[IO[str]] = None) -> str:
    """Write contexts in the planar CSV trace format; returns the text."""
    present = [name for name in _OPTIONAL if any(getattr(c, name) is not None for c in contexts)]
    header = ["t", "x", "y", "v", "rsrp", "rsrq", "sinr", "cqi", *present]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for c in contexts:
        writer.writerow(
            [_fmt(c.timestamp), _fmt(c.position.x), _fmt(c.position.y), _fmt(c.velocity),
             _fmt(c.rsrp), _fmt(c.rsrq), _fmt(c.sinr), _fmt(c.cqi)]
            + [_fmt(getattr(c, name)) for name in present]
        )
    text = buf.getvalue()
    if out is not None:
        out.write(text)
    return text


def write_trace(path, contexts: Iterable[ChannelContext]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        serialize_trace(list(contexts), fh)
