"""Multi-layer connectivity map: cell-wise indicator statistics from earlier drives."""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Optional

from .indicators import ChannelContext

DEFAULT_CELL_WIDTH = 25.0
LAYERS = ("rsrp", "rsrq", "sinr", "cqi")


class CellIndex(NamedTuple):
    ix: int
    iy: int


@dataclass
class CellStats:
    mean: float
    count: int
    m2: float = 0.0

    @property
    def variance(self) -> float:
        return self.m2 / self.count

    def add(self, value: float) -> None:
        # Welford update
        self.count += 1
        delta = value - self.mean
        self.mean += delta / self.count
        self.m2 += delta * (value - self.mean)

    def merge(self, other: "CellStats") -> None:
        # pairwise combination of two partial aggregates
        n = self.count + other.count
        delta = other.mean - self.mean
        self.mean += delta * other.count / n
        self.m2 += other.m2 + delta * delta * self.count * other.count / n
        self.count = n


def cell_index(position, cell_width: float) -> CellIndex:
    if not cell_width > 0:
        raise ValueError("cell_width must be positive")
    x, y = position
    return CellIndex(math.floor(x / cell_width), math.floor(y / cell_width))


class ConnectivityMap:
    """Per-indicator grid of running means keyed by :class:`CellIndex`.

    Built by a single writer through :meth:`insert`; :meth:`freeze` makes it
    read-only for shared lookups.
    """

    def __init__(self, cell_width: float = DEFAULT_CELL_WIDTH, layers: Iterable[str] = LAYERS):
        if not cell_width > 0:
            raise ValueError("cell_width must be positive")
        self.cell_width = float(cell_width)
        self.layers: dict[str, dict[CellIndex, CellStats]] = {name: {} for name in layers}
        self.frozen = False

    def _check_writable(self):
        if self.frozen:
            raise RuntimeError("connectivity map is frozen")

    def insert(self, context: ChannelContext) -> "ConnectivityMap":
        self._check_writable()
        cell = cell_index(context.position, self.cell_width)
        for name, layer in self.layers.items():
            value = context.indicator(name)
            if value is None:
                continue
            stats = layer.get(cell)
            if stats is None:
                layer[cell] = CellStats(float(value), 1)
            else:
                stats.add(float(value))
        return self

    def insert_all(self, contexts: Iterable[ChannelContext]) -> "ConnectivityMap":
        for ctx in contexts:
            self.insert(ctx)
        return self

    def merge(self, other: "ConnectivityMap") -> "ConnectivityMap":
        self._check_writable()
        if other.cell_width != self.cell_width:
            raise ValueError("cannot merge maps with different cell widths")
        for name, layer in other.layers.items():
            mine = self.layers.setdefault(name, {})
            for cell, stats in layer.items():
                if cell in mine:
                    mine[cell].merge(stats)
                else:
                    mine[cell] = CellStats(stats.mean, stats.count, stats.m2)
        return self

    def freeze(self) -> "ConnectivityMap":
        self.frozen = True
        return self

    def stats(self, position, indicator: str) -> Optional[CellStats]:
        return self.layers.get(indicator, {}).get(cell_index(position, self.cell_width))

    def lookup(self, position, indicator: str) -> Optional[float]:
        """Cell mean at ``position``, or ``None`` (a miss) if the cell is empty."""
        stats = self.stats(position, indicator)
        return None if stats is None else stats.mean

    def lookup_context(self, position) -> Optional[dict[str, float]]:
        """All layer means of the cell, or ``None`` unless every layer has data."""
        cell = cell_index(position, self.cell_width)
        out = {}
        for name, layer in self.layers.items():
            stats = layer.get(cell)
            if stats is None:
                return None
            out[name] = stats.mean
        return out

    def __len__(self):
        return max((len(layer) for layer in self.layers.values()), default=0)

    def write(self, directory) -> list[str]:
        """One ``<layer>.csv`` per layer with columns ix, iy, mean, count, m2."""
        os.makedirs(directory, exist_ok=True)
        written = []
        for name in sorted(self.layers):
            path = os.path.join(directory, f"{name}.csv")
            tmp = path + ".tmp"
            with open(tmp, "w", newline="", encoding="utf-8") as fh:
                fh.write(f"# cell_width={self.cell_width!r}\n")
                fh.write("ix,iy,mean,count,m2\n")
                for cell in sorted(self.layers[name]):
                    s = self.layers[name][cell]
                    fh.write(f"{cell.ix},{cell.iy},{s.mean!r},{s.count},{s.m2!r}\n")
            os.replace(tmp, path)
            written.append(path)
        return written

    @classmethod
    def read(cls, directory) -> "ConnectivityMap":
        names = sorted(n[:-4] for n in os.listdir(directory) if n.endswith(".csv"))
        if not names:
            raise ValueError(f"{directory}: no layer files")
        cmap = None
        for name in names:
            with open(os.path.join(directory, f"{name}.csv"), newline="", encoding="utf-8") as fh:
                first = fh.readline().strip()
                if not first.startswith("# cell_width="):
                    raise ValueError(f"{name}.csv: missing cell_width header")
                width = float(first.split("=", 1)[1])
                if cmap is None:
                    cmap = cls(width, layers=())
                elif width != cmap.cell_width:
                    raise ValueError("layer files disagree on cell width")
                layer = cmap.layers.setdefault(name, {})
                for row in csv.DictReader(fh):
                    count = int(row["count"])
                    if count < 1:
                        raise ValueError(f"{name}.csv: non-positive count")
                    layer[CellIndex(int(row["ix"]), int(row["iy"]))] = CellStats(
                        float(row["mean"]), count, float(row["m2"]))
        return cmap.freeze()


def build_map(traces: Iterable[Iterable[ChannelContext]], cell_width: float = DEFAULT_CELL_WIDTH,
              layers: Iterable[str] = LAYERS) -> ConnectivityMap:
    """Map from several drives whose content does not depend on their order.

    Cell means and squared deviations use exactly rounded sums, so any
    permutation of traces or samples yields bit-identical statistics.
    """
    cmap = ConnectivityMap(cell_width, layers)
    values: dict[str, dict[CellIndex, list[float]]] = {name: {} for name in cmap.layers}
    for trace in traces:
        for ctx in trace:
            cell = cell_index(ctx.position, cmap.cell_width)
            for name in cmap.layers:
                values[name].setdefault(cell, []).append(float(ctx.indicator(name)))
    for name, cells in values.items():
        for cell, vals in cells.items():
            mean = math.fsum(vals) / len(vals)
            cmap.layers[name][cell] = CellStats(mean, len(vals), math.fsum((v - mean) ** 2 for v in vals))
    return cmap


def pfr(hits: int, misses: int) -> float:
    """Prediction failure ratio."""
    total = hits + misses
    if total <= 0:
        raise ValueError("pfr needs at least one prediction attempt")
    return misses / total
