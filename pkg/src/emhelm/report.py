"""CSV rows and SVG figures for experiment output."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

__all__ = ["Record", "COLUMNS", "fmt", "write_csv", "read_csv", "plot_series"]

COLUMNS = ("experiment", "family", "d", "n", "L", "lambda", "epsilon", "delta", "diagnostic", "value", "status")
NA = "na"


@dataclass(frozen=True)
class Record:
    experiment: str
    family: str
    d: int
    n: int
    L: float
    lam: float | None
    eps: float | None
    delta: float | None
    diagnostic: str
    value: float | None
    status: str = "ok"

    def as_row(self) -> list[str]:
        value, status = self.value, self.status
        if value is None or (isinstance(value, float) and math.isnan(value)):
            value, status = None, ("degenerate" if status == "ok" else status)
        return [self.experiment, self.family, str(self.d), str(self.n), fmt(self.L), fmt(self.lam),
                fmt(self.eps), fmt(self.delta), self.diagnostic, fmt(value), status]


def fmt(x) -> str:
    """12 significant digits; ``na`` for missing values."""
    if x is None:
        return NA
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, int):
        return str(x)
    x = float(x)
    if math.isnan(x):
        return NA
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.12g}"


def write_csv(records: Iterable[Record], path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COLUMNS)
        for r in records:
            w.writerow(r.as_row())
    return path


def read_csv(path: str | Path) -> list[dict]:
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))


def plot_series(series: dict, path: str | Path, xlabel: str, ylabel: str, title: str = "",
                logx: bool = True, logy: bool = True) -> Path:
    """One polyline per entry of ``series`` (label -> (x, y)), saved as SVG."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with matplotlib.rc_context({"svg.hashsalt": "emhelm", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(5.0, 3.6))
        for label in sorted(series):
            x, y = series[label]
            ax.plot(x, y, marker="o", ms=3, label=label)
        if logx:
            ax.set_xscale("log")
        if logy:
            ax.set_yscale("log")
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        if len(series) > 1:
            ax.legend(fontsize=7)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
    return path

