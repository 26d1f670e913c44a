"""Trend figures from riswipt sweep CSVs.

Consumes only the public CSV contract: a `# riswipt-csv v1` schema line, a
header row, and per-run rows with scheme / sweep_value / status / wsr_bits
columns.  Means follow the same rule the producer documents: rows whose
status is not `converged` are failures and drop out of the mean.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")  # deterministic offscreen rendering

import matplotlib.pyplot as plt
import numpy as np

KINDS = ("power", "ris_location", "elements")

AXIS_LABELS = {
    "power": ("total power (dBm)", "weighted sum rate (bit/s/Hz)"),
    "ris_location": ("surface x-coordinate (m)", "weighted sum rate (bit/s/Hz)"),
    "elements": ("reflecting elements", "weighted sum rate (bit/s/Hz)"),
}

SCHEME_STYLES = {
    "active": {"color": "#c0392b", "marker": "o", "label": "amplifying surface"},
    "passive": {"color": "#2980b9", "marker": "s", "label": "reflective surface"},
    "none": {"color": "#7f8c8d", "marker": "^", "label": "no surface"},
}

REQUIRED_COLUMNS = ("scheme", "sweep_value", "status", "wsr_bits")


class FormatError(Exception):
    """The CSV does not follow the documented contract."""


@dataclass(frozen=True)
class FigureSpec:
    csv_paths: tuple[str, ...]
    kind: str
    out_path: str
    styles: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise FormatError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if not self.csv_paths:
            raise FormatError("need at least one input CSV")


def read_rows(path) -> list[dict]:
    with open(path, "r", encoding="utf-8") as fh:
        first = fh.readline()
        if not first.startswith("# riswipt-csv"):
            raise FormatError(f"{path}: missing schema line")
        reader = csv.DictReader(fh)
        fields = reader.fieldnames or ()
        missing = [c for c in REQUIRED_COLUMNS if c not in fields]
        if missing:
            raise FormatError(f"{path}: missing required columns {missing}")
        rows = list(reader)
    for row in rows:
        try:
            row["sweep_value"] = float(row["sweep_value"])
            row["wsr_bits"] = float(row["wsr_bits"])
        except (TypeError, ValueError) as ex:
            raise FormatError(f"{path}: malformed row: {ex}") from ex
    return rows


def converged_means(rows) -> dict[str, dict[float, float]]:
    """scheme -> {sweep value -> mean converged WSR}; empty cells are nan."""
    cells: dict[tuple, list] = {}
    for row in rows:
        key = (row["scheme"], row["sweep_value"])
        cells.setdefault(key, []).append(row)
    out: dict[str, dict[float, float]] = {}
    for (scheme, value), bucket in cells.items():
        good = [r["wsr_bits"] for r in bucket if r["status"] == "converged"]
        out.setdefault(scheme, {})[value] = float(np.mean(good)) if good else float("nan")
    return out


def render(spec: FigureSpec) -> str:
    """Draw one line per scheme of trial-averaged WSR; returns the image path."""
    rows = []
    for path in spec.csv_paths:
        rows.extend(read_rows(path))
    means = converged_means(rows)
    if not means:
        raise FormatError("no rows to plot")

    fig, axis = plt.subplots(figsize=(5.4, 3.8), dpi=150)
    for scheme in sorted(means):
        series = means[scheme]
        xs = sorted(series)
        ys = [series[x] for x in xs]
        style = dict(SCHEME_STYLES.get(scheme, {"marker": "x", "label": scheme}))
        style.update(spec.styles.get(scheme, {}))
        axis.plot(xs, ys, markersize=4.5, linewidth=1.4, **style)
    xlabel, ylabel = AXIS_LABELS[spec.kind]
    axis.set_xlabel(xlabel)
    axis.set_ylabel(ylabel)
    axis.grid(True, alpha=0.3)
    axis.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(spec.out_path, metadata={"Software": "figgen"})
    plt.close(fig)
    return spec.out_path
