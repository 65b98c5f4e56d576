"""Figure specifications: which CSV columns land on which panel axes.

A FigureSpec never computes physics; curves are either a single CSV column
or a declared presentation transform of columns (currently only the complex
magnitude of a (re, im) column pair).  Scenario styling mirrors the source
figures: phonon-free runs dashed, finite-temperature runs solid.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field

import numpy as np


class PlotDataError(RuntimeError):
    pass


@dataclass(frozen=True)
class Curve:
    column: str                      # CSV column, or 'mag' with parts set
    label: str
    parts: tuple[str, str] | None = None   # (re, im) for magnitude curves

    def required_columns(self):
        return list(self.parts) if self.parts else [self.column]


@dataclass(frozen=True)
class Panel:
    key: str
    title: str
    x: str
    curves: tuple[Curve, ...]
    ylabel: str
    yscale: str = "linear"


@dataclass
class FigureSpec:
    name: str
    panels: tuple[Panel, ...]
    xlabel: str
    inputs: dict = field(default_factory=dict)    # scenario label -> csv path
    styles: dict = field(default_factory=dict)    # scenario label -> mpl kwargs


def scenario_style(label: str) -> dict:
    dashed = "no_epi" in label.lower().replace(" ", "_")
    return {"linestyle": "--" if dashed else "-", "linewidth": 1.4}


def read_sweep_csv(path: str) -> dict:
    """Read one sweep CSV: '#' comments, header row, 12-digit numeric cells.

    Returns {'columns': [...], 'data': {col: float array (NaN for empty)},
    'scenario': label-from-comment-or-filename}.
    """
    if not os.path.exists(path):
        raise PlotDataError(f"input CSV not found: {path}")
    scenario = None
    rows = []
    header = None
    with open(path) as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("#"):
                if "scenario:" in line:
                    scenario = line.split("scenario:", 1)[1].strip()
                continue
            if not line.strip():
                continue
            cells = next(csv.reader([line]))
            if header is None:
                header = cells
            else:
                rows.append(cells)
    if header is None or not rows:
        raise PlotDataError(f"CSV has no data rows: {path}")
    data = {}
    for j, col in enumerate(header):
        if col == "error":
            data[col] = np.array([r[j] if j < len(r) else "" for r in rows],
                                 dtype=object)
            continue
        vals = []
        for r in rows:
            cell = r[j] if j < len(r) else ""
            vals.append(float(cell) if cell not in ("", None) else math.nan)
        data[col] = np.asarray(vals, dtype=float)
    if scenario is None:
        scenario = os.path.splitext(os.path.basename(path))[0]
    return {"columns": header, "data": data, "scenario": scenario}


def curve_values(table: dict, curve: Curve, path: str) -> np.ndarray:
    for col in curve.required_columns():
        if col not in table["columns"]:
            raise PlotDataError(
                f"column '{col}' missing from {path} (needed by curve "
                f"'{curve.label}')")
    if curve.parts:
        re, im = (table["data"][c] for c in curve.parts)
        return np.hypot(re, im)
    return table["data"][curve.column]
