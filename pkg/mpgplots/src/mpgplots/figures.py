"""Render figures from learning-run CSV traces.

Input files follow the harness trace schema: one row per recorded
iteration with columns ``k, ne_gap, phi, c_k, delta_k, l1, seed,
learner, eta``.  Four figure kinds are supported:

- ``diagnostics``: NE-gap together with the c^k and delta^k series of a
  single run, medians across seed files.
- ``learning_curve``: one NE-gap curve per learner, medians across
  seed files, gap on a log axis.
- ``l1_band``: L1 distance to the reference profile per learner, median
  line with a min-to-max band across seeds.
- ``delta_sweep``: one NE-gap curve per input file, labeled by the
  equilibrium margin parsed from the file name.

Rendering is a pure function of the CSV bytes and the figure spec: the
style is fixed and no timestamps are embedded, so repeated invocations
produce byte-identical output files.
"""

from __future__ import annotations

import csv
import glob
import os
import re
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "mpgplots"

import numpy as np
from matplotlib import pyplot as plt
from matplotlib.figure import Figure

FIGURE_KINDS = ("diagnostics", "learning_curve", "l1_band", "delta_sweep")

REQUIRED_COLUMNS = {
    "diagnostics": ("k", "ne_gap", "c_k", "delta_k"),
    "learning_curve": ("k", "ne_gap", "learner", "seed"),
    "l1_band": ("k", "l1", "learner", "seed"),
    "delta_sweep": ("k", "ne_gap"),
}

# axis scale defaults per kind; the gap spans orders of magnitude while
# the L1 distance is bounded by 2n
LOG_Y_DEFAULT = {
    "diagnostics": True,
    "learning_curve": True,
    "l1_band": False,
    "delta_sweep": True,
}

# metadata overrides that strip the per-run fields matplotlib would
# otherwise embed
_METADATA = {
    ".svg": {"Date": None},
    ".pdf": {"CreationDate": None},
    ".png": {},
}


class PlotError(ValueError):
    """Raised for bad figure specs or malformed input tables."""


@dataclass(frozen=True)
class FigureSpec:
    """What to draw: input CSV paths or globs, figure kind, output path."""

    inputs: Tuple[str, ...]
    kind: str
    output: str
    log_x: bool = False
    log_y: Optional[bool] = None  # None means the kind's default
    title: Optional[str] = None

    def __post_init__(self):
        if self.kind not in FIGURE_KINDS:
            raise PlotError(
                f"unknown figure kind {self.kind!r}; expected one of {FIGURE_KINDS}"
            )
        if not self.inputs:
            raise PlotError("at least one input CSV path or glob is required")
        ext = os.path.splitext(self.output)[1].lower()
        if ext not in _METADATA:
            raise PlotError(
                f"unsupported output format {ext!r}; use one of {sorted(_METADATA)}"
            )


@dataclass
class Trace:
    """One CSV file: numeric columns as arrays plus the learner label."""

    path: str
    learner: str
    seed: int
    data: Dict[str, np.ndarray]


def expand_inputs(patterns: Sequence[str]) -> List[str]:
    """Resolve globs and literal paths into a sorted, deduplicated list."""
    paths: List[str] = []
    for pat in patterns:
        hits = sorted(glob.glob(pat))
        if not hits:
            raise PlotError(f"input pattern {pat!r} matched no files")
        paths.extend(hits)
    seen = set()
    out = []
    for p in paths:
        if p not in seen:
            seen.add(p)
            out.append(p)
    return out


def load_trace(path: str, required: Sequence[str]) -> Trace:
    """Read one trace CSV and check the columns the figure needs."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in required if c not in header]
        if missing:
            raise PlotError(f"{path}: missing required columns {missing}")
        rows = list(reader)
    if not rows:
        raise PlotError(f"{path}: no data rows")
    data = {}
    for col in header:
        if col == "learner":
            continue
        try:
            data[col] = np.array([float(r[col]) for r in rows])
        except (TypeError, ValueError) as exc:
            raise PlotError(f"{path}: non-numeric value in column {col!r}") from exc
    learner = rows[0].get("learner", "") or os.path.basename(path)
    seed = int(data["seed"][0]) if "seed" in data else 0
    return Trace(path, learner, seed, data)


def _group_by_learner(traces: Sequence[Trace]) -> Dict[str, List[Trace]]:
    groups: Dict[str, List[Trace]] = {}
    for t in traces:
        groups.setdefault(t.learner, []).append(t)
    return groups


def _aligned_stack(traces: Sequence[Trace], column: str):
    """Common iteration grid plus a (files, k) matrix of one column."""
    ks = traces[0].data["k"]
    for t in traces[1:]:
        if not np.array_equal(t.data["k"], ks):
            raise PlotError(
                f"{t.path}: iteration grid differs from {traces[0].path}; "
                "band and median aggregation need matching k columns"
            )
    return ks, np.vstack([t.data[column] for t in traces])


def _draw_diagnostics(ax, traces):
    series = [("ne_gap", "NE gap"), ("c_k", "c_k"), ("delta_k", "delta_k")]
    for column, label in series:
        ks, stack = _aligned_stack(traces, column)
        med = np.median(stack, axis=0)
        if np.all(np.isnan(med)):
            continue
        ax.plot(ks, med, label=label)
    ax.set_ylabel("diagnostic value")


def _draw_learning_curve(ax, traces):
    for learner, group in sorted(_group_by_learner(traces).items()):
        ks, stack = _aligned_stack(group, "ne_gap")
        ax.plot(ks, np.median(stack, axis=0), label=learner)
    ax.set_ylabel("NE gap")


def _draw_l1_band(ax, traces):
    for learner, group in sorted(_group_by_learner(traces).items()):
        ks, stack = _aligned_stack(group, "l1")
        line, = ax.plot(ks, np.median(stack, axis=0), label=learner)
        ax.fill_between(ks, stack.min(axis=0), stack.max(axis=0),
                        alpha=0.25, color=line.get_color(), linewidth=0)
    ax.set_ylabel("L1 distance to reference")


_DELTA_NAME = re.compile(r"delta_([0-9eE+.-]+)\.csv$")


def _sweep_label(path: str):
    """Margin value and label from a sweep file name, stem otherwise."""
    m = _DELTA_NAME.search(os.path.basename(path))
    if m:
        try:
            return float(m.group(1)), f"margin {m.group(1)}"
        except ValueError:
            pass
    stem = os.path.splitext(os.path.basename(path))[0]
    return float("inf"), stem


def _draw_delta_sweep(ax, traces):
    ordered = sorted(traces, key=lambda t: _sweep_label(t.path)[0])
    for t in ordered:
        ax.plot(t.data["k"], t.data["ne_gap"], label=_sweep_label(t.path)[1])
    ax.set_ylabel("NE gap")


_DRAWERS = {
    "diagnostics": _draw_diagnostics,
    "learning_curve": _draw_learning_curve,
    "l1_band": _draw_l1_band,
    "delta_sweep": _draw_delta_sweep,
}


def build_figure(spec: FigureSpec) -> Figure:
    """Load the inputs and draw the figure without saving it."""
    paths = expand_inputs(spec.inputs)
    required = REQUIRED_COLUMNS[spec.kind]
    traces = [load_trace(p, required) for p in paths]
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    _DRAWERS[spec.kind](ax, traces)
    if spec.log_x:
        ax.set_xscale("log")
    log_y = LOG_Y_DEFAULT[spec.kind] if spec.log_y is None else spec.log_y
    if log_y:
        ax.set_yscale("log")
    ax.set_xlabel("iteration")
    if spec.title:
        ax.set_title(spec.title)
    if ax.get_legend_handles_labels()[0]:
        ax.legend(frameon=False)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    return fig


def render(spec: FigureSpec) -> str:
    """Render the figure to ``spec.output`` and return that path."""
    fig = build_figure(spec)
    try:
        ext = os.path.splitext(spec.output)[1].lower()
        out_dir = os.path.dirname(spec.output)
        if out_dir:
            os.makedirs(out_dir, exist_ok=True)
        fig.savefig(spec.output, metadata=_METADATA[ext])
    finally:
        plt.close(fig)
    return spec.output
