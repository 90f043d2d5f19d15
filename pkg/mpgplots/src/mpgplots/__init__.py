"""Figure rendering for learning-run CSV traces."""

from .figures import (
    FIGURE_KINDS,
    REQUIRED_COLUMNS,
    FigureSpec,
    PlotError,
    Trace,
    build_figure,
    expand_inputs,
    load_trace,
    render,
)

__version__ = "0.1.0"

__all__ = [
    "FIGURE_KINDS",
    "REQUIRED_COLUMNS",
    "FigureSpec",
    "PlotError",
    "Trace",
    "build_figure",
    "expand_inputs",
    "load_trace",
    "render",
]
