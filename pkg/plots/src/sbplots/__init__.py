"""Figure rendering for sbsim CSV bundles."""

from .render import PlotSpec, SchemaError, render, render_figure

__version__ = "0.1.0"
