"""Rendering front end for the letf CLI's CSV outputs."""

from .csvio import SchemaError, Table, read_table
from .render import (FigureSpec, build_density_figure, build_smile_figure,
                     render_density, render_smile)

__version__ = "0.1.0"
