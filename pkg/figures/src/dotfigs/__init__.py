"""Figure regeneration for quantum-dot simulation artifacts.

Renders publication-style figures from the CSV files the ``dotsim``
command line writes. The two packages communicate only through those
files: nothing here imports the simulation code, and the simulation
test suite runs without this package installed.
"""

from .loader import FigureRecipe, MissingColumns, discover, read_columns
from .figures import render, save

__all__ = [
    "FigureRecipe",
    "MissingColumns",
    "discover",
    "read_columns",
    "render",
    "save",
]

__version__ = "0.1.0"
