"""Figures from spcabeam CSV artifacts; a pure CSV-to-image transform."""

__version__ = "0.1.0"

from .figures import (  # noqa: F401
    SchemaError,
    plot_convergence,
    plot_sweep,
    read_sweep_csv,
    read_trajectory_csv,
)
