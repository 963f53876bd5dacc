"""City ingest and figure rendering companions for streetflock CSV outputs."""

from .figures import (
    FIGURE_KINDS,
    PlotJob,
    SchemaError,
    normalize_spacetime,
    read_metrics_csv,
    read_spacetime_csv,
    read_sweep_csv,
    render,
)
from .ingest import CityRequest, collapse_to_undirected, export_graph, extract

__version__ = "0.1.0"
