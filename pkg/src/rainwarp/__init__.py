"""Shape-based clustering of annual rainfall series.

Annual (September to August) daily rain-rate series are compared with an
iterative multiscale dynamic time warping, clustered with K-medoids,
labeled from precipitation indices, and the cluster frequencies tracked
over sliding windows of years.
"""

__version__ = "0.1.0"

from .errors import RainwarpError  # noqa: E402
from .warp import WarpConfig, AlignmentPath, dtw_exact, coarsen, expand_corridor, ims_dtw  # noqa: E402
from .ingest import (  # noqa: E402
    CsvFormat,
    DailySeries,
    HydroYear,
    MissingPolicy,
    parse_daily_csv,
    split_hydro_years,
)
from .matrix import DissimMatrix, build_matrix, rank_outliers, save_matrix, load_matrix  # noqa: E402
from .clustering import Clustering, kmedoids, best_of_restarts  # noqa: E402
from .indices import IndexVector, compute_indices, profile_clusters  # noqa: E402
from .trend import WindowSpec, make_windows, frequency_table, gradient  # noqa: E402

__all__ = [
    "RainwarpError",
    "WarpConfig",
    "AlignmentPath",
    "dtw_exact",
    "coarsen",
    "expand_corridor",
    "ims_dtw",
    "CsvFormat",
    "DailySeries",
    "HydroYear",
    "MissingPolicy",
    "parse_daily_csv",
    "split_hydro_years",
    "DissimMatrix",
    "build_matrix",
    "rank_outliers",
    "save_matrix",
    "load_matrix",
    "Clustering",
    "kmedoids",
    "best_of_restarts",
    "IndexVector",
    "compute_indices",
    "profile_clusters",
    "WindowSpec",
    "make_windows",
    "frequency_table",
    "gradient",
]
