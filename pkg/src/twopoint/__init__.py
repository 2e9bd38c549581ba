"""Spectral triples built from two-point modules over finite metric spaces."""

from __future__ import annotations

from twopoint.connes_metric import InducedMetricReport, induced_metric, lp_oracle, metric_report
from twopoint.dyadic import DyadicRational
from twopoint.errors import (
    ConfigError,
    DegeneratePairError,
    EmptyTripleError,
    InsufficientChainError,
    InsufficientDataError,
    InvalidArgument,
    MetricAxiomError,
    OracleSizeError,
    ParseError,
    RangeError,
    SizeLimitError,
    TwopointError,
)
from twopoint.interval_example import (
    IntervalTriple,
    build_interval_st9,
    example_report,
    multiplicity_table,
)
from twopoint.metric_core import (
    CoveringChain,
    FiniteMetricSpace,
    build_cantor,
    build_interval_grid,
    covering_chain,
    from_matrix,
    from_points,
    load_space,
    minkowski_estimate,
    random_cloud,
)
from twopoint.spectral import (
    CountingSweep,
    SpectrumHistogram,
    counting,
    counting_sweep,
    dixmier_estimate,
    dixmier_slope,
    dixmier_trace,
    spectrum,
    summability_probe,
    zeta,
)
from twopoint.triple_builder import (
    SpectralTripleSum,
    TwoPointModule,
    build_st_d,
    build_st_delta,
    interaction_params,
    two_point_module,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_") and name != "annotations"]
