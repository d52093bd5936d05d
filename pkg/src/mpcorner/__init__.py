"""Corner-presented interval decompositions of 2-parameter persistence.

The package covers the whole chain: an exact data model for interval modules
presented by birth/death corners (restriction, slicing, serialization),
corner-based invariants (weight, largest rectangle, support volume), stable
grid images built from them, matching distances between candidate
decompositions, a point-cloud pipeline (kernel-density bifiltration, slice
barcodes, vineyard-style summand tracking), and the experiment drivers behind
the ``mpcorner`` command line tool.
"""

from __future__ import annotations

from .distances import (
    MatchingResult,
    bottleneck,
    interleaving_oracle_rect,
    interleaving_rect,
    interleaving_to_zero,
)
from .estimators import CandidateDecomposer, ImageVectorizer
from .invariants import (
    PhiKind,
    largest_rectangle_volume,
    phi,
    phi_on_axes,
    support_volume,
    support_volume_total,
    weight,
)
from .model import (
    INF_DEATH_SENTINEL,
    Bar,
    Box,
    Decomposition,
    IntervalModule,
    canonicalize,
    contains,
    contains_many,
    decomposition_from_dict,
    decomposition_to_dict,
    fibered_barcode,
    read_decomposition,
    restrict_to_box,
    restrict_to_diagonal_line,
    sort_barcode,
    write_decomposition,
    zero_module,
)
from .pipeline import (
    BiFiltration,
    FilteredComplex1D,
    PointCloud,
    Reduction,
    annulus_nonuniform,
    bridged_squares,
    build_bifiltration,
    circle_with_outliers,
    kde,
    load_pointcloud,
    persistence_1d,
    persistence_pairs,
    slice_to_1d,
    vineyard_decompose,
)
from .representations import (
    GridImage,
    GridSpec,
    ImageNorm,
    TcdrOp,
    TcdrParams,
    image_distance,
    mpl,
    scdr_p,
    scdr_sup,
    tcdr,
    write_image_csv,
    write_image_pgm,
)

__version__ = "0.1.0"

__all__ = [
    "Bar",
    "BiFiltration",
    "Box",
    "CandidateDecomposer",
    "ImageVectorizer",
    "Decomposition",
    "FilteredComplex1D",
    "GridImage",
    "GridSpec",
    "INF_DEATH_SENTINEL",
    "ImageNorm",
    "IntervalModule",
    "MatchingResult",
    "PhiKind",
    "PointCloud",
    "Reduction",
    "TcdrOp",
    "TcdrParams",
    "annulus_nonuniform",
    "bottleneck",
    "bridged_squares",
    "build_bifiltration",
    "canonicalize",
    "circle_with_outliers",
    "contains",
    "contains_many",
    "decomposition_from_dict",
    "decomposition_to_dict",
    "fibered_barcode",
    "image_distance",
    "interleaving_oracle_rect",
    "interleaving_rect",
    "interleaving_to_zero",
    "kde",
    "largest_rectangle_volume",
    "load_pointcloud",
    "mpl",
    "persistence_1d",
    "persistence_pairs",
    "phi",
    "phi_on_axes",
    "read_decomposition",
    "restrict_to_box",
    "restrict_to_diagonal_line",
    "scdr_p",
    "scdr_sup",
    "slice_to_1d",
    "sort_barcode",
    "support_volume",
    "support_volume_total",
    "tcdr",
    "vineyard_decompose",
    "weight",
    "write_decomposition",
    "write_image_csv",
    "write_image_pgm",
    "zero_module",
]
