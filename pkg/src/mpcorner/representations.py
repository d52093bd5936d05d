"""Grid-rasterized representations of candidate decompositions.

The generic combinator ``tcdr`` evaluates, at every grid point x, a
permutation-invariant op over the weighted local functions
{ w(M_i) * phi(M_i)(x) }.  The two stable concrete forms are

    scdr_p:   sum_i [ w(M_i)^p / sum_j w(M_j)^p ] * phi_delta(M_i)   (p = 0
              means uniform coefficients 1/m, with 0**0 := 1), and
    scdr_sup: pointwise sup_i phi_delta(M_i),

plus the kth multiparameter persistence landscape ``mpl`` (op = kth maximum of
tent functions along the diagonal line through each grid point).

Evaluation order over intervals is fixed by a canonical corner key, so every
representation is bit-identical under permutation of the interval list.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np

from .invariants import PhiKind, phi_on_axes, weight
from .model import Decomposition, IntervalModule, _as_point, canonicalize

__all__ = [
    "GridImage",
    "GridSpec",
    "ImageNorm",
    "TcdrOp",
    "TcdrParams",
    "image_distance",
    "mpl",
    "scdr_p",
    "scdr_sup",
    "tcdr",
    "write_image_csv",
    "write_image_pgm",
]


@dataclass(frozen=True)
class GridSpec:
    """Rectangular evaluation grid; grid points are cell centers.

    Parameters
    ----------
    lower, upper : array-like of shape (n,)
        Window bounds with ``lower < upper`` componentwise.
    resolution : tuple of int
        Per-axis cell counts, all positive.  Flattened values use C order
        (axis 0 slowest), which fixes the row-major point ordering.
    """

    lower: np.ndarray
    upper: np.ndarray
    resolution: tuple

    def __post_init__(self):
        lo = _as_point(self.lower)
        up = _as_point(self.upper, dim=lo.size)
        if np.any(lo >= up):
            raise ValueError(f"grid window must have lower < upper, got {lo} vs {up}")
        res = tuple(int(r) for r in self.resolution)
        if len(res) != lo.size:
            raise ValueError(f"resolution has {len(res)} axes for a {lo.size}-dimensional window")
        if any(r < 1 for r in res):
            raise ValueError(f"resolution entries must be positive, got {res}")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", up)
        object.__setattr__(self, "resolution", res)

    @property
    def dim(self) -> int:
        return int(self.lower.size)

    @property
    def num_points(self) -> int:
        return int(np.prod(self.resolution))

    @property
    def cell_volume(self) -> float:
        return float(np.prod((self.upper - self.lower) / np.asarray(self.resolution)))

    def axes(self) -> list:
        """Per-axis cell-center coordinates."""
        out = []
        for j, r in enumerate(self.resolution):
            step = (self.upper[j] - self.lower[j]) / r
            out.append(self.lower[j] + (np.arange(r) + 0.5) * step)
        return out

    def points(self) -> np.ndarray:
        """All grid points as an (N, n) array in row-major (C) order."""
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack(mesh, axis=-1).reshape(-1, self.dim)

    def __eq__(self, other) -> bool:
        if not isinstance(other, GridSpec):
            return NotImplemented
        return (
            self.resolution == other.resolution
            and np.array_equal(self.lower, other.lower)
            and np.array_equal(self.upper, other.upper)
        )

    def __hash__(self):
        return hash((self.lower.tobytes(), self.upper.tobytes(), self.resolution))


@dataclass(frozen=True)
class GridImage:
    """A scalar field on a GridSpec: flat values (row-major) plus metadata."""

    grid: GridSpec
    values: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float).reshape(-1)
        if vals.size != self.grid.num_points:
            raise ValueError(
                f"value count {vals.size} does not match grid size {self.grid.num_points}"
            )
        if not np.all(np.isfinite(vals)):
            raise ValueError("image values must be finite")
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "metadata", dict(self.metadata))

    def reshaped(self) -> np.ndarray:
        return self.values.reshape(self.grid.resolution)

    def __eq__(self, other) -> bool:
        if not isinstance(other, GridImage):
            return NotImplemented
        return self.grid == other.grid and np.array_equal(self.values, other.values)

    def __hash__(self):
        return hash((self.grid, self.values.tobytes()))


class TcdrOp(Enum):
    SUM = "sum"
    MEAN = "mean"
    MAX = "max"
    MIN = "min"
    KTH_MAX = "kth_max"


@dataclass(frozen=True)
class TcdrParams:
    """Parameters of the generic combinator.

    ``weight`` maps an interval module to a scalar; ``phi`` maps (module,
    points array of shape (N, n)) to N values.  ``normalize`` divides the
    weights by their sum for SUM/MEAN ops (the stable default).
    ``k`` is only read by KTH_MAX.
    """

    op: TcdrOp
    weight: Callable
    phi: Callable
    normalize: bool = True
    k: int = 1


def _canonical_order(intervals) -> list:
    """Intervals sorted by a canonical corner key (stable under shuffling)."""
    keyed = []
    for m in intervals:
        c = canonicalize(m)
        keyed.append(((c.births.tobytes(), c.deaths.tobytes()), m))
    keyed.sort(key=lambda kv: kv[0])
    return [m for _, m in keyed]


def tcdr(decomp: Decomposition, params: TcdrParams, grid: GridSpec) -> GridImage:
    """Generic representation: op over intervals of weight * phi per grid point."""
    pts = grid.points()
    meta = {"degree": decomp.degree, "op": params.op.value, "normalize": params.normalize}
    intervals = _canonical_order(decomp.intervals)
    if not intervals:
        return GridImage(grid, np.zeros(grid.num_points), meta)
    weights = np.array([float(params.weight(m)) for m in intervals])
    fields = np.stack([np.asarray(params.phi(m, pts), dtype=float).reshape(-1) for m in intervals])
    weighted = weights[:, None] * fields
    if params.op in (TcdrOp.SUM, TcdrOp.MEAN):
        values = weighted.sum(axis=0)
        if params.op is TcdrOp.MEAN:
            values = values / len(intervals)
        elif params.normalize:
            total = weights.sum()
            if total <= 0:
                raise ValueError("cannot normalize: interval weights sum to zero")
            values = values / total
    elif params.op is TcdrOp.MAX:
        values = weighted.max(axis=0)
    elif params.op is TcdrOp.MIN:
        values = weighted.min(axis=0)
    else:
        k = int(params.k)
        if k < 1:
            raise ValueError(f"k must be >= 1, got {k}")
        if k > len(intervals):
            values = np.zeros(grid.num_points)
        else:
            values = np.partition(weighted, len(intervals) - k, axis=0)[len(intervals) - k]
    return GridImage(grid, values, meta)


def _phi_fields(intervals, grid: GridSpec, kind: PhiKind, delta: float):
    for m in intervals:
        yield phi_on_axes(m, grid.axes(), kind, delta).reshape(-1)


def scdr_p(decomp: Decomposition, p: float, kind, delta: float, grid: GridSpec) -> GridImage:
    """Normalized weighted sum of phi fields with coefficients w_i^p / sum w_j^p.

    ``p = 0`` gives uniform coefficients 1/m (0**0 := 1).  Raises on an empty
    decomposition, and on all-zero weights when p > 0 (degenerate input).
    """
    kind = PhiKind.coerce(kind)
    if p < 0:
        raise ValueError(f"p must be nonnegative, got {p}")
    intervals = _canonical_order(decomp.intervals)
    if not intervals:
        raise ValueError("scdr_p needs a nonempty decomposition")
    if p == 0:
        coeffs = np.full(len(intervals), 1.0 / len(intervals))
    else:
        powered = np.array([weight(m) for m in intervals]) ** p
        total = powered.sum()
        if total <= 0:
            raise ValueError("degenerate input: all interval weights are zero with p > 0")
        coeffs = powered / total
    values = np.zeros(grid.num_points)
    for c, f in zip(coeffs, _phi_fields(intervals, grid, kind, delta)):
        values += c * f
    meta = {"degree": decomp.degree, "op": "sum", "p": p, "delta": delta, "kind": kind.value}
    return GridImage(grid, values, meta)


def scdr_sup(decomp: Decomposition, kind, delta: float, grid: GridSpec) -> GridImage:
    """Pointwise sup of phi fields; empty decomposition gives the zero image."""
    kind = PhiKind.coerce(kind)
    values = np.zeros(grid.num_points)
    for f in _phi_fields(decomp.intervals, grid, kind, delta):
        np.maximum(values, f, out=values)
    meta = {"degree": decomp.degree, "op": "sup", "delta": delta, "kind": kind.value}
    return GridImage(grid, values, meta)


def _tent_field(module: IntervalModule, grid: GridSpec) -> np.ndarray:
    """Tent value of the module's bar on the diagonal line through each point.

    At grid point x the bar endpoints in the line parameter are
    t_b = min over births of max_j (b_j - x_j) and t_d = max over deaths of
    min_j (d_j - x_j); x itself sits at parameter 0, so the tent value is
    max(0, min(-t_b, t_d)).
    """
    axes = grid.axes()
    n = grid.dim
    tb = None
    for b in module.births:
        vecs = [b[j] - axes[j] for j in range(n)]
        cand = None
        for j, v in enumerate(vecs):
            shape = [1] * n
            shape[j] = v.size
            v = v.reshape(shape)
            cand = np.broadcast_to(v, grid.resolution).copy() if cand is None else np.maximum(cand, v)
        tb = cand if tb is None else np.minimum(tb, cand)
    td = None
    for d in module.deaths:
        vecs = [d[j] - axes[j] for j in range(n)]
        cand = None
        for j, v in enumerate(vecs):
            shape = [1] * n
            shape[j] = v.size
            v = v.reshape(shape)
            cand = np.broadcast_to(v, grid.resolution).copy() if cand is None else np.minimum(cand, v)
        td = cand if td is None else np.maximum(td, cand)
    return np.clip(np.minimum(-tb, td), 0.0, None).reshape(-1)


def mpl(decomp: Decomposition, k: int, grid: GridSpec) -> GridImage:
    """kth multiparameter persistence landscape on the grid.

    Per grid point: bars of all intervals along the diagonal line through the
    point, tent values at the point, kth largest (0 when fewer than k bars).
    """
    k = int(k)
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    meta = {"degree": decomp.degree, "op": "kth_max", "k": k}
    top = np.zeros((k, grid.num_points))
    for m in decomp.intervals:
        if m.is_zero:
            continue
        tent = _tent_field(m, grid)
        stacked = np.concatenate([top, tent[None, :]], axis=0)
        top = np.partition(stacked, 0, axis=0)[1:]
    return GridImage(grid, top.min(axis=0), meta)


class ImageNorm(str, Enum):
    LINF = "linf"
    L2_SQUARED = "l2sq"


def image_distance(a: GridImage, b: GridImage, norm) -> float:
    """Distance between two images on the same grid.

    ``'linf'``: max absolute difference.  ``'l2sq'``: cell-volume-weighted sum
    of squared differences.
    """
    if isinstance(norm, str):
        norm = ImageNorm(norm.lower())
    if a.grid != b.grid:
        raise ValueError("images live on different grids")
    diff = a.values - b.values
    if norm is ImageNorm.LINF:
        return float(np.max(np.abs(diff))) if diff.size else 0.0
    return float(a.grid.cell_volume * np.sum(diff * diff))


def write_image_csv(image: GridImage, path) -> None:
    """CSV rows of grid-point coordinates plus value, in row-major order."""
    pts = image.grid.points()
    n = image.grid.dim
    header = ",".join(["x", "y", "z"][:n] if n <= 3 else [f"x{j}" for j in range(n)]) + ",value"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for row, val in zip(pts, image.values):
            coords = ",".join(repr(float(c)) for c in row)
            fh.write(f"{coords},{float(val)!r}\n")


def write_image_pgm(image: GridImage, path) -> None:
    """Binary 16-bit PGM of a 2d image, min-max scaled to [0, 65535].

    Pixel rows run from the largest y (top) to the smallest; columns from the
    smallest x to the largest.  The scaling and grid window are recorded in a
    sidecar text file at ``path + '.scale.txt'``.
    """
    if image.grid.dim != 2:
        raise ValueError(f"PGM export needs a 2d image, got dimension {image.grid.dim}")
    field2d = image.reshaped()  # shape (nx, ny)
    vmin = float(field2d.min())
    vmax = float(field2d.max())
    if vmax > vmin:
        scaled = np.round((field2d - vmin) / (vmax - vmin) * 65535.0)
    else:
        scaled = np.zeros_like(field2d)
    pixels = scaled.astype(">u2").T[::-1]  # rows = y descending, cols = x ascending
    height, width = pixels.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{width} {height}\n65535\n".encode("ascii"))
        fh.write(pixels.tobytes())
    with open(str(path) + ".scale.txt", "w", encoding="utf-8") as fh:
        fh.write(f"vmin={vmin!r}\nvmax={vmax!r}\n")
        fh.write(f"window_lower={image.grid.lower.tolist()}\n")
        fh.write(f"window_upper={image.grid.upper.tolist()}\n")
        fh.write(f"resolution={list(image.grid.resolution)}\n")
        fh.write("row_order=y_descending\n")
        for key, val in sorted(image.metadata.items()):
            fh.write(f"{key}={val}\n")
