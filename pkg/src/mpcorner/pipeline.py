"""Point cloud to candidate decomposition, end to end.

The chain is: load a planar point cloud, build a two-parameter filtration on a
regular grid (Freudenthal triangulation, vertex vector = (distance to the
cloud, negated kernel density), lower-star one-critical extension), slice the
bifiltration along diagonal lines, compute 1-parameter barcodes by boundary
reduction over Z/2 with clearing, and match bars across consecutive lines into
interval summands (a vineyard-style approximation of a decomposition
algorithm).

Negating the density turns the superlevel density axis into a sublevel one, so
both filtration axes grow in the same direction; image metadata records this.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .model import Bar, Decomposition, IntervalModule, canonicalize
from .representations import GridSpec

__all__ = [
    "BiFiltration",
    "FilteredComplex1D",
    "PointCloud",
    "Reduction",
    "annulus_nonuniform",
    "bridged_squares",
    "build_bifiltration",
    "circle_with_outliers",
    "kde",
    "load_pointcloud",
    "persistence_1d",
    "persistence_pairs",
    "slice_to_1d",
    "vineyard_decompose",
]


@dataclass(frozen=True)
class PointCloud:
    """Finite point set in R^D, optionally labeled."""

    points: np.ndarray
    labels: tuple | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[0] == 0:
            raise ValueError(f"point cloud must be a nonempty (N, D) array, got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ValueError("point cloud contains non-finite coordinates")
        if self.labels is not None and len(self.labels) != pts.shape[0]:
            raise ValueError("label count does not match point count")
        pts = pts.copy()
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def size(self) -> int:
        return int(self.points.shape[0])

    @property
    def dim(self) -> int:
        return int(self.points.shape[1])

    def bounding_box(self):
        return self.points.min(axis=0), self.points.max(axis=0)


def load_pointcloud(path) -> PointCloud:
    """Parse a CSV point cloud, one point per row, optional header row.

    Rejects non-finite values, inconsistent dimensions and empty files; parse
    errors name the offending line number.
    """
    rows = []
    dim = None
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            cells = [c.strip() for c in row if c.strip() != ""]
            if not cells:
                continue
            try:
                vals = [float(c) for c in cells]
            except ValueError:
                if lineno == 1:
                    continue  # header row
                raise ValueError(f"line {lineno}: could not parse {row!r} as numbers") from None
            if any(not math.isfinite(v) for v in vals):
                raise ValueError(f"line {lineno}: non-finite coordinate in {row!r}")
            if dim is None:
                dim = len(vals)
            elif len(vals) != dim:
                raise ValueError(
                    f"line {lineno}: expected {dim} coordinates, got {len(vals)}"
                )
            rows.append(vals)
    if not rows:
        raise ValueError(f"no points found in {path}")
    return PointCloud(np.asarray(rows))


def kde(cloud: PointCloud, h: float, queries) -> np.ndarray:
    """Gaussian kernel density estimate at the query points.

    f(q) = (1 / (N (2 pi)^(D/2) h^D)) * sum_i exp(-||q - x_i||^2 / (2 h^2)).
    Far-away queries may underflow to exactly 0.
    """
    if h <= 0:
        raise ValueError(f"bandwidth must be positive, got {h}")
    X = cloud.points
    Q = np.atleast_2d(np.asarray(queries, dtype=float))
    if Q.shape[1] != cloud.dim:
        raise ValueError(f"queries have dimension {Q.shape[1]}, cloud has {cloud.dim}")
    D = cloud.dim
    norm = 1.0 / (X.shape[0] * (2.0 * np.pi) ** (D / 2.0) * h**D)
    out = np.empty(Q.shape[0])
    chunk = max(1, int(2_000_000 // max(X.shape[0], 1)))
    for start in range(0, Q.shape[0], chunk):
        q = Q[start : start + chunk]
        d2 = ((q[:, None, :] - X[None, :, :]) ** 2).sum(axis=2)
        out[start : start + chunk] = np.exp(-d2 / (2.0 * h * h)).sum(axis=1)
    return out * norm


@dataclass(frozen=True)
class BiFiltration:
    """One-critical bifiltered simplicial complex on a vertex grid.

    ``simplices[i]`` is a sorted vertex-index tuple, ``values[i]`` its R^2
    filtration vector (componentwise max over vertices), ``facets[i]`` the
    indices of its codimension-1 faces within ``simplices``.
    """

    grid: GridSpec
    simplices: tuple
    values: np.ndarray
    facets: tuple

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (len(self.simplices), 2):
            raise ValueError("values must be an (S, 2) array matching the simplex list")
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "simplices", tuple(tuple(s) for s in self.simplices))
        object.__setattr__(self, "facets", tuple(tuple(f) for f in self.facets))

    @property
    def dims(self) -> np.ndarray:
        return np.array([len(s) - 1 for s in self.simplices])

    def value_bounds(self):
        return self.values.min(axis=0), self.values.max(axis=0)


def build_bifiltration(cloud: PointCloud, grid: GridSpec, h: float) -> BiFiltration:
    """Freudenthal-triangulated grid filtered by (distance to cloud, -density).

    Vertex j carries (distance to the nearest cloud point, -kde(vertex));
    every higher simplex takes the componentwise max of its vertices
    (lower-star, one-critical).
    """
    if cloud.dim != 2 or grid.dim != 2:
        raise ValueError("the bifiltration pipeline is 2-dimensional")
    if any(r < 2 for r in grid.resolution):
        raise ValueError(f"degenerate grid: need at least 2 vertices per axis, got {grid.resolution}")
    verts = grid.points()  # C order: vertex (ix, iy) sits at index ix * H + iy
    W, H = grid.resolution
    density = kde(cloud, h, verts)
    dist, _ = cKDTree(cloud.points).query(verts)
    vertex_values = np.stack([dist, -density], axis=1)

    simplices = [(v,) for v in range(W * H)]
    facets = [() for _ in range(W * H)]
    values = [vertex_values[v] for v in range(W * H)]
    edge_index = {}

    def add_edge(a, b):
        key = (a, b)
        edge_index[key] = len(simplices)
        simplices.append(key)
        facets.append((a, b))
        values.append(np.maximum(vertex_values[a], vertex_values[b]))

    for ix in range(W):
        for iy in range(H):
            v = ix * H + iy
            if iy + 1 < H:
                add_edge(v, v + 1)
            if ix + 1 < W:
                add_edge(v, v + H)
            if ix + 1 < W and iy + 1 < H:
                add_edge(v, v + H + 1)
    for ix in range(W - 1):
        for iy in range(H - 1):
            v = ix * H + iy
            for tri in ((v, v + H, v + H + 1), (v, v + 1, v + H + 1)):
                simplices.append(tri)
                facets.append(
                    (
                        edge_index[(tri[0], tri[1])],
                        edge_index[(tri[0], tri[2])],
                        edge_index[(tri[1], tri[2])],
                    )
                )
                values.append(np.maximum.reduce([vertex_values[u] for u in tri]))
    return BiFiltration(
        grid=grid,
        simplices=tuple(simplices),
        values=np.asarray(values),
        facets=tuple(facets),
    )


@dataclass(frozen=True)
class FilteredComplex1D:
    """Simplicial complex with scalar filtration values and precomputed facets."""

    simplices: tuple
    values: np.ndarray
    facets: tuple

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float).reshape(-1)
        if vals.size != len(self.simplices):
            raise ValueError("value count does not match simplex count")
        vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "simplices", tuple(tuple(s) for s in self.simplices))
        if self.facets is None:
            object.__setattr__(self, "facets", _facets_from_simplices(self.simplices))
        else:
            object.__setattr__(self, "facets", tuple(tuple(f) for f in self.facets))

    @property
    def dims(self) -> np.ndarray:
        return np.array([len(s) - 1 for s in self.simplices])


def _facets_from_simplices(simplices) -> tuple:
    """Codimension-1 face indices looked up by vertex tuple."""
    index = {tuple(sorted(s)): i for i, s in enumerate(simplices)}
    out = []
    for s in simplices:
        s = tuple(sorted(s))
        if len(s) == 1:
            out.append(())
            continue
        face_ids = []
        for drop in range(len(s)):
            f = s[:drop] + s[drop + 1 :]
            if f not in index:
                raise ValueError(f"missing face {f} of simplex {s}")
            face_ids.append(index[f])
        out.append(tuple(face_ids))
    return tuple(out)


def slice_to_1d(bif: BiFiltration, basepoint) -> FilteredComplex1D:
    """Scalar filtration along the diagonal line through ``basepoint``.

    Each simplex gets t = max_i (value_i - basepoint_i); the lower-star face
    condition is preserved because max is monotone.
    """
    y = np.asarray(basepoint, dtype=float).reshape(-1)
    if y.size != 2:
        raise ValueError(f"basepoint must be 2-dimensional, got {y.size}")
    t = np.max(bif.values - y[None, :], axis=1)
    return FilteredComplex1D(simplices=bif.simplices, values=t, facets=bif.facets)


@dataclass(frozen=True)
class Reduction:
    """Outcome of the boundary reduction of a filtered complex.

    ``pairs`` holds (creator index, destroyer index) in the original simplex
    indexing, including zero-persistence pairs; ``essential`` the unpaired
    creators.  Everything needed for barcodes and for conservation-law checks.
    """

    pairs: tuple
    essential: tuple
    dims: np.ndarray
    values: np.ndarray

    def barcode(self, degree: int, drop_zero: bool = True) -> list:
        bars = []
        for i, j in self.pairs:
            if self.dims[i] == degree:
                birth, death = float(self.values[i]), float(self.values[j])
                if death > birth or not drop_zero:
                    bars.append(Bar(birth, death))
        for i in self.essential:
            if self.dims[i] == degree:
                bars.append(Bar(float(self.values[i]), math.inf))
        return sorted(bars, key=lambda b: (b[0], b[1]))


def persistence_pairs(complex: FilteredComplex1D) -> Reduction:
    """Z/2 boundary reduction with the clearing optimization.

    Columns are processed by decreasing dimension, within a dimension in
    increasing (filtration value, dimension, index) order; creator columns
    already paired by the dimension above are skipped (cleared).  Columns are
    stored as integer bitsets over sorted positions; the pivot is the highest
    set bit.  Raises when a facet does not precede its coface in the order.
    """
    values = complex.values
    dims = complex.dims
    S = len(complex.simplices)
    order = np.lexsort((np.arange(S), dims, values))
    pos_of = np.empty(S, dtype=int)
    pos_of[order] = np.arange(S)

    boundary = [0] * S
    for orig, facet_ids in enumerate(complex.facets):
        pos = pos_of[orig]
        bits = 0
        for f in facet_ids:
            fpos = int(pos_of[f])
            if fpos >= pos:
                raise ValueError(
                    f"face-ordering violation: facet {complex.simplices[f]} "
                    f"(value {values[f]}) does not precede {complex.simplices[orig]} "
                    f"(value {values[orig]})"
                )
            bits |= 1 << fpos
        boundary[pos] = bits

    max_dim = int(dims.max()) if S else 0
    positions_by_dim = {d: [] for d in range(max_dim + 1)}
    for pos in range(S):
        positions_by_dim[int(dims[order[pos]])].append(pos)

    reduced = {}  # death column position -> reduced bitset
    pivot_col = {}  # creator (pivot row) position -> death column position
    pairs = []
    for d in range(max_dim, 0, -1):
        for pos in positions_by_dim[d]:
            if pos in pivot_col:
                continue  # cleared: already known to be a cycle column
            col = boundary[pos]
            while col:
                p = col.bit_length() - 1
                other = pivot_col.get(p)
                if other is None:
                    pivot_col[p] = pos
                    reduced[pos] = col
                    pairs.append((p, pos))
                    break
                col ^= reduced[other]

    essential = [
        pos for pos in range(S) if pos not in reduced and pos not in pivot_col
    ]
    pairs_orig = tuple((int(order[p]), int(order[c])) for p, c in pairs)
    essential_orig = tuple(int(order[p]) for p in essential)
    return Reduction(
        pairs=pairs_orig,
        essential=essential_orig,
        dims=dims,
        values=np.asarray(values, dtype=float),
    )


def persistence_1d(complex: FilteredComplex1D, degree: int) -> list:
    """Barcode of the given degree; essential classes die at +inf.

    Zero-length bars are dropped (the bar convention of the data model).
    """
    return persistence_pairs(complex).barcode(degree, drop_zero=True)


# ---------------------------------------------------------------------------
# Vineyard matching across slices
# ---------------------------------------------------------------------------

def _bar_pair_cost(a, b) -> float:
    """Max endpoint difference; infinite deaths only match each other."""
    a_inf = math.isinf(a[1])
    b_inf = math.isinf(b[1])
    if a_inf and b_inf:
        return abs(a[0] - b[0])
    if a_inf or b_inf:
        return math.inf
    return max(abs(a[0] - b[0]), abs(a[1] - b[1]))


def _bar_unmatched_cost(a) -> float:
    return math.inf if math.isinf(a[1]) else 0.5 * (a[1] - a[0])


def _match_bars(bars_a, bars_b):
    """Greedy matching of consecutive barcodes.

    Bars of the first barcode are visited in bar-length-descending order
    (infinite bars first); each takes its cheapest available partner, and a
    pair is kept only when its cost is below both unmatched costs.
    """
    def length_key(i):
        b, d = bars_a[i]
        span = math.inf if math.isinf(d) else d - b
        return (-span, b, d if not math.isinf(d) else 0.0)

    available = list(range(len(bars_b)))
    pairs = []
    for i in sorted(range(len(bars_a)), key=length_key):
        best_j = None
        best_cost = math.inf
        for j in available:
            c = _bar_pair_cost(bars_a[i], bars_b[j])
            if c < best_cost:
                best_cost = c
                best_j = j
        if best_j is None:
            continue
        if best_cost < _bar_unmatched_cost(bars_a[i]) and best_cost < _bar_unmatched_cost(
            bars_b[best_j]
        ):
            pairs.append((i, best_j))
            available.remove(best_j)
    return pairs


def vineyard_decompose(bif: BiFiltration, degree: int, num_lines: int) -> Decomposition:
    """Candidate decomposition from barcodes along diagonal slicing lines.

    Basepoints are spread evenly on the antidiagonal of the filtration-value
    bounding box; consecutive barcodes are matched greedily (pair cost = max
    endpoint difference, unmatched cost = half bar length, matched only when
    cheaper than both); each maximal chain of matched bars becomes one
    interval summand with per-line birth/death corner points y + t * (1, 1).
    Infinite deaths are truncated on their line at the largest slice value the
    bounding box admits.
    """
    if num_lines < 2:
        raise ValueError(f"need at least 2 slicing lines, got {num_lines}")
    if not bif.simplices:
        return Decomposition(degree=degree, intervals=(), ambient_dim=2)
    lo, hi = bif.value_bounds()
    steps = np.arange(num_lines) / (num_lines - 1)
    basepoints = np.stack(
        [lo[0] + steps * (hi[0] - lo[0]), hi[1] - steps * (hi[1] - lo[1])], axis=1
    )
    barcodes = []
    for y in basepoints:
        bars = persistence_1d(slice_to_1d(bif, y), degree)
        barcodes.append([(b.birth, b.death) for b in bars])

    chains = []  # each: list of (line index, t_birth, t_death)
    active = {j: [(0, *bar)] for j, bar in enumerate(barcodes[0])}
    chains.extend(active.values())
    for l in range(num_lines - 1):
        matched = _match_bars(barcodes[l], barcodes[l + 1])
        next_active = {}
        taken = set()
        for i, j in matched:
            if i in active:
                chain = active[i]
                chain.append((l + 1, *barcodes[l + 1][j]))
                next_active[j] = chain
                taken.add(j)
        for j, bar in enumerate(barcodes[l + 1]):
            if j not in taken:
                chain = [(l + 1, *bar)]
                chains.append(chain)
                next_active[j] = chain
        active = next_active

    intervals = []
    for chain in chains:
        births = []
        deaths = []
        for line_idx, tb, td in chain:
            y = basepoints[line_idx]
            births.append(y + tb)
            if math.isinf(td):
                td = float(np.max(hi - y))
            deaths.append(y + td)
        module = canonicalize(IntervalModule(np.asarray(births), np.asarray(deaths), dim=2))
        if not module.is_zero:
            intervals.append(module)
    intervals.sort(key=lambda m: (m.births.tobytes(), m.deaths.tobytes()))
    return Decomposition(degree=degree, intervals=tuple(intervals), ambient_dim=2)


# ---------------------------------------------------------------------------
# Synthetic generators
# ---------------------------------------------------------------------------

def annulus_nonuniform(n: int, seed: int) -> PointCloud:
    """Annulus (radii 1 to 2) with denser inner rim and denser upper half."""
    if n <= 0:
        raise ValueError(f"need n > 0 points, got {n}")
    rng = np.random.default_rng(seed)
    radius = 1.0 + rng.random(n) ** 1.5
    upper = rng.random(n) < 0.75
    theta = np.where(
        upper, np.pi * rng.random(n), np.pi + np.pi * rng.random(n)
    )
    pts = np.stack([radius * np.cos(theta), radius * np.sin(theta)], axis=1)
    return PointCloud(pts)


def circle_with_outliers(n: int, n_out: int, seed: int) -> PointCloud:
    """Noisy unit circle with ``n_out`` uniform background outliers."""
    if n <= 0:
        raise ValueError(f"need n > 0 circle points, got {n}")
    if n_out < 0:
        raise ValueError(f"outlier count must be nonnegative, got {n_out}")
    rng = np.random.default_rng(seed)
    theta = 2.0 * np.pi * rng.random(n)
    circle = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    circle += rng.normal(0.0, 0.03, size=circle.shape)
    outliers = rng.uniform(-1.6, 1.6, size=(n_out, 2))
    pts = np.vstack([circle, outliers]) if n_out else circle
    return PointCloud(pts)


def bridged_squares(eps: float) -> Decomposition:
    """Two unit squares, optionally joined by a corridor of width ``eps``.

    ``eps = 0``: two summands with supports [0,1]x[2,3] and [2,3]x[0,1].
    ``eps > 0``: a single summand whose extra birth corner (1-eps, 1-eps)
    connects the squares through an L-shaped corridor of width eps around
    (1, 1); the support is connected and order-convex, with volume 2 + O(eps).
    """
    if eps < 0:
        raise ValueError(f"bridge width must be nonnegative, got {eps}")
    if eps == 0:
        intervals = (
            IntervalModule([[0.0, 2.0]], [[1.0, 3.0]]),
            IntervalModule([[2.0, 0.0]], [[3.0, 1.0]]),
        )
    else:
        merged = canonicalize(
            IntervalModule(
                [[0.0, 2.0], [1.0 - eps, 1.0 - eps], [2.0, 0.0]],
                [[1.0, 3.0], [3.0, 1.0]],
            )
        )
        intervals = (merged,)
    return Decomposition(degree=1, intervals=intervals, ambient_dim=2)
