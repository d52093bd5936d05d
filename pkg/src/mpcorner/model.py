"""Corner-based data model for interval modules and their decompositions.

An interval module is presented by its birth corners (minimal points of the
support) and death corners (maximal points).  The support is

    supp M = { y : (exists b in births, b <= y) and (exists d in deaths, y <= d) },

with <= the componentwise partial order on R^n.  A decomposition is a finite
direct sum of interval modules at one homology degree.  This module provides
membership queries, restriction to boxes, restriction to diagonal lines, the
fibered barcode along diagonal lines, and JSON interchange.

All objects are immutable after construction and safe to share across workers.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "Bar",
    "Box",
    "Decomposition",
    "IntervalModule",
    "INF_DEATH_SENTINEL",
    "canonicalize",
    "contains",
    "decomposition_from_dict",
    "decomposition_to_dict",
    "fibered_barcode",
    "read_decomposition",
    "restrict_to_box",
    "restrict_to_diagonal_line",
    "write_decomposition",
]

# Serialization stand-in for an infinite bar death; corner coordinates of
# interval modules are always finite, so the sentinel only appears in barcodes.
INF_DEATH_SENTINEL = 1e30


def _as_point(p: Sequence[float] | np.ndarray, dim: int | None = None) -> np.ndarray:
    """Validate and convert a point to a read-only float array of shape (n,)."""
    arr = np.asarray(p, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"expected a 1d point with n >= 1 coordinates, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"point has non-finite coordinates: {arr!r}")
    if dim is not None and arr.size != dim:
        raise ValueError(f"dimension mismatch: expected {dim} coordinates, got {arr.size}")
    arr = arr.copy()
    arr.setflags(write=False)
    return arr


def _as_corner_array(corners: Sequence | np.ndarray, dim: int | None) -> np.ndarray:
    """Convert a corner list to a read-only (k, n) float array (k may be 0)."""
    arr = np.asarray(corners, dtype=float)
    if arr.size == 0:
        if dim is None:
            raise ValueError("cannot infer ambient dimension from empty corner lists")
        arr = arr.reshape(0, dim)
    if arr.ndim != 2:
        raise ValueError(f"corner list must be a sequence of equal-length points, got shape {arr.shape}")
    if dim is not None and arr.shape[1] != dim:
        raise ValueError(f"dimension mismatch among corners: expected {dim}, got {arr.shape[1]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("corner coordinates must be finite")
    arr = arr.copy()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Box:
    """Axis-aligned box { y : lower <= y <= upper } in R^n.

    Parameters
    ----------
    lower, upper : array-like of shape (n,)
        Componentwise bounds; ``lower <= upper`` is required.
    """

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = _as_point(self.lower)
        up = _as_point(self.upper, dim=lo.size)
        if np.any(lo > up):
            raise ValueError(f"box lower bound exceeds upper bound: {lo} > {up}")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", up)

    @property
    def dim(self) -> int:
        return int(self.lower.size)

    @property
    def volume(self) -> float:
        return float(np.prod(self.upper - self.lower))

    def contains_point(self, y) -> bool:
        y = _as_point(y, dim=self.dim)
        return bool(np.all(self.lower <= y) and np.all(y <= self.upper))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Box):
            return NotImplemented
        return np.array_equal(self.lower, other.lower) and np.array_equal(self.upper, other.upper)

    def __hash__(self):
        return hash((self.lower.tobytes(), self.upper.tobytes()))

    @staticmethod
    def around(center, delta: float) -> "Box":
        """The hypersquare { y : center - delta <= y <= center + delta }."""
        c = _as_point(center)
        if delta <= 0:
            raise ValueError(f"delta must be positive, got {delta}")
        return Box(c - delta, c + delta)


@dataclass(frozen=True)
class IntervalModule:
    """Interval summand presented by birth and death corners.

    The zero module is represented by empty corner lists (``dim`` is still
    required so empty modules keep an ambient dimension).  Corner arrays are
    stored as given; use :func:`canonicalize` to reduce them to antichains in
    deterministic order.
    """

    births: np.ndarray
    deaths: np.ndarray
    dim: int | None = None

    def __post_init__(self):
        dim = self.dim
        births = np.asarray(self.births, dtype=float)
        deaths = np.asarray(self.deaths, dtype=float)
        if dim is None:
            if births.size > 0:
                dim = int(np.atleast_2d(births).shape[-1])
            elif deaths.size > 0:
                dim = int(np.atleast_2d(deaths).shape[-1])
            else:
                raise ValueError("cannot infer ambient dimension from empty corner lists")
        births = _as_corner_array(births, dim)
        deaths = _as_corner_array(deaths, dim)
        object.__setattr__(self, "births", births)
        object.__setattr__(self, "deaths", deaths)
        object.__setattr__(self, "dim", int(dim))

    @property
    def is_zero(self) -> bool:
        """True when the presentation denotes the zero module (empty support)."""
        return self.births.shape[0] == 0 or self.deaths.shape[0] == 0

    @property
    def is_rectangle(self) -> bool:
        """True when the module has exactly one birth and one death corner."""
        return self.births.shape[0] == 1 and self.deaths.shape[0] == 1

    def bounding_box(self) -> Box:
        """Smallest box containing the support (min of births, max of deaths)."""
        if self.is_zero:
            z = np.zeros(self.dim)
            return Box(z, z)
        return Box(self.births.min(axis=0), self.deaths.max(axis=0))

    def __eq__(self, other) -> bool:
        if not isinstance(other, IntervalModule):
            return NotImplemented
        return (
            self.dim == other.dim
            and np.array_equal(self.births, other.births)
            and np.array_equal(self.deaths, other.deaths)
        )

    def __hash__(self):
        return hash((self.dim, self.births.tobytes(), self.deaths.tobytes()))

    def __repr__(self):
        return (
            f"IntervalModule(births={self.births.tolist()}, "
            f"deaths={self.deaths.tolist()}, dim={self.dim})"
        )


def zero_module(dim: int) -> IntervalModule:
    """The zero module in ambient dimension ``dim`` (empty corner lists)."""
    return IntervalModule(np.empty((0, dim)), np.empty((0, dim)), dim=dim)


@dataclass(frozen=True)
class Decomposition:
    """Direct sum of interval modules at one homology degree."""

    degree: int
    intervals: tuple
    ambient_dim: int

    def __post_init__(self):
        if self.degree < 0:
            raise ValueError(f"homology degree must be nonnegative, got {self.degree}")
        if self.ambient_dim < 1:
            raise ValueError(f"ambient dimension must be >= 1, got {self.ambient_dim}")
        intervals = tuple(self.intervals)
        for m in intervals:
            if not isinstance(m, IntervalModule):
                raise TypeError(f"intervals must be IntervalModule, got {type(m).__name__}")
            if m.dim != self.ambient_dim:
                raise ValueError(
                    f"interval dimension {m.dim} does not match ambient dimension {self.ambient_dim}"
                )
        object.__setattr__(self, "intervals", intervals)

    def __len__(self) -> int:
        return len(self.intervals)

    def __iter__(self):
        return iter(self.intervals)


class Bar(tuple):
    """A bar (birth, death) on a line parameter; death may be math.inf."""

    __slots__ = ()

    def __new__(cls, birth: float, death: float):
        birth = float(birth)
        death = float(death)
        if math.isnan(birth) or math.isnan(death):
            raise ValueError("bar endpoints must not be NaN")
        if death < birth:
            raise ValueError(f"bar death {death} precedes birth {birth}")
        return super().__new__(cls, (birth, death))

    @property
    def birth(self) -> float:
        return self[0]

    @property
    def death(self) -> float:
        return self[1]

    @property
    def length(self) -> float:
        return self[1] - self[0]

    def __repr__(self):
        return f"Bar({self[0]!r}, {self[1]!r})"


# A Barcode is a plain list of Bar; sort_barcode gives the deterministic order.


def sort_barcode(bars: Iterable[Bar]) -> list:
    """Deterministic barcode order: by (birth, death)."""
    return sorted(bars, key=lambda b: (b[0], b[1]))


def _minimal_rows(points: np.ndarray) -> np.ndarray:
    """Rows of ``points`` that are minimal under <= (duplicates collapsed)."""
    points = np.unique(points, axis=0)  # also sorts lexicographically
    k = points.shape[0]
    if k <= 1:
        return points
    # le[i, j] is True when point i <= point j componentwise
    le = np.all(points[:, None, :] <= points[None, :, :], axis=2)
    strictly_below = le & ~le.T  # i <= j and not j <= i, i.e. i < j with i != j
    dominated = strictly_below.any(axis=0)
    return points[~dominated]


def _maximal_rows(points: np.ndarray) -> np.ndarray:
    return -_minimal_rows(-np.asarray(points))[::-1] if len(points) else points


def canonicalize(module: IntervalModule) -> IntervalModule:
    """Reduce corners to antichains in deterministic lexicographic order.

    Births are reduced to their minimal elements and deaths to their maximal
    elements; dominated corners and duplicates are removed, and the survivors
    are sorted lexicographically.  A presentation with no pair b <= d has empty
    support and collapses to the zero module (empty corner lists).

    Idempotent, and never changes membership of any point.
    """
    if module.is_zero:
        return zero_module(module.dim)
    births = _minimal_rows(module.births)
    deaths = _maximal_rows(module.deaths)
    pair_ok = np.any(np.all(births[:, None, :] <= deaths[None, :, :], axis=2))
    if not pair_ok:
        return zero_module(module.dim)
    # np.unique in _minimal_rows already leaves rows lexicographically sorted;
    # deaths went through a sign flip, so sort them explicitly.
    deaths = deaths[np.lexsort(deaths.T[::-1])]
    return IntervalModule(births, deaths, dim=module.dim)


def contains(module: IntervalModule, y) -> bool:
    """Membership of ``y`` in supp M.

    True iff some birth corner is <= y and y is <= some death corner.
    """
    y = _as_point(y, dim=module.dim)
    if module.is_zero:
        return False
    return bool(
        np.any(np.all(module.births <= y, axis=1))
        and np.any(np.all(y <= module.deaths, axis=1))
    )


def contains_many(module: IntervalModule, points: np.ndarray) -> np.ndarray:
    """Vectorized membership for an (N, n) array of points."""
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[1] != module.dim:
        raise ValueError(f"expected points of shape (N, {module.dim}), got {points.shape}")
    if module.is_zero:
        return np.zeros(points.shape[0], dtype=bool)
    above = np.any(np.all(points[:, None, :] >= module.births[None, :, :], axis=2), axis=1)
    below = np.any(np.all(points[:, None, :] <= module.deaths[None, :, :], axis=2), axis=1)
    return above & below


def restrict_to_box(module: IntervalModule, box: Box) -> IntervalModule:
    """Restriction of an interval module to a box.

    Birth corners with b <= box.upper are kept and pushed up to
    max(b, box.lower); death corners with d >= box.lower are kept and pushed
    down to min(d, box.upper).  The result is canonicalized; an empty result
    is the zero module.
    """
    if box.dim != module.dim:
        raise ValueError(f"box dimension {box.dim} does not match module dimension {module.dim}")
    if module.is_zero:
        return zero_module(module.dim)
    keep_b = np.all(module.births <= box.upper, axis=1)
    keep_d = np.all(module.deaths >= box.lower, axis=1)
    births = np.maximum(module.births[keep_b], box.lower)
    deaths = np.minimum(module.deaths[keep_d], box.upper)
    if births.shape[0] == 0 or deaths.shape[0] == 0:
        return zero_module(module.dim)
    return canonicalize(IntervalModule(births, deaths, dim=module.dim))


def restrict_to_diagonal_line(module: IntervalModule, basepoint) -> Bar | None:
    """Bar of the restriction to the diagonal line l_y(t) = y + t*(1,...,1).

    The birth parameter is min over births of max_i (b_i - y_i) and the death
    parameter is max over deaths of min_i (d_i - y_i).  Returns None when the
    restriction is empty (birth >= death).
    """
    y = _as_point(basepoint, dim=module.dim)
    if module.is_zero:
        return None
    t_birth = float(np.min(np.max(module.births - y, axis=1)))
    t_death = float(np.max(np.min(module.deaths - y, axis=1)))
    if t_birth < t_death:
        return Bar(t_birth, t_death)
    return None


def fibered_barcode(decomp: Decomposition, basepoint) -> list:
    """Barcode of the decomposition along the diagonal line through ``basepoint``.

    One bar per interval from :func:`restrict_to_diagonal_line`; empty
    restrictions are dropped.  Order is deterministic (sorted by endpoints).
    """
    bars = []
    for m in decomp.intervals:
        bar = restrict_to_diagonal_line(m, basepoint)
        if bar is not None:
            bars.append(bar)
    return sort_barcode(bars)


# ---------------------------------------------------------------------------
# JSON interchange
# ---------------------------------------------------------------------------

def decomposition_to_dict(decomp: Decomposition) -> dict:
    """Plain-dict form: {"dim": n, "degree": k, "intervals": [{births, deaths}]}."""
    return {
        "dim": decomp.ambient_dim,
        "degree": decomp.degree,
        "intervals": [
            {"births": m.births.tolist(), "deaths": m.deaths.tolist()}
            for m in decomp.intervals
        ],
    }


def decomposition_from_dict(data: dict) -> Decomposition:
    """Parse the dict form; corner lists are canonicalized on load."""
    try:
        dim = int(data["dim"])
        degree = int(data["degree"])
        raw = data["intervals"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed decomposition payload: {exc}") from exc
    intervals = []
    for idx, item in enumerate(raw):
        try:
            births = item["births"]
            deaths = item["deaths"]
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed interval entry {idx}: {exc}") from exc
        mod = IntervalModule(
            _as_corner_array(births, dim), _as_corner_array(deaths, dim), dim=dim
        )
        intervals.append(canonicalize(mod))
    return Decomposition(degree=degree, intervals=tuple(intervals), ambient_dim=dim)


def write_decomposition(path, decomp: Decomposition) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(decomposition_to_dict(decomp), fh, indent=1)
        fh.write("\n")


def read_decomposition(path) -> Decomposition:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"invalid decomposition JSON in {path}: {exc}") from exc
    return decomposition_from_dict(data)
