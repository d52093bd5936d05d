"""Distances between interval modules and decompositions.

Exact distances are restricted to rectangle summands (one birth corner, one
death corner); general staircases keep the exact interleaving distance to the
zero module (the weight).  The bottleneck distance between rectangle
decompositions runs a binary search over the sorted candidate costs, checking
feasibility with a perfect matching on the diagonal-augmented bipartite graph.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from .invariants import weight
from .model import Decomposition, IntervalModule

__all__ = [
    "MatchingResult",
    "bottleneck",
    "interleaving_oracle_rect",
    "interleaving_rect",
    "interleaving_to_zero",
]


def interleaving_to_zero(module: IntervalModule) -> float:
    """Interleaving distance from M to the zero module; equals the weight."""
    return weight(module)


def _rectangle_corners(module: IntervalModule, name: str):
    if not module.is_rectangle:
        raise ValueError(
            f"{name} must be a rectangle module (one birth and one death corner), "
            f"got {module.births.shape[0]} births and {module.deaths.shape[0]} deaths"
        )
    return module.births[0], module.deaths[0]


def interleaving_rect(a: IntervalModule, b: IntervalModule) -> float:
    """Interleaving distance between two rectangle modules.

    Closed form: the corner-transport cost max(||b_a - b_b||_inf,
    ||d_a - d_b||_inf) capped by the cost max(w(a), w(b)) of shifting both
    modules to zero.
    """
    ba, da = _rectangle_corners(a, "a")
    bb, db = _rectangle_corners(b, "b")
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    transport = max(
        float(np.max(np.abs(ba - bb))),
        float(np.max(np.abs(da - db))),
    )
    return min(transport, max(weight(a), weight(b)))


def interleaving_oracle_rect(a: IntervalModule, b: IntervalModule, epsilon: float) -> bool:
    """Do epsilon-interleaving morphisms exist between two rectangles?

    True iff both modules die under the 2*epsilon diagonal shift (both weights
    <= epsilon) or the corner transport works (both corner distances
    <= epsilon).  Brute-force decision procedure used to validate the closed
    form; see the tests.
    """
    if epsilon < 0:
        return False
    ba, da = _rectangle_corners(a, "a")
    bb, db = _rectangle_corners(b, "b")
    if weight(a) <= epsilon and weight(b) <= epsilon:
        return True
    return (
        float(np.max(np.abs(ba - bb))) <= epsilon
        and float(np.max(np.abs(da - db))) <= epsilon
    )


@dataclass(frozen=True)
class MatchingResult:
    """Optimal bottleneck matching between two rectangle decompositions.

    ``cost`` is the max over matched pair costs and unmatched-to-zero costs;
    indices refer to positions in the input interval lists.
    """

    cost: float
    pairs: tuple = field(default_factory=tuple)
    unmatched_left: tuple = field(default_factory=tuple)
    unmatched_right: tuple = field(default_factory=tuple)


def _feasible(pair_cost: np.ndarray, wa: np.ndarray, wb: np.ndarray, eps: float):
    """Perfect matching on the diagonal-augmented graph at tolerance eps.

    Left nodes: the m left rectangles then m' diagonal proxies of the right
    ones; right nodes: the m' right rectangles then m diagonal proxies of the
    left ones.  An edge exists when the corresponding assignment costs at most
    eps (proxy-to-proxy edges are free).  Returns the scipy matching array or
    None when no perfect matching exists.
    """
    m, mp = pair_cost.shape
    size = m + mp
    rows = []
    cols = []
    ii, jj = np.nonzero(pair_cost <= eps)
    rows.extend(ii.tolist())
    cols.extend(jj.tolist())
    for i in np.nonzero(wa <= eps)[0]:
        rows.append(int(i))
        cols.append(mp + int(i))
    for j in np.nonzero(wb <= eps)[0]:
        rows.append(m + int(j))
        cols.append(int(j))
    proxy_rows = np.repeat(np.arange(m, size), m)
    proxy_cols = np.tile(np.arange(mp, size), mp)
    rows.extend(proxy_rows.tolist())
    cols.extend(proxy_cols.tolist())
    graph = csr_matrix(
        (np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(size, size)
    )
    match = maximum_bipartite_matching(graph, perm_type="column")
    if np.count_nonzero(match >= 0) == size:
        return match
    return None


def bottleneck(decomp_a: Decomposition, decomp_b: Decomposition) -> MatchingResult:
    """Bottleneck matching between two rectangle decompositions.

    Pair cost is :func:`interleaving_rect`; an unmatched summand costs its
    weight (interleaving to zero).  The optimum is found by binary search over
    the sorted multiset of candidate costs with a maximum-cardinality
    bipartite feasibility check at each probe.  Raises on non-rectangle
    summands.
    """
    left = list(decomp_a.intervals)
    right = list(decomp_b.intervals)
    for idx, m in enumerate(left):
        _rectangle_corners(m, f"decomp_a[{idx}]")
    for idx, m in enumerate(right):
        _rectangle_corners(m, f"decomp_b[{idx}]")
    m, mp = len(left), len(right)
    if m == 0 and mp == 0:
        return MatchingResult(cost=0.0)
    wa = np.array([weight(x) for x in left])
    wb = np.array([weight(x) for x in right])
    pair_cost = np.empty((m, mp))
    for i, x in enumerate(left):
        for j, y in enumerate(right):
            pair_cost[i, j] = interleaving_rect(x, y)
    candidates = np.unique(np.concatenate([[0.0], pair_cost.ravel(), wa, wb]))
    lo_idx, hi_idx = 0, len(candidates) - 1
    match = _feasible(pair_cost, wa, wb, candidates[hi_idx])
    if match is None:
        raise RuntimeError("bottleneck matching infeasible at the maximal candidate cost")
    if _feasible(pair_cost, wa, wb, candidates[lo_idx]) is not None:
        hi_idx = lo_idx
    while hi_idx - lo_idx > 1:
        mid = (lo_idx + hi_idx) // 2
        if _feasible(pair_cost, wa, wb, candidates[mid]) is not None:
            hi_idx = mid
        else:
            lo_idx = mid
    match = _feasible(pair_cost, wa, wb, candidates[hi_idx])
    pairs = []
    unmatched_left = []
    costs = [0.0]
    col_of_row = match  # perm_type='column': entry i is the column matched to row i
    for i in range(m):
        col = col_of_row[i]
        if col < mp:
            pairs.append((i, int(col)))
            costs.append(float(pair_cost[i, col]))
        else:
            unmatched_left.append(i)
            costs.append(float(wa[i]))
    matched_right = {j for _, j in pairs}
    unmatched_right = [j for j in range(mp) if j not in matched_right]
    costs.extend(float(wb[j]) for j in unmatched_right)
    return MatchingResult(
        cost=max(costs),
        pairs=tuple(pairs),
        unmatched_left=tuple(unmatched_left),
        unmatched_right=tuple(unmatched_right),
    )
