"""Experiment harnesses behind the command line tool.

Three drivers: subsample convergence of grid representations, a runtime
benchmark of the corner-based evaluation against a dense per-cell sampling
baseline, and the bridged-squares instability contrast.  Each returns an
:class:`ExperimentReport` whose rows are ordered deterministically by key, so
a report is bit-identical for a fixed seed regardless of the worker count.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from joblib import Parallel, delayed

from .invariants import support_volume_total
from .model import Decomposition, contains_many
from .pipeline import (
    PointCloud,
    annulus_nonuniform,
    bridged_squares,
    build_bifiltration,
    circle_with_outliers,
    vineyard_decompose,
)
from .representations import (
    GridImage,
    GridSpec,
    image_distance,
    mpl,
    scdr_p,
    scdr_sup,
)

__all__ = [
    "ExperimentReport",
    "decompose_cloud",
    "dense_phi_image",
    "fit_loglog_slope",
    "make_generator",
    "run_bench",
    "run_convergence",
    "run_instability",
]

DEFAULT_BIF_RESOLUTION = (32, 32)
DEFAULT_MARGIN = 0.3
DEFAULT_BANDWIDTH = 0.3
DEFAULT_NUM_LINES = 32


@dataclass(frozen=True)
class ExperimentReport:
    """Tabular experiment outcome: keyed rows plus a scalar summary.

    ``rows`` are tuples matching ``columns``; ``params`` records the inputs
    (including the seed) and ``summary`` holds fitted quantities.
    """

    name: str
    params: dict = field(default_factory=dict)
    columns: tuple = ()
    rows: tuple = ()
    summary: dict = field(default_factory=dict)

    def to_csv(self, path) -> None:
        """Write '#'-commented params/summary lines, then header and rows.

        Floats are written with ``repr`` so a report round-trips exactly.
        """
        def fmt(v):
            return repr(float(v)) if isinstance(v, float) else str(v)

        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"# experiment={self.name}\n")
            for k in sorted(self.params):
                fh.write(f"# param {k}={fmt(self.params[k])}\n")
            for k in sorted(self.summary):
                fh.write(f"# summary {k}={fmt(self.summary[k])}\n")
            fh.write(",".join(self.columns) + "\n")
            for row in self.rows:
                fh.write(",".join(fmt(v) for v in row) + "\n")


def fit_loglog_slope(ns, ds):
    """Least-squares slope of log(d) against log(n).

    Returns ``(slope, True)`` on a valid fit, ``(nan, False)`` when the data
    cannot be fitted (fewer than 2 points, nonpositive values, or no spread
    in n), e.g. when all distances are exactly 0.
    """
    ns = np.asarray(ns, dtype=float)
    ds = np.asarray(ds, dtype=float)
    if ns.size != ds.size or ns.size < 2:
        return float("nan"), False
    if np.any(~np.isfinite(ns)) or np.any(~np.isfinite(ds)):
        return float("nan"), False
    if np.any(ns <= 0) or np.any(ds <= 0):
        return float("nan"), False
    x = np.log(ns)
    if np.ptp(x) == 0:
        return float("nan"), False
    slope = np.polyfit(x, np.log(ds), 1)[0]
    return float(slope), True


def make_generator(selector):
    """Resolve a generator name to a ``(size, seed) -> PointCloud`` callable."""
    if callable(selector):
        return selector
    name = str(selector).lower()
    if name == "annulus":
        return annulus_nonuniform
    if name == "circle":
        return lambda size, seed: circle_with_outliers(size, max(1, size // 40), seed)
    raise ValueError(f"unknown generator {selector!r} (expected 'annulus' or 'circle')")


def decompose_cloud(
    cloud: PointCloud,
    *,
    bif_resolution=DEFAULT_BIF_RESOLUTION,
    margin: float = DEFAULT_MARGIN,
    bandwidth: float = DEFAULT_BANDWIDTH,
    num_lines: int = DEFAULT_NUM_LINES,
    degree: int = 1,
    window=None,
):
    """Run the whole pipeline on one cloud; returns (decomposition, bifiltration).

    The filtration grid window defaults to the cloud bounding box padded by
    ``margin`` of its extent per axis (degenerate extents are padded by the
    margin itself so a constant cloud still yields a valid window).
    """
    if window is None:
        lo, hi = cloud.bounding_box()
        extent = np.where(hi > lo, hi - lo, 1.0)
        window = (lo - margin * extent, hi + margin * extent)
    grid = GridSpec(window[0], window[1], tuple(bif_resolution))
    bif = build_bifiltration(cloud, grid, bandwidth)
    dec = vineyard_decompose(bif, degree=degree, num_lines=num_lines)
    return dec, bif


def _representation(dec: Decomposition, p, kind, delta: float, grid: GridSpec) -> GridImage:
    """scdr_sup for p='sup', scdr_p otherwise; empty input gives the zero image."""
    if len(dec) == 0:
        return GridImage(grid, np.zeros(grid.num_points), {"empty": True})
    if isinstance(p, str) and p.lower() == "sup":
        return scdr_sup(dec, kind, delta, grid)
    return scdr_p(dec, float(p), kind, delta, grid)


def run_convergence(
    n_list,
    reps: int,
    seed: int,
    delta: float,
    kind,
    *,
    p="sup",
    generator="annulus",
    base_size: int = 5000,
    workers: int = 1,
    image_resolution=(50, 50),
    bif_resolution=DEFAULT_BIF_RESOLUTION,
    margin: float = DEFAULT_MARGIN,
    bandwidth: float = DEFAULT_BANDWIDTH,
    num_lines: int = DEFAULT_NUM_LINES,
    degree: int = 1,
) -> ExperimentReport:
    """Distance of subsample representations to the full-cloud target.

    For each (n, rep) a fresh subsample of the base cloud runs through the
    pipeline on the shared filtration window; its representation is compared
    with the target (the run on the whole base cloud, the largest n there is)
    in both the sup norm and the squared L2 norm.  The summary carries the
    least-squares slopes of log(mean distance) against log(n).
    """
    n_list = [int(n) for n in n_list]
    if len(n_list) < 4:
        raise ValueError(f"need at least 4 subsample sizes, got {n_list}")
    if sorted(n_list) != n_list:
        raise ValueError(f"subsample sizes must be ascending, got {n_list}")
    if reps < 1:
        raise ValueError(f"need at least 1 repetition, got {reps}")

    base = make_generator(generator)(base_size, seed)
    lo, hi = base.bounding_box()
    extent = np.where(hi > lo, hi - lo, 1.0)
    window = (lo - margin * extent, hi + margin * extent)
    pipeline_kw = dict(
        bif_resolution=bif_resolution,
        bandwidth=bandwidth,
        num_lines=num_lines,
        degree=degree,
        window=window,
    )
    dec_base, bif_base = decompose_cloud(base, **pipeline_kw)
    blo, bhi = bif_base.value_bounds()
    pad = np.maximum(1e-9, 1e-9 * np.abs(bhi))
    img_grid = GridSpec(blo, bhi + pad, tuple(image_resolution))
    target = _representation(dec_base, p, kind, delta, img_grid)

    def one(n: int, rep: int):
        rng = np.random.default_rng([seed, n, rep])
        size = min(n, base.size)
        idx = rng.choice(base.size, size=size, replace=False)
        dec, _ = decompose_cloud(PointCloud(base.points[idx]), **pipeline_kw)
        img = _representation(dec, p, kind, delta, img_grid)
        return (
            n,
            rep,
            image_distance(img, target, "linf"),
            image_distance(img, target, "l2sq"),
        )

    tasks = [(n, rep) for n in n_list for rep in range(reps)]
    rows = Parallel(n_jobs=workers)(delayed(one)(n, rep) for n, rep in tasks)
    rows = tuple(tuple(r) for r in rows)

    means_linf = [np.mean([r[2] for r in rows if r[0] == n]) for n in n_list]
    means_l2 = [np.mean([r[3] for r in rows if r[0] == n]) for n in n_list]
    slope_linf, fit_linf = fit_loglog_slope(n_list, means_linf)
    slope_l2, fit_l2 = fit_loglog_slope(n_list, means_l2)
    return ExperimentReport(
        name="convergence",
        params={
            "seed": seed,
            "reps": reps,
            "delta": delta,
            "kind": str(getattr(kind, "value", kind)),
            "p": str(p),
            "base_size": base_size,
            "generator": getattr(generator, "__name__", str(generator)),
            "n_list": " ".join(str(n) for n in n_list),
        },
        columns=("n", "rep", "dist_linf", "dist_l2sq"),
        rows=rows,
        summary={
            "slope_linf": slope_linf,
            "fit_linf": fit_linf,
            "slope_l2sq": slope_l2,
            "fit_l2sq": fit_l2,
            "target_intervals": len(dec_base),
        },
    )


def dense_phi_image(
    decomp: Decomposition, grid: GridSpec, delta: float, samples_per_axis: int = 8
) -> GridImage:
    """Brute-force sup image: phi kind (b) by membership sampling per grid cell.

    For every grid point the local window [x - delta, x + delta]^n is sampled
    on a midpoint lattice and the support-membership fraction estimates
    vol(supp within the window) / (2 delta)^n.  Every cell is recomputed from
    scratch; this is the baseline the corner-based evaluation is timed against.
    """
    if delta <= 0:
        raise ValueError(f"delta must be positive, got {delta}")
    s = int(samples_per_axis)
    if s < 1:
        raise ValueError(f"samples_per_axis must be >= 1, got {s}")
    n = grid.dim
    side = (np.arange(s) + 0.5) / s * 2.0 * delta - delta
    mesh = np.meshgrid(*([side] * n), indexing="ij")
    offsets = np.stack(mesh, axis=-1).reshape(-1, n)
    pts = grid.points()
    values = np.zeros(grid.num_points)
    for m in decomp.intervals:
        if m.is_zero:
            continue
        for i in range(pts.shape[0]):
            frac = float(contains_many(m, pts[i] + offsets).mean())
            if frac > values[i]:
                values[i] = frac
    return GridImage(grid, values, {"op": "sup", "kind": "b", "delta": delta, "dense": True})


def _random_rectangles(m: int, seed: int) -> Decomposition:
    """Seeded rectangle decomposition inside the unit window."""
    from .model import IntervalModule

    rng = np.random.default_rng([seed, m])
    births = rng.uniform(0.0, 0.65, size=(m, 2))
    gaps = rng.uniform(0.05, 0.35, size=(m, 2))
    intervals = tuple(
        IntervalModule(births[i : i + 1], births[i : i + 1] + gaps[i : i + 1])
        for i in range(m)
    )
    return Decomposition(degree=1, intervals=intervals, ambient_dim=2)


def run_bench(
    decomp_sizes,
    grid_sizes,
    seed: int,
    delta: float,
    *,
    repeats: int = 3,
    samples_per_axis: int = 8,
) -> ExperimentReport:
    """Wall times of corner-based images against the dense sampling baseline.

    Per (summand count, grid size): sup images for phi kinds a/b/c and the
    first landscape, each timed as the minimum over ``repeats`` runs; the
    baseline (timed once, it dominates) is :func:`dense_phi_image`.  Speedup
    = baseline time / method time, guarded against zero division.
    """
    rows = []
    summary = {}
    for m in decomp_sizes:
        dec = _random_rectangles(int(m), seed)
        for g in grid_sizes:
            g = int(g)
            grid = GridSpec((0.0, 0.0), (1.0, 1.0), (g, g))

            t0 = time.perf_counter()
            baseline_img = dense_phi_image(dec, grid, delta, samples_per_axis)
            baseline_t = time.perf_counter() - t0

            def best_time(fn):
                best = float("inf")
                out = None
                for _ in range(max(1, repeats)):
                    t0 = time.perf_counter()
                    out = fn()
                    best = min(best, time.perf_counter() - t0)
                return best, out

            methods = (
                ("scdr_sup_a", lambda: scdr_sup(dec, "a", delta, grid)),
                ("scdr_sup_b", lambda: scdr_sup(dec, "b", delta, grid)),
                ("scdr_sup_c", lambda: scdr_sup(dec, "c", delta, grid)),
                ("mpl_k1", lambda: mpl(dec, 1, grid)),
            )
            corner_b_img = None
            for name, fn in methods:
                t, out = best_time(fn)
                if name == "scdr_sup_b":
                    corner_b_img = out
                rows.append((int(m), g, name, t, baseline_t / max(t, 1e-12)))
            rows.append((int(m), g, "baseline_dense_b", baseline_t, 1.0))
            summary[f"max_abs_diff_m{int(m)}_g{g}"] = image_distance(
                corner_b_img, baseline_img, "linf"
            )
    return ExperimentReport(
        name="bench",
        params={
            "seed": seed,
            "delta": delta,
            "repeats": repeats,
            "samples_per_axis": samples_per_axis,
        },
        columns=("num_intervals", "grid_size", "method", "seconds", "speedup"),
        rows=tuple(rows),
        summary=summary,
    )


def run_instability(
    eps_list,
    delta: float,
    *,
    kinds=("a", "b", "c"),
    image_resolution=(40, 40),
    window=((-0.5, -0.5), (3.5, 3.5)),
) -> ExperimentReport:
    """Bridged vs unbridged squares: proxy discrepancy and image distances.

    Per bridge width eps: (i) the volume proxy max_i vol(supp M_i) and its
    discrepancy against eps = 0 (one merged summand of volume about 2 against
    per-square volume 1, so the discrepancy jumps to about 1 at eps -> 0+),
    and (ii) the sup-image distances ||V_sup(eps) - V_sup(0)||_inf for every
    phi kind, which stay proportional to eps.
    """
    eps_list = [float(e) for e in eps_list]
    if any(e < 0 for e in eps_list):
        raise ValueError(f"bridge widths must be nonnegative, got {eps_list}")
    grid = GridSpec(window[0], window[1], tuple(image_resolution))
    base = bridged_squares(0.0)
    proxy0 = max(support_volume_total(m) for m in base)
    base_imgs = {k: scdr_sup(base, k, delta, grid) for k in kinds}

    rows = []
    for eps in sorted(eps_list):
        dec = bridged_squares(eps)
        proxy = max(support_volume_total(m) for m in dec)
        dists = [
            image_distance(scdr_sup(dec, k, delta, grid), base_imgs[k], "linf")
            for k in kinds
        ]
        rows.append((eps, proxy, abs(proxy - proxy0), *dists))

    positive = [r for r in rows if r[0] > 0]
    proxies = [r[1] for r in rows]
    return ExperimentReport(
        name="instability",
        params={
            "delta": delta,
            "eps_list": " ".join(repr(e) for e in sorted(eps_list)),
            "kinds": " ".join(str(getattr(k, "value", k)) for k in kinds),
        },
        columns=("eps", "proxy_volume", "mpi_discrepancy")
        + tuple(f"scdr_sup_dist_{getattr(k, 'value', k)}" for k in kinds),
        rows=tuple(rows),
        summary={
            "min_discrepancy_positive_eps": min((r[2] for r in positive), default=float("nan")),
            "proxy_monotone": all(a <= b + 1e-12 for a, b in zip(proxies, proxies[1:])),
        },
    )
