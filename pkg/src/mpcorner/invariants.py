"""Scalar invariants of interval modules and the local interval functions phi.

Provided here:

- ``weight``: half the largest min-coordinate gap over (birth, death) corner
  pairs; equals the interleaving distance to the zero module and the length of
  the largest diagonal segment fitting in the support.
- ``largest_rectangle_volume``: the biggest between-corner-pair box volume.
- ``support_volume``: exact volume of supp M within a box by
  inclusion-exclusion over corner subsets, with a diagonal-line quadrature
  fallback past a corner-count threshold.
- ``phi`` / ``phi_on_axes``: the three local interval representations
  (a) diagonal length, (b) volume, (c) largest rectangle, normalized to [0, 1],
  evaluated at a point or vectorized over a product grid.
"""

from __future__ import annotations

from enum import Enum

import numpy as np

from .model import Box, IntervalModule, _as_point, restrict_to_box

__all__ = [
    "PhiKind",
    "largest_rectangle_volume",
    "phi",
    "phi_on_axes",
    "support_volume",
    "support_volume_inclusion_exclusion",
    "support_volume_quadrature",
    "support_volume_total",
    "weight",
]

# Inclusion-exclusion is exact but exponential in corner count; past this many
# total corners support_volume switches to quadrature.
DEFAULT_CORNER_THRESHOLD = 16
# Midpoint-rule resolution per offset axis for the quadrature fallback.
DEFAULT_QUADRATURE_RESOLUTION = 64


class PhiKind(str, Enum):
    """Selector for the local interval representation phi_delta."""

    DIAGONAL_LENGTH = "a"
    VOLUME = "b"
    LARGEST_RECTANGLE = "c"

    @classmethod
    def coerce(cls, value) -> "PhiKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(value)
        except ValueError:
            raise ValueError(
                f"unknown phi kind {value!r}; expected one of 'a', 'b', 'c'"
            ) from None


def weight(module: IntervalModule) -> float:
    """Half the best min-coordinate gap over all (birth, death) corner pairs.

    Equals the interleaving distance from M to the zero module, and the
    half-length (in the line parameter) of the largest diagonal segment that
    fits inside supp M.  The zero module has weight 0.
    """
    if module.is_zero:
        return 0.0
    gaps = module.deaths[None, :, :] - module.births[:, None, :]
    per_pair = np.min(np.clip(gaps, 0.0, None), axis=2)
    return 0.5 * float(per_pair.max())


def largest_rectangle_volume(module: IntervalModule) -> float:
    """Volume of the biggest box [b, d] over (birth, death) corner pairs."""
    if module.is_zero:
        return 0.0
    gaps = module.deaths[None, :, :] - module.births[:, None, :]
    vols = np.prod(np.clip(gaps, 0.0, None), axis=2)
    return float(vols.max())


def _subset_extremes(corners: np.ndarray, combine) -> np.ndarray:
    """Componentwise `combine` over every nonempty subset of corner rows.

    Returns an array of shape (2**k, n); row 0 (the empty subset) is unused.
    """
    k, n = corners.shape
    out = np.empty((1 << k, n))
    for mask in range(1, 1 << k):
        low = (mask & -mask).bit_length() - 1
        rest = mask ^ (1 << low)
        out[mask] = corners[low] if rest == 0 else combine(corners[low], out[rest])
    return out


def _subset_signs(k: int) -> np.ndarray:
    """(-1)**popcount(mask) for mask in [0, 2**k); index 0 unused by callers."""
    signs = np.empty(1 << k)
    signs[0] = 1.0
    for mask in range(1, 1 << k):
        signs[mask] = -signs[mask >> 1] if (mask & 1) else signs[mask >> 1]
    return signs


def support_volume_inclusion_exclusion(module: IntervalModule, box: Box) -> float:
    """Exact volume of supp M within ``box`` by corner inclusion-exclusion.

    Expanding the two existence clauses of the support indicator gives

        vol = sum over nonempty S <= births, T <= deaths of
              (-1)^(|S|+|T|) prod_j (min(min_T d_j, up_j) - max(max_S b_j, lo_j))_+

    Exponential in the corner count; see :func:`support_volume` for the
    thresholded entry point.
    """
    if box.dim != module.dim:
        raise ValueError(f"box dimension {box.dim} does not match module dimension {module.dim}")
    if module.is_zero:
        return 0.0
    smax = _subset_extremes(module.births, np.maximum)[1:]
    tmin = _subset_extremes(module.deaths, np.minimum)[1:]
    sign_s = _subset_signs(module.births.shape[0])[1:]
    sign_t = _subset_signs(module.deaths.shape[0])[1:]
    lo_clip = np.maximum(smax, box.lower)
    up_clip = np.minimum(tmin, box.upper)
    edges = np.clip(up_clip[None, :, :] - lo_clip[:, None, :], 0.0, None)
    vols = np.prod(edges, axis=2)
    total = float(np.einsum("s,t,st->", sign_s, sign_t, vols))
    # Signs cancel exactly in theory; tiny negative residue is float noise.
    return max(total, 0.0)


def _diagonal_slice_lengths(module: IntervalModule, offsets: np.ndarray, box: Box) -> np.ndarray:
    """Length (in the line parameter t) of supp M ∩ box along l_y per offset y.

    ``offsets`` has shape (Q, n) with last coordinate 0; the line through y is
    y + t*(1,...,1).
    """
    tb = np.min(np.max(module.births[None, :, :] - offsets[:, None, :], axis=2), axis=1)
    td = np.max(np.min(module.deaths[None, :, :] - offsets[:, None, :], axis=2), axis=1)
    t_lo = np.max(box.lower[None, :] - offsets, axis=1)
    t_hi = np.min(box.upper[None, :] - offsets, axis=1)
    return np.clip(np.minimum(td, t_hi) - np.maximum(tb, t_lo), 0.0, None)


def support_volume_quadrature(
    module: IntervalModule, box: Box, resolution: int = DEFAULT_QUADRATURE_RESOLUTION
) -> float:
    """Midpoint-rule volume of supp M within ``box`` via diagonal slices.

    Writes the volume as the integral, over the (n-1)-dimensional space of
    diagonal lines (offsets y with y_n = 0), of the t-length of the clipped
    slice; ``resolution`` midpoints per offset axis.
    """
    if box.dim != module.dim:
        raise ValueError(f"box dimension {box.dim} does not match module dimension {module.dim}")
    if module.is_zero:
        return 0.0
    if resolution < 1:
        raise ValueError(f"quadrature resolution must be >= 1, got {resolution}")
    n = module.dim
    if n == 1:
        # Lines are the axis itself; single offset of measure one.
        offsets = np.zeros((1, 1))
        return float(_diagonal_slice_lengths(module, offsets, box)[0])
    lo = box.lower - box.upper[-1]
    hi = box.upper - box.lower[-1]
    axes = []
    measure = 1.0
    for j in range(n - 1):
        width = (hi[j] - lo[j]) / resolution
        axes.append(lo[j] + (np.arange(resolution) + 0.5) * width)
        measure *= width
    mesh = np.meshgrid(*axes, indexing="ij")
    offsets = np.zeros((resolution ** (n - 1), n))
    for j in range(n - 1):
        offsets[:, j] = mesh[j].ravel()
    lengths = _diagonal_slice_lengths(module, offsets, box)
    return float(lengths.sum() * measure)


def support_volume(
    module: IntervalModule,
    box: Box,
    corner_threshold: int = DEFAULT_CORNER_THRESHOLD,
    quadrature_resolution: int = DEFAULT_QUADRATURE_RESOLUTION,
) -> float:
    """Volume of supp M within ``box``.

    Exact inclusion-exclusion when the module has at most ``corner_threshold``
    corners in total, else the diagonal-line quadrature fallback.
    """
    if module.is_zero:
        return 0.0
    n_corners = module.births.shape[0] + module.deaths.shape[0]
    if n_corners <= corner_threshold:
        return support_volume_inclusion_exclusion(module, box)
    return support_volume_quadrature(module, box, resolution=quadrature_resolution)


def support_volume_total(module: IntervalModule, **kwargs) -> float:
    """Volume of the whole support (integrated over its bounding box)."""
    if module.is_zero:
        return 0.0
    return support_volume(module, module.bounding_box(), **kwargs)


def phi(module: IntervalModule, x, kind, delta: float) -> float:
    """Local interval representation phi_delta(M)(x), clipped to [0, 1].

    With R the hypersquare of half-width delta around x and n the module's
    ambient dimension:

    - ``'a'``: weight of the restriction to R, divided by delta;
    - ``'b'``: vol(supp M within R) / (2*delta)**n;
    - ``'c'``: largest between-corner-pair box volume of the restriction,
      divided by (2*delta)**n.
    """
    kind = PhiKind.coerce(kind)
    if delta <= 0:
        raise ValueError(f"delta must be positive, got {delta}")
    x = _as_point(x, dim=module.dim)
    box = Box.around(x, delta)
    if kind is PhiKind.DIAGONAL_LENGTH:
        val = weight(restrict_to_box(module, box)) / delta
    elif kind is PhiKind.VOLUME:
        val = support_volume(module, box) / (2.0 * delta) ** module.dim
    else:
        val = largest_rectangle_volume(restrict_to_box(module, box)) / (2.0 * delta) ** module.dim
    return min(max(val, 0.0), 1.0)


# ---------------------------------------------------------------------------
# Vectorized grid evaluation
#
# For kinds (a) and (c) the weight / rectangle volume of the restriction to
# R_{x,delta} is a max over corner pairs of per-axis clamped gaps
#     A_j(x_j) = (min(d_j, x_j + delta) - max(b_j, x_j - delta))_+,
# because any corner the restriction would drop contributes a zero factor
# after the clamp.  Each A_j depends on one grid axis only, so a pair's field is an
# outer min/product of per-axis vectors.  Kind (b) uses the same separability
# per inclusion-exclusion term, or an exact section integral in 2d.
# ---------------------------------------------------------------------------


def _axis_gap(b_j: float, d_j: float, coords: np.ndarray, delta: float) -> np.ndarray:
    return np.clip(np.minimum(d_j, coords + delta) - np.maximum(b_j, coords - delta), 0.0, None)


def _outer_combine(vectors, combine_min: bool) -> np.ndarray:
    """Outer min (or product) of per-axis vectors via broadcasting."""
    n = len(vectors)
    out = None
    for j, v in enumerate(vectors):
        shape = [1] * n
        shape[j] = v.size
        v = v.reshape(shape)
        if out is None:
            out = np.broadcast_to(v, [w.size for w in vectors]).copy() if n > 1 else v.copy()
        elif combine_min:
            out = np.minimum(out, v)
        else:
            out = out * v
    return out


def _pairwise_field(module, axes, delta, combine_min):
    """max over corner pairs of the per-axis combined clamped gaps."""
    shape = tuple(len(a) for a in axes)
    best = np.zeros(shape)
    for b in module.births:
        for d in module.deaths:
            vecs = [_axis_gap(b[j], d[j], axes[j], delta) for j in range(module.dim)]
            np.maximum(best, _outer_combine(vecs, combine_min), out=best)
    return best


def _volume_field_terms(module, axes, delta):
    """Inclusion-exclusion volume field as a signed sum of separable terms."""
    smax = _subset_extremes(module.births, np.maximum)[1:]
    tmin = _subset_extremes(module.deaths, np.minimum)[1:]
    sign_s = _subset_signs(module.births.shape[0])[1:]
    sign_t = _subset_signs(module.deaths.shape[0])[1:]
    shape = tuple(len(a) for a in axes)
    out = np.zeros(shape)
    for s_row, s_sign in zip(smax, sign_s):
        for t_row, t_sign in zip(tmin, sign_t):
            vecs = [_axis_gap(s_row[j], t_row[j], axes[j], delta) for j in range(module.dim)]
            out += (s_sign * t_sign) * _outer_combine(vecs, combine_min=False)
    return np.clip(out, 0.0, None)


def _staircase_section_profile(module):
    """Breakpoints and step values of the 2d support section.

    For a 2d module the vertical section of supp M at abscissa s is the
    interval [B(s), D(s)] with B(s) = min{b_2 : b_1 <= s} (+inf when empty) and
    D(s) = max{d_2 : d_1 >= s} (-inf when empty); both are non-increasing step
    functions whose breakpoints are corner abscissas.  Returns (knots, b_vals,
    d_vals) where b_vals/d_vals hold the section bounds on each open gap
    (knots[k], knots[k+1]).
    """
    births = module.births
    deaths = module.deaths
    knots = np.unique(np.concatenate([births[:, 0], deaths[:, 0]]))
    b_sorted = births[np.argsort(births[:, 0], kind="stable")]
    prefix_min = np.minimum.accumulate(b_sorted[:, 1])
    d_sorted = deaths[np.argsort(deaths[:, 0], kind="stable")]
    suffix_max = np.maximum.accumulate(d_sorted[::-1, 1])[::-1]
    # On the open gap (knots[k], knots[k+1]): births with b_1 <= knots[k],
    # deaths with d_1 >= knots[k+1].
    nb = np.searchsorted(b_sorted[:, 0], knots[:-1], side="right")
    b_vals = np.where(nb > 0, prefix_min[np.maximum(nb - 1, 0)], np.inf)
    nd = np.searchsorted(d_sorted[:, 0], knots[1:], side="left")
    d_vals = np.where(nd < len(d_sorted), suffix_max[np.minimum(nd, len(d_sorted) - 1)], -np.inf)
    return knots, b_vals, d_vals


def _volume_field_2d_sections(module, axes, delta):
    """Exact 2d volume field via per-column section integration.

    For each grid ordinate y the box is [x-delta, x+delta] x [y-delta, y+delta];
    the clipped section height h(s) = (min(D(s), y+delta) - max(B(s), y-delta))_+
    is piecewise constant, so its integral over [x-delta, x+delta] is read off
    a cumulative piecewise-linear profile with one ``np.interp`` per row.
    """
    xs, ys = axes
    knots, b_vals, d_vals = _staircase_section_profile(module)
    widths = np.diff(knots)
    out = np.empty((xs.size, ys.size))
    for row, y in enumerate(ys):
        heights = np.clip(
            np.minimum(d_vals, y + delta) - np.maximum(b_vals, y - delta), 0.0, None
        )
        cumulative = np.concatenate([[0.0], np.cumsum(heights * widths)])
        upper = np.interp(xs + delta, knots, cumulative)
        lower = np.interp(xs - delta, knots, cumulative)
        out[:, row] = upper - lower
    return out


def phi_on_axes(module: IntervalModule, axes, kind, delta: float) -> np.ndarray:
    """phi_delta(M) evaluated on the product grid of per-axis coordinates.

    ``axes`` is a sequence of ``module.dim`` 1d coordinate arrays; the result
    has shape ``(len(axes[0]), ..., len(axes[n-1]))`` (C order, axis 0 first).
    Agrees with :func:`phi` pointwise wherever the scalar route is exact.
    """
    kind = PhiKind.coerce(kind)
    if delta <= 0:
        raise ValueError(f"delta must be positive, got {delta}")
    axes = [np.asarray(a, dtype=float) for a in axes]
    if len(axes) != module.dim:
        raise ValueError(f"expected {module.dim} coordinate axes, got {len(axes)}")
    shape = tuple(a.size for a in axes)
    if module.is_zero:
        return np.zeros(shape)
    n = module.dim
    if kind is PhiKind.DIAGONAL_LENGTH:
        field = 0.5 * _pairwise_field(module, axes, delta, combine_min=True) / delta
    elif kind is PhiKind.LARGEST_RECTANGLE:
        field = _pairwise_field(module, axes, delta, combine_min=False) / (2.0 * delta) ** n
    else:
        n_corners = module.births.shape[0] + module.deaths.shape[0]
        if n == 2:
            vol = _volume_field_2d_sections(module, axes, delta)
        elif n_corners <= DEFAULT_CORNER_THRESHOLD:
            vol = _volume_field_terms(module, axes, delta)
        else:
            # Rare slow path: many corners in n >= 3; quadrature per grid point.
            vol = np.empty(shape)
            pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
            for i, x in enumerate(pts):
                vol.flat[i] = support_volume_quadrature(module, Box.around(x, delta))
        field = vol / (2.0 * delta) ** n
    return np.clip(field, 0.0, 1.0)
