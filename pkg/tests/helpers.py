"""Shared random generators and synthetic complexes for the test suite."""

from __future__ import annotations

import numpy as np

from mpcorner import (
    BiFiltration,
    Decomposition,
    FilteredComplex1D,
    GridSpec,
    IntervalModule,
    canonicalize,
)


def random_staircase(rng, dim: int = 2, max_corners: int = 6) -> IntervalModule:
    """A nonzero canonicalized module with up to ``max_corners`` per side."""
    while True:
        kb = int(rng.integers(1, max_corners + 1))
        kd = int(rng.integers(1, max_corners + 1))
        births = rng.uniform(0.0, 1.0, size=(kb, dim))
        deaths = rng.uniform(0.4, 1.8, size=(kd, dim))
        module = canonicalize(IntervalModule(births, deaths))
        if not module.is_zero:
            return module


def random_rectangle(rng, dim: int = 2) -> IntervalModule:
    birth = rng.uniform(0.0, 0.65, size=dim)
    death = birth + rng.uniform(0.05, 0.35, size=dim)
    return IntervalModule(birth[None, :], death[None, :])


def rect_decomposition(rng, m: int, dim: int = 2, degree: int = 1) -> Decomposition:
    intervals = tuple(random_rectangle(rng, dim) for _ in range(m))
    return Decomposition(degree=degree, intervals=intervals, ambient_dim=dim)


def perturb_rect_decomposition(rng, decomp: Decomposition, eta: float) -> Decomposition:
    """Perturb every rectangle corner by at most ``eta`` per coordinate.

    Death moves are clamped from below so each perturbed rectangle stays
    valid (birth <= death).  Matching summand i to its perturbation shows
    the bottleneck distance between input and output is at most ``eta``.
    """
    out = []
    for m in decomp.intervals:
        b = m.births[0]
        d = m.deaths[0]
        u = rng.uniform(-eta, eta, size=b.size)
        v_lo = np.maximum(-eta, (b + u) - d)
        v = rng.uniform(v_lo, eta)
        out.append(IntervalModule((b + u)[None, :], (d + v)[None, :]))
    return Decomposition(degree=decomp.degree, intervals=tuple(out), ambient_dim=decomp.ambient_dim)


# ---------------------------------------------------------------------------
# Synthetic bifiltered complexes with known degree-1 persistence
# ---------------------------------------------------------------------------

def ring_gadget(b, d, offset: int = 0):
    """An 8-cycle appearing at value ``b``, coned off at value ``d``.

    Returns (simplices, values, facet vertex-tuples) with vertex indices
    shifted by ``offset``.  Degree-1 homology of the gadget lives exactly on
    { y : b <= y, not d <= y }: on the slice line through basepoint y this
    is the bar [max_i(b_i - y_i), max_i(d_i - y_i)).
    """
    b = np.asarray(b, dtype=float)
    d = np.asarray(d, dtype=float)
    assert np.all(d >= b), "cone value must dominate ring value"
    ring = [offset + i for i in range(8)]
    center = offset + 8
    simplices = [(v,) for v in ring]
    values = [b] * 8
    simplices.append((center,))
    values.append(d)
    for i in range(8):
        simplices.append(tuple(sorted((ring[i], ring[(i + 1) % 8]))))
        values.append(b)
    for i in range(8):
        simplices.append(tuple(sorted((ring[i], center))))
        values.append(d)
    for i in range(8):
        simplices.append(tuple(sorted((ring[i], ring[(i + 1) % 8], center))))
        values.append(d)
    return simplices, values


def gadget_bifiltration(gadgets) -> BiFiltration:
    """Wrap ring gadgets in a BiFiltration (the grid is metadata only)."""
    simplices = []
    values = []
    for gadget in gadgets:
        s, v = gadget
        simplices.extend(s)
        values.extend(v)
    index = {tuple(sorted(s)): i for i, s in enumerate(simplices)}
    facets = []
    for s in simplices:
        if len(s) == 1:
            facets.append(())
        else:
            facets.append(
                tuple(index[tuple(sorted(s[:k] + s[k + 1 :]))] for k in range(len(s)))
            )
    values = np.asarray(values)
    vmin = values.min(axis=0)
    vmax = values.max(axis=0)
    grid = GridSpec(vmin - 0.5, vmax + 0.5, (2, 2))
    return BiFiltration(grid=grid, simplices=tuple(simplices), values=values, facets=tuple(facets))


def hook_bar(b, d, basepoint):
    """Expected degree-1 bar of a ring gadget along the line through basepoint."""
    y = np.asarray(basepoint, dtype=float)
    tb = float(np.max(np.asarray(b) - y))
    td = float(np.max(np.asarray(d) - y))
    return (tb, td) if td > tb else None


def random_filtered_complex(rng, max_vertices: int = 6) -> FilteredComplex1D:
    """Small random 2-skeleton with monotone scalar values, ties included."""
    nv = int(rng.integers(3, max_vertices + 1))
    simplices = [(v,) for v in range(nv)]
    values = list(rng.uniform(0.0, 1.0, size=nv))
    edge_value = {}
    for a in range(nv):
        for b in range(a + 1, nv):
            if rng.random() < 0.55:
                v = max(values[a], values[b]) + rng.uniform(0.0, 0.5)
                edge_value[(a, b)] = v
                simplices.append((a, b))
                values.append(v)
    for a in range(nv):
        for b in range(a + 1, nv):
            for c in range(b + 1, nv):
                if (a, b) in edge_value and (a, c) in edge_value and (b, c) in edge_value:
                    if rng.random() < 0.6:
                        v = max(edge_value[(a, b)], edge_value[(a, c)], edge_value[(b, c)])
                        simplices.append((a, b, c))
                        values.append(v + rng.uniform(0.0, 0.5))
    values = np.asarray(values)
    if rng.random() < 0.5:
        # Quantize to force ties; ceil preserves the face ordering.
        values = np.ceil(values * 4.0) / 4.0
    return FilteredComplex1D(simplices=tuple(simplices), values=values, facets=None)
