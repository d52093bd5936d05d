import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.testing import assert_allclose, assert_array_equal

from helpers import perturb_rect_decomposition, random_rectangle, rect_decomposition

from mpcorner import (
    Decomposition,
    GridImage,
    GridSpec,
    ImageNorm,
    IntervalModule,
    PhiKind,
    TcdrOp,
    TcdrParams,
    fibered_barcode,
    image_distance,
    interleaving_rect,
    mpl,
    phi_on_axes,
    scdr_p,
    scdr_sup,
    tcdr,
    weight,
    write_image_csv,
    write_image_pgm,
    zero_module,
)

KINDS = ("a", "b", "c")

RECT = IntervalModule([[0.0, 0.0]], [[2.0, 2.0]])


def single(module, degree=1):
    return Decomposition(degree=degree, intervals=(module,), ambient_dim=module.dim)


def cell_at(x, half=0.25):
    """A one-cell grid whose center is exactly x."""
    x = np.asarray(x, dtype=float)
    return GridSpec(x - half, x + half, (1,) * x.size)


def test_gridspec_validation():
    with pytest.raises(ValueError):
        GridSpec([0.0, 0.0], [0.0, 1.0], (2, 2))
    with pytest.raises(ValueError):
        GridSpec([0.0, 0.0], [1.0, 1.0], (2,))
    with pytest.raises(ValueError):
        GridSpec([0.0, 0.0], [1.0, 1.0], (0, 2))


def test_gridspec_points_are_cell_centers_in_c_order():
    grid = GridSpec([0.0, 0.0], [1.0, 1.0], (2, 2))
    assert_allclose(
        grid.points(),
        [[0.25, 0.25], [0.25, 0.75], [0.75, 0.25], [0.75, 0.75]],
    )
    assert grid.cell_volume == pytest.approx(0.25)
    assert grid.num_points == 4


def test_gridimage_validation():
    grid = GridSpec([0.0, 0.0], [1.0, 1.0], (2, 2))
    with pytest.raises(ValueError):
        GridImage(grid, np.zeros(3))
    with pytest.raises(ValueError):
        GridImage(grid, [0.0, 1.0, np.inf, 0.0])


def test_tcdr_empty_decomposition_is_zero_image():
    grid = GridSpec([0.0, 0.0], [1.0, 1.0], (3, 3))
    params = TcdrParams(op=TcdrOp.SUM, weight=lambda m: 1.0, phi=lambda m, pts: np.ones(len(pts)))
    image = tcdr(Decomposition(degree=0, intervals=(), ambient_dim=2), params, grid)
    assert_array_equal(image.values, np.zeros(9))


def test_tcdr_single_interval_identity():
    grid = GridSpec([-0.5, -0.5], [2.5, 2.5], (6, 6))
    params = TcdrParams(
        op=TcdrOp.SUM,
        weight=lambda m: 1.0,
        phi=lambda m, pts: phi_on_axes(m, grid.axes(), "b", 0.5).reshape(-1),
    )
    image = tcdr(single(RECT), params, grid)
    assert_allclose(image.values, phi_on_axes(RECT, grid.axes(), "b", 0.5).reshape(-1))


def test_tcdr_sum_doubles_for_duplicate_interval():
    grid = GridSpec([-0.5, -0.5], [2.5, 2.5], (5, 5))
    params = TcdrParams(
        op=TcdrOp.SUM,
        weight=lambda m: 1.0,
        phi=lambda m, pts: phi_on_axes(m, grid.axes(), "b", 0.5).reshape(-1),
        normalize=False,
    )
    one = tcdr(single(RECT), params, grid)
    two = tcdr(
        Decomposition(degree=1, intervals=(RECT, RECT), ambient_dim=2), params, grid
    )
    assert_allclose(two.values, 2.0 * one.values)


def test_tcdr_ops_on_constant_fields():
    grid = GridSpec([0.0, 0.0], [1.0, 1.0], (2, 2))
    mods = tuple(
        IntervalModule([[float(i), 0.0]], [[float(i) + 1.0, 1.0]]) for i in range(3)
    )
    dec = Decomposition(degree=0, intervals=mods, ambient_dim=2)
    # Constant phi equal to 1 + the module's birth abscissa: fields 1, 2, 3.
    phi_fn = lambda m, pts: np.full(len(pts), 1.0 + m.births[0, 0])
    w1 = lambda m: 1.0

    def values(op, **kw):
        return tcdr(dec, TcdrParams(op=op, weight=w1, phi=phi_fn, **kw), grid).values

    assert_allclose(values(TcdrOp.MAX), 3.0)
    assert_allclose(values(TcdrOp.MIN), 1.0)
    assert_allclose(values(TcdrOp.MEAN), 2.0)
    assert_allclose(values(TcdrOp.SUM, normalize=False), 6.0)
    assert_allclose(values(TcdrOp.SUM, normalize=True), 2.0)
    assert_allclose(values(TcdrOp.KTH_MAX, k=2), 2.0)
    assert_allclose(values(TcdrOp.KTH_MAX, k=5), 0.0)


def test_tcdr_normalize_rejects_zero_weight_sum():
    grid = GridSpec([0.0, 0.0], [1.0, 1.0], (2, 2))
    params = TcdrParams(op=TcdrOp.SUM, weight=lambda m: 0.0, phi=lambda m, pts: np.ones(len(pts)))
    with pytest.raises(ValueError):
        tcdr(single(RECT), params, grid)


def test_scdr_p_single_interval_equals_phi_field():
    grid = GridSpec([-0.5, -0.5], [2.5, 2.5], (7, 7))
    for p in (0.0, 1.0, 2.5):
        image = scdr_p(single(RECT), p, "b", 0.5, grid)
        assert_allclose(image.values, phi_on_axes(RECT, grid.axes(), "b", 0.5).reshape(-1))


def test_scdr_p_weighted_mix_example():
    # Weights 1 and 3; at the probe point the light interval has phi = 1 and
    # the heavy one has phi = 0, so V_1 = (1/4)*1 + (3/4)*0 = 0.25.
    light = IntervalModule([[0.0, 0.0]], [[2.0, 2.0]])
    heavy = IntervalModule([[10.0, 10.0]], [[16.0, 16.0]])
    assert weight(light) == 1.0 and weight(heavy) == 3.0
    dec = Decomposition(degree=1, intervals=(light, heavy), ambient_dim=2)
    image = scdr_p(dec, 1.0, "b", 0.5, cell_at([1.0, 1.0]))
    assert image.values[0] == pytest.approx(0.25)


def test_scdr_p_zero_p_is_uniform_mean():
    dec = Decomposition(degree=1, intervals=(RECT, RECT), ambient_dim=2)
    grid = GridSpec([-0.5, -0.5], [2.5, 2.5], (5, 5))
    image = scdr_p(dec, 0.0, "a", 0.5, grid)
    assert_allclose(image.values, scdr_p(single(RECT), 0.0, "a", 0.5, grid).values)


def test_scdr_p_rejects_degenerate_inputs():
    grid = GridSpec([0.0, 0.0], [1.0, 1.0], (2, 2))
    with pytest.raises(ValueError):
        scdr_p(Decomposition(degree=1, intervals=(), ambient_dim=2), 1.0, "a", 0.5, grid)
    flat = IntervalModule([[0.0, 0.0]], [[0.0, 5.0]])  # weight 0
    with pytest.raises(ValueError):
        scdr_p(single(flat), 1.0, "a", 0.5, grid)
    with pytest.raises(ValueError):
        scdr_p(single(RECT), -1.0, "a", 0.5, grid)
    # p = 0 tolerates zero weights (uniform coefficients).
    image = scdr_p(single(flat), 0.0, "a", 0.5, grid)
    assert image.values.shape == (4,)


def test_scdr_sup_is_idempotent_under_duplication():
    grid = GridSpec([-0.5, -0.5], [2.5, 2.5], (6, 6))
    one = scdr_sup(single(RECT), "b", 0.5, grid)
    two = scdr_sup(Decomposition(degree=1, intervals=(RECT, RECT), ambient_dim=2), "b", 0.5, grid)
    assert_array_equal(one.values, two.values)


def test_scdr_sup_disjoint_supports_equals_sum():
    far = IntervalModule([[5.0, 5.0]], [[7.0, 7.0]])
    dec = Decomposition(degree=1, intervals=(RECT, far), ambient_dim=2)
    grid = GridSpec([-1.0, -1.0], [8.0, 8.0], (18, 18))
    sup_image = scdr_sup(dec, "b", 0.5, grid)
    f1 = phi_on_axes(RECT, grid.axes(), "b", 0.5).reshape(-1)
    f2 = phi_on_axes(far, grid.axes(), "b", 0.5).reshape(-1)
    assert_array_equal(sup_image.values, np.maximum(f1, f2))
    assert_allclose(sup_image.values, f1 + f2)  # delta-neighborhoods never overlap


def test_scdr_sup_empty_decomposition_is_zero():
    grid = GridSpec([0.0, 0.0], [1.0, 1.0], (3, 3))
    image = scdr_sup(Decomposition(degree=1, intervals=(), ambient_dim=2), "a", 0.5, grid)
    assert_array_equal(image.values, np.zeros(9))


def test_mpl_rectangle_center_value():
    image = mpl(single(RECT), 1, cell_at([1.0, 1.0]))
    assert image.values[0] == pytest.approx(1.0)


def test_mpl_k_beyond_bar_count_is_zero():
    grid = GridSpec([-0.5, -0.5], [2.5, 2.5], (5, 5))
    image = mpl(single(RECT), 2, grid)
    assert_array_equal(image.values, np.zeros(25))
    empty = mpl(Decomposition(degree=1, intervals=(), ambient_dim=2), 1, grid)
    assert_array_equal(empty.values, np.zeros(25))
    with pytest.raises(ValueError):
        mpl(single(RECT), 0, grid)


@given(st.integers(0, 10_000))
def test_mpl_matches_fibered_barcode_landscape(seed):
    """mpl equals the 1-parameter landscape of the fibered barcode per point."""
    rng = np.random.default_rng(seed)
    dec = rect_decomposition(rng, int(rng.integers(1, 6)))
    k = int(rng.integers(1, 4))
    grid = GridSpec([-0.2, -0.2], [1.2, 1.2], (5, 4))
    image = mpl(dec, k, grid)
    for idx, x in enumerate(grid.points()):
        tents = sorted(
            (max(0.0, min(-b.birth, b.death)) for b in fibered_barcode(dec, x)),
            reverse=True,
        )
        expected = tents[k - 1] if len(tents) >= k else 0.0
        assert image.values[idx] == pytest.approx(expected, abs=1e-12)


@given(st.integers(0, 10_000))
def test_representations_are_permutation_invariant(seed):
    rng = np.random.default_rng(seed)
    dec = rect_decomposition(rng, 6)
    perm = rng.permutation(6)
    shuffled = Decomposition(
        degree=dec.degree,
        intervals=tuple(dec.intervals[i] for i in perm),
        ambient_dim=2,
    )
    grid = GridSpec([-0.2, -0.2], [1.2, 1.2], (8, 8))
    for build in (
        lambda d: scdr_p(d, 1.0, "b", 0.3, grid),
        lambda d: scdr_p(d, 0.0, "a", 0.3, grid),
        lambda d: scdr_sup(d, "c", 0.3, grid),
        lambda d: mpl(d, 2, grid),
    ):
        assert_array_equal(build(dec).values, build(shuffled).values)


def stability_gaps(dec_a, dec_b, kind, delta, grid):
    """Sup-norm gaps of (V_0, V_1, V_inf) between two decompositions."""
    v0 = image_distance(
        scdr_p(dec_a, 0.0, kind, delta, grid), scdr_p(dec_b, 0.0, kind, delta, grid), "linf"
    )
    v1 = image_distance(
        scdr_p(dec_a, 1.0, kind, delta, grid), scdr_p(dec_b, 1.0, kind, delta, grid), "linf"
    )
    vs = image_distance(
        scdr_sup(dec_a, kind, delta, grid), scdr_sup(dec_b, kind, delta, grid), "linf"
    )
    return v0, v1, vs


@given(st.integers(0, 10_000))
def test_scdr_stability_bounds_small(seed):
    """Perturbation bounds for V_0, V_1 and V_inf on matched rectangle noise.

    The sup-image bound is kind-dependent: kind (a) compares diagonal
    restrictions directly and moves by at most min(eta, delta)/delta, while
    kinds (b) and (c) pick up the factor 2 from the diagonal-line shadow of
    the window (see test_sup_image_kinds_b_c_need_doubled_factor).
    """
    rng = np.random.default_rng(seed)
    dec = rect_decomposition(rng, int(rng.integers(2, 7)))
    eta = float(rng.choice([0.05, 0.3]))
    delta = float(rng.choice([0.1, 0.5]))
    kind = KINDS[seed % 3]
    other = perturb_rect_decomposition(rng, dec, eta)
    grid = GridSpec([-0.4, -0.4], [1.4, 1.4], (15, 15))
    v0, v1, vs = stability_gaps(dec, other, kind, delta, grid)
    unit = min(eta, delta) / delta
    c = min(
        np.mean([weight(m) for m in dec.intervals]),
        np.mean([weight(m) for m in other.intervals]),
    )
    assert v0 <= 2.0 * unit + 1e-9
    assert v1 <= (4.0 + 2.0 / c) * unit + 1e-9
    assert vs <= (unit if kind == "a" else 2.0 * unit) + 1e-9


def test_sup_image_kinds_b_c_need_doubled_factor():
    """A square shrunk by eta on all sides moves the sup image by ~2*eta/delta.

    For the square of side 2*delta centered in the window, every diagonal
    chord loses eta at each end, so the window volume (and the largest
    contained rectangle) drops by 2*eta/delta - (eta/delta)**2, which exceeds
    the single factor min(eta, delta)/delta.  Kind (a) compares diagonal
    chords directly and sits exactly at the single factor.
    """
    eta, delta = 0.01, 0.1
    dec_a = Decomposition(
        degree=1,
        intervals=(IntervalModule([[0.0, 0.0]], [[0.2, 0.2]]),),
        ambient_dim=2,
    )
    dec_b = Decomposition(
        degree=1,
        intervals=(IntervalModule([[eta, eta]], [[0.2 - eta, 0.2 - eta]]),),
        ambient_dim=2,
    )
    assert interleaving_rect(dec_a.intervals[0], dec_b.intervals[0]) == pytest.approx(eta)
    grid = GridSpec([0.05, 0.05], [0.15, 0.15], (1, 1))  # one cell centered at (0.1, 0.1)
    unit = min(eta, delta) / delta
    for kind in ("b", "c"):
        _, _, vs = stability_gaps(dec_a, dec_b, kind, delta, grid)
        assert vs == pytest.approx(2.0 * unit - unit**2)
        assert vs > unit
        assert vs <= 2.0 * unit + 1e-12
    _, _, vs = stability_gaps(dec_a, dec_b, "a", delta, grid)
    assert vs == pytest.approx(unit)


@given(st.integers(0, 10_000))
def test_scdr_sup_separates_distinct_rectangles(seed):
    """Small delta makes the sup representation tell two rectangles apart."""
    rng = np.random.default_rng(seed)
    a = random_rectangle(rng)
    b = random_rectangle(rng)
    pts = rng.uniform(-0.1, 1.1, size=(2000, 2))
    in_a = np.all(pts >= a.births[0], axis=1) & np.all(pts <= a.deaths[0], axis=1)
    in_b = np.all(pts >= b.births[0], axis=1) & np.all(pts <= b.deaths[0], axis=1)
    sym = in_a ^ in_b
    if not sym.any():
        return  # overlap everywhere in the sample; supports indistinguishable here
    # Most interior point of the symmetric difference: maximize the margin to
    # the other support and to the containing support's boundary.
    def margin(x):
        host, guest = (a, b) if contains_rect(a, x) else (b, a)
        inner = min(np.min(x - host.births[0]), np.min(host.deaths[0] - x))
        outer = linf_dist_to_rect(guest, x)
        return min(inner, outer)

    candidates = pts[sym]
    margins = np.array([margin(x) for x in candidates])
    x = candidates[int(np.argmax(margins))]
    m = float(margins.max())
    if m <= 1e-4:
        return
    delta = m / 4.0
    grid = cell_at(x, half=delta)
    va = scdr_sup(single(a), "b", delta, grid).values[0]
    vb = scdr_sup(single(b), "b", delta, grid).values[0]
    assert abs(va - vb) > 0.0


def contains_rect(rect, x):
    return bool(np.all(x >= rect.births[0]) and np.all(x <= rect.deaths[0]))


def linf_dist_to_rect(rect, x):
    gap = np.maximum(rect.births[0] - x, x - rect.deaths[0])
    return float(np.max(np.maximum(gap, 0.0)))


def test_image_distance_examples():
    grid = GridSpec([0.0, 0.0], [1.0, 1.0], (2, 2))
    a = GridImage(grid, [1.0, 0.0, 0.0, 0.0])
    zero = GridImage(grid, np.zeros(4))
    assert image_distance(a, a, ImageNorm.LINF) == 0.0
    assert image_distance(a, zero, "linf") == 1.0
    assert image_distance(a, zero, "l2sq") == pytest.approx(0.25)
    shifted = GridImage(grid, a.values + 0.125)
    assert image_distance(a, shifted, "linf") == pytest.approx(0.125)


def test_image_distance_rejects_grid_mismatch():
    a = GridImage(GridSpec([0.0, 0.0], [1.0, 1.0], (2, 2)), np.zeros(4))
    b = GridImage(GridSpec([0.0, 0.0], [2.0, 1.0], (2, 2)), np.zeros(4))
    with pytest.raises(ValueError):
        image_distance(a, b, "linf")


def test_write_image_csv(tmp_path):
    grid = GridSpec([0.0, 0.0], [1.0, 1.0], (2, 2))
    image = GridImage(grid, [0.0, 0.25, 0.5, 1.0])
    path = tmp_path / "image.csv"
    write_image_csv(image, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "x,y,value"
    assert len(lines) == 5
    first = [float(tok) for tok in lines[1].split(",")]
    assert first == [0.25, 0.25, 0.0]
    last = [float(tok) for tok in lines[-1].split(",")]
    assert last == [0.75, 0.75, 1.0]


def test_write_image_pgm(tmp_path):
    grid = GridSpec([0.0, 0.0], [2.0, 1.0], (4, 2))
    image = GridImage(grid, np.linspace(0.0, 1.0, 8), {"kind": "b"})
    path = tmp_path / "image.pgm"
    write_image_pgm(image, path)
    blob = path.read_bytes()
    header, rest = blob.split(b"65535\n", 1)
    assert header == b"P5\n4 2\n"
    pixels = np.frombuffer(rest, dtype=">u2").reshape(2, 4)
    # Row 0 is the top of the image (largest y); x increases along columns.
    field = image.reshaped()
    expected_top = np.round(field[:, 1] / field.max() * 65535).astype(int)
    assert_array_equal(pixels[0], expected_top)
    sidecar = (str(path) + ".scale.txt")
    with open(sidecar) as fh:
        text = fh.read()
    assert "vmin=0.0" in text and "vmax=1.0" in text and "kind=b" in text


def test_write_image_pgm_rejects_non_2d(tmp_path):
    grid = GridSpec([0.0], [1.0], (4,))
    image = GridImage(grid, np.zeros(4))
    with pytest.raises(ValueError):
        write_image_pgm(image, tmp_path / "bad.pgm")


def test_flat_image_exports_as_zeros(tmp_path):
    grid = GridSpec([0.0, 0.0], [1.0, 1.0], (2, 2))
    image = GridImage(grid, np.full(4, 0.7))
    path = tmp_path / "flat.pgm"
    write_image_pgm(image, path)
    pixels = np.frombuffer(path.read_bytes().split(b"65535\n", 1)[1], dtype=">u2")
    assert_array_equal(pixels, np.zeros(4, dtype=">u2"))
