import math

import mpmath
import numpy as np
import pytest

from grushin_qc.geometry import Polyline
from grushin_qc.grid import DensityGrid
from grushin_qc.modulus import (
    CurveFamily,
    _section5_tail,
    annulus_modulus,
    constraint_row,
    default_grid,
    line_integral,
    radial_segments,
    ring_family,
    section5_integral,
    section5_modulus_bound,
    solve_modulus,
)


def seg(*pts):
    return Polyline.from_vertices(pts)


def test_line_integral_examples():
    g = DensityGrid.euclidean((0, 3, -1, 1), 32, 32, np.ones((32, 32)))
    assert line_integral(g, seg((1, 0), (2, 0)), "euclidean") == pytest.approx(1.0, rel=1e-12)
    gg = DensityGrid.grushin((0.5, 3, -1, 1), 32, 32, 1.0, np.ones((32, 32)))
    assert line_integral(gg, seg((1, 0), (2, 0)), "grushin", 1.0) == pytest.approx(1.0, rel=1e-12)


def test_line_integral_extremal_annulus_density():
    g = DensityGrid.euclidean((-2.2, 2.2, -2.2, 2.2), 400, 400)
    X, Y = np.meshgrid(g.x_centers, g.y_centers, indexing="ij")
    r = np.hypot(X, Y)
    g = g.like(np.where((r > 0.5), 1 / (np.maximum(r, 0.5) * math.log(2)), 0.0))
    for th in (0.1, 1.0, 2.5):
        c = Polyline.from_vertices([[math.cos(th), math.sin(th)], [2 * math.cos(th), 2 * math.sin(th)]])
        assert line_integral(g, c, "euclidean") == pytest.approx(1.0, rel=2e-3)


def test_line_integral_rejects_curves_leaving_the_box():
    g = DensityGrid.euclidean((0, 1, 0, 1), 16, 16)
    with pytest.raises(ValueError):
        line_integral(g, seg((0.5, 0.5), (1.5, 0.5)))


def test_line_integral_converges_with_grid():
    f = lambda x, y: 1 + x * y
    c = seg((0.1, 0.2), (0.9, 0.7))
    exact = 0.0
    t = np.linspace(0, 1, 100001)
    x, y = 0.1 + 0.8 * t, 0.2 + 0.5 * t
    exact = np.trapezoid(f(x, y), t) * math.hypot(0.8, 0.5)
    errs = []
    for n in (16, 64):
        g = DensityGrid.euclidean((0, 1, 0, 1), n, n)
        X, Y = np.meshgrid(g.x_centers, g.y_centers, indexing="ij")
        errs.append(abs(line_integral(g.like(f(X, Y)), c) - exact))
    assert errs[1] < errs[0] and errs[1] < 1e-3


def test_single_curve_modulus_decreases_with_refinement():
    fam = CurveFamily([seg((0, 0), (1, 0))])
    bbox = (-0.5, 1.5, -1, 1)
    coarse = solve_modulus(fam, DensityGrid.euclidean(bbox, 64, 64)).value
    fine = solve_modulus(fam, DensityGrid.euclidean(bbox, 256, 256)).value
    assert fine < coarse


def test_annulus_modulus_three_ratios():
    for r in (2.0, 4.0, 8.0):
        res = solve_modulus(ring_family((0, 0), 1, r, 64), metric="euclidean")
        assert res.converged
        assert res.value == pytest.approx(annulus_modulus(r), rel=0.05)


def test_admissibility_and_reported_energy():
    fam = ring_family((0, 0), 1, 2, 16, rays_per_curve=4)
    grid = default_grid(fam, "euclidean", nx=64, ny=64)
    res = solve_modulus(fam, grid)
    assert res.min_integral >= 1 - 1e-6
    assert res.residual < 1e-6
    for g in fam.groups:
        avg = np.mean([line_integral(res.density, fam.curves[i]) for i in g])
        assert avg >= 1 - 1e-9
    assert res.value == pytest.approx(np.sum(res.density.weights * res.density.values**2), rel=1e-12)
    d = res.to_dict()
    assert set(d) >= {"value", "residual", "iterations", "grid"}
    assert d["grid"]["nx"] == 64


def test_scaling_law():
    fam = ring_family((0, 0), 1, 3, 16, rays_per_curve=4)
    grid = default_grid(fam, "euclidean", nx=48, ny=48)
    base = solve_modulus(fam, grid).value
    scaled = DensityGrid(grid.bbox, grid.nx, grid.ny, grid.values, 3.5 * grid.weights)
    assert solve_modulus(fam, scaled).value == pytest.approx(3.5 * base, rel=1e-6)


def test_monotone_in_the_family():
    small = radial_segments((0, 0), 1, 2, 16)
    big = small.union(radial_segments((0, 0), 1, 2, 32))
    grid = default_grid(big, "euclidean", nx=64, ny=64)
    assert solve_modulus(big, grid).value >= solve_modulus(small, grid).value * (1 - 1e-6)


def test_subfamily_bound():
    fam = ring_family((0, 0), 1, 2, 32, rays_per_curve=4)
    grid = default_grid(fam, "euclidean", nx=64, ny=64)
    whole = solve_modulus(fam, grid).value
    rng = np.random.default_rng(1)
    for _ in range(3):
        ids = sorted(rng.choice(len(fam), size=10, replace=False))
        assert solve_modulus(fam.subfamily(ids), grid).value <= whole * (1 + 1e-6)


def test_ring_family_examples():
    fam = ring_family((0, 0), 1, 2, 4, rays_per_curve=1)
    assert len(fam.curves) == 4
    assert all(c.euclidean_length() == pytest.approx(1.0) for c in fam.curves)
    with pytest.raises(ValueError):
        ring_family((0, 0), 2, 1, 16)


def test_pullback_endpoints_and_Y_avoidance():
    fam = ring_family((0, 0), 1.0, 4.0, 16, "grushin-pullback", 1.0, rays_per_curve=1)
    for c in fam.curves:
        on_Y = c.vertices[:, 0] == 0
        assert not np.any(on_Y[1:] & on_Y[:-1])
    # a ray at angle 0 maps to the horizontal segment from (2 r_in)^(1/2) to (2 r_out)^(1/2)
    th = 2 * np.pi * 0.5 / 16
    u = np.array([1.0, 4.0])
    x = np.sqrt(2 * u * math.cos(th))
    c = fam.curves[0]
    assert c.vertices[0, 0] == pytest.approx(x[0]) and c.vertices[-1, 0] == pytest.approx(x[1])
    # along the axis itself the formula gives the stated endpoints
    assert math.sqrt(2 * 1.0) == pytest.approx(1.4142135623730951)


def test_pullback_matches_euclidean_modulus():
    for alpha in (1.0, 2.0):
        e = solve_modulus(ring_family((0, 0), 1, 2, 64), metric="euclidean").value
        g = solve_modulus(ring_family((0, 0), 1, 2, 64, "grushin-pullback", alpha), metric="grushin", alpha=alpha).value
        assert g == pytest.approx(e, rel=0.07)


def test_pinned_column_carries_no_density():
    fam = ring_family((0, 0), 1, 2, 32, "grushin-pullback", 1.0, rays_per_curve=2)
    res = solve_modulus(fam, metric="grushin", alpha=1.0)
    assert np.all(res.density.values[res.density.pinned] == 0)
    assert res.density.pinned.any()


def test_zero_support_constraint_is_rejected():
    g = DensityGrid.grushin((-1, 1, -1, 1), 2, 2, 1.0)
    with pytest.raises(ValueError):
        solve_modulus(CurveFamily([seg((0.0, -0.5), (0.0, 0.5))]), g, "euclidean")


def _section5_oracle(alpha):
    mpmath.mp.dps = 30
    g = lambda s: mpmath.exp(-(alpha + 1) * s) + mpmath.exp(-(alpha - 1) * s) * (1 / s**2 + alpha / s) ** 2
    return float(mpmath.quad(g, [mpmath.log(2), 1, 10, 100, 1000, mpmath.inf]))


@pytest.mark.parametrize("alpha", [1.0, 1.5, 2.0, 3.0])
def test_section5_integral_against_independent_quadrature(alpha):
    assert section5_integral(alpha) == pytest.approx(_section5_oracle(alpha), rel=1e-9)


def test_section5_tail_closed_form():
    t0 = 2.0**-30
    S = -math.log(t0)
    assert _section5_tail(t0, 1.0) == pytest.approx(1 / S + 1 / S**2 + 1 / (3 * S**3) + t0**2 / 2, rel=1e-14)
    # the alpha != 1 branch reproduces the same value as alpha -> 1
    assert _section5_tail(t0, 1.0 + 1e-9) == pytest.approx(_section5_tail(t0, 1.0), rel=1e-6)


def test_section5_bound():
    b = section5_modulus_bound(1.0, nx=256, ny=256)
    assert b.integral_agreement < 1e-4
    assert b.modulus_lower_bound == pytest.approx(1 / b.upper_integral)
    assert b.family_modulus_estimate >= 0.9 * b.modulus_lower_bound
    with pytest.raises(ValueError):
        section5_modulus_bound(0.5)
