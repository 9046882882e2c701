"""Rasterized domains: measure, perimeter, dilation, mollified indicator."""

import math

import numpy as np
import pytest

from tfloc.domain import (
    DiskShape,
    DomainMask,
    RectShape,
    StarShape,
    convolve_indicator,
    dilate,
    disk,
    grid_for_shape,
    mask_from_indicator,
    measure,
    perimeter,
    rectangle,
    star,
)
from tfloc.errors import ContractError, GridMismatchError, MarginError
from tfloc.gabor import offset_grid, plane_grid_for, theta
from tfloc.pipeline import STAR23

H = 1.0 / 16


@pytest.fixture(scope="module")
def unit_disk_mask():
    shape = DiskShape((0.0, 0.0), 1.0)
    return disk(grid_for_shape(shape, H, H), (0.0, 0.0), 1.0)


# --------------------------------------------------------------- rasterization

def test_disk_measure_within_one_percent(unit_disk_mask):
    assert abs(measure(unit_disk_mask) - math.pi) / math.pi < 0.01


def test_tiny_disk_contains_center_cell():
    shape = DiskShape((0.0, 0.0), H / 2)
    grid = plane_grid_for((-H, H, -H, H), H, H, margin=3.2)
    m = disk(grid, (0.0, 0.0), H / 2)
    j = int(np.argmin(np.abs(grid.xs())))
    k = int(np.argmin(np.abs(grid.xis())))
    assert m.indicator[j, k]
    assert m.cell_count >= 1


def test_disk_translation_by_whole_cells():
    grid = plane_grid_for((-2.0, 3.0, -1.0, 1.0), H, H, margin=3.0)
    m1 = disk(grid, (0.0, 0.0), 0.7)
    m2 = disk(grid, (1.0, 0.0), 0.7)  # 16 whole cells over
    assert measure(m1) == measure(m2)


def test_rect_exact_measure():
    shape = RectShape((0.0, 0.0), 2.0, 2.0)
    m = rectangle(grid_for_shape(shape, H, H), (0.0, 0.0), 2.0, 2.0)
    assert measure(m) == pytest.approx(4.0, abs=1e-12)


def test_empty_and_block_measure():
    grid = plane_grid_for((-1, 1, -1, 1), H, H, margin=3.0)
    empty = mask_from_indicator(grid, np.zeros((grid.nx, grid.nxi), dtype=bool))
    assert measure(empty) == 0.0
    ind = np.zeros((grid.nx, grid.nxi), dtype=bool)
    ind[60:70, 60:72] = True
    block = mask_from_indicator(grid, ind)
    assert measure(block) == pytest.approx(10 * 12 * H * H)


def test_star_area_23():
    m = star(grid_for_shape(STAR23, H, H), STAR23.points, STAR23.r_in, STAR23.r_out)
    assert STAR23.area == pytest.approx(23.0, abs=1e-9)
    assert 22.5 <= measure(m) <= 23.5


def test_star_shoelace_oracle():
    shp = StarShape(points=7, r_in=0.9, r_out=1.7)
    v = shp.vertices()
    x, y = v[:, 0], v[:, 1]
    shoelace = 0.5 * abs(float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)))
    m = star(grid_for_shape(shp, H, H), 7, 0.9, 1.7)
    tol = 2 * H * H * (shp.perimeter / H)
    assert abs(measure(m) - shoelace) <= tol


def test_star_near_polygon_limit():
    # r_in -> r_out approaches the regular polygon through the vertices
    eps_area = []
    for eps in (0.2, 0.05, 0.01):
        shp = StarShape(points=6, r_in=1.5 - eps, r_out=1.5)
        eps_area.append(shp.area)
    ngon = 12 / 2 * 1.5**2 * math.sin(2 * math.pi / 12)  # regular 12-gon radius 1.5
    errs = [abs(a - ngon) for a in eps_area]
    assert errs[2] < errs[1] < errs[0]


def test_star_degenerate_radii():
    with pytest.raises(ContractError):
        StarShape(points=5, r_in=1.2, r_out=1.0)
    with pytest.raises(ContractError):
        StarShape(points=2, r_in=0.5, r_out=1.0)


def test_mask_margin_enforced():
    grid = plane_grid_for((-1, 1, -1, 1), H, H, margin=3.0)
    ind = np.zeros((grid.nx, grid.nxi), dtype=bool)
    ind[1, 1] = True  # one cell from the edge
    with pytest.raises(MarginError):
        mask_from_indicator(grid, ind)
    ind = np.zeros((grid.nx, grid.nxi), dtype=bool)
    ind[0, 5] = True  # touches the edge
    with pytest.raises(MarginError):
        DomainMask(grid=grid, indicator=ind, required_margin=0.0)


# ------------------------------------------------------------------- perimeter

def test_perimeter_analytic(unit_disk_mask):
    assert perimeter(unit_disk_mask) == pytest.approx(2 * math.pi)
    sq = rectangle(
        grid_for_shape(RectShape((0, 0), 1.0, 1.0), H, H), (0.0, 0.0), 1.0, 1.0
    )
    assert perimeter(sq) == pytest.approx(4.0)


def test_perimeter_marching_squares(unit_disk_mask):
    raster_only = mask_from_indicator(unit_disk_mask.grid, unit_disk_mask.indicator)
    got = perimeter(raster_only)
    assert abs(got - 2 * math.pi) / (2 * math.pi) < 0.03


def test_perimeter_empty_rejected():
    grid = plane_grid_for((-1, 1, -1, 1), H, H, margin=3.0)
    empty = mask_from_indicator(grid, np.zeros((grid.nx, grid.nxi), dtype=bool))
    with pytest.raises(ContractError):
        perimeter(empty)


# -------------------------------------------------------------------- dilation

def test_dilate_identity(unit_disk_mask):
    m = dilate(unit_disk_mask, 1.0)
    assert np.array_equal(m.indicator, unit_disk_mask.indicator)
    assert measure(m) == measure(unit_disk_mask)


def test_dilate_disk_scaling(unit_disk_mask):
    m = dilate(unit_disk_mask, 2.0)
    assert isinstance(m.shape, DiskShape)
    assert m.shape.radius == pytest.approx(2.0)
    assert m.shape.perimeter == pytest.approx(4 * math.pi)
    assert measure(m) == pytest.approx(4 * math.pi, rel=0.01)


def test_dilate_star_measure():
    m = star(grid_for_shape(STAR23, H, H), STAR23.points, STAR23.r_in, STAR23.r_out)
    m2 = dilate(m, 2.0)
    assert abs(measure(m2) - 4 * STAR23.area) / (4 * STAR23.area) < 0.01
    assert m2.shape.perimeter == pytest.approx(2 * STAR23.perimeter)


def test_dilate_raster_only(unit_disk_mask):
    raster = mask_from_indicator(unit_disk_mask.grid, unit_disk_mask.indicator)
    m2 = dilate(raster, 2.0)
    assert m2.shape is None
    assert abs(measure(m2) - 4 * math.pi) / (4 * math.pi) < 0.02


def test_dilate_invariants():
    with pytest.raises(ContractError):
        dilate_target = DiskShape((0, 0), 1.0)
        m = disk(grid_for_shape(dilate_target, H, H), (0, 0), 1.0)
        dilate(m, -1.0)


# ----------------------------------------------------------------- convolution

@pytest.fixture(scope="module")
def disk_with_theta(ref_gaussian):
    shape = DiskShape((0.0, 0.0), 1.0)
    grid = grid_for_shape(shape, H, H)
    m = disk(grid, (0.0, 0.0), 1.0)
    th = theta(ref_gaussian, offset_grid(grid))
    return m, th


def test_convolve_deep_inside_and_far_outside(ref_gaussian):
    # a large block: its center is > 3 away from the boundary
    shape = RectShape((0.0, 0.0), 7.0, 7.0)
    grid = grid_for_shape(shape, H, H)
    m = rectangle(grid, (0.0, 0.0), 7.0, 7.0)
    th = theta(ref_gaussian, offset_grid(grid))
    conv = convolve_indicator(m, th)
    j0 = int(np.argmin(np.abs(grid.xs())))
    k0 = int(np.argmin(np.abs(grid.xis())))
    assert abs(conv.values[j0, k0] - 1.0) < 1e-6
    # corner of the grid is ~3 beyond the block in both axes
    assert conv.values[1, 1] < 1e-5
    assert conv.values.min() > -1e-12 and conv.values.max() <= 1.0 + 1e-6


def test_convolve_boundary_value(disk_with_theta):
    # half-plane mass is exactly 1/2; the convex curvature of the unit disk
    # pulls the boundary value down to 0.41866 (2-d quadrature oracle of
    # int_{|z|<=1} exp(-pi |z-(1,0)|^2) dz, frozen)
    m, th = disk_with_theta
    conv = convolve_indicator(m, th)
    j = int(np.argmin(np.abs(m.grid.xs() - 1.0)))
    k = int(np.argmin(np.abs(m.grid.xis())))
    assert conv.values[j, k] == pytest.approx(0.41866492250, abs=0.01)


def test_convolve_boundary_value_radius2(ref_gaussian):
    # at radius 2 the curvature correction drops below 0.05 and the
    # half-plane window [0.45, 0.55] holds (quadrature oracle: 0.46001)
    shape = DiskShape((0.0, 0.0), 2.0)
    grid = grid_for_shape(shape, H, H)
    m = disk(grid, (0.0, 0.0), 2.0)
    th = theta(ref_gaussian, offset_grid(grid))
    conv = convolve_indicator(m, th)
    j = int(np.argmin(np.abs(grid.xs() - 2.0)))
    k = int(np.argmin(np.abs(grid.xis())))
    assert 0.45 <= conv.values[j, k] <= 0.55
    assert conv.values[j, k] == pytest.approx(0.46001, abs=0.01)


def test_convolve_total_integral(disk_with_theta):
    m, th = disk_with_theta
    conv = convolve_indicator(m, th)
    assert abs(float(conv.integral()) - measure(m)) < 1e-4


def test_convolve_matches_brute_force(ref_gaussian):
    shape = DiskShape((0.0, 0.0), 0.4)
    grid = grid_for_shape(shape, H, H)
    m = disk(grid, (0.0, 0.0), 0.4)
    og = offset_grid(grid)
    th = theta(ref_gaussian, og)
    conv = convolve_indicator(m, th)
    xs_c, xis_c = m.cells()
    X, XI = grid.mesh()
    brute = np.zeros((grid.nx, grid.nxi))
    for xc, xic in zip(xs_c, xis_c):
        oj = np.rint(((X - xc) - og.x0) / H).astype(int)
        ok = np.rint(((XI - xic) - og.xi0) / H).astype(int)
        brute += th.values[oj, ok]
    brute *= grid.cell_area
    assert np.abs(conv.values - brute).max() < 1e-12


def test_convolve_grid_mismatch(disk_with_theta, ref_gaussian):
    m, _ = disk_with_theta
    coarse = plane_grid_for((-4, 4, -4, 4), 1 / 8, 1 / 8, margin=0.5)
    with pytest.raises((GridMismatchError, ContractError)):
        convolve_indicator(m, theta(ref_gaussian, coarse))


def test_mollification_bound(disk_with_theta, ref_gaussian):
    # ||1_Omega * Theta - 1_Omega||_1 <= perimeter * M* (5% slack)
    from tfloc.bounds import l1_error
    from tfloc.domain import indicator_field
    from tfloc.gabor import mstar_norm

    m, th = disk_with_theta
    conv = convolve_indicator(m, th)
    lhs = l1_error(conv, indicator_field(m))
    rhs = perimeter(m) * mstar_norm(ref_gaussian)
    assert lhs <= rhs * 1.05


def test_mollification_bound_star(ref_gaussian):
    from tfloc.bounds import l1_error
    from tfloc.domain import indicator_field
    from tfloc.gabor import mstar_norm

    grid = grid_for_shape(STAR23, H, H)
    m = star(grid, STAR23.points, STAR23.r_in, STAR23.r_out)
    th = theta(ref_gaussian, offset_grid(grid))
    conv = convolve_indicator(m, th)
    lhs = l1_error(conv, indicator_field(m))
    assert lhs <= perimeter(m) * mstar_norm(ref_gaussian) * 1.05
