"""Eigenfunction spectrograms, the accumulated spectrogram, Lemma-4.1 sums."""

import math

import numpy as np
import pytest

from tfloc.accspec import accumulated, eigen_spectrogram, weighted_sum
from tfloc.domain import DiskShape, disk, grid_for_shape, mask_from_indicator, measure
from tfloc.errors import ContractError, IdentityDefectWarning
from tfloc.gabor import gaussian_window, hermite_window, signal_grid_for
from tfloc.locop import build_operator, eigendecompose

H = 1.0 / 16


@pytest.fixture(scope="module")
def disk_run():
    shape = DiskShape((0.0, 0.0), 0.8)
    grid = grid_for_shape(shape, H, H)
    sgrid = signal_grid_for(grid.x0, grid.x_end, H, 3.0)
    g = gaussian_window(sgrid, 1.0)
    m = disk(grid, (0.0, 0.0), 0.8)
    op = build_operator(g, m)
    return g, m, eigendecompose(op)


# ---------------------------------------------------------------- spectrograms

def test_spectrogram_of_window_peaks_at_origin(disk_run):
    g, m, _ = disk_run
    spec = eigen_spectrogram(g, g.samples, m.grid)
    j = int(np.argmin(np.abs(m.grid.xs())))
    k = int(np.argmin(np.abs(m.grid.xis())))
    assert abs(spec.values[j, k] - 1.0) < 1e-8
    assert spec.values.max() <= 1.0 + 1e-6


def test_spectrogram_hermite_closed_form(disk_run):
    g, m, _ = disk_run
    for k in (1, 2, 3):
        h = hermite_window(g.grid, k)
        spec = eigen_spectrogram(g, h.samples, m.grid)
        X, XI = m.grid.mesh()
        r2 = X**2 + XI**2
        target = math.pi**k / math.factorial(k) * r2**k * np.exp(-math.pi * r2)
        assert np.abs(spec.values - target).max() < 1e-4


def test_spectrogram_total_mass(disk_run):
    g, m, dec = disk_run
    spec = eigen_spectrogram(g, dec.eigenvectors[:, 0], m.grid)
    assert abs(float(spec.integral()) - 1.0) < 1e-3


def test_spectrogram_requires_normalized(disk_run):
    g, m, _ = disk_run
    with pytest.raises(ContractError):
        eigen_spectrogram(g, 2.0 * g.samples, m.grid)


# ----------------------------------------------------------------- accumulated

def test_accumulated_single_term_when_measure_below_one(disk_run):
    g, m, dec = disk_run
    rho = accumulated(dec, g, m.grid, 0.7)
    single = eigen_spectrogram(g, dec.eigenvectors[:, 0], m.grid)
    assert rho.a_omega == 1
    assert np.abs(rho.field.values - single.values).max() < 1e-14


def test_accumulated_bounds_and_mass(disk_run):
    g, m, dec = disk_run
    rho = accumulated(dec, g, m.grid, measure(m), mask=m)
    vals = rho.field.values
    assert vals.min() >= 0.0 and vals.max() <= 1.0 + 1e-6
    assert abs(float(rho.field.integral()) - rho.a_omega) < 1e-2
    assert rho.gap_at_cut == dec.gap_at_cut
    assert rho.mask_ref is m


def test_accumulated_center_value_disk9(run_cache):
    # at z = 0 only the k = 0 closed-form term survives: rho(0) = 1
    run = run_cache("disk9")
    grid = run.rho.field.grid
    j = int(np.argmin(np.abs(grid.xs())))
    k = int(np.argmin(np.abs(grid.xis())))
    assert abs(run.rho.field.values[j, k] - 1.0) < 1e-3


def test_accumulated_needs_enough_eigenpairs(disk_run):
    g, m, dec = disk_run
    op = build_operator(g, m)
    part = eigendecompose(op, count=1)
    with pytest.raises(ContractError):
        accumulated(part, g, m.grid, measure(m))
    with pytest.raises(ContractError):
        accumulated(dec, g, m.grid, 0.0)


def test_star_profile_plateau(run_cache):
    # ~1 deep inside, ~0 far outside, transition along the boundary
    run = run_cache("star23")
    grid = run.rho.field.grid
    j0 = int(np.argmin(np.abs(grid.xs())))
    k0 = int(np.argmin(np.abs(grid.xis())))
    assert run.rho.field.values[j0, k0] > 0.95
    assert run.rho.field.values[2, 2] < 1e-4


# ---------------------------------------------------------------- weighted sum

def test_weighted_sum_empty_domain(disk_run):
    g, m, _ = disk_run
    empty = mask_from_indicator(m.grid, np.zeros_like(m.indicator))
    dec0 = eigendecompose(build_operator(g, empty))
    ws = weighted_sum(dec0, g, m.grid)
    assert np.abs(ws.values).max() == 0.0


def test_weighted_sum_reconstruction_identity(disk_run):
    from tfloc.domain import convolve_indicator
    from tfloc.gabor import offset_grid, theta

    g, m, dec = disk_run
    ws = weighted_sum(dec, g, m.grid)
    th = theta(g, offset_grid(m.grid))
    conv = convolve_indicator(m, th)
    assert np.abs(ws.values - conv.values).max() <= 1e-6


def test_weighted_sum_total_integral(disk_run):
    g, m, dec = disk_run
    ws = weighted_sum(dec, g, m.grid)
    assert abs(float(ws.integral()) - measure(m)) < 1e-3


def test_weighted_sum_truncation_warning(disk_run):
    g, m, _ = disk_run
    part = eigendecompose(build_operator(g, m), count=3)
    with pytest.warns(IdentityDefectWarning):
        weighted_sum(part, g, m.grid)


# ------------------------------------------------------------------ invariants

def test_bessel_bound(disk_run):
    # sum over the whole spectrum of |V_g h_k|^2 is at most 1 pointwise
    g, m, dec = disk_run
    total = np.zeros((m.grid.nx, m.grid.nxi))
    for k in range(dec.count):
        total += eigen_spectrogram(g, dec.eigenvectors[:, k], m.grid).values
    assert total.max() <= 1.0 + 1e-6


def test_lemma42_chain(run_cache):
    # ||rho - 1*Theta||_1 <= 1 + 2 E(Omega) measure, with 5% slack
    from tfloc.bounds import l1_error

    for key in ("disk", "star23"):
        run = run_cache(key)
        lhs = l1_error(run.rho.field, run.mollified)
        rhs = 1.0 + 2.0 * run.report.e_omega * run.measure
        assert lhs <= rhs * 1.05
