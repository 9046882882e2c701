"""Shared fixtures: small reference grids and a session-wide run cache."""

import warnings

import pytest

from tfloc.gabor import gaussian_window, signal_grid_for
from tfloc.pipeline import (
    SQUARE2,
    STAR23,
    SWEEP_STAR,
    UNIT_DISK,
    Resolution,
    WindowSpec,
    disk_of_area,
    run_localization,
)

H = 1.0 / 16

SHAPES = {
    "disk": UNIT_DISK,
    "square": SQUARE2,
    "star23": STAR23,
    "sweep_star": SWEEP_STAR,
    "disk4": disk_of_area(4.0),
    "disk9": disk_of_area(9.0),
    "disk16": disk_of_area(16.0),
}

# union of every delta any criterion needs
ALL_DELTAS = (0.1, 0.2, 0.25, 0.5)


@pytest.fixture(scope="session")
def ref_signal_grid():
    return signal_grid_for(-1.0, 1.0, H, 4.0)


@pytest.fixture(scope="session")
def ref_gaussian(ref_signal_grid):
    return gaussian_window(ref_signal_grid, 1.0)


@pytest.fixture(scope="session")
def run_cache():
    """Memoized reference-resolution pipeline runs keyed by (shape, width, R, fine)."""
    cache = {}

    def get(shape_key: str, width: float = 1.0, R: float = 1.0, fine: bool = False):
        key = (shape_key, width, R, fine)
        if key not in cache:
            res = Resolution().halved() if fine else Resolution()
            shape = SHAPES[shape_key].scaled(R) if R != 1.0 else SHAPES[shape_key]
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                cache[key] = run_localization(
                    shape, WindowSpec("gaussian", width), res, deltas=ALL_DELTAS
                )
        return cache[key]

    return get
