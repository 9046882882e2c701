"""End-to-end experiment runs: geometry, assembly, spectra, fields, report.

A run fixes a shape (or an imported mask), a window, and a resolution; the
reference resolution is dt = 1/16, plane cells 1/16 x 1/16, margin 3, wide
enough that the Gaussian ambiguity function decays below 1e-12 across the
margin.  Grids are built automatically: the plane grid covers the domain
bounding box plus the margin, the signal grid covers the plane grid's x
extent plus the window's time reach.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from . import bounds
from .accspec import AccumulatedSpectrogram, accumulated
from .domain import (
    ASSEMBLY_MARGIN,
    DiskShape,
    DomainMask,
    RectShape,
    StarShape,
    convolve_indicator,
    grid_for_shape,
    measure,
    perimeter,
    rasterize,
)
from .errors import CapExceededError, ConfigError, ContractError
from .gabor import (
    PlaneField,
    SignalGrid,
    Window,
    check_nyquist,
    gaussian_window,
    hermite_window,
    mstar_norm,
    offset_grid,
    signal_grid_for,
    theta,
    window_from_samples,
)
from .locop import LocalizationOperator, SpectralDecomposition, build_operator, eigendecompose

__all__ = [
    "Resolution",
    "WindowSpec",
    "RunResult",
    "run_localization",
    "rasterize_shape",
    "UNIT_DISK",
    "SQUARE2",
    "STAR23",
    "SWEEP_STAR",
    "disk_of_area",
]

DEFAULT_CAP = 1200


@dataclass(frozen=True)
class Resolution:
    dt: float = 1.0 / 16
    dx: float = 1.0 / 16
    dxi: float = 1.0 / 16
    margin: float = ASSEMBLY_MARGIN

    def __post_init__(self):
        if min(self.dt, self.dx, self.dxi) <= 0:
            raise ConfigError("resolution spacings must be positive")
        if self.margin < ASSEMBLY_MARGIN:
            raise ConfigError(f"margin below the assembly margin {ASSEMBLY_MARGIN}")

    def halved(self) -> "Resolution":
        return Resolution(self.dt / 2, self.dx / 2, self.dxi / 2, self.margin)


@dataclass(frozen=True)
class WindowSpec:
    """Recipe for the analysis window; built once per signal grid."""

    kind: str = "gaussian"  # gaussian | hermite | file
    width: float = 1.0
    order: int = 0
    path: str | None = None

    def time_reach(self) -> float:
        if self.kind == "gaussian":
            return 3.0 * self.width
        if self.kind == "hermite":
            return math.sqrt((2 * self.order + 1) / (2 * math.pi)) + 3.0
        raise ConfigError("file windows carry their own grid; no prior reach")

    def build(self, grid: SignalGrid) -> Window:
        if self.kind == "gaussian":
            return gaussian_window(grid, self.width)
        if self.kind == "hermite":
            return hermite_window(grid, self.order)
        raise ConfigError(f"cannot build window kind {self.kind!r} on a fresh grid")

    def label(self) -> str:
        if self.kind == "gaussian":
            return f"gaussian(width={self.width:g})"
        if self.kind == "hermite":
            return f"hermite(k={self.order})"
        return f"file({self.path})"


def load_window_file(path: str) -> Window:
    """Tabulated window from a CSV of (t, re[, im]) rows with a header."""
    ts: list[float] = []
    vals: list[complex] = []
    with open(path, newline="") as fh:
        for i, row in enumerate(csv.reader(fh)):
            if i == 0 and not _is_number(row[0]):
                continue
            ts.append(float(row[0]))
            re = float(row[1])
            im = float(row[2]) if len(row) > 2 else 0.0
            vals.append(complex(re, im))
    if len(ts) < 2:
        raise ConfigError(f"window file {path} needs at least 2 samples")
    dts = np.diff(ts)
    if np.abs(dts - dts[0]).max() > 1e-9:
        raise ConfigError(f"window file {path} is not uniformly sampled")
    grid = SignalGrid(n=len(ts), dt=float(dts[0]), t0=ts[0])
    return window_from_samples(grid, np.array(vals), label=f"file({path})")


def _is_number(token: str) -> bool:
    try:
        float(token)
        return True
    except ValueError:
        return False


Shape = DiskShape | RectShape | StarShape


def rasterize_shape(shape: Shape, res: Resolution) -> DomainMask:
    return rasterize(shape, grid_for_shape(shape, res.dx, res.dxi, res.margin))


@dataclass(frozen=True)
class RunResult:
    """Everything one localization run produces."""

    window: Window
    mask: DomainMask
    theta_offsets: PlaneField     # Theta on the mask grid's offset lattice
    mollified: PlaneField         # 1_Omega * Theta on the mask grid
    op: LocalizationOperator
    dec: SpectralDecomposition
    rho: AccumulatedSpectrogram
    report: bounds.ErrorReport
    mstar: float

    @property
    def measure(self) -> float:
        return measure(self.mask)

    @property
    def perimeter(self) -> float:
        return perimeter(self.mask)


def run_localization(
    shape: Shape | None,
    window_spec: WindowSpec,
    res: Resolution | None = None,
    deltas: tuple[float, ...] = (0.1, 0.25, 0.5),
    cap: int = DEFAULT_CAP,
    mask: DomainMask | None = None,
) -> RunResult:
    """Assemble, decompose, accumulate, and measure one domain/window pair."""
    res = res or Resolution()
    if mask is None:
        if shape is None:
            raise ContractError("run_localization needs a shape or a mask")
        mask = rasterize_shape(shape, res)
    if mask.cell_count == 0:
        raise ContractError("domain rasterizes to the empty mask")
    plane = mask.grid

    if window_spec.kind == "file":
        g = load_window_file(window_spec.path)
        if g.grid.n > cap:
            raise CapExceededError(f"window grid n={g.grid.n} exceeds cap {cap}")
    else:
        sgrid = signal_grid_for(plane.x0, plane.x_end, res.dt, window_spec.time_reach())
        if sgrid.n > cap:
            raise CapExceededError(f"matrix dimension n={sgrid.n} exceeds cap {cap}")
        g = window_spec.build(sgrid)

    x_lo, x_hi, xi_lo, xi_hi = mask.bbox()
    check_nyquist(plane, g, domain_xi_span=xi_hi - xi_lo)

    th = theta(g, offset_grid(plane))
    mstar = mstar_norm(g)
    mollified = convolve_indicator(mask, th)

    op = build_operator(g, mask)
    dec = eigendecompose(op)
    rho = accumulated(dec, g, plane, measure(mask), mask=mask)
    report = bounds.build_error_report(mask, rho, mollified, dec, mstar, deltas)
    return RunResult(
        window=g,
        mask=mask,
        theta_offsets=th,
        mollified=mollified,
        op=op,
        dec=dec,
        rho=rho,
        report=report,
        mstar=mstar,
    )


# ---------------------------------------------------------------------------
# shipped shapes
# ---------------------------------------------------------------------------

UNIT_DISK = DiskShape(center=(0.0, 0.0), radius=1.0)

SQUARE2 = RectShape(center=(0.0, 0.0), wx=2.0, wxi=2.0)

# Five-point star of exact polygon area 23 (the figure-1 domain).  The
# radius ratio 0.75 keeps the xi extent within the alias-free band of the
# reference resolution up to dilation R = 2.
_R_OUT_23 = math.sqrt(23.0 / (5 * 0.75 * math.sin(math.pi / 5)))
STAR23 = StarShape(points=5, r_in=0.75 * _R_OUT_23, r_out=_R_OUT_23)

# Smaller star for dilation sweeps: at R = 3 its frequency extent plus the
# window bandwidth still fits one discrete frequency period at dt = 1/16.
SWEEP_STAR = StarShape(points=5, r_in=0.62 * 1.65, r_out=1.65)


def disk_of_area(area: float) -> DiskShape:
    if not area > 0:
        raise ContractError("disk area must be positive")
    return DiskShape(center=(0.0, 0.0), radius=math.sqrt(area / math.pi))
