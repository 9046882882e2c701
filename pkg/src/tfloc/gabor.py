"""Sampling grids, windows, and the discrete short-time Fourier transform.

The discrete model lives on a uniform time grid t_i = t0 + i*dt and a uniform
plane grid z_jk = (x0 + j*dx, xi0 + k*dxi).  Atoms are sampled directly on the
finite time grid (no circular convolution); analytic windows (Gaussian,
Hermite) are re-evaluated exactly at shifted coordinates, tabulated windows
are shifted by whole samples.  All plane integrals are midpoint Riemann sums
weighted by the cell area, so the discrete trace and reconstruction
identities downstream close exactly.

Grid origins are snapped to their own spacing lattice.  When additionally
1/(dt*dxi) is an integer, the transform of a column reduces to an exact DFT
of the time-folded windowed signal, which is what `stft` uses by default.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AliasingWarning,
    ContractError,
    CoverageWarning,
    GridMismatchError,
    ResolutionError,
    TruncationError,
)

NORM_TOL = 1e-10        # window normalization tolerance
WINDOW_TAIL_TOL = 1e-12  # window mass allowed outside the signal grid
ATOM_TAIL_TOL = 1e-6     # atom mass allowed outside the signal grid

__all__ = [
    "SignalGrid",
    "PlaneGrid",
    "Window",
    "PlaneField",
    "gaussian_window",
    "hermite_window",
    "window_from_samples",
    "atom",
    "stft",
    "theta",
    "mstar_norm",
    "isometry_defect",
    "signal_grid_for",
    "plane_grid_for",
    "offset_grid",
    "offset_grid_centered",
    "check_nyquist",
]


def _snap(value: float, step: float) -> float:
    return round(value / step) * step


@dataclass(frozen=True)
class SignalGrid:
    """Uniform sampling lattice t_i = t0 + i*dt, i = 0..n-1."""

    n: int
    dt: float
    t0: float

    def __post_init__(self):
        if self.n < 2:
            raise ContractError(f"signal grid needs n >= 2, got {self.n}")
        if not self.dt > 0:
            raise ContractError(f"signal grid needs dt > 0, got {self.dt}")

    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n)

    @property
    def t_end(self) -> float:
        return self.t0 + (self.n - 1) * self.dt

    def norm(self, f: np.ndarray) -> float:
        """Discrete L2 norm (sum |f|^2 dt)^(1/2)."""
        f = np.asarray(f)
        return math.sqrt(float(np.sum(np.abs(f) ** 2)) * self.dt)

    def inner(self, f: np.ndarray, g: np.ndarray) -> complex:
        """Discrete inner product sum f conj(g) dt."""
        return complex(np.sum(np.asarray(f) * np.conj(np.asarray(g))) * self.dt)


@dataclass(frozen=True)
class PlaneGrid:
    """Uniform lattice of cell midpoints in the time-frequency plane."""

    nx: int
    nxi: int
    dx: float
    dxi: float
    x0: float
    xi0: float

    def __post_init__(self):
        if self.nx < 1 or self.nxi < 1:
            raise ContractError("plane grid needs nx, nxi >= 1")
        if not (self.dx > 0 and self.dxi > 0):
            raise ContractError("plane grid needs dx, dxi > 0")

    @property
    def cell_area(self) -> float:
        return self.dx * self.dxi

    def xs(self) -> np.ndarray:
        return self.x0 + self.dx * np.arange(self.nx)

    def xis(self) -> np.ndarray:
        return self.xi0 + self.dxi * np.arange(self.nxi)

    @property
    def x_end(self) -> float:
        return self.x0 + (self.nx - 1) * self.dx

    @property
    def xi_end(self) -> float:
        return self.xi0 + (self.nxi - 1) * self.dxi

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """(X, XI) coordinate arrays of shape (nx, nxi)."""
        return np.meshgrid(self.xs(), self.xis(), indexing="ij")

    def same_cells(self, other: "PlaneGrid", tol: float = 1e-12) -> bool:
        return abs(self.dx - other.dx) <= tol and abs(self.dxi - other.dxi) <= tol

    def compatible(self, other: "PlaneGrid") -> bool:
        return (
            self.nx == other.nx
            and self.nxi == other.nxi
            and self.same_cells(other)
            and abs(self.x0 - other.x0) <= 1e-12
            and abs(self.xi0 - other.xi0) <= 1e-12
        )


@dataclass(frozen=True)
class PlaneField:
    """Scalar field sampled at the midpoints of a PlaneGrid."""

    grid: PlaneGrid
    values: np.ndarray  # shape (nx, nxi), real or complex

    def __post_init__(self):
        vals = np.asarray(self.values)
        if vals.shape != (self.grid.nx, self.grid.nxi):
            raise ContractError(
                f"field shape {vals.shape} != grid shape {(self.grid.nx, self.grid.nxi)}"
            )
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def integral(self):
        return self.values.sum() * self.grid.cell_area

    def abs_integral(self) -> float:
        return float(np.abs(self.values).sum()) * self.grid.cell_area


# ---------------------------------------------------------------------------
# windows
# ---------------------------------------------------------------------------

def _hermite_profile(k: int, t: np.ndarray) -> np.ndarray:
    """Orthonormal Hermite function of order k in the e^{-pi t^2} scaling.

    Evaluated through the normalized three-term recurrence
    Hb_{j+1} = x sqrt(2/(j+1)) Hb_j - sqrt(j/(j+1)) Hb_{j-1},  x = sqrt(2 pi) t,
    which keeps every intermediate at unit L2 scale.
    """
    x = np.sqrt(2.0 * math.pi) * np.asarray(t, dtype=float)
    envelope = 2.0 ** 0.25 * np.exp(-math.pi * np.asarray(t, dtype=float) ** 2)
    hb_prev = np.zeros_like(x)
    hb = np.ones_like(x)
    for j in range(k):
        hb_next = x * math.sqrt(2.0 / (j + 1)) * hb - math.sqrt(j / (j + 1)) * hb_prev
        hb_prev, hb = hb, hb_next
    return envelope * hb


@dataclass(frozen=True)
class Window:
    """Discretized, discretely L2-normalized window."""

    grid: SignalGrid
    samples: np.ndarray
    label: str = ""
    kind: str = "tabulated"          # gaussian | hermite | tabulated
    width: float = 1.0               # gaussian dilation parameter
    order: int = 0                   # hermite order k (the window is h_{k+1})
    amplitude: float = field(default=1.0, repr=False)

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=complex)
        if samples.shape != (self.grid.n,):
            raise ContractError("window sample count does not match its grid")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)
        nrm = self.grid.norm(samples)
        if abs(nrm - 1.0) > NORM_TOL:
            raise ContractError(f"window discrete norm {nrm!r} != 1")

    @property
    def analytic(self) -> bool:
        return self.kind in ("gaussian", "hermite")

    def evaluate(self, t: np.ndarray) -> np.ndarray:
        """Evaluate the (normalized) analytic profile at arbitrary times."""
        if self.kind == "gaussian":
            return self.amplitude * np.exp(-math.pi * (np.asarray(t) / self.width) ** 2)
        if self.kind == "hermite":
            return self.amplitude * _hermite_profile(self.order, t)
        raise ContractError("tabulated windows cannot be re-evaluated off-grid")

    def time_reach(self) -> float:
        """Radius beyond which the window mass is negligible (~1e-12 level)."""
        if self.kind == "gaussian":
            return 3.0 * self.width
        if self.kind == "hermite":
            return math.sqrt((2 * self.order + 1) / (2 * math.pi)) + 3.0
        # tabulated: smallest radius around the mass center holding 1 - 1e-12
        t = self.grid.times()
        mass = np.abs(self.samples) ** 2 * self.grid.dt
        center = float(np.sum(t * mass) / np.sum(mass))
        r = np.abs(t - center)
        order = np.argsort(r)
        cum = np.cumsum(mass[order])
        idx = int(np.searchsorted(cum, 1.0 - 1e-12))
        return float(r[order[min(idx, len(r) - 1)]]) + self.grid.dt

    def freq_reach(self) -> float:
        """Radius of the window's essential frequency support."""
        if self.kind == "gaussian":
            return 3.0 / self.width
        if self.kind == "hermite":
            return math.sqrt((2 * self.order + 1) / (2 * math.pi)) + 3.0
        # tabulated: radius holding 1 - 1e-10 of the spectral mass around DC
        spec = np.fft.fft(self.samples)
        freqs = np.fft.fftfreq(self.grid.n, self.grid.dt)
        mass = np.abs(spec) ** 2
        mass /= mass.sum()
        order = np.argsort(np.abs(freqs))
        cum = np.cumsum(mass[order])
        idx = int(np.searchsorted(cum, 1.0 - 1e-10))
        df = 1.0 / (self.grid.n * self.grid.dt)
        return float(np.abs(freqs[order[min(idx, self.grid.n - 1)]])) + df


def _gaussian_tail_mass(grid: SignalGrid, width: float) -> float:
    """Mass of e^{-2 pi (t/width)^2} outside [t0, t_end], relative to total."""
    a = math.sqrt(2.0 * math.pi) / width
    left = 0.5 * math.erfc(-a * grid.t0)
    right = 0.5 * math.erfc(a * grid.t_end)
    return left + right


def gaussian_window(grid: SignalGrid, width: float = 1.0) -> Window:
    """Dilated Gaussian c*exp(-pi (t/width)^2), rescaled to discrete norm 1."""
    if not width > 0:
        raise ContractError("gaussian width must be positive")
    tail = _gaussian_tail_mass(grid, width)
    if tail > WINDOW_TAIL_TOL:
        raise TruncationError(
            f"gaussian tail mass {tail:.3e} outside grid exceeds {WINDOW_TAIL_TOL}"
        )
    t = grid.times()
    profile = np.exp(-math.pi * (t / width) ** 2)
    amp = 1.0 / grid.norm(profile)
    return Window(
        grid=grid,
        samples=amp * profile,
        label=f"gaussian(width={width:g})",
        kind="gaussian",
        width=width,
        amplitude=amp,
    )


def hermite_window(grid: SignalGrid, k: int) -> Window:
    """Hermite function h_{k+1}, discretized and renormalized.

    The fastest oscillation of h_{k+1} has scale ~ 1/freq_reach; it must be
    resolved by at least ~4 samples, and the classical turning point must lie
    well inside the grid.
    """
    if k < 0:
        raise ContractError("hermite order must be >= 0")
    turning = math.sqrt((2 * k + 1) / (2 * math.pi))
    if turning + 2.5 > min(-grid.t0, grid.t_end):
        raise ResolutionError(
            f"hermite order {k} decays near |t|={turning + 2.5:.2f}, outside the grid"
        )
    max_freq = turning + 1.0
    if 1.0 / max_freq < 4.0 * grid.dt:
        raise ResolutionError(
            f"hermite order {k} oscillates on scale {1.0 / max_freq:.3f} < 4*dt"
        )
    t = grid.times()
    profile = _hermite_profile(k, t)
    amp = 1.0 / grid.norm(profile)
    return Window(
        grid=grid,
        samples=amp * profile,
        label=f"hermite(k={k})",
        kind="hermite",
        order=k,
        amplitude=amp,
    )


def window_from_samples(grid: SignalGrid, samples: np.ndarray, label: str = "tabulated") -> Window:
    """Wrap raw samples as a window, rescaling to discrete norm 1."""
    samples = np.asarray(samples, dtype=complex)
    nrm = grid.norm(samples)
    if nrm == 0:
        raise ContractError("cannot normalize an all-zero window")
    return Window(grid=grid, samples=samples / nrm, label=label, kind="tabulated")


# ---------------------------------------------------------------------------
# atoms and the transform
# ---------------------------------------------------------------------------

def _shifted_window(g: Window, x: float) -> np.ndarray:
    """Samples of g(t - x) on g's grid."""
    grid = g.grid
    if g.analytic:
        return g.evaluate(grid.times() - x)
    shift = x / grid.dt
    k = round(shift)
    if abs(shift - k) > 1e-9:
        raise ContractError(
            "tabulated windows shift by whole samples only; "
            "x must be an integer multiple of dt"
        )
    out = np.zeros(grid.n, dtype=complex)
    if k >= 0:
        out[k:] = g.samples[: grid.n - k] if k < grid.n else 0.0
    else:
        out[:k] = g.samples[-k:]
    return out


def atom(g: Window, z: tuple[float, float], check_tail: bool = True) -> np.ndarray:
    """Time-frequency atom phi_z(t) = g(t - x) exp(2 pi i xi t) on g's grid."""
    x, xi = z
    grid = g.grid
    if not (grid.t0 <= x <= grid.t_end):
        raise ContractError(f"atom center x={x} outside the signal grid span")
    shifted = _shifted_window(g, x)
    phi = shifted * np.exp(2j * math.pi * xi * grid.times())
    if check_tail:
        defect = abs(grid.norm(phi) ** 2 - 1.0)
        if defect > ATOM_TAIL_TOL:
            raise TruncationError(
                f"atom at x={x} loses mass {defect:.3e} off the grid"
            )
    return phi


def _fft_model(sgrid: SignalGrid, plane: PlaneGrid):
    """Check the exact-DFT conditions; return (N, q, p) or None.

    Needs 1/(dt*dxi) integral and both origins on their spacing lattices, in
    which case every plane frequency falls on an exact DFT bin of the folded
    signal.
    """
    ratio = 1.0 / (sgrid.dt * plane.dxi)
    N = round(ratio)
    if N < 2 or abs(ratio - N) > 1e-9 * ratio:
        return None
    q = sgrid.t0 / sgrid.dt
    p = plane.xi0 / plane.dxi
    if abs(q - round(q)) > 1e-9 or abs(p - round(p)) > 1e-9:
        return None
    return N, round(q), round(p)


def stft(f: np.ndarray, g: Window, plane: PlaneGrid, method: str = "auto") -> PlaneField:
    """Discrete short-time Fourier transform V_g f on a plane grid.

    V_g f(z_jk) = sum_i f(t_i) conj(phi_{z_jk}(t_i)) dt.  The `fft` method
    computes the same sums exactly (time-folded DFT per x column); `direct`
    is the brute-force reference, quadratic in grid size.
    """
    f = np.asarray(f, dtype=complex)
    grid = g.grid
    if f.shape != (grid.n,):
        raise GridMismatchError("signal and window must share a SignalGrid")
    model = _fft_model(grid, plane)
    if method == "auto":
        method = "fft" if model is not None else "direct"
    if method == "fft" and model is None:
        raise ContractError("fft method requires 1/(dt*dxi) integral and snapped origins")

    xs = plane.xs()
    t = grid.times()
    # windowed rows: w[j, i] = f(t_i) conj(g(t_i - x_j)) dt
    if g.analytic:
        shifts = np.conj(g.evaluate(t[None, :] - xs[:, None]))
    else:
        shifts = np.empty((plane.nx, grid.n), dtype=complex)
        for j, x in enumerate(xs):
            shifts[j] = np.conj(_shifted_window(g, x))
    w = shifts * (f[None, :] * grid.dt)

    if method == "fft":
        N, q, p = model
        folded = np.zeros((plane.nx, N), dtype=complex)
        idx = (q + np.arange(grid.n)) % N
        np.add.at(folded.T, idx, w.T)
        spectra = np.fft.fft(folded, axis=1)
        bins = (p + np.arange(plane.nxi)) % N
        vals = spectra[:, bins]
    elif method == "direct":
        phase = np.exp(-2j * math.pi * np.outer(t, plane.xis()))
        vals = w @ phase
    else:
        raise ContractError(f"unknown stft method {method!r}")
    return PlaneField(grid=plane, values=vals)


def isometry_defect(field: PlaneField, f: np.ndarray, sgrid: SignalGrid) -> float:
    """Relative defect of the discrete Plancherel identity on this grid."""
    total = float(np.sum(np.abs(field.values) ** 2)) * field.grid.cell_area
    ref = sgrid.norm(f) ** 2
    return abs(total - ref) / ref


def _one_period_band(g: Window, plane: PlaneGrid) -> np.ndarray:
    """Mask of xi columns within one discrete frequency period around 0.

    The sampled transform is 1/dt-periodic in frequency; on offset grids
    wider than one period the values beyond it are genuine alias lobes of
    the discrete Gram, which must not be double-counted in normalization
    or moment sums.
    """
    period = 1.0 / g.grid.dt
    xis = plane.xis()
    return (xis >= -period / 2) & (xis < period / 2)


def theta(g: Window, plane: PlaneGrid, coverage_tol: float = 1e-3) -> PlaneField:
    """Theta = |V_g g|^2 on a plane grid (a probability density on the plane).

    The grid must be centered so the mass of Theta is essentially covered;
    the normalization defect |sum Theta ca - 1| over one frequency period is
    checked against `coverage_tol` and reported as an error beyond it.
    """
    field = stft(g.samples, g, plane)
    vals = np.abs(field.values) ** 2
    band = _one_period_band(g, plane)
    defect = abs(float(vals[:, band].sum()) * plane.cell_area - 1.0)
    if defect > coverage_tol:
        raise ContractError(
            f"theta normalization defect {defect:.3e} exceeds {coverage_tol}; "
            "plane grid does not cover the window's ambiguity support"
        )
    return PlaneField(grid=plane, values=vals)


def mstar_norm(g: Window, plane: PlaneGrid | None = None) -> float:
    """Squared M* norm: sum |z| Theta(z) cell_area over the plane grid.

    This is the window's first-moment time-frequency concentration; it enters
    every error constant downstream.  With no grid given, a centered grid of
    reach + 2 at the window's own resolution is used.
    """
    if plane is None:
        plane = offset_grid_centered(g)
    th = theta(g, plane)
    band = _one_period_band(g, plane)
    X, XI = plane.mesh()
    r = np.hypot(X, XI)
    value = float(np.sum((r * th.values)[:, band])) * plane.cell_area
    # estimated tail: boundary-ring mass times the local |z| weight
    ring = np.concatenate([
        th.values[0, :], th.values[-1, :], th.values[:, 0], th.values[:, -1]
    ])
    ring_r = np.concatenate([r[0, :], r[-1, :], r[:, 0], r[:, -1]])
    tail = float(np.sum(ring * (ring_r + 1.0))) * plane.cell_area * 4.0
    if tail > 1e-6:
        warnings.warn(
            f"M* grid coverage defect; estimated tail bound {tail:.3e}",
            CoverageWarning,
            stacklevel=2,
        )
    return value


# ---------------------------------------------------------------------------
# grid construction helpers
# ---------------------------------------------------------------------------

def signal_grid_for(x_lo: float, x_hi: float, dt: float, reach: float) -> SignalGrid:
    """Time grid covering [x_lo - reach, x_hi + reach], origin on the dt lattice."""
    t0 = _snap(x_lo - reach, dt)
    if t0 > x_lo - reach:
        t0 -= dt
    n = int(math.ceil((x_hi + reach - t0) / dt)) + 1
    return SignalGrid(n=n, dt=dt, t0=t0)


def plane_grid_for(
    bbox: tuple[float, float, float, float],
    dx: float,
    dxi: float,
    margin: float = 3.0,
) -> PlaneGrid:
    """Plane grid of cell midpoints covering bbox + margin, snapped origins."""
    x_lo, x_hi, xi_lo, xi_hi = bbox
    x0 = _snap(x_lo - margin, dx)
    if x0 > x_lo - margin:
        x0 -= dx
    xi0 = _snap(xi_lo - margin, dxi)
    if xi0 > xi_lo - margin:
        xi0 -= dxi
    nx = int(math.ceil((x_hi + margin - x0) / dx)) + 1
    nxi = int(math.ceil((xi_hi + margin - xi0) / dxi)) + 1
    return PlaneGrid(nx=nx, nxi=nxi, dx=dx, dxi=dxi, x0=x0, xi0=xi0)


def offset_grid(grid: PlaneGrid) -> PlaneGrid:
    """Grid of all pairwise offsets z - z' of a plane grid, centered at 0."""
    return PlaneGrid(
        nx=2 * grid.nx - 1,
        nxi=2 * grid.nxi - 1,
        dx=grid.dx,
        dxi=grid.dxi,
        x0=-(grid.nx - 1) * grid.dx,
        xi0=-(grid.nxi - 1) * grid.dxi,
    )


def offset_grid_centered(g: Window, pad: float = 2.0, dx: float | None = None,
                         dxi: float | None = None) -> PlaneGrid:
    """Symmetric zero-centered grid covering the window's ambiguity support."""
    dx = g.grid.dt if dx is None else dx
    dxi = g.grid.dt if dxi is None else dxi
    rx = g.time_reach() + pad
    rxi = g.freq_reach() + pad
    nx = int(math.ceil(rx / dx))
    nxi = int(math.ceil(rxi / dxi))
    return PlaneGrid(
        nx=2 * nx + 1, nxi=2 * nxi + 1, dx=dx, dxi=dxi, x0=-nx * dx, xi0=-nxi * dxi
    )


def check_nyquist(plane: PlaneGrid, g: Window, domain_xi_span: float | None = None) -> None:
    """Guard against frequency aliasing of the sampled atoms.

    Atoms repeat with period 1/dt in frequency.  A domain whose xi extent
    reaches a full period would fold onto itself (hard error); an extent that
    leaves less than the window's own bandwidth of clearance blurs the
    discrete model against the continuum (warning).
    """
    period = 1.0 / g.grid.dt
    span = domain_xi_span if domain_xi_span is not None else plane.xi_end - plane.xi0
    if span >= period:
        raise ResolutionError(
            f"xi extent {span:g} reaches the discrete frequency period {period:g}; "
            "atoms alias onto each other (reduce dt or the domain)"
        )
    if span + 2.0 * g.freq_reach() > period:
        warnings.warn(
            f"xi extent {span:g} + window bandwidth approaches the frequency "
            f"period {period:g}; discrete/continuum agreement degrades",
            AliasingWarning,
            stacklevel=2,
        )
