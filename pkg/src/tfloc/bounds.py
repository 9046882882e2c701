"""Error metrics and the quantitative bounds on the accumulated spectrogram.

Everything that compares rho_Omega against the indicator (L1/Lp errors,
weak-L2 level measures, the non-asymptotic right-hand sides, domain recovery
by thresholding) lives here, together with the per-run ErrorReport and the
dilation sweep.  Implicit constants in the "up to a constant" statements are
measured and recorded per run, never assumed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .accspec import AccumulatedSpectrogram
from .domain import DomainMask, a_omega, indicator_field, measure, perimeter
from .errors import ContractError, GridMismatchError
from .gabor import PlaneField
from .locop import SpectralDecomposition, eigen_tail

__all__ = [
    "ErrorReport",
    "l1_error",
    "lp_error",
    "level_measure",
    "rhs_thm13",
    "rhs_cor51",
    "rhs_prop34",
    "recover_domain",
    "symmetric_difference",
    "build_error_report",
    "dilation_sweep",
    "SweepRow",
]


def _check_same_grid(a: PlaneField, b: PlaneField) -> None:
    if not a.grid.compatible(b.grid):
        raise GridMismatchError("fields live on different grids")


def l1_error(a: PlaneField, b: PlaneField) -> float:
    """L1 distance: sum |a - b| cell_area."""
    _check_same_grid(a, b)
    return float(np.abs(a.values - b.values).sum()) * a.grid.cell_area


def lp_error(a: PlaneField, b: PlaneField, p: float) -> float:
    """Lp distance (sum |a-b|^p ca)^(1/p); p = inf gives the sup norm."""
    _check_same_grid(a, b)
    if p == math.inf:
        return float(np.abs(a.values - b.values).max())
    if p < 1:
        raise ContractError(f"lp_error needs p >= 1, got {p}")
    diff = np.abs(a.values - b.values)
    return float(np.sum(diff ** p) * a.grid.cell_area) ** (1.0 / p)


def level_measure(a: PlaneField, b: PlaneField, delta: float) -> float:
    """Measure of the level set {|a - b| > delta} (strict)."""
    if not delta > 0:
        raise ContractError("delta must be positive")
    _check_same_grid(a, b)
    return float(np.sum(np.abs(a.values - b.values) > delta)) * a.grid.cell_area


def rhs_thm13(meas: float, perim: float, mstar: float) -> float:
    """Non-asymptotic bound 1/measure + 4 ||g||_{M*} sqrt(perimeter/measure).

    `mstar` is the squared M* norm (what mstar_norm returns), so the window
    factor enters as sqrt(mstar).
    """
    if meas <= 0 or perim < 0 or mstar < 0:
        raise ContractError("rhs_thm13 needs positive measure, nonnegative rest")
    return 1.0 / meas + 4.0 * math.sqrt(mstar) * math.sqrt(perim / meas)


def rhs_cor51(meas: float, perim: float, mstar: float) -> float:
    """Bound on the normalized L1 error against the sharp indicator:
    1/measure + mstar*perimeter/measure + 4 sqrt(mstar) sqrt(perimeter/measure)."""
    if meas <= 0 or perim < 0 or mstar < 0:
        raise ContractError("rhs_cor51 needs positive measure, nonnegative rest")
    return 1.0 / meas + mstar * perim / meas + 4.0 * math.sqrt(mstar) * math.sqrt(perim / meas)


def rhs_prop34(delta: float, mstar: float, perim: float) -> float:
    """Eigenvalue-count error bound max(1/delta, 1/(1-delta)) * mstar * perimeter."""
    if not 0 < delta < 1:
        raise ContractError("delta must lie in (0, 1)")
    return max(1.0 / delta, 1.0 / (1.0 - delta)) * mstar * perim


def recover_domain(rho: AccumulatedSpectrogram) -> DomainMask:
    """Approximate domain {rho > 1/2} (strict), as a raster-only mask.

    The recovered set may overshoot the true domain by a few cells, so the
    assembly margin is not required of it (it is a measurement, not an
    assembly input)."""
    return DomainMask(
        grid=rho.field.grid,
        indicator=rho.field.values > 0.5,
        shape=None,
        required_margin=0.0,
    )


def symmetric_difference(m1: DomainMask, m2: DomainMask) -> float:
    """Measure of the symmetric difference of two masks on the same grid."""
    if not m1.grid.compatible(m2.grid):
        raise GridMismatchError("masks live on different grids")
    return float(np.sum(m1.indicator ^ m2.indicator)) * m1.grid.cell_area


@dataclass(frozen=True)
class ErrorReport:
    """All measured error quantities and bound sides for one run."""

    l1_raw: float                      # ||rho - 1_Omega||_1
    l1_normalized: float               # l1_raw / measure
    l1_vs_mollified: float             # ||rho - 1_Omega * Theta||_1
    thm13_lhs: float                   # l1_vs_mollified / measure
    lp: dict[str, float]               # p -> ||rho - 1_Omega||_p, p in {1, 2, inf}
    level_measures: dict[str, float]   # delta -> |{|rho - 1_Omega| > delta}|
    e_omega: float
    bound_thm13: float
    bound_cor51: float
    eqc_ratio: float                   # l1_normalized / sqrt(perimeter/measure)
    bound_prop34: float                # at delta = 1/2 (the minimal constant)
    recovery_symdiff: float
    recovery_ratio: float              # symdiff / (mstar * perimeter)
    gap_at_cut: float
    basis_dependent: bool
    wl2_constants: dict[str, float]    # delta -> level * delta^2 / (mstar * perim)
    wl2_applicable: bool               # mstar * perimeter >= 1 (the theorem's regime)
    measure: float
    perimeter: float
    mstar: float
    a_omega: int

    def to_json_dict(self) -> dict:
        return {
            "l1_raw": self.l1_raw,
            "l1_normalized": self.l1_normalized,
            "l1_vs_mollified": self.l1_vs_mollified,
            "thm13_lhs": self.thm13_lhs,
            "lp": dict(self.lp),
            "level_measures": dict(self.level_measures),
            "e_omega": self.e_omega,
            "bound_thm13": self.bound_thm13,
            "bound_cor51": self.bound_cor51,
            "eqc_ratio": self.eqc_ratio,
            "bound_prop34": self.bound_prop34,
            "recovery_symdiff": self.recovery_symdiff,
            "recovery_ratio": self.recovery_ratio,
            "gap_at_cut": self.gap_at_cut,
            "basis_dependent": self.basis_dependent,
            "wl2_constants": dict(self.wl2_constants),
            "wl2_applicable": self.wl2_applicable,
            "measure": self.measure,
            "perimeter": self.perimeter,
            "mstar": self.mstar,
            "a_omega": self.a_omega,
        }


def _fmt_delta(delta: float) -> str:
    return f"{delta:g}"


def build_error_report(
    mask: DomainMask,
    rho: AccumulatedSpectrogram,
    mollified: PlaneField,
    dec: SpectralDecomposition,
    mstar: float,
    deltas: tuple[float, ...] = (0.1, 0.25, 0.5),
) -> ErrorReport:
    """Measure every bound of the run; nothing here asserts, it only records."""
    meas = measure(mask)
    perim = perimeter(mask)
    ind = indicator_field(mask)
    rho_f = rho.field

    l1_raw = l1_error(rho_f, ind)
    l1_moll = l1_error(rho_f, mollified)
    lp = {
        "1": l1_raw,
        "2": lp_error(rho_f, ind, 2.0),
        "inf": lp_error(rho_f, ind, math.inf),
    }
    levels = {_fmt_delta(d): level_measure(rho_f, ind, d) for d in deltas}

    recovered = recover_domain(rho)
    symdiff = symmetric_difference(mask, recovered)

    wl2_applicable = mstar * perim >= 1.0
    wl2 = {
        _fmt_delta(d): levels[_fmt_delta(d)] * d * d / (mstar * perim) for d in deltas
    }

    return ErrorReport(
        l1_raw=l1_raw,
        l1_normalized=l1_raw / meas,
        l1_vs_mollified=l1_moll,
        thm13_lhs=l1_moll / meas,
        lp=lp,
        level_measures=levels,
        e_omega=eigen_tail(dec, meas),
        bound_thm13=rhs_thm13(meas, perim, mstar),
        bound_cor51=rhs_cor51(meas, perim, mstar),
        eqc_ratio=(l1_raw / meas) / math.sqrt(perim / meas),
        bound_prop34=rhs_prop34(0.5, mstar, perim),
        recovery_symdiff=symdiff,
        recovery_ratio=symdiff / (mstar * perim),
        gap_at_cut=rho.gap_at_cut,
        basis_dependent=rho.basis_dependent,
        wl2_constants=wl2,
        wl2_applicable=wl2_applicable,
        measure=meas,
        perimeter=perim,
        mstar=mstar,
        a_omega=rho.a_omega,
    )


@dataclass(frozen=True)
class SweepRow:
    """One dilation factor of a sweep; `skipped` marks cap overflows."""

    R: float
    skipped: bool = False
    l1_rescaled: float = math.nan      # proof-decomposition upper bound
    l1_direct: float = math.nan        # (m1/mR) ||rho - 1_{R Omega}||_1
    e_omega: float = math.nan
    eqc_ratio: float = math.nan
    wl2_constants: dict[str, float] = field(default_factory=dict)
    report: "ErrorReport | None" = None


def dilation_sweep(shape, window_spec, radii, resolution=None, deltas=(0.1, 0.25, 0.5), cap=1200):
    """Dilate a shape through `radii` and measure the convergence table.

    The rescaled L1 error of each R follows the change-of-variables split:
    (measure(Omega)/measure(R Omega)) * (||rho - 1_{R Omega} * Theta||_1
    + ||1_{R Omega} * Theta - 1_{R Omega}||_1), evaluated entirely on the
    dilated grid (no resampling).  Rows whose operator would exceed the
    matrix-dimension cap are marked skipped.
    """
    from . import pipeline  # deferred: pipeline orchestrates with this module

    if not radii or any(r <= 0 for r in radii):
        raise ContractError("radii must be a nonempty list of positive reals")
    if list(radii) != sorted(radii):
        raise ContractError("radii must be ascending")
    resolution = resolution or pipeline.Resolution()
    base_measure = measure(
        pipeline.rasterize_shape(shape, resolution)
    )
    rows: list[SweepRow] = []
    for R in radii:
        try:
            run = pipeline.run_localization(
                shape.scaled(R), window_spec, resolution, deltas=deltas, cap=cap
            )
        except Exception as exc:
            from .errors import CapExceededError

            if isinstance(exc, CapExceededError):
                rows.append(SweepRow(R=R, skipped=True))
                continue
            raise
        ratio = base_measure / run.measure
        ind = indicator_field(run.mask)
        l1_moll = l1_error(run.rho.field, run.mollified)
        l1_moll_ind = l1_error(run.mollified, ind)
        rows.append(
            SweepRow(
                R=R,
                l1_rescaled=ratio * (l1_moll + l1_moll_ind),
                l1_direct=ratio * l1_error(run.rho.field, ind),
                e_omega=run.report.e_omega,
                eqc_ratio=run.report.eqc_ratio,
                wl2_constants=dict(run.report.wl2_constants),
                report=run.report,
            )
        )
    return rows
