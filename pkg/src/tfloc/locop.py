"""The discretized localization operator and its spectral diagnostics.

The operator is represented in the signal domain as the n x n Hermitian
matrix

    H = sum_{z in Omega-cells} cell_area * P_z,
    P_z[i, j] = phi_z(t_i) conj(phi_z(t_j)) dt,

a sum of weighted rank-one projectors onto time-frequency atoms, so it is
positive semidefinite by construction and trace(H) equals the discrete
measure of Omega up to atom truncation.  Assembly groups the cells of Omega
by x column; the frequency sum within a column is a Dirichlet kernel in
(t_i - t_j), evaluated exactly through a length-N inverse DFT when the grids
satisfy the exact-DFT conditions (the reference resolution does).  The
atom-by-atom accumulation is kept as the brute-force reference path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .domain import DomainMask, a_omega, autocorrelation_counts, measure
from .errors import ContractError, GridMismatchError, MarginError, SolverError
from .gabor import PlaneField, Window, _fft_model, _shifted_window, atom

EIG_RESIDUAL_TOL = 1e-9
ORTHO_TOL = 1e-8
EIGENVALUE_FLOOR = -1e-10
QUAD_TOL = 1e-3

__all__ = [
    "LocalizationOperator",
    "SpectralDecomposition",
    "build_operator",
    "eigendecompose",
    "count_above",
    "trace_pair",
    "eigen_tail",
]


@dataclass(frozen=True)
class LocalizationOperator:
    matrix: np.ndarray  # (n, n) complex Hermitian
    window: Window
    mask: DomainMask
    assembly_tail: float  # |trace/measure - 1|, the truncation diagnostic

    def __post_init__(self):
        m = np.asarray(self.matrix)
        if m.shape != (self.window.grid.n, self.window.grid.n):
            raise ContractError("operator matrix does not match the signal grid")
        herm_defect = float(np.abs(m - m.conj().T).max()) if m.size else 0.0
        if herm_defect > 1e-12:
            raise ContractError(f"operator not Hermitian: defect {herm_defect:.3e}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)


def _column_cells(mask: DomainMask) -> list[tuple[int, np.ndarray]]:
    """(x index, xi index array) for every nonempty column of the mask."""
    out = []
    for j in range(mask.grid.nx):
        kk = np.nonzero(mask.indicator[j])[0]
        if kk.size:
            out.append((j, kk))
    return out


def build_operator(g: Window, mask: DomainMask, method: str = "auto") -> LocalizationOperator:
    """Assemble H_Omega for a window and a rasterized domain.

    `fast` uses the per-column Dirichlet-kernel evaluation (exact under the
    exact-DFT grid conditions); `direct` accumulates atom outer products one
    cell at a time and is the reference implementation.
    """
    grid = g.grid
    plane = mask.grid
    n = grid.n
    ca = plane.cell_area
    if g.kind == "tabulated":
        ratio = plane.dx / grid.dt
        if abs(ratio - round(ratio)) > 1e-9:
            raise ContractError("tabulated windows require dx to be a multiple of dt")
    if mask.cell_count:
        x_lo, x_hi, _, _ = mask.bbox()
        reach = g.time_reach()
        if x_lo - reach < grid.t0 - 1e-9 or x_hi + reach > grid.t_end + 1e-9:
            raise MarginError(
                "signal grid does not cover the domain's x extent plus window reach"
            )

    model = _fft_model(grid, plane)
    if method == "auto":
        method = "fast" if model is not None else "direct"
    if method == "fast" and model is None:
        raise ContractError("fast assembly requires the exact-DFT grid conditions")

    H = np.zeros((n, n), dtype=complex)
    t = grid.times()
    xs = plane.xs()

    if method == "fast":
        N, _, p = model
        diff = (np.arange(n)[:, None] - np.arange(n)[None, :]) % N
        for j, kk in _column_cells(mask):
            ind = np.zeros(N)
            ind[(p + kk) % N] = 1.0
            dirichlet = N * np.fft.ifft(ind)
            a = _shifted_window(g, xs[j])
            H += (a[:, None] * np.conj(a)[None, :]) * dirichlet[diff]
        H *= ca * grid.dt
    elif method == "direct":
        xis = plane.xis()
        for j, kk in _column_cells(mask):
            for k in kk:
                phi = atom(g, (xs[j], xis[k]), check_tail=False)
                H += np.outer(phi, np.conj(phi))
        H *= ca * grid.dt
    else:
        raise ContractError(f"unknown assembly method {method!r}")

    H = 0.5 * (H + H.conj().T)
    meas = measure(mask)
    tail = abs(float(np.trace(H).real) / meas - 1.0) if meas > 0 else 0.0
    return LocalizationOperator(matrix=H, window=g, mask=mask, assembly_tail=tail)


@dataclass(frozen=True)
class SpectralDecomposition:
    """Descending eigenpairs of H_Omega with residual certificates.

    Eigenvectors are columns, normalized in the discrete inner product
    (sum |h|^2 dt = 1).  gap_at_cut = lambda_{A} - lambda_{A+1} at the
    accumulation cut A = ceil(measure); consumers must treat results as
    basis-dependent when it is below 1e-6.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # (n, m)
    residuals: np.ndarray
    gap_at_cut: float
    a_omega: int

    @property
    def count(self) -> int:
        return len(self.eigenvalues)

    @property
    def degenerate_cut(self) -> bool:
        return self.gap_at_cut < 1e-6


def eigendecompose(op: LocalizationOperator, count: int | None = None) -> SpectralDecomposition:
    """Eigendecompose H_Omega, descending, with residual/orthonormality checks.

    The eigensolver is an opaque contract: any method meeting the residual
    and orthonormality bounds conforms.  Here LAPACK's Hermitian solver does.
    """
    H = op.matrix
    n = H.shape[0]
    dt = op.window.grid.dt
    if count is not None and not (1 <= count <= n):
        raise ContractError(f"count must be in [1, {n}]")
    if count is None or count == n:
        vals, vecs = linalg.eigh(H)
    else:
        vals, vecs = linalg.eigh(H, subset_by_index=[n - count, n - 1])
    vals = vals[::-1]
    vecs = vecs[:, ::-1] / math.sqrt(dt)

    scale = max(float(np.abs(vals).max()), 1e-300) if len(vals) else 1.0
    resid_vec = H @ (vecs * math.sqrt(dt)) - (vecs * math.sqrt(dt)) * vals[None, :]
    residuals = np.sqrt(np.sum(np.abs(resid_vec) ** 2, axis=0) * dt) / math.sqrt(dt)
    if len(vals) and float(residuals.max()) > EIG_RESIDUAL_TOL * scale:
        raise SolverError(
            f"eigen residual {residuals.max():.3e} exceeds {EIG_RESIDUAL_TOL:.0e}*|A|"
        )
    gram = (vecs.conj().T @ vecs) * dt
    ortho_defect = float(np.abs(gram - np.eye(gram.shape[0])).max()) if len(vals) else 0.0
    if ortho_defect > ORTHO_TOL:
        raise SolverError(f"eigenvector orthonormality defect {ortho_defect:.3e}")
    if len(vals) and (vals.min() < EIGENVALUE_FLOOR or vals.max() > 1.0 + QUAD_TOL):
        raise SolverError(
            f"eigenvalues outside [{EIGENVALUE_FLOOR:g}, 1+{QUAD_TOL:g}]: "
            f"range [{vals.min():.3e}, {vals.max():.6f}] "
            "(aliasing or assembly defect)"
        )

    A = a_omega(measure(op.mask))
    if A == 0:
        gap = 0.0
    elif A <= len(vals) - 1:
        gap = float(vals[A - 1] - vals[A])
    elif A == len(vals):
        gap = float(vals[A - 1])
    else:
        gap = float("nan")
    return SpectralDecomposition(
        eigenvalues=vals,
        eigenvectors=vecs,
        residuals=residuals,
        gap_at_cut=gap,
        a_omega=A,
    )


def count_above(dec: SpectralDecomposition, threshold: float) -> int:
    """#{k : lambda_k > threshold} among the computed eigenvalues."""
    return int(np.sum(dec.eigenvalues > threshold))


def trace_pair(op: LocalizationOperator, theta: PlaneField) -> tuple[float, float, float]:
    """(trace H, trace H^2, Toeplitz double sum) -- the two trace identities.

    trace H^2 is the squared Frobenius norm (exactly sum lambda_k^2 for a
    Hermitian matrix); the right-hand side is
    sum_{z, z' in Omega} Theta(z - z') cell_area^2 with Theta sampled on the
    offset lattice of the mask grid.  With Theta the discrete-atom Gram
    modulus squared (which the discrete stft of the window against itself
    produces) the two sides agree to solver precision.
    """
    mask = op.mask
    trace1 = op.trace
    trace2 = float(np.sum(np.abs(op.matrix) ** 2))

    counts = autocorrelation_counts(mask)
    tg = theta.grid
    mg = mask.grid
    if not mg.same_cells(tg):
        raise GridMismatchError("theta grid must share cell sizes with the mask")
    cx = round(-tg.x0 / tg.dx)
    cxi = round(-tg.xi0 / tg.dxi)
    if not (
        abs(tg.x0 + cx * tg.dx) < 1e-9
        and abs(tg.xi0 + cxi * tg.dxi) < 1e-9
        and cx - (mg.nx - 1) >= 0
        and cxi - (mg.nxi - 1) >= 0
        and cx + mg.nx <= tg.nx
        and cxi + mg.nxi <= tg.nxi
    ):
        raise GridMismatchError("theta grid must cover the mask's offset lattice")
    block = theta.values[
        cx - (mg.nx - 1) : cx + mg.nx, cxi - (mg.nxi - 1) : cxi + mg.nxi
    ]
    rhs2 = float(np.sum(counts * block)) * mg.cell_area ** 2
    return trace1, trace2, rhs2


def eigen_tail(dec: SpectralDecomposition, meas: float) -> float:
    """E(Omega) = 1 - (sum of the first A eigenvalues) / measure."""
    if not meas > 0:
        raise ContractError("eigen_tail needs a positive measure")
    A = a_omega(meas)
    if dec.count < A:
        raise ContractError(f"need at least {A} eigenvalues, have {dec.count}")
    return 1.0 - float(np.sum(dec.eigenvalues[:A])) / meas
