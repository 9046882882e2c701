"""Closed-form ground truth for the Gaussian window and a centered disk.

For the width-1 Gaussian and the domain R*D (D the unit disk) the
eigenfunctions are the Hermite functions independently of R, the k-th
eigenvalue is the regularized lower incomplete gamma P(k, pi R^2), the k-th
spectrogram is pi^k/k! |z|^{2k} e^{-pi |z|^2}, and the accumulated
spectrogram is the truncated exponential partial sum (Ginibre's limit law).
Everything here is a pure function used to cross-check the numeric pipeline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractError

__all__ = [
    "DiskOracle",
    "reg_incomplete_gamma",
    "oracle_eigenvalue",
    "oracle_spectrogram",
    "oracle_accspec",
    "oracle_eigen_tail",
]

_MAX_ITER = 500
_EPS = 1e-15


def _gamma_series(k: float, x: float) -> float:
    """P(k, x) by the lower series, reliable for x < k + 1."""
    term = 1.0 / k
    total = term
    a = k
    for _ in range(_MAX_ITER):
        a += 1.0
        term *= x / a
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    return total * math.exp(-x + k * math.log(x) - math.lgamma(k))

def _gamma_cf(k: float, x: float) -> float:
    """Q(k, x) = 1 - P(k, x) by Lentz's continued fraction, for x >= k + 1."""
    tiny = 1e-300
    b = x + 1.0 - k
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - k)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return h * math.exp(-x + k * math.log(x) - math.lgamma(k))


def reg_incomplete_gamma(k: int | float, x: float) -> float:
    """Regularized lower incomplete gamma P(k, x) = gamma(k, x)/Gamma(k).

    Series for x < k+1, continued fraction for x >= k+1 (the standard regime
    split for convergence speed); absolute error below 1e-12.
    """
    if x < 0 or k <= 0:
        raise ContractError("reg_incomplete_gamma needs k > 0 and x >= 0")
    if x == 0.0:
        return 0.0
    if x < k + 1.0:
        return _gamma_series(float(k), x)
    return 1.0 - _gamma_cf(float(k), x)


def oracle_eigenvalue(k: int, R: float) -> float:
    """k-th eigenvalue (descending, 1-based) of the R-disk localization
    operator with the width-1 Gaussian window: P(k, pi R^2)."""
    if k < 1:
        raise ContractError("eigenvalue index is 1-based")
    return reg_incomplete_gamma(k, math.pi * R * R)


def oracle_spectrogram(k: int, z) -> np.ndarray | float:
    """Spectrogram of the (k+1)-th Hermite function against the Gaussian:
    pi^k/k! |z|^{2k} e^{-pi |z|^2}, evaluated in log space.

    `z` may be a complex scalar/array, a pair (x, xi), or |z| directly as a
    nonnegative real array.
    """
    if k < 0:
        raise ContractError("spectrogram order must be >= 0")
    r2 = np.asarray(_radius_squared(z), dtype=float)
    scalar = r2.ndim == 0
    r2 = np.atleast_1d(r2)
    if k == 0:
        out = np.exp(-math.pi * r2)
    else:
        out = np.zeros_like(r2)
        pos = r2 > 0
        rp = r2[pos]
        logv = k * (math.log(math.pi) + np.log(rp)) - math.pi * rp - math.lgamma(k + 1)
        out[pos] = np.exp(logv)
    return float(out[0]) if scalar else out


def oracle_accspec(R: float, z) -> np.ndarray | float:
    """Accumulated spectrogram of R*D: the truncated exponential sum
    sum_{k=0}^{ceil(pi R^2)-1} pi^k/k! |z|^{2k} e^{-pi |z|^2}."""
    if not R > 0:
        raise ContractError("disk radius must be positive")
    n_terms = math.ceil(math.pi * R * R - 1e-9)
    r2 = np.asarray(_radius_squared(z), dtype=float)
    scalar = r2.ndim == 0
    r2 = np.atleast_1d(r2)
    # log-space cumulative sum of Poisson(pi r^2) probabilities over k < n
    lam = math.pi * r2
    out = np.zeros_like(lam)
    positive = lam > 0
    lp = lam[positive]
    kk = np.arange(n_terms)[:, None]
    with np.errstate(divide="ignore"):
        log_terms = kk * np.log(lp)[None, :] - lp[None, :] - _lgamma_vec(kk)
    m = log_terms.max(axis=0)
    out[positive] = np.exp(m) * np.sum(np.exp(log_terms - m[None, :]), axis=0)
    out[~positive] = 1.0  # only the k=0 term survives at z=0
    out = np.clip(out, 0.0, 1.0)
    return float(out[0]) if scalar else out


def oracle_eigen_tail(meas: float) -> float:
    """E(Omega) for a disk of measure `meas`:
    1 - sum_{k<=ceil(meas)} P(k, meas) / meas."""
    if not meas > 0:
        raise ContractError("measure must be positive")
    A = math.ceil(meas - 1e-9)
    return 1.0 - sum(reg_incomplete_gamma(k, meas) for k in range(1, A + 1)) / meas


def _radius_squared(z):
    if isinstance(z, tuple):
        x, xi = z
        return np.asarray(x) ** 2 + np.asarray(xi) ** 2
    z = np.asarray(z)
    if np.iscomplexobj(z):
        return np.abs(z) ** 2
    return z ** 2  # interpreted as |z|


def _lgamma_vec(k: np.ndarray) -> np.ndarray:
    from scipy.special import gammaln

    return gammaln(k + 1.0)


@dataclass(frozen=True)
class DiskOracle:
    """Tabulated closed-form spectrum of the R-disk operator."""

    radius: float
    count: int

    def __post_init__(self):
        if not self.radius > 0 or self.count < 1:
            raise ContractError("DiskOracle needs radius > 0 and count >= 1")
        lams = self.eigenvalues()
        if not (np.all(np.diff(lams) < 0) and lams[0] < 1.0 and lams[-1] > 0.0):
            raise ContractError("oracle eigenvalues must strictly decrease within (0,1)")

    def eigenvalues(self) -> np.ndarray:
        return np.array(
            [oracle_eigenvalue(k, self.radius) for k in range(1, self.count + 1)]
        )

    def truncation_defect(self) -> float:
        """pi R^2 minus the tabulated eigenvalue mass (the neglected tail)."""
        return math.pi * self.radius ** 2 - float(self.eigenvalues().sum())
