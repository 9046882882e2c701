"""Time-frequency localization operators on arbitrary compact plane domains.

Build the localization operator of a window and a compact domain, compute
its spectrum and accumulated spectrogram, verify the discrete trace and
reconstruction identities, measure every approximation bound, and recover
the domain from phaseless spectrograms -- all checked against the
closed-form Gaussian/disk oracle.
"""

from .accspec import AccumulatedSpectrogram, accumulated, eigen_spectrogram, weighted_sum
from .bounds import (
    ErrorReport,
    build_error_report,
    dilation_sweep,
    l1_error,
    level_measure,
    lp_error,
    recover_domain,
    rhs_cor51,
    rhs_prop34,
    rhs_thm13,
    symmetric_difference,
)
from .domain import (
    DiskShape,
    DomainMask,
    RectShape,
    StarShape,
    convolve_indicator,
    dilate,
    disk,
    mask_from_indicator,
    measure,
    perimeter,
    rectangle,
    star,
)
from .gabor import (
    PlaneField,
    PlaneGrid,
    SignalGrid,
    Window,
    atom,
    gaussian_window,
    hermite_window,
    mstar_norm,
    stft,
    theta,
)
from .ginibre import (
    DiskOracle,
    oracle_accspec,
    oracle_eigen_tail,
    oracle_eigenvalue,
    oracle_spectrogram,
    reg_incomplete_gamma,
)
from .locop import (
    LocalizationOperator,
    SpectralDecomposition,
    build_operator,
    count_above,
    eigen_tail,
    eigendecompose,
    trace_pair,
)
from .pipeline import (
    SQUARE2,
    STAR23,
    SWEEP_STAR,
    UNIT_DISK,
    Resolution,
    RunResult,
    WindowSpec,
    disk_of_area,
    run_localization,
)

__version__ = "0.1.0"
