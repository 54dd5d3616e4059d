"""Spectral theory of the renormalized sample correlation matrix.

Construction of B_n and its spectrum, the limiting spectral laws, the CLT
for linear spectral statistics with finite-sample mean corrections, the
tr B_n^2 independence test, and a seeded Monte Carlo harness.
"""

from .clt import (
    CltContext,
    ContourSpec,
    LssResult,
    Monomial,
    compute_Gn,
    contour_nodes,
    cov_kernel,
    lss_center,
    lss_variance,
    mean_correction,
    mean_function_ultra,
    theta_components,
    theta_correction,
)
from .datagen import DistributionSpec, SigmaModel, derive_seed, generate, sample_iid
from .errors import ComputationError, RenormCorrError, UsageError
from .indep import TestReport, normal_cdf, normal_quantile, statistic_T, test_independence
from .laws import (
    INFINITY,
    SpectralModel,
    lsd_cdf,
    lsd_density,
    lsd_moment,
    stieltjes,
    stieltjes_derivative,
)
from .matrix_core import (
    DataMatrix,
    SpectrumResult,
    build_companion,
    build_renormalized,
    sample_correlation,
    spectrum,
    trace_powers,
)

__version__ = "0.1.0"
