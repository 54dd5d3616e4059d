"""Test of complete independence based on T = tr B_n^2.

Under independence (T - n + 2) / 2 is asymptotically standard normal in
both the proportional and the ultrahigh regimes, and large values of T
reject.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import special

from .errors import ParameterError
from .matrix_core import SpectrumResult, as_data_matrix, build_renormalized

__all__ = [
    "TestReport",
    "statistic_T",
    "standardized_score",
    "test_independence",
    "normal_cdf",
    "normal_quantile",
]


def normal_cdf(x):
    return special.ndtr(x)


def normal_quantile(a: float) -> float:
    """Lower-a quantile of the standard normal."""
    if not 0.0 < a < 1.0:
        raise ParameterError(f"probability must lie in (0, 1), got {a!r}")
    return float(special.ndtri(a))


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0 or math.isnan(alpha):
        raise ParameterError(f"alpha must lie in (0, 1), got {alpha!r}")
    return alpha


def statistic_T(B) -> float:
    """tr B^2, from the Frobenius norm or from a spectrum."""
    if isinstance(B, SpectrumResult):
        return float(np.sum(np.square(B.eigenvalues)))
    B = np.asarray(B, dtype=float)
    return float(np.sum(B * B))


def standardized_score(T: float, n: int) -> float:
    return (T - n + 2) / 2


@dataclass(frozen=True)
class TestReport:
    T: float
    score: float
    p_value: float
    alpha: float
    reject: bool
    n: int
    p: int
    seed: int | None = None

    __test__ = False  # not a pytest class

    def to_dict(self) -> dict:
        return asdict(self)


def report_from_T(T: float, n: int, p: int, alpha: float = 0.05, seed=None) -> TestReport:
    alpha = _check_alpha(alpha)
    score = standardized_score(T, n)
    return TestReport(
        T=float(T),
        score=float(score),
        p_value=float(special.ndtr(-score)),
        alpha=alpha,
        reject=bool(score > normal_quantile(1.0 - alpha)),
        n=int(n),
        p=int(p),
        seed=seed,
    )


def test_independence(Y, alpha: float = 0.05, seed=None) -> TestReport:
    """One-sided test of H0: the p variables are independent."""
    alpha = _check_alpha(alpha)
    Y = as_data_matrix(Y)
    T = statistic_T(build_renormalized(Y))
    return report_from_T(T, Y.n, Y.p, alpha, seed)


test_independence.__test__ = False
