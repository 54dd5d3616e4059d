"""Seeded generation of Y = Sigma^{1/2} X for the simulation designs."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import signal

from .errors import ParameterError
from .matrix_core import DataMatrix, as_data_matrix

__all__ = [
    "DistributionSpec",
    "SigmaModel",
    "DISTRIBUTIONS",
    "derive_seed",
    "sample_iid",
    "apply_sigma_ar",
    "apply_sigma_equi",
    "ar_factor",
    "equi_factor",
    "generate",
]

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15

# kind -> (mean, variance, standardized fourth moment)
DISTRIBUTIONS = {
    "standard_normal": (0.0, 1.0, 3.0),
    "exponential": (0.5, 0.25, 9.0),
    "poisson": (1.0, 1.0, 4.0),
    "chi_square_2_raw": (2.0, 4.0, 9.0),
    "chi_square_2_standardized": (0.0, 1.0, 9.0),
}


@dataclass(frozen=True)
class DistributionSpec:
    """Entry law.  Exponential has rate 2, Poisson has mean 1."""

    kind: str

    def __post_init__(self):
        if self.kind not in DISTRIBUTIONS:
            raise ParameterError(
                f"unknown distribution {self.kind!r}; choose from {sorted(DISTRIBUTIONS)}"
            )

    @property
    def mean(self) -> float:
        return DISTRIBUTIONS[self.kind][0]

    @property
    def variance(self) -> float:
        return DISTRIBUTIONS[self.kind][1]

    @property
    def kappa(self) -> float:
        return DISTRIBUTIONS[self.kind][2]

    def draw(self, rng: np.random.Generator, shape) -> np.ndarray:
        k = self.kind
        if k == "standard_normal":
            return rng.standard_normal(shape)
        if k == "exponential":
            return rng.exponential(0.5, shape)
        if k == "poisson":
            return rng.poisson(1.0, shape).astype(float)
        x = rng.chisquare(2, shape)
        if k == "chi_square_2_standardized":
            x = (x - 2.0) / 2.0
        return x


@dataclass(frozen=True)
class SigmaModel:
    """Population covariance: identity, AR(1)-type theta^|i-j|, or equicorrelation."""

    kind: str = "identity"
    param: float = 0.0

    def __post_init__(self):
        if self.kind == "identity":
            return
        if self.kind == "ar":
            if not abs(self.param) < 1:
                raise ParameterError(f"AR parameter must satisfy |theta| < 1, got {self.param}")
        elif self.kind == "equicorrelation":
            if not 0 < self.param < 1:
                raise ParameterError(f"equicorrelation must satisfy 0 < eta < 1, got {self.param}")
        else:
            raise ParameterError(f"unknown covariance model {self.kind!r}")

    def apply(self, X: np.ndarray) -> np.ndarray:
        if self.kind == "ar":
            return _ar(X, self.param)
        if self.kind == "equicorrelation":
            return _equi(X, self.param)
        return X

    def matrix(self, p: int) -> np.ndarray:
        """Dense Sigma, for small p."""
        if self.kind == "ar":
            i = np.arange(p)
            return float(self.param) ** np.abs(i[:, None] - i[None, :])
        if self.kind == "equicorrelation":
            return (1 - self.param) * np.eye(p) + self.param
        return np.eye(p)


def derive_seed(master: int, index: int) -> int:
    """Seed for replicate ``index``: a splitmix64 output of the master stream."""
    z = (int(master) + (int(index) + 1) * GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def sample_iid(dist: DistributionSpec, p: int, n: int, seed: int) -> DataMatrix:
    if p < 2 or n < 3:
        raise ParameterError(f"need p >= 2 and n >= 3, got p={p}, n={n}")
    rng = np.random.default_rng(int(seed) & MASK64)
    return DataMatrix(dist.draw(rng, (p, n)))


def _ar(X: np.ndarray, theta: float) -> np.ndarray:
    # z_1 = x_1, z_i = theta z_{i-1} + sqrt(1 - theta^2) x_i along the variable axis
    s = math.sqrt(1.0 - theta * theta)
    X = np.array(X, dtype=float)
    X[0] /= s
    return signal.lfilter([s], [1.0, -theta], X, axis=0)


def _equi(X: np.ndarray, eta: float) -> np.ndarray:
    p = X.shape[0]
    a = math.sqrt(1.0 - eta)
    b = math.sqrt(1.0 - eta + p * eta) - a
    return a * X + (b / p) * X.sum(axis=0, keepdims=True)


def apply_sigma_ar(X, theta: float) -> DataMatrix:
    SigmaModel("ar", theta)
    return DataMatrix(_ar(as_data_matrix(X).values, theta))


def apply_sigma_equi(X, eta: float) -> DataMatrix:
    SigmaModel("equicorrelation", eta)
    return DataMatrix(_equi(as_data_matrix(X).values, eta))


def ar_factor(p: int, theta: float) -> np.ndarray:
    """The p x p lower-triangular matrix applied by :func:`apply_sigma_ar`."""
    return _ar(np.eye(p), theta)


def equi_factor(p: int, eta: float) -> np.ndarray:
    return _equi(np.eye(p), eta)


def generate(dist: DistributionSpec, sigma: SigmaModel, p: int, n: int, seed: int) -> DataMatrix:
    """Y = Sigma^{1/2} X with X drawn entrywise from ``dist``."""
    X = sample_iid(dist, p, n, seed).values
    if sigma.kind == "identity":
        return DataMatrix(X)
    return DataMatrix(sigma.apply(X))
