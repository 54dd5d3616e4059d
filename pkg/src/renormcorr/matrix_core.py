"""Construction of the renormalized sample correlation matrix and its spectrum.

For a p x n data matrix Y (rows are variables, columns are samples) the
renormalized matrix is the n x n matrix

    B_n = sqrt(p/N) * ((N/p) * Yt Yt^T - Phi),     N = n - 1,

where Phi = I - 11^T/n and the k-th column of Yt is the k-th row of Y,
centered and scaled to unit norm.  B_n annihilates the all-ones vector and
has zero trace; its remaining eigenvalues are an affine image of the nonzero
eigenvalues of the p x p sample correlation matrix R_n.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    DegenerateVariableError,
    DimensionError,
    NumericError,
    ParameterError,
    ParseError,
    ShapeError,
)

__all__ = [
    "DataMatrix",
    "SpectrumResult",
    "as_data_matrix",
    "centering_projection",
    "normalized_columns",
    "build_renormalized",
    "build_companion",
    "sample_correlation",
    "symmetric_eigenvalues",
    "eigen_residual",
    "trace_powers",
    "eigen_map",
    "spectrum",
    "read_csv_matrix",
]


@dataclass(frozen=True)
class DataMatrix:
    """A p x n real observation matrix, variables in rows."""

    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2:
            raise ShapeError(f"data matrix must be 2-D, got shape {v.shape}")
        p, n = v.shape
        if p < 2 or n < 3:
            raise DimensionError(f"need p >= 2 and n >= 3, got p={p}, n={n}")
        if not np.all(np.isfinite(v)):
            raise ParameterError("data matrix contains non-finite entries")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def p(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1]


def as_data_matrix(Y) -> DataMatrix:
    return Y if isinstance(Y, DataMatrix) else DataMatrix(Y)


@dataclass(frozen=True)
class SpectrumResult:
    """Eigenvalues of B_n, sorted descending, with their dimension context."""

    eigenvalues: np.ndarray = field(repr=False)
    n: int
    p: int

    @property
    def N(self) -> int:
        return self.n - 1

    @property
    def c_n(self) -> float:
        return self.p / self.n

    @property
    def c_N(self) -> float:
        return self.p / self.N


def centering_projection(n: int) -> np.ndarray:
    """Return Phi = I_n - (1/n) 1 1^T."""
    if n < 2:
        raise DimensionError(f"centering projection needs n >= 2, got {n}")
    return np.eye(n) - np.full((n, n), 1.0 / n)


def normalized_columns(Y) -> np.ndarray:
    """Return the n x p matrix whose columns are the centered, unit-norm rows of Y."""
    Y = as_data_matrix(Y)
    centered = Y.values - Y.values.mean(axis=1, keepdims=True)
    norms = np.linalg.norm(centered, axis=1)
    # relative to the row scale so that constant rows with round-off still trip
    scale = np.max(np.abs(Y.values), axis=1)
    bad = np.flatnonzero(norms <= 1e-13 * np.maximum(scale, 1e-300) * math.sqrt(Y.n))
    if bad.size:
        raise DegenerateVariableError(int(bad[0]))
    return (centered / norms[:, None]).T


def _symmetrize(M):
    return 0.5 * (M + M.T)


def build_renormalized(Y) -> np.ndarray:
    Y = as_data_matrix(Y)
    p, n = Y.p, Y.n
    N = n - 1
    Yt = normalized_columns(Y)
    gram = _symmetrize(Yt @ Yt.T)
    return math.sqrt(p / N) * ((N / p) * gram - centering_projection(n))


def build_companion(Y) -> np.ndarray:
    """A_n = sqrt(p/N) ((N/p) Yt Yt^T - I_n); differs from B_n by a rank-one term."""
    Y = as_data_matrix(Y)
    p, n = Y.p, Y.n
    N = n - 1
    Yt = normalized_columns(Y)
    gram = _symmetrize(Yt @ Yt.T)
    return math.sqrt(p / N) * ((N / p) * gram - np.eye(n))


def sample_correlation(Y) -> np.ndarray:
    """The p x p sample correlation matrix.  Meant for small p."""
    Yt = normalized_columns(Y)
    R = _symmetrize(Yt.T @ Yt)
    np.fill_diagonal(R, 1.0)
    return R


def symmetric_eigenvalues(M) -> np.ndarray:
    """Eigenvalues of a real symmetric matrix, sorted descending."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {M.shape}")
    scale = max(1.0, float(np.max(np.abs(M)))) if M.size else 1.0
    if M.size and np.max(np.abs(M - M.T)) > 1e-10 * scale:
        raise ShapeError("matrix is not symmetric")
    try:
        lam = np.linalg.eigvalsh(M)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigensolver failed to converge: {exc}") from exc
    return lam[::-1].copy()


def eigen_residual(M) -> float:
    """Largest ||Mv - lambda v|| / max(1, ||M||) over the computed eigenpairs."""
    M = np.asarray(M, dtype=float)
    lam, V = np.linalg.eigh(M)
    res = np.linalg.norm(M @ V - V * lam, axis=0)
    return float(res.max() / max(1.0, np.linalg.norm(M, 2)))


def trace_powers(B, kmax: int) -> list[float]:
    """[tr B, tr B^2, ..., tr B^kmax] without an eigendecomposition.

    tr B^k is taken as the elementwise product of B^ceil(k/2) and
    B^floor(k/2), which needs only floor(kmax/2) matrix products.
    """
    if not isinstance(kmax, (int, np.integer)) or not 1 <= kmax <= 8:
        raise ParameterError(f"kmax must be an integer in 1..8, got {kmax!r}")
    B = np.asarray(B, dtype=float)
    powers = {1: B}
    for k in range(2, (kmax + 1) // 2 + 1):
        powers[k] = powers[k - 1] @ B
    out = [float(np.trace(B))]
    for k in range(2, kmax + 1):
        hi, lo = (k + 1) // 2, k // 2
        out.append(float(np.sum(powers[hi] * powers[lo])))
    return out


def eigen_map(lambda_R, p: int, n: int):
    """Map an eigenvalue of R_n to the matching eigenvalue of B_n."""
    if p < 1 or n < 2:
        raise DimensionError(f"need p >= 1 and n >= 2, got p={p}, n={n}")
    N = n - 1
    return math.sqrt(N / p) * np.asarray(lambda_R) - math.sqrt(p / N)


def spectrum(Y) -> SpectrumResult:
    Y = as_data_matrix(Y)
    lam = symmetric_eigenvalues(build_renormalized(Y))
    return SpectrumResult(lam, Y.n, Y.p)


def read_csv_matrix(source, skip_header: bool = False) -> DataMatrix:
    """Read a p x n matrix (rows = variables) from a headerless CSV file.

    ``source`` may be a path or an open text stream.  Rows and columns in
    error messages are 1-based, counting the header line if present.
    """
    if isinstance(source, (str, Path)):
        with open(source, newline="") as fh:
            text = fh.read()
    else:
        text = source.read()
    rows = []
    width = None
    for lineno, record in enumerate(csv.reader(io.StringIO(text)), start=1):
        if skip_header and lineno == 1:
            continue
        if not record or all(not cell.strip() for cell in record):
            continue
        values = []
        for col, cell in enumerate(record, start=1):
            try:
                values.append(float(cell))
            except ValueError:
                raise ParseError(f"cannot parse {cell!r} as a real number", lineno, col) from None
        if width is None:
            width = len(values)
        elif len(values) != width:
            raise ParseError(f"expected {width} columns, found {len(values)}", lineno)
        rows.append(values)
    if not rows:
        raise ParseError("no data rows found")
    return DataMatrix(np.array(rows))
