"""Central limit theory for linear spectral statistics of B_n.

For a test function f analytic near the support of F^{c_N},

    G_n(f) = sum_i f(lambda_i) - n * int f dF^{c_N}
             + (1 / 2 pi i) * contour integral of f(z) Theta_n(z) dz

is asymptotically centered normal.  The variance is a double contour
integral of f(z1) g(z2) against a covariance kernel built from s_c.

Contours are axis-aligned rectangles discretized edge by edge with
Gauss-Legendre nodes; integrands are analytic on them, so convergence is
spectral and node doubling is used only as a stopping test.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate

from . import laws
from .errors import (
    CoincidenceError,
    DimensionError,
    GeometryError,
    NumericError,
    ParameterError,
    SingularityError,
)
from .laws import INFINITY, SpectralModel
from .matrix_core import SpectrumResult

__all__ = [
    "CltContext",
    "ContourSpec",
    "LssResult",
    "Monomial",
    "monomial",
    "ULTRAHIGH_THRESHOLD",
    "theta_components",
    "theta_correction",
    "mean_function_ultra",
    "cov_kernel",
    "contour_nodes",
    "contour_integral",
    "mean_correction",
    "lss_variance",
    "lss_center",
    "variance_model",
    "compute_Gn",
    "monomial_terms",
]

# above this p/n the variance is taken from the c = inf kernel
ULTRAHIGH_THRESHOLD = 1e4

START_NODES = 64
MAX_DOUBLINGS = 6
CORRECTION_RTOL = 1e-8
VARIANCE_RTOL = 1e-10
IMAG_TOL = 1e-6


@dataclass(frozen=True)
class CltContext:
    n: int
    p: int

    def __post_init__(self):
        if self.n < 3 or self.p < 1:
            raise DimensionError(f"need n >= 3 and p >= 1, got n={self.n}, p={self.p}")

    @property
    def N(self) -> int:
        return self.n - 1

    @property
    def c_n(self) -> float:
        return self.p / self.n

    @property
    def c_N(self) -> float:
        return self.p / self.N

    @property
    def model(self) -> SpectralModel:
        return SpectralModel(self.c_N)


@dataclass(frozen=True)
class ContourSpec:
    """Rectangle [enclosed_left - margin, enclosed_right + margin] x [-height, height]."""

    enclosed_left: float
    enclosed_right: float
    margin: float = 0.5
    height: float = 1.0
    nodes_per_edge: int = START_NODES

    def __post_init__(self):
        if not self.enclosed_left < self.enclosed_right:
            raise GeometryError("enclosed interval is empty")
        if not (self.margin > 0 and self.height > 0):
            raise GeometryError("margin and height must be positive")
        if self.nodes_per_edge < 16:
            raise ParameterError("nodes_per_edge must be at least 16")

    @classmethod
    def around(cls, model, margin=0.5, height=1.0, nodes_per_edge=START_NODES):
        """Contour enclosing the support of ``model`` and its atom, if any."""
        m = model if isinstance(model, SpectralModel) else SpectralModel(model)
        return cls(m.hull_left, m.support_right, margin, height, nodes_per_edge)

    @property
    def left(self) -> float:
        return self.enclosed_left - self.margin

    @property
    def right(self) -> float:
        return self.enclosed_right + self.margin

    def encloses(self, model: SpectralModel) -> bool:
        return self.left < model.hull_left and self.right > model.support_right

    def strictly_inside(self, other: "ContourSpec") -> bool:
        return (
            other.left < self.left
            and self.right < other.right
            and self.height < other.height
        )

    def with_nodes(self, nodes_per_edge: int) -> "ContourSpec":
        return ContourSpec(
            self.enclosed_left, self.enclosed_right, self.margin, self.height, nodes_per_edge
        )


@dataclass(frozen=True)
class LssResult:
    raw_sum: float
    centering: float
    correction: float
    G_n: float
    variance: float
    standardized: float


class Monomial:
    """f(x) = x**degree.  Centering for monomials uses exact LSD moments."""

    def __init__(self, degree: int):
        if degree < 0:
            raise ParameterError("monomial degree must be nonnegative")
        self.degree = int(degree)

    def __call__(self, x):
        return np.asarray(x) ** self.degree

    def __repr__(self):
        return f"Monomial({self.degree})"


def monomial(degree: int) -> Monomial:
    return Monomial(degree)


def _apply(f, z):
    out = np.asarray(f(z))
    if out.shape != np.shape(z):
        out = np.array([f(zi) for zi in np.ravel(z)]).reshape(np.shape(z))
    return out


# ---------------------------------------------------------------- integrands


def _check(value, name):
    if np.any(np.abs(value) < 1e-14):
        raise SingularityError(f"division by a vanishing {name}")
    return value


def theta_components(z, ctx: CltContext):
    """The auxiliary functions h, g, d, l of the finite-sample mean display.

    ``l^{-1}`` is read as the reciprocal 1/l.  These are exposed for
    inspection; :func:`theta_correction` does not assemble them (see its
    docstring).
    """
    z = np.asarray(z, dtype=complex)
    cn, cN = ctx.c_n, ctx.c_N
    q = math.sqrt(cN)
    s = laws._stieltjes(z, 1.0 / q)
    w = _check(cN + q * z, "c_N + sqrt(c_N) z")
    _check(s, "s_{c_N}(z)")
    h = 1.0 / _check(1.0 + s / q + (1.0 - cn) / w, "denominator of h")
    g = -(w / cn) * (s / q + (1.0 - cn) / w)
    l = (h / cn) * (1.0 + (q / s) * (cn + cn * (1.0 - cn) / w + (cn - 1.0) * s / q))
    _check(l, "l")
    d = -cn * (1.0 / h) * s / _check(q - s * w / l, "denominator of d")
    return h, g, d, l


def _theta(z, a):
    """Theta_n(z) at c_N = a^{-2}; ``a = 0`` gives the c_N = inf limit.

    Written in s = s_{c_N}(z) through the companion transform
        m(z) = s/sqrt(c) - (c - 1)/(c + sqrt(c) z),
    with v = (1 + m)/a and rho = m/v kept finite as a -> 0:
        Theta = rho^3 [1/(1 - rho^2)^2 - 2/(1 - rho^2)] - 1/z - s.
    """
    z = np.asarray(z, dtype=complex)
    s = laws._stieltjes(z, a)
    v = (z + s + a * (s * z + 1.0)) / (1.0 + a * z)
    rho = (a * v - 1.0) / v
    D = 1.0 - rho * rho
    return rho**3 * (1.0 / D**2 - 2.0 / D) - 1.0 / z - s


def theta_correction(z, ctx: CltContext):
    """Finite-sample mean-correction integrand Theta_n at z.

    Restricted to the complement of the all-ones vector, B_n is a scaled
    sample covariance of p directions drawn uniformly from the sphere in
    R^N, plus one structural zero eigenvalue.  The integrand is the O(1)
    resolvent mean of that matrix (fourth-moment excess -2 for sphere
    directions), shifted by -1/z for the zero eigenvalue and by -s for the
    difference between n and N normalizations.  Its monomial integrals
    reproduce the closed-form centerings of tr B^2, tr B^3, tr B^4 exactly.
    """
    out = _theta(z, 1.0 / math.sqrt(ctx.c_N))
    return complex(out) if np.ndim(z) == 0 else out


def mean_function_ultra(z):
    """(s^3 + s - s' s) / (s^2 - 1) with the semicircle transform s."""
    z = np.asarray(z, dtype=complex)
    s = laws._stieltjes(z, 0.0)
    ds = laws._stieltjes_prime(z, 0.0)
    out = (s**3 + s - ds * s) / _check(s * s - 1.0, "s^2 - 1")
    return complex(out) if np.ndim(z) == 0 else out


def cov_kernel(z1, z2, model):
    """Covariance kernel Cov(M(z1), M(z2)); broadcasts over z1 and z2."""
    m = model if isinstance(model, SpectralModel) else SpectralModel(model)
    z1 = np.asarray(z1, dtype=complex)
    z2 = np.asarray(z2, dtype=complex)
    if np.any(np.abs(z1 - z2) < 1e-12):
        raise CoincidenceError("kernel evaluated at coincident points; use disjoint contours")
    a = m.a
    s1, s2 = laws._stieltjes(z1, a), laws._stieltjes(z2, a)
    d1, d2 = laws._stieltjes_prime(z1, a), laws._stieltjes_prime(z2, a)
    prod = d1 * d2
    out = 2.0 * (prod / (s1 - s2) ** 2 - 1.0 / (z1 - z2) ** 2)
    out = out - 2.0 * prod / ((1.0 + a * s1) ** 2 * (1.0 + a * s2) ** 2)
    return complex(out) if out.ndim == 0 else out


# ------------------------------------------------------------------ contours


def contour_nodes(spec: ContourSpec, model=None):
    """Nodes z and complex weights dz for the positively oriented rectangle."""
    if model is not None:
        m = model if isinstance(model, SpectralModel) else SpectralModel(model)
        if not spec.encloses(m):
            raise GeometryError("contour does not enclose the support of the law")
    t, w = np.polynomial.legendre.leggauss(spec.nodes_per_edge)
    x0, x1, v = spec.left, spec.right, spec.height
    corners = [complex(x0, -v), complex(x1, -v), complex(x1, v), complex(x0, v)]
    zs, ws = [], []
    for a, b in zip(corners, corners[1:] + corners[:1]):
        half = 0.5 * (b - a)
        zs.append(0.5 * (a + b) + half * t)
        ws.append(half * w)
    return np.concatenate(zs), np.concatenate(ws)


def contour_integral(fn, spec: ContourSpec):
    """(1 / 2 pi i) times the contour integral of fn over a single pass."""
    z, dz = contour_nodes(spec)
    return complex(np.sum(_apply(fn, z) * dz) / (2j * math.pi))


def _real_part(value, what):
    if abs(value.imag) > IMAG_TOL * (1.0 + abs(value.real)):
        raise NumericError(
            f"{what} has a non-vanishing imaginary part {value.imag:.3e}; "
            "check that f is real on the real axis and the contour encloses the support"
        )
    return value.real


def _converged(prev, cur, rtol):
    return abs(cur - prev) <= rtol * max(1.0, abs(cur))


def mean_correction(f, ctx: CltContext, spec: ContourSpec | None = None) -> float:
    """(1 / 2 pi i) times the contour integral of f(z) Theta_n(z)."""
    model = ctx.model
    spec = spec or ContourSpec.around(model)
    if not spec.encloses(model):
        raise GeometryError("contour does not enclose the support of F^{c_N}")
    a = model.a

    def integrand(z):
        return _apply(f, z) * _theta(z, a)

    prev = contour_integral(integrand, spec)
    nodes = spec.nodes_per_edge
    for _ in range(MAX_DOUBLINGS):
        nodes *= 2
        cur = contour_integral(integrand, spec.with_nodes(nodes))
        if _converged(prev, cur, CORRECTION_RTOL):
            return _real_part(cur, "mean correction")
        prev = cur
    raise NumericError("mean correction did not converge under node doubling")


def _double_integral(f, g, model, spec1, spec2, chunk=2048):
    z1, w1 = contour_nodes(spec1)
    z2, w2 = contour_nodes(spec2)
    a1 = _apply(f, z1) * w1
    a2 = _apply(g, z2) * w2
    total = 0j
    for i in range(0, z1.size, chunk):
        K = cov_kernel(z1[i : i + chunk, None], z2[None, :], model)
        total += a1[i : i + chunk] @ K @ a2
    return -total / (4 * math.pi**2)


def lss_variance(f, g, model, spec1: ContourSpec | None = None, spec2: ContourSpec | None = None) -> float:
    """Limiting covariance Cov(X_f, X_g) under the law ``model``."""
    m = model if isinstance(model, SpectralModel) else SpectralModel(model)
    spec1 = spec1 or ContourSpec.around(m, margin=0.5, height=1.0)
    spec2 = spec2 or ContourSpec.around(m, margin=0.8, height=1.5)
    if not (spec1.encloses(m) and spec2.encloses(m)):
        raise GeometryError("both contours must enclose the support")
    if not (spec1.strictly_inside(spec2) or spec2.strictly_inside(spec1)):
        raise GeometryError("contours intersect; nest one strictly inside the other")
    prev = _double_integral(f, g, m, spec1, spec2)
    n1, n2 = spec1.nodes_per_edge, spec2.nodes_per_edge
    for _ in range(MAX_DOUBLINGS):
        n1, n2 = 2 * n1, 2 * n2
        cur = _double_integral(f, g, m, spec1.with_nodes(n1), spec2.with_nodes(n2))
        if _converged(prev, cur, VARIANCE_RTOL):
            return _real_part(cur, "variance")
        prev = cur
    raise NumericError("variance integral did not converge under node doubling")


def lss_center(f, ctx: CltContext) -> float:
    """n times the integral of f against F^{c_N}."""
    model = ctx.model
    degree = getattr(f, "degree", None)
    if degree is not None:
        return ctx.n * laws.lsd_moment(degree, model)
    return ctx.n * laws.lsd_expectation(lambda x: float(np.real(f(x))), model)


def variance_model(n: int, p: int) -> SpectralModel:
    """Law used for the limiting variance: c_N, or c = inf once p/n > 1e4."""
    if p / n > ULTRAHIGH_THRESHOLD:
        return SpectralModel(INFINITY)
    return SpectralModel(p / (n - 1))


def _assemble(raw_sum, centering, correction, variance):
    if not variance > 0:
        raise NumericError(f"variance must be positive, got {variance}")
    G = float(raw_sum - centering + correction)
    return LssResult(float(raw_sum), float(centering), float(correction), G, float(variance), G / math.sqrt(variance))


def compute_Gn(f, spectrum: SpectrumResult) -> LssResult:
    """G_n(f) and its standardized value from an eigenvalue spectrum."""
    ctx = CltContext(spectrum.n, spectrum.p)
    raw = float(np.sum(np.real(_apply(f, np.asarray(spectrum.eigenvalues, dtype=float)))))
    degree = getattr(f, "degree", None)
    if degree is not None:
        t = monomial_terms(degree, ctx.n, ctx.p)
        return _assemble(raw, t.centering, t.correction, t.variance)
    centering = lss_center(f, ctx)
    correction = mean_correction(f, ctx)
    variance = lss_variance(f, f, variance_model(ctx.n, ctx.p))
    return _assemble(raw, centering, correction, variance)


@dataclass(frozen=True)
class MonomialTerms:
    degree: int
    n: int
    p: int
    centering: float
    correction: float
    variance: float

    def standardize(self, trace: float) -> LssResult:
        """Assemble G_n from tr B^degree (the raw eigenvalue sum)."""
        return _assemble(trace, self.centering, self.correction, self.variance)


@lru_cache(maxsize=256)
def monomial_terms(degree: int, n: int, p: int) -> MonomialTerms:
    """Centering, mean correction and variance for f(x) = x**degree at (n, p)."""
    ctx = CltContext(n, p)
    f = Monomial(degree)
    return MonomialTerms(
        degree,
        n,
        p,
        lss_center(f, ctx),
        mean_correction(f, ctx),
        lss_variance(f, f, variance_model(n, p)),
    )
