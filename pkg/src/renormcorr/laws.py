"""Limiting spectral laws of the renormalized correlation matrix.

The family F^c, c in (0, inf], has density

    f^c(x) = sqrt((R - x)(x - L)) / (2 pi (1 + a x)),   a = c^{-1/2},

on [L, R] = [a - 2, a + 2], plus an atom of mass 1 - c at -sqrt(c) when
c <= 1.  At c = inf it is the semicircle law on [-2, 2].
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from math import comb

import numpy as np
from scipy import integrate

from .errors import DomainError, NumericError, ParameterError, SingularityError

__all__ = [
    "INFINITY",
    "SpectralModel",
    "lsd_density",
    "lsd_cdf",
    "lsd_moment",
    "lsd_expectation",
    "stieltjes",
    "stieltjes_derivative",
    "mp_density",
    "mp_stieltjes",
    "parse_ratio",
]

INFINITY = math.inf

MAX_MOMENT = 30


@dataclass(frozen=True)
class SpectralModel:
    """The law F^c.  ``c`` is a positive float or :data:`INFINITY`."""

    c: float

    def __post_init__(self):
        c = float(self.c)
        if not c > 0 or math.isnan(c):
            raise ParameterError(f"aspect ratio must be positive, got {self.c!r}")
        object.__setattr__(self, "c", c)

    @property
    def is_semicircle(self) -> bool:
        return math.isinf(self.c)

    @property
    def a(self) -> float:
        """c^{-1/2}, exactly zero for the semicircle."""
        return 0.0 if self.is_semicircle else self.c**-0.5

    @property
    def support_left(self) -> float:
        return self.a - 2.0

    @property
    def support_right(self) -> float:
        return self.a + 2.0

    @property
    def has_atom(self) -> bool:
        return self.c <= 1.0

    @property
    def atom_location(self):
        return -math.sqrt(self.c) if self.has_atom else None

    @property
    def atom_weight(self) -> float:
        return 1.0 - self.c if self.has_atom else 0.0

    @property
    def hull_left(self) -> float:
        """Left end of the smallest interval holding the support and the atom."""
        if self.has_atom:
            return min(self.support_left, self.atom_location)
        return self.support_left

    # thin conveniences over the module functions
    def density(self, x):
        return lsd_density(x, self)

    def cdf(self, x):
        return lsd_cdf(x, self)

    def moment(self, k):
        return lsd_moment(k, self)

    def stieltjes(self, z):
        return stieltjes(z, self)


def _model(model) -> SpectralModel:
    return model if isinstance(model, SpectralModel) else SpectralModel(model)


def parse_ratio(text: str) -> float:
    """Parse an aspect ratio given on the command line or in a config."""
    if str(text).strip().lower() in {"inf", "infinity"}:
        return INFINITY
    try:
        c = float(text)
    except ValueError:
        raise ParameterError(f"aspect ratio must be a positive number or 'inf', got {text!r}") from None
    if not c > 0:
        raise ParameterError(f"aspect ratio must be positive, got {text!r}")
    return c


def lsd_density(x, model):
    """Density of F^c (atom excluded).  Vectorized over ``x``."""
    m = _model(model)
    x = np.asarray(x, dtype=float)
    L, R, a = m.support_left, m.support_right, m.a
    inside = (x > L) & (x < R)
    xi = np.where(inside, x, m.a)
    with np.errstate(divide="ignore", invalid="ignore"):
        val = np.sqrt(np.maximum((R - xi) * (xi - L), 0.0)) / (2 * np.pi * (1 + a * xi))
    out = np.where(inside, val, 0.0)
    return float(out) if out.ndim == 0 else out


def _edge_pieces(m: SpectralModel, lo: float, hi: float):
    """Integrands for the density on [lo, hi] after x = L + u^2 / x = R - u^2.

    Each piece is (integrand in u, u0, u1, map u -> x).
    """
    L, R, a = m.support_left, m.support_right, m.a
    mid = 0.5 * (L + R)

    def left(u):
        # x = L + u^2, so sqrt(x - L) = u and 1 + a x = (1 - a)^2 + a u^2
        x = L + u * u
        return 2 * u * u * math.sqrt(max(R - x, 0.0)) / (2 * math.pi * ((1 - a) ** 2 + a * u * u))

    def right(u):
        x = R - u * u
        return 2 * u * u * math.sqrt(max(x - L, 0.0)) / (2 * math.pi * (1 + a * x))

    pieces = []
    a1, b1 = max(lo, L), min(hi, mid)
    if b1 > a1:
        pieces.append((left, math.sqrt(a1 - L), math.sqrt(b1 - L), lambda u: L + u * u))
    a2, b2 = max(lo, mid), min(hi, R)
    if b2 > a2:
        pieces.append((right, math.sqrt(R - b2), math.sqrt(R - a2), lambda u: R - u * u))
    return pieces


def _density_integral(m: SpectralModel, lo: float, hi: float) -> float:
    total = 0.0
    for fn, u0, u1, _ in _edge_pieces(m, lo, hi):
        val, err = integrate.quad(fn, u0, u1, epsabs=1e-13, epsrel=1e-12, limit=200)
        if not math.isfinite(val) or err > 1e-9:
            raise NumericError(f"CDF quadrature did not converge (error estimate {err:.2e})")
        total += val
    return total


def lsd_cdf(x, model):
    """Distribution function of F^c, atom included.  Vectorized over ``x``."""
    m = _model(model)
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    order = np.argsort(xs)
    out = np.empty_like(xs)
    L, R = m.support_left, m.support_right
    # accumulate over sorted points so each quad call covers a short interval
    acc, prev = 0.0, L
    for idx in order:
        xi = xs[idx]
        if xi > prev and prev < R:
            hi = min(xi, R)
            acc += _density_integral(m, prev, hi)
            prev = hi
        val = acc
        if m.has_atom and xi >= m.atom_location:
            val += m.atom_weight
        out[idx] = min(max(val, 0.0), 1.0)
    if xs.size and np.any(xs >= R):
        out[xs >= R] = 1.0
    return float(out[0]) if np.ndim(x) == 0 else out


def lsd_expectation(fn, model) -> float:
    """Integral of a real scalar function against F^c, atom included."""
    m = _model(model)
    L, R = m.support_left, m.support_right
    total = 0.0
    for piece, u0, u1, to_x in _edge_pieces(m, L, R):
        g = lambda u, piece=piece, to_x=to_x: fn(to_x(u)) * piece(u)
        val, err = integrate.quad(g, u0, u1, epsabs=1e-12, epsrel=1e-11, limit=200)
        if not math.isfinite(val) or err > 1e-8 * max(1.0, abs(val)):
            raise NumericError(f"quadrature did not converge (error estimate {err:.2e})")
        total += val
    if m.has_atom and m.atom_weight > 0:
        total += m.atom_weight * fn(m.atom_location)
    return total


def _beta(j: int, c: Fraction) -> Fraction:
    if j == 0:
        return Fraction(1)
    return sum(Fraction(comb(j, r) * comb(j - 1, r), r + 1) * c**r for r in range(j))


def lsd_moment(k: int, model) -> float:
    """k-th moment of F^c, atom included.

    Finite c uses the closed form in beta_j evaluated in exact rational
    arithmetic; the half-integer power of c left over for odd k is applied
    last.  c = inf gives the Catalan numbers.
    """
    m = _model(model)
    if not isinstance(k, (int, np.integer)) or k < 0:
        raise ParameterError(f"moment order must be a nonnegative integer, got {k!r}")
    if k > MAX_MOMENT:
        raise ParameterError(f"moment order {k} exceeds the supported maximum {MAX_MOMENT}")
    k = int(k)
    if k == 0:
        return 1.0
    if m.is_semicircle:
        return 0.0 if k % 2 else comb(k, k // 2) / (k // 2 + 1)
    c = Fraction(m.c)
    # every term carries c^{-k/2} times an integer power of c; for odd k
    # write c^{-k/2} = c^{-(k-1)/2} * c^{-1/2}
    half = k // 2
    total = Fraction(0)
    for s in range(k + 1):
        total += (-1) ** s * comb(k, s) * c ** (s + 1 - half) * _beta(k - s, c)
    # (1 - c)(-sqrt c)^k; for odd k this is -(1 - c) c^{half + 1} c^{-1/2}
    total += -(1 - c) * c ** (half + 1) if k % 2 else (1 - c) * c**half
    value = float(total)
    if k % 2:
        value *= m.c**-0.5
    return value


def _branch(z, L, R):
    """sqrt((z - R)(z - L)) on the branch that behaves like z at infinity."""
    return np.sqrt(z - R + 0j) * np.sqrt(z - L + 0j)


def _stieltjes(z, a):
    """Stieltjes transform for any z off the support (no domain check).

    Rationalizing the usual quadratic-root form gives -2 / (z + a + r), which
    has no removable 0/0 at z = -1/a and stays accurate as a -> 0.
    """
    z = np.asarray(z, dtype=complex)
    r = _branch(z, a - 2.0, a + 2.0)
    return -2.0 / (z + a + r)


def _stieltjes_prime(z, a):
    z = np.asarray(z, dtype=complex)
    r = _branch(z, a - 2.0, a + 2.0)
    return 2.0 * (1.0 + (z - a) / r) / (z + a + r) ** 2


def _scalar(out, z):
    return complex(out) if np.ndim(z) == 0 else out


def stieltjes(z, model):
    """s_c(z) for Im z > 0."""
    m = _model(model)
    zz = np.asarray(z, dtype=complex)
    if np.any(zz.imag <= 0):
        raise DomainError("Stieltjes transform needs Im z > 0")
    return _scalar(_stieltjes(zz, m.a), z)


def _on_support(zz, m: SpectralModel):
    near_real = np.abs(zz.imag) <= 1e-14 * np.maximum(1.0, np.abs(zz.real))
    bad = near_real & (zz.real >= m.support_left) & (zz.real <= m.support_right)
    if m.has_atom and m.c < 1.0:
        bad |= np.abs(zz - m.atom_location) <= 1e-12
    return bad


def stieltjes_derivative(z, model):
    """d s_c / dz for z in the upper half-plane or real and off the support."""
    m = _model(model)
    zz = np.asarray(z, dtype=complex)
    if np.any(_on_support(zz, m)):
        raise SingularityError("derivative of the Stieltjes transform is singular on the support")
    return _scalar(_stieltjes_prime(zz, m.a), z)


def mp_density(x, c: float):
    """Marchenko-Pastur density with ratio c (atom at 0 excluded)."""
    if not c > 0 or math.isinf(c):
        raise ParameterError(f"MP ratio must be finite and positive, got {c!r}")
    x = np.asarray(x, dtype=float)
    lo, hi = (1 - math.sqrt(c)) ** 2, (1 + math.sqrt(c)) ** 2
    inside = (x > lo) & (x < hi)
    xi = np.where(inside, x, 0.5 * (lo + hi))
    val = np.sqrt((hi - xi) * (xi - lo)) / (2 * np.pi * xi * c)
    out = np.where(inside, val, 0.0)
    return float(out) if out.ndim == 0 else out


def mp_stieltjes(z, c: float):
    """Stieltjes transform of the MP law, atom at 0 (c > 1) included."""
    if not c > 0 or math.isinf(c):
        raise ParameterError(f"MP ratio must be finite and positive, got {c!r}")
    zz = np.asarray(z, dtype=complex)
    if np.any(zz.imag <= 0):
        raise DomainError("Stieltjes transform needs Im z > 0")
    lo, hi = (1 - math.sqrt(c)) ** 2, (1 + math.sqrt(c)) ** 2
    r = _branch(zz, lo, hi)
    out = (c - 1 - zz + r) / (2 * c * zz) + (1 - c) / (c * zz)
    return _scalar(out, z)
