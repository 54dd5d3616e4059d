"""Acceptance criteria, one test per criterion.

A PASS/FAIL line per criterion is printed in the terminal summary.  The
Monte Carlo criteria (4 to 7) take a few minutes in total on one core.
Run alone with ``pytest tests/test_acceptance.py``.
"""

import math

import numpy as np
import pytest
from scipy import integrate

from renormcorr import clt, harness, laws
from renormcorr.clt import CltContext, ContourSpec, Monomial
from renormcorr.laws import INFINITY, SpectralModel
from renormcorr.matrix_core import build_renormalized, sample_correlation, spectrum

pytestmark = pytest.mark.acceptance


def detail(request, text):
    request.node.user_properties.append(("detail", text))


# 1 -------------------------------------------------------------------------


@pytest.mark.criterion(1, "closed-form limiting variances for x^2, x^3, x^4")
def test_criterion_1_variances(request):
    worst = 0.0
    for c in [0.5, 2.0, 50.0, INFINITY]:
        inv = 0.0 if math.isinf(c) else 1.0 / c
        ref = {2: 4.0, 3: 6 + 36 * inv, 4: 72 + 288 * inv + 144 * inv**2}
        for k, v in ref.items():
            got = clt.lss_variance(Monomial(k), Monomial(k), c)
            worst = max(worst, abs(got / v - 1))
    detail(request, f"max relative error {worst:.1e}")
    assert worst <= 1e-4


# 2 -------------------------------------------------------------------------


@pytest.mark.criterion(2, "mean-correction identities at (n, p) = (500, 1000)")
def test_criterion_2_mean_corrections(request):
    ctx = CltContext(500, 1000)
    cN = ctx.c_N
    got = [clt.mean_correction(Monomial(k), ctx) for k in (2, 3, 4)]
    ref = [2.0, 4 / math.sqrt(cN), 5 + 7 / cN]
    tol = [0.05, 0.05, 0.2]
    detail(request, ", ".join(f"x{k}: {g:.6f} vs {r:.6f}" for k, g, r in zip((2, 3, 4), got, ref)))
    for g, r, t in zip(got, ref, tol):
        assert abs(g - r) <= t


# 3 -------------------------------------------------------------------------


@pytest.mark.criterion(3, "ultrahigh consistency of the mean integrand, p = 1e8 n")
def test_criterion_3_ultrahigh(request):
    n = 200
    ctx = CltContext(n, 10**8 * n)
    spec = ContourSpec.around(SpectralModel(INFINITY), nodes_per_edge=25)
    z, _ = clt.contour_nodes(spec)
    assert z.size == 100
    diff = np.abs(clt.theta_correction(z, ctx) - (clt.mean_function_ultra(z) - 1 / z))
    detail(request, f"max deviation {diff.max():.1e}")
    assert diff.max() <= 1e-3


# 4 -------------------------------------------------------------------------

TABLE2 = [
    # label, dist, sigma, target, tolerance
    ("Gaussian size", "standard_normal", {"kind": "identity"}, 0.044, 0.015),
    ("theta=0.20", "standard_normal", {"kind": "ar", "param": 0.20}, 0.608, 0.05),
    ("theta=0.25", "standard_normal", {"kind": "ar", "param": 0.25}, 0.902, 0.05),
    ("eta=0.007", "standard_normal", {"kind": "equicorrelation", "param": 0.007}, 0.769, 0.05),
    ("eta=0.011", "standard_normal", {"kind": "equicorrelation", "param": 0.011}, 0.988, 0.03),
    ("non-Gaussian size", "chi_square_2_standardized", {"kind": "identity"}, 0.06, 0.02),
]


@pytest.mark.criterion(4, "size and power at (p, n) = (2500, 50), 5000 replicates")
def test_criterion_4_size_power(request):
    rates = {}
    for j, (label, dist, sigma, _, _) in enumerate(TABLE2):
        cfg = {"experiment": "size_power", "p": 2500, "n": 50, "replicates": 5000,
               "alpha": 0.05, "dist": dist, "sigma": sigma, "master_seed": 4000 + j}
        rates[label] = harness.run_experiment(cfg)["rejection_rate"]
    detail(request, ", ".join(f"{k} {v:.4f}" for k, v in rates.items()))
    for label, _, _, target, tol in TABLE2:
        assert abs(rates[label] - target) <= tol, label


# 5 -------------------------------------------------------------------------


@pytest.mark.criterion(5, "standardized CLT statistics at (p, n) = (400, 200), 2000 replicates")
def test_criterion_5_clt_table(request):
    notes = []
    ok = True
    for j, dist in enumerate(["standard_normal", "chi_square_2_raw"]):
        cfg = {"experiment": "clt_lss", "p": 400, "n": 200, "replicates": 2000,
               "dist": dist, "master_seed": 5000 + j}
        s = harness.run_experiment(cfg)
        for m, st in s["monomials"].items():
            notes.append(f"{dist[:6]} {m} {st['mean']:+.3f}/{st['variance']:.3f}")
            ok &= abs(st["mean"]) <= 0.15 and 0.8 <= st["variance"] <= 1.2
    detail(request, "; ".join(notes))
    assert ok


# 6 -------------------------------------------------------------------------


@pytest.mark.criterion(6, "Kolmogorov-Smirnov distance to the finite-sample limit law")
def test_criterion_6_lsd(request):
    cases = [(2000, 1000, 0.06), (40000, 200, 0.08)]
    notes, ok = [], True
    for j, (p, n, tol) in enumerate(cases):
        for k, dist in enumerate(["standard_normal", "poisson"]):
            cfg = {"experiment": "lsd_histogram", "p": p, "n": n, "replicates": 1,
                   "dist": dist, "master_seed": 6000 + 10 * j + k}
            ks = harness.run_experiment(cfg)["ks"]
            notes.append(f"({p},{n}) {dist} {ks:.4f}")
            ok &= ks <= tol
    detail(request, "; ".join(notes))
    assert ok


# 7 -------------------------------------------------------------------------


@pytest.mark.criterion(7, "largest eigenvalue near 2 + 1/sqrt(c_N)")
def test_criterion_7_largest(request):
    cases = [(40000, 200, 0.1), (800, 400, 0.15)]
    notes, ok = [], True
    for j, (p, n, tol) in enumerate(cases):
        cfg = {"experiment": "largest_eigenvalue", "p": p, "n": n, "replicates": 10, "master_seed": 7000 + j}
        dev = harness.run_experiment(cfg)["mean_abs_deviation"]
        notes.append(f"({p},{n}) {dev:.4f}")
        ok &= dev <= tol
    detail(request, "; ".join(notes))
    assert ok


# 8 -------------------------------------------------------------------------


def _density_quad(fn, c):
    m = SpectralModel(c)
    L, R, a = m.support_left, m.support_right, m.a
    if c == 1.0:
        g, w = (lambda x: fn(x) / (2 * math.pi)), (-0.5, 0.5)
    else:
        g, w = (lambda x: fn(x) / (2 * math.pi * (1 + a * x))), (0.5, 0.5)
    return integrate.quad(g, L, R, weight="alg", wvar=w, epsabs=1e-13, epsrel=1e-13, limit=400)[0]


def _moments_vs_quadrature():
    worst = 0.0
    for c in [0.25, 0.5, 1.0, 2.0, 100.0, INFINITY]:
        m = SpectralModel(c)
        for k in range(9):
            ref = _density_quad(lambda x: x**k, c)
            if m.has_atom:
                ref += m.atom_weight * m.atom_location**k
            worst = max(worst, abs(laws.lsd_moment(k, m) - ref))
    return worst <= 1e-9


def _stieltjes_checks():
    rng = np.random.default_rng(0)
    z = rng.uniform(-4, 4, 500) + 1j * rng.uniform(1e-3, 3, 500)
    ok = True
    for c in [0.25, 0.5, 1.0, 2.0, 100.0, INFINITY]:
        a = SpectralModel(c).a
        s = laws.stieltjes(z, c)
        ok &= np.max(np.abs((1 + a * z) * s**2 + (z + a) * s + 1)) <= 1e-8
        m = SpectralModel(c)
        xs = np.linspace(m.support_left, m.support_right, 13)[1:-1]
        inv = laws.stieltjes(xs + 1e-6j, c).imag / math.pi
        ok &= np.max(np.abs(inv - laws.lsd_density(xs, c))) <= 1e-4
        for zz in [1 + 1j, -0.7 + 0.2j, 5.0 + 0j]:
            h = 1e-6
            fd = (laws._stieltjes(zz + h, a) - laws._stieltjes(zz - h, a)) / (2 * h)
            d = laws.stieltjes_derivative(zz, c)
            ok &= abs(d - fd) <= 1e-6 * max(1.0, abs(d))
    return bool(ok)


def _mp_transport():
    ok = True
    for c in [0.5, 1.0, 2.0, 10.0]:
        m = SpectralModel(c)
        xs = np.linspace(m.support_left, m.support_right, 41)[1:-1]
        lhs = laws.lsd_density(xs, c)
        rhs = c**1.5 * laws.mp_density(c + math.sqrt(c) * xs, c)
        ok &= np.max(np.abs(lhs - rhs) / np.maximum(np.abs(rhs), 1e-300)) <= 1e-10
    return bool(ok)


def _spectrum_correspondence():
    for p in range(2, 13):
        for n in range(3, 13):
            Y = np.random.default_rng(100 * p + n).standard_normal((p, n))
            N = n - 1
            lamR = np.sort(np.linalg.eigvalsh(sample_correlation(Y)))[::-1]
            if p >= N:
                mapped = list(math.sqrt(N / p) * lamR[:N] - math.sqrt(p / N))
            else:
                mapped = list(math.sqrt(N / p) * lamR - math.sqrt(p / N)) + [-math.sqrt(p / N)] * (N - p)
            ref = np.sort(mapped + [0.0])
            if np.max(np.abs(np.sort(spectrum(Y).eigenvalues) - ref)) > 1e-8:
                return False
    return True


def _frobenius_identity():
    for p, n in [(5, 30), (20, 10), (50, 40)]:
        Y = np.random.default_rng(p * n).standard_normal((p, n))
        N = n - 1
        B = build_renormalized(Y)
        R = sample_correlation(Y)
        lhs = np.sum((R - np.eye(p)) ** 2)
        rhs = (p / N) * (np.sum(B * B) + p) - p
        if abs(rhs - lhs) > 1e-6 * abs(lhs):
            return False
    return True


def _contour_invariance():
    ok = True
    for n, p in [(500, 1000), (300, 100)]:
        ctx = CltContext(n, p)
        base = ContourSpec.around(ctx.model)
        wide = ContourSpec.around(ctx.model, margin=0.75, height=1.5)
        for f in [Monomial(4), np.exp]:
            a, b = clt.mean_correction(f, ctx, base), clt.mean_correction(f, ctx, wide)
            ok &= abs(a - b) <= 1e-6 * max(1.0, abs(a))
    m = SpectralModel(2.0)
    v0 = clt.lss_variance(np.exp, np.exp, m)
    v1 = clt.lss_variance(np.exp, np.exp, m, ContourSpec.around(m, margin=0.75, height=1.5),
                          ContourSpec.around(m, margin=1.2, height=2.25))
    ok &= abs(v1 / v0 - 1) <= 1e-6
    return bool(ok)


def _harness_determinism(tmp_path):
    for experiment in ["lsd_histogram", "clt_lss", "size_power", "largest_eigenvalue"]:
        cfg = {"experiment": experiment, "p": 150, "n": 30, "replicates": 8, "master_seed": 8}
        outs = []
        for threads in (1, 4):
            d = tmp_path / f"{experiment}-{threads}"
            harness.run_experiment(cfg, threads=threads, output_path=d)
            outs.append((d / "replicates.csv").read_bytes())
        if outs[0] != outs[1]:
            return False
    return True


@pytest.mark.criterion(8, "property suites (moments, transforms, spectra, contours, determinism)")
def test_criterion_8_properties(request, tmp_path):
    checks = {
        "moments": _moments_vs_quadrature(),
        "stieltjes": _stieltjes_checks(),
        "mp-transport": _mp_transport(),
        "spectrum-correspondence": _spectrum_correspondence(),
        "frobenius": _frobenius_identity(),
        "contour-invariance": _contour_invariance(),
        "determinism": _harness_determinism(tmp_path),
    }
    failed = [k for k, v in checks.items() if not v]
    detail(request, "all sub-suites pass" if not failed else "failed: " + ", ".join(failed))
    assert not failed
