"""Config-driven Monte Carlo experiments.

Four experiment families are supported: LSD histograms, CLT checks for the
monomial statistics, size/power of the independence test, and convergence
of the largest eigenvalue.  Every replicate draws from its own generator
seeded by ``derive_seed(master_seed, index)``, and results are gathered by
index, so output does not depend on the number of worker threads.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import jsonschema
import numpy as np
from threadpoolctl import threadpool_limits

from . import clt, laws
from .datagen import DistributionSpec, SigmaModel, derive_seed, generate
from .errors import ConfigError, ParameterError
from .indep import report_from_T, statistic_T
from .matrix_core import build_renormalized, symmetric_eigenvalues, trace_powers

__all__ = [
    "CONFIG_SCHEMA",
    "ExperimentConfig",
    "load_config",
    "resolve_threads",
    "run_experiment",
    "run_lsd_experiment",
    "run_clt_experiment",
    "run_size_power",
    "run_largest_eigenvalue",
    "ks_distance",
    "estimate_runtime",
]

log = logging.getLogger(__name__)

THREADS_ENV = "RENORMCORR_THREADS"
MONOMIALS = {"x2": 2, "x3": 3, "x4": 4}
RUNTIME_WARN_SECONDS = 600.0
# rough sustained rate for the dense products and eigensolves, flop/s
_FLOP_RATE = 5e9

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "ExperimentConfig",
    "type": "object",
    "additionalProperties": False,
    "required": ["experiment", "n"],
    "properties": {
        "experiment": {
            "enum": ["lsd_histogram", "clt_lss", "size_power", "largest_eigenvalue"]
        },
        "n": {"type": "integer", "minimum": 3},
        "p": {"type": "integer", "minimum": 2},
        "t": {"type": "number", "minimum": 1},
        "dist": {"enum": sorted(["standard_normal", "exponential", "poisson",
                                 "chi_square_2_raw", "chi_square_2_standardized"])},
        "sigma": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["identity", "ar", "equicorrelation"]},
                "param": {"type": "number"},
            },
        },
        "replicates": {"type": "integer", "minimum": 1},
        "master_seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "alpha": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
        "monomials": {
            "type": "array",
            "items": {"enum": sorted(MONOMIALS)},
            "minItems": 1,
            "uniqueItems": True,
        },
        "bins": {"type": "integer", "minimum": 10},
        "output_path": {"type": "string", "minLength": 1},
    },
    "oneOf": [{"required": ["p"]}, {"required": ["t"]}],
}


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    p: int
    n: int
    dist: DistributionSpec = DistributionSpec("standard_normal")
    sigma: SigmaModel = SigmaModel()
    replicates: int = 1
    master_seed: int = 0
    alpha: float = 0.05
    monomials: tuple = ("x2", "x3", "x4")
    bins: int | None = None
    output_path: str | None = None
    t: float | None = None

    @property
    def N(self) -> int:
        return self.n - 1

    @property
    def c_n(self) -> float:
        return self.p / self.n

    @property
    def c_N(self) -> float:
        return self.p / self.N

    def describe(self) -> dict:
        out = {
            "experiment": self.experiment,
            "n": self.n,
            "p": self.p,
            "c_n": self.c_n,
            "c_N": self.c_N,
            "dist": self.dist.kind,
            "sigma": {"kind": self.sigma.kind, "param": self.sigma.param},
            "replicates": self.replicates,
            "master_seed": self.master_seed,
        }
        if self.t is not None:
            out["t"] = self.t
        return out


def _pointer(path) -> str:
    return "/" + "/".join(str(part) for part in path)


def load_config(source) -> ExperimentConfig:
    """Validate a config given as a dict or a JSON file path."""
    if isinstance(source, (str, Path)):
        try:
            with open(source) as fh:
                raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc.msg} (line {exc.lineno})") from None
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc.strerror}") from None
    else:
        raw = dict(source)
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(raw), key=lambda e: (len(e.absolute_path), e.message))
    if errors:
        err = errors[0]
        path = _pointer(err.absolute_path)
        if err.validator == "required" and err.validator_value:
            missing = [k for k in err.validator_value if k not in (err.instance or {})]
            if missing:
                path = path.rstrip("/") + "/" + missing[0]
        if err.validator == "oneOf" and not err.absolute_path:
            both = "p" in raw and "t" in raw
            msg = "give exactly one of 'p' and 't'" if both else "'p' or 't' is required"
            raise ConfigError(msg, "/p")
        raise ConfigError(err.message, path)
    n = raw["n"]
    t = raw.get("t")
    p = raw["p"] if "p" in raw else int(round(n**t))
    sigma_raw = raw.get("sigma", {"kind": "identity"})
    try:
        sigma = SigmaModel(sigma_raw["kind"], float(sigma_raw.get("param", 0.0)))
    except ParameterError as exc:
        raise ConfigError(str(exc), "/sigma/param") from None
    return ExperimentConfig(
        experiment=raw["experiment"],
        p=p,
        n=n,
        dist=DistributionSpec(raw.get("dist", "standard_normal")),
        sigma=sigma,
        replicates=raw.get("replicates", 1),
        master_seed=raw.get("master_seed", 0),
        alpha=raw.get("alpha", 0.05),
        monomials=tuple(raw.get("monomials", ("x2", "x3", "x4"))),
        bins=raw.get("bins"),
        output_path=raw.get("output_path"),
        t=t,
    )


def resolve_threads(threads: int | None = None) -> int:
    """Worker count: explicit value, else the environment override, else 1."""
    if threads is None:
        env = os.environ.get(THREADS_ENV)
        if env:
            try:
                threads = int(env)
            except ValueError:
                raise ParameterError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
        else:
            threads = 1
    if threads < 1:
        raise ParameterError(f"thread count must be at least 1, got {threads}")
    return threads


def estimate_runtime(cfg: ExperimentConfig) -> float:
    """Crude wall-clock estimate in seconds for a single thread."""
    p, n = cfg.p, cfg.n
    per_rep = 2.0 * p * n * n + 10.0 * p * n
    if cfg.experiment in ("lsd_histogram", "largest_eigenvalue"):
        per_rep += 9.0 * n**3
    elif cfg.experiment == "clt_lss":
        per_rep += 2.0 * n**3
    return cfg.replicates * per_rep / _FLOP_RATE


def _replicate_matrix(cfg: ExperimentConfig, index: int):
    seed = derive_seed(cfg.master_seed, index)
    Y = generate(cfg.dist, cfg.sigma, cfg.p, cfg.n, seed)
    return seed, build_renormalized(Y)


def _map_replicates(cfg: ExperimentConfig, work, threads: int | None):
    threads = resolve_threads(threads)
    est = estimate_runtime(cfg)
    if est > RUNTIME_WARN_SECONDS:
        log.warning(
            "config %s at (p, n) = (%d, %d) with %d replicates: estimated %.0f s on one thread",
            cfg.experiment, cfg.p, cfg.n, cfg.replicates, est,
        )
    # one BLAS thread per task keeps every replicate's arithmetic identical
    # whatever the pool size
    with threadpool_limits(limits=1):
        if threads == 1:
            return [work(i) for i in range(cfg.replicates)]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(work, range(cfg.replicates)))


# ------------------------------------------------------------------ output


def _write_csv(path: Path, header, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def clean_json(obj):
    """Replace non-finite floats (undefined with one replicate) by None."""
    if isinstance(obj, dict):
        return {k: clean_json(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean_json(v) for v in obj]
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def _finish(cfg: ExperimentConfig, summary: dict, header, rows, output_path, extra=None):
    summary = clean_json(summary)
    out = output_path or cfg.output_path
    if out:
        base = Path(out)
        _write_csv(base / "replicates.csv", header, rows)
        for name, (h, r) in (extra or {}).items():
            _write_csv(base / name, h, r)
        files = ["replicates.csv", *(extra or {})]
        summary["files"] = [str(base / f) for f in files]
        with open(base / "summary.json", "w") as fh:
            json.dump(summary, fh, indent=2, allow_nan=False)
            fh.write("\n")
    return summary


def _mean_var(values):
    v = np.asarray(values, dtype=float)
    R = v.size
    mean = float(np.mean(v))
    var = float(np.var(v, ddof=1)) if R > 1 else float("nan")
    return {
        "mean": mean,
        "variance": var,
        "mean_se": math.sqrt(var / R) if R > 1 else float("nan"),
        "variance_se": var * math.sqrt(2.0 / (R - 1)) if R > 1 else float("nan"),
    }


# ------------------------------------------------------------- experiments


def _snap_atom(lam, model):
    """Move eigenvalues that equal the atom location up to round-off onto it."""
    if not model.has_atom:
        return lam, np.zeros(lam.shape, dtype=bool)
    loc = model.atom_location
    at = np.abs(lam - loc) <= 1e-8 * max(1.0, abs(loc))
    lam = lam.copy()
    lam[at] = loc
    return lam, at


def ks_distance(eigenvalues, model) -> float:
    """Exact sup |ESD - F| over the line.

    Both functions are right-continuous step-plus-continuous, so the supremum
    is attained as a one-sided limit at an eigenvalue or at the atom.
    """
    m = model if isinstance(model, laws.SpectralModel) else laws.SpectralModel(model)
    lam, _ = _snap_atom(np.sort(np.asarray(eigenvalues, dtype=float)), m)
    k = lam.size
    pts = np.unique(np.append(lam, m.atom_location) if m.has_atom else lam)
    F = np.asarray(laws.lsd_cdf(pts, m), dtype=float)
    jump = np.zeros_like(F)
    if m.has_atom:
        jump[pts == m.atom_location] = m.atom_weight
    F_left = F - jump
    E = np.searchsorted(lam, pts, side="right") / k
    E_left = np.searchsorted(lam, pts, side="left") / k
    return float(max(np.max(np.abs(E - F)), np.max(np.abs(E_left - F_left))))


def _fd_edges(x, bins):
    if bins is not None:
        return np.histogram_bin_edges(x, bins=bins)
    edges = np.histogram_bin_edges(x, bins="fd")
    if edges.size - 1 < 10:
        edges = np.histogram_bin_edges(x, bins=10)
    return edges


def run_lsd_experiment(cfg: ExperimentConfig, threads=None, output_path=None) -> dict:
    model = laws.SpectralModel(cfg.c_N)

    def work(i):
        seed, B = _replicate_matrix(cfg, i)
        return seed, symmetric_eigenvalues(B)

    results = _map_replicates(cfg, work, threads)
    rows, pooled = [], []
    for i, (seed, lam) in enumerate(results):
        rows.append([i, seed, ks_distance(lam, model), float(lam[0]), float(lam[-1])])
        pooled.append(lam)
    lam = np.concatenate(pooled)
    total = lam.size
    snapped, at = _snap_atom(lam, model)
    cont = snapped[~at]
    edges = _fd_edges(cont, cfg.bins)
    counts, _ = np.histogram(cont, bins=edges)
    hist_rows = [
        ["bin", float(lo), float(hi), int(cnt), cnt / total]
        for lo, hi, cnt in zip(edges[:-1], edges[1:], counts)
    ]
    atom_count = int(np.sum(at))
    if model.has_atom:
        loc = model.atom_location
        hist_rows.append(["atom", loc, loc, atom_count, atom_count / total])
    L, R = model.support_left, model.support_right
    grid = np.linspace(L - 0.4, R + 0.4, 401)
    dens_rows = [[float(x), float(d)] for x, d in zip(grid, laws.lsd_density(grid, model))]
    ks = ks_distance(lam, model)
    summary = cfg.describe()
    summary.update(
        ks=ks,
        ks_per_replicate_max=max(r[2] for r in rows),
        bins=int(counts.size),
        atom_location=model.atom_location,
        atom_mass_theory=model.atom_weight,
        atom_mass_empirical=atom_count / total,
    )
    return _finish(
        cfg,
        summary,
        ["replicate", "seed", "ks", "lambda_max", "lambda_min"],
        rows,
        output_path,
        {
            "histogram.csv": (["kind", "left", "right", "count", "mass"], hist_rows),
            "density.csv": (["x", "density"], dens_rows),
        },
    )


def run_clt_experiment(cfg: ExperimentConfig, threads=None, output_path=None) -> dict:
    degrees = [MONOMIALS[m] for m in cfg.monomials]
    terms = {k: clt.monomial_terms(k, cfg.n, cfg.p) for k in degrees}
    kmax = max(degrees)

    def work(i):
        seed, B = _replicate_matrix(cfg, i)
        traces = trace_powers(B, kmax)
        return seed, [terms[k].standardize(traces[k - 1]) for k in degrees]

    results = _map_replicates(cfg, work, threads)
    header = ["replicate", "seed"]
    for m in cfg.monomials:
        header += [f"G_{m}", f"Gbar_{m}"]
    rows = []
    for i, (seed, res) in enumerate(results):
        row = [i, seed]
        for r in res:
            row += [r.G_n, r.standardized]
        rows.append(row)
    summary = cfg.describe()
    summary["monomials"] = {}
    for j, (m, k) in enumerate(zip(cfg.monomials, degrees)):
        t = terms[k]
        stats = _mean_var([res[j].standardized for _, res in results])
        stats.update(centering=t.centering, correction=t.correction, limit_variance=t.variance)
        summary["monomials"][m] = stats
    return _finish(cfg, summary, header, rows, output_path)


def run_size_power(cfg: ExperimentConfig, threads=None, output_path=None) -> dict:
    def work(i):
        seed, B = _replicate_matrix(cfg, i)
        return report_from_T(statistic_T(B), cfg.n, cfg.p, cfg.alpha, seed)

    reports = _map_replicates(cfg, work, threads)
    rows = [[i, r.seed, r.T, r.score, r.p_value, int(r.reject)] for i, r in enumerate(reports)]
    R = len(reports)
    rate = sum(r.reject for r in reports) / R
    summary = cfg.describe()
    summary.update(
        alpha=cfg.alpha,
        rejections=int(sum(r.reject for r in reports)),
        rejection_rate=rate,
        rejection_se=math.sqrt(rate * (1 - rate) / R),
    )
    return _finish(cfg, summary, ["replicate", "seed", "T", "score", "p_value", "reject"], rows, output_path)


def run_largest_eigenvalue(cfg: ExperimentConfig, threads=None, output_path=None) -> dict:
    limit = 2.0 + 1.0 / math.sqrt(cfg.c_N)

    def work(i):
        seed, B = _replicate_matrix(cfg, i)
        lam = symmetric_eigenvalues(B)
        return seed, float(lam[0]), float(lam[1])

    results = _map_replicates(cfg, work, threads)
    rows = [[i, seed, l1, l2, l1 - limit] for i, (seed, l1, l2) in enumerate(results)]
    dev = np.array([r[4] for r in rows])
    summary = cfg.describe()
    summary.update(
        limit=limit,
        mean_lambda1=float(np.mean([r[2] for r in rows])),
        mean_deviation=float(np.mean(dev)),
        mean_abs_deviation=float(np.mean(np.abs(dev))),
    )
    return _finish(cfg, summary, ["replicate", "seed", "lambda_1", "lambda_2", "deviation"], rows, output_path)


_RUNNERS = {
    "lsd_histogram": run_lsd_experiment,
    "clt_lss": run_clt_experiment,
    "size_power": run_size_power,
    "largest_eigenvalue": run_largest_eigenvalue,
}


def run_experiment(cfg, threads=None, output_path=None) -> dict:
    if not isinstance(cfg, ExperimentConfig):
        cfg = load_config(cfg)
    return _RUNNERS[cfg.experiment](cfg, threads=threads, output_path=output_path)
