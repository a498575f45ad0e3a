"""Monte Carlo experiment runner and empirical diagnostics.

One experiment sweeps a (level, budget) grid: per replica it draws the two
Poisson samples, evaluates the normalized statistic, and per grid row
aggregates empirical moments, the exact empirical-vs-Gaussian Wasserstein
and Kolmogorov-Smirnov distances, the assembled contraction-norm bound, the
constant-free rate envelope, and the two-sided test rejection rate.  Rows
are keyed by deterministic replica streams, so a config plus seed fixes the
CSV and JSON outputs byte for byte (wall-clock timings go to the logger
only, never into the artifacts).

The distance to the standard Gaussian is the exact one-dimensional dual
formula d_W = int |F_n - Phi|, integrated in closed form between order
statistics (antiderivative x Phi(x) + phi(x), split at CDF crossings), not
a sample-vs-sample coupling.
"""

from __future__ import annotations

import csv
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import __version__
from ._accel import active_path
from .bounds import make_bound_report
from .errors import InsufficientPoints, TooFewSamples
from .frame import NeedletFrame, build_frame, build_window
from .harmonics import HarmonicDensity, make_density
from .pointprocess import PointSample, sample_pair
from .ustat import analytic_variance, compute_U, normalize

log = logging.getLogger(__name__)

REPORT_COLUMNS = (
    "q",
    "B",
    "j",
    "budget",
    "replicas",
    "mean_norm",
    "var_norm",
    "wasserstein_emp",
    "ks_emp",
    "variance_analytic",
    "prop_bound",
    "prop_term_star11",
    "prop_term_star21",
    "prop_term_l4",
    "envelope",
    "env_term1",
    "env_term2",
    "env_term3",
    "rejection_rate",
    "power",
)


def empirical_wasserstein(samples) -> float:
    """Exact integral of |F_n - Phi| for a 1-d sample against N(0, 1)."""
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    n = x.size
    if n < 2:
        raise TooFewSamples(f"need >= 2 samples, got {n}")

    def anti(t):
        # antiderivative of Phi, zero at -infinity
        return t * stats.norm.cdf(t) + stats.norm.pdf(t)

    total = float(anti(x[0]))  # left tail: integral of Phi
    total += float(stats.norm.pdf(x[-1]) - x[-1] * stats.norm.sf(x[-1]))  # right tail

    lo, hi = x[:-1], x[1:]
    c = np.arange(1, n) / n
    z = stats.norm.ppf(c)
    a_lo, a_hi, a_z = anti(lo), anti(hi), anti(z)
    below = a_hi - a_lo - c * (hi - lo)  # integral of (Phi - c)
    above = -below
    split = (c * (z - lo) - (a_z - a_lo)) + (a_hi - a_z - c * (hi - z))
    seg = np.where(z <= lo, below, np.where(z >= hi, above, split))
    return total + float(seg.sum())


def ks_distance(samples) -> float:
    """Kolmogorov-Smirnov statistic against N(0, 1)."""
    x = np.asarray(samples, dtype=float).ravel()
    if x.size < 2:
        raise TooFewSamples(f"need >= 2 samples, got {x.size}")
    return float(stats.kstest(x, "norm").statistic)


@dataclass(frozen=True)
class ExperimentConfig:
    q: int = 1
    B: float = 2.0
    j_values: tuple[int, ...] = (3,)
    budgets: tuple[float, ...] = (2000.0,)
    alpha: float = 2.0
    condition: str = "cond1"
    c: float | None = None
    replicas: int = 2000
    base_seed: int = 0
    level: float = 0.05
    alpha2: float | None = None  # optional alternative, for power runs
    c2: float | None = None
    bandlimit: int | None = None
    workers: int = 1
    out: str | None = None
    plots: bool = False

    def __post_init__(self):
        if self.replicas < 100:
            raise ValueError("replicas must be >= 100")
        if not 0.0 < self.level < 1.0:
            raise ValueError("level must be in (0, 1)")

    @property
    def has_alternative(self) -> bool:
        return self.alpha2 is not None or self.c2 is not None


_CONFIG_KEYS = {
    "q": int,
    "B": float,
    "alpha": float,
    "condition": str,
    "c": float,
    "replicas": int,
    "base_seed": int,
    "level": float,
    "alpha2": float,
    "c2": float,
    "bandlimit": int,
    "workers": int,
    "out": str,
    "plots": lambda s: s.strip().lower() in ("1", "true", "yes"),
}


def load_config(path) -> ExperimentConfig:
    """Parse a flat key=value file ('#' starts a comment; lists comma-split)."""
    values: dict = {}
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"malformed config line: {raw!r}")
            key, val = (part.strip() for part in line.split("=", 1))
            if key == "j":
                values["j_values"] = tuple(int(v) for v in val.split(","))
            elif key in ("R_t", "budget", "budgets"):
                values["budgets"] = tuple(float(v) for v in val.split(","))
            elif key in _CONFIG_KEYS:
                values[key] = _CONFIG_KEYS[key](val)
            else:
                raise ValueError(f"unknown config key {key!r}")
    return ExperimentConfig(**values)


def required_bandlimit(B: float, j_max: int) -> int:
    """Per-coordinate bandlimit covering all contraction lookups at j_max."""
    return 4 * int(np.floor(B ** (j_max + 1) + 1e-9))


def _replica_batch(args) -> np.ndarray:
    """Normalized statistics for a contiguous block of replica indices."""
    f1, f2, frame, budget, scale, base_seed, lo, hi = args
    out = np.empty(hi - lo)
    for r in range(lo, hi):
        s1, s2 = sample_pair(f1, f2, budget, base_seed, replica=r)
        out[r - lo] = compute_U(frame, s1, s2) * scale
    return out


def simulate_normalized(
    f1: HarmonicDensity,
    f2: HarmonicDensity,
    frame: NeedletFrame,
    budget: float,
    replicas: int,
    base_seed: int,
    workers: int = 1,
    replica_offset: int = 0,
    variance: float | None = None,
) -> np.ndarray:
    """Monte Carlo draws of the normalized statistic, replica-ordered."""
    if variance is None:
        variance = analytic_variance(frame, f1, budget)
    scale = 1.0 / np.sqrt(variance)
    lo, hi = replica_offset, replica_offset + replicas
    if workers <= 1:
        return _replica_batch((f1, f2, frame, budget, scale, base_seed, lo, hi))
    bounds_ = np.linspace(lo, hi, workers + 1).astype(int)
    jobs = [
        (f1, f2, frame, budget, scale, base_seed, int(a), int(b))
        for a, b in zip(bounds_[:-1], bounds_[1:])
        if b > a
    ]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        chunks = list(pool.map(_replica_batch, jobs))
    return np.concatenate(chunks)


def run_experiment(cfg: ExperimentConfig) -> "ExperimentReport":
    """Sweep the (j, budget) grid; deterministic given cfg and base_seed."""
    window = build_window(cfg.B)
    bandlimit = cfg.bandlimit or required_bandlimit(cfg.B, max(cfg.j_values))
    f1 = make_density(cfg.q, cfg.alpha, bandlimit, condition=cfg.condition, c=cfg.c)
    f2 = None
    if cfg.has_alternative:
        f2 = make_density(
            cfg.q,
            cfg.alpha2 if cfg.alpha2 is not None else cfg.alpha,
            bandlimit,
            condition=cfg.condition,
            c=cfg.c2,
        )
    crit = stats.norm.ppf(1.0 - cfg.level / 2.0)

    rows = []
    for j in cfg.j_values:
        frame = build_frame(cfg.q, cfg.B, j, window)
        for budget in cfg.budgets:
            t0 = time.perf_counter()
            variance = analytic_variance(frame, f1, budget)
            draws = simulate_normalized(
                f1, f1, frame, budget, cfg.replicas, cfg.base_seed,
                workers=cfg.workers, variance=variance,
            )
            report = make_bound_report(
                cfg.q, cfg.B, j, budget, cfg.alpha, cfg.condition,
                frame=frame, density=f1,
            )
            power = float("nan")
            if f2 is not None:
                alt = simulate_normalized(
                    f1, f2, frame, budget, cfg.replicas, cfg.base_seed,
                    workers=cfg.workers, replica_offset=cfg.replicas,
                    variance=variance,
                )
                power = float(np.mean(np.abs(alt) > crit))
            row = {
                "q": cfg.q,
                "B": cfg.B,
                "j": j,
                "budget": budget,
                "replicas": cfg.replicas,
                "mean_norm": float(draws.mean()),
                "var_norm": float(draws.var(ddof=1)),
                "wasserstein_emp": empirical_wasserstein(draws),
                "ks_emp": ks_distance(draws),
                "variance_analytic": variance,
                "prop_bound": report.wasserstein_bound,
                "prop_term_star11": report.bound_terms[0],
                "prop_term_star21": report.bound_terms[1],
                "prop_term_l4": report.bound_terms[2],
                "envelope": report.rate_envelope,
                "env_term1": report.envelope_terms[0],
                "env_term2": report.envelope_terms[1],
                "env_term3": report.envelope_terms[2],
                "rejection_rate": float(np.mean(np.abs(draws) > crit)),
                "power": power,
            }
            rows.append(row)
            log.info(
                "j=%d budget=%g done in %.2fs (d_W=%.4f, KS=%.4f)",
                j, budget, time.perf_counter() - t0,
                row["wasserstein_emp"], row["ks_emp"],
            )
    return ExperimentReport(config=cfg, rows=rows)


@dataclass(frozen=True)
class ExperimentReport:
    config: ExperimentConfig
    rows: list = field(default_factory=list)

    def column(self, name: str) -> np.ndarray:
        return np.asarray([row[name] for row in self.rows], dtype=float)

    def as_dict(self) -> dict:
        cfg = self.config
        return {
            "package_version": __version__,
            "accel_path": active_path(),
            "config": {
                "q": cfg.q,
                "B": cfg.B,
                "j": list(cfg.j_values),
                "budgets": list(cfg.budgets),
                "alpha": cfg.alpha,
                "condition": cfg.condition,
                "c": cfg.c,
                "replicas": cfg.replicas,
                "base_seed": cfg.base_seed,
                "level": cfg.level,
                "alpha2": cfg.alpha2,
                "c2": cfg.c2,
                "bandlimit": cfg.bandlimit,
            },
            "rows": self.rows,
        }


def write_csv(report: ExperimentReport, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        writer = csv.DictWriter(fh, fieldnames=REPORT_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for row in report.rows:
            writer.writerow({k: repr(row[k]) if isinstance(row[k], float) else row[k] for k in REPORT_COLUMNS})


def write_json(report: ExperimentReport, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report.as_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def make_plots(report: ExperimentReport, prefix) -> list:
    """Static log-axis plots of distances versus j and versus budget."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    written = []
    js = report.column("j")
    budgets = report.column("budget")
    for axis, fname in (("j", f"{prefix}_vs_j.png"), ("budget", f"{prefix}_vs_budget.png")):
        sweep = js if axis == "j" else budgets
        if np.unique(sweep).size < 2:
            continue
        other = budgets if axis == "j" else js
        fig, ax = plt.subplots(figsize=(6, 4))
        for val in np.unique(other):
            sel = other == val
            order = np.argsort(sweep[sel])
            label_key = "budget" if axis == "j" else "j"
            ax.plot(
                sweep[sel][order],
                report.column("wasserstein_emp")[sel][order],
                "o-",
                label=f"empirical d_W ({label_key}={val:g})",
            )
            ax.plot(
                sweep[sel][order],
                report.column("prop_bound")[sel][order],
                "s--",
                label=f"analytic bound ({label_key}={val:g})",
            )
        ax.set_xlabel(axis)
        ax.set_ylabel("distance to N(0,1)")
        ax.set_yscale("log")
        if axis == "budget":
            ax.set_xscale("log")
        ax.legend(fontsize=7)
        fig.tight_layout()
        fig.savefig(fname, dpi=120)
        plt.close(fig)
        written.append(fname)
    return written


def rate_regression(x, y) -> dict:
    """OLS slope of log(y) against x, with standard error and 95% CI."""
    xa = np.asarray(x, dtype=float)
    ya = np.asarray(y, dtype=float)
    if xa.size < 3:
        raise InsufficientPoints(f"need >= 3 points, got {xa.size}")
    if np.any(ya <= 0):
        raise ValueError("quantities must be positive for a log regression")
    res = stats.linregress(xa, np.log(ya))
    half = 1.96 * res.stderr
    return {
        "slope": float(res.slope),
        "intercept": float(res.intercept),
        "stderr": float(res.stderr),
        "ci95": (float(res.slope - half), float(res.slope + half)),
    }


def hypothesis_test(
    sample1: PointSample,
    sample2: PointSample,
    frame: NeedletFrame,
    f0: HarmonicDensity,
    budget: float,
    level: float = 0.05,
) -> dict:
    """Two-sided Gaussian test of equal intensities, calibrated under f0."""
    if not 0.0 < level < 1.0:
        raise ValueError("level must be in (0, 1)")
    u = compute_U(frame, sample1, sample2)
    variance = analytic_variance(frame, f0, budget)
    z = normalize(u, variance)
    p = float(2.0 * stats.norm.sf(abs(z)))
    return {
        "u_value": u,
        "variance": variance,
        "normalized": z,
        "p_value": p,
        "reject": bool(p < level),
        "level": level,
    }
