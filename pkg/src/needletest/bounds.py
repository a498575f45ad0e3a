"""Contraction norms of the pair kernel and normal-approximation bounds.

All three norms reduce to four-fold lattice sums over the shell, weighted
by the squared window profile and coefficient lookups on difference / sum
frequencies.  With W(n) = b^2(B^-j |n|) on the shell and a_m the density
coefficients, the exact values under budget R per copy are

    ||h||^4_{L4}      = 4 R^2 (2pi)^(-3q) * sum W W W W |a_{n1-n2+n3-n4}|^2
    ||h *21 h||^2_{L2} = 8 R^3 (2pi)^(-5q/2) * sum W W W W
                          conj(a_{n1-n2+n3-n4}) a_{n1-n2} a_{n3-n4}
    ||h *11 h||^2_{L2} = 16 R^4 (2pi)^(-2q) * sum W W W W
                          conj(a_{n1+n3}) a_{n2+n4} a_{n1-n2} a_{n3-n4}

and the variance 2||h||^2 matches :func:`needletest.ustat.analytic_variance`.
Each sum has a brute-force path (literal quadruple loop, capped) and a
fast path built from the pair-difference histogram g(m) = sum_{n1-n2=m} W W
(for the first two) or from shell-matrix products (for the third).

The Wasserstein bound for the variance-normalized kernel is assembled with
constants sqrt(8), 6 + 2 sqrt(2), sqrt(8); every squared norm above is
degree-4 homogeneous in the kernel, so normalization divides each bound
term by the variance.  Rate envelopes are the constant-free benchmark
curves in (j, R, alpha); comparisons against them are slope-based only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from . import _accel, ustat
from .errors import (
    InsufficientBandlimit,
    InvalidAlpha,
    NonpositiveVariance,
    ShellTooLarge,
)
from .frame import NeedletFrame, build_frame, build_window
from .harmonics import TWO_PI, HarmonicDensity, make_density
from .ustat import _coeff_box, _dense_b2_box

SQRT8 = float(np.sqrt(8.0))
STAR21_CONST = 6.0 + 2.0 * float(np.sqrt(2.0))

#: brute-force feasibility cap on |shell|^4 terms
BRUTE_CAP = 1_000_000_000

_IMAG_TOL = 1e-10


@dataclass(frozen=True)
class ContractionNorms:
    l4_fourth: float  # ||h||^4 in L4
    star21_sq: float  # ||h star_2^1 h||^2 in L2(mu)
    star11_sq: float  # ||h star_1^1 h||^2 in L2(mu^2)
    variance: float  # 2 ||h||^2 in L2(mu^2) = Var U

    def as_dict(self) -> dict:
        return {
            "l4_fourth": self.l4_fourth,
            "star21_sq": self.star21_sq,
            "star11_sq": self.star11_sq,
            "variance": self.variance,
        }


def _guard_nonnegative(name: str, value: float, scale: float) -> float:
    if value < -1e-12 * max(scale, 1.0):
        raise ValueError(f"{name} came out negative ({value:.3e}); bug signal")
    return max(value, 0.0)


def _raw_sums_convolution(frame: NeedletFrame, f: HarmonicDensity):
    w, box = _dense_b2_box(frame)
    g = fftconvolve(w, w, mode="full")  # pair-difference histogram (4*box+1 side)

    a2 = _coeff_box(f, 2 * box)
    a4 = _coeff_box(f, 4 * box)

    gg = fftconvolve(g, g, mode="full")
    s_l4 = float(np.sum(gg * np.abs(a4) ** 2))

    p = g * a2
    pp = fftconvolve(p, p, mode="full")
    s21 = complex(np.sum(pp * a4.conj()))

    # shell-matrix route for the sum-coupled contraction
    shell = frame.shell
    b2 = frame.b2weights
    diff = shell[:, None, :] - shell[None, :, :]
    summ = shell[:, None, :] + shell[None, :, :]
    q = frame.q
    a_diff = _accel._flat_lookup_numpy(diff.reshape(-1, q), f._flat, f.side).reshape(
        diff.shape[:2]
    )
    a_sum = _accel._flat_lookup_numpy(summ.reshape(-1, q), f._flat, f.side).reshape(
        summ.shape[:2]
    )
    x = (b2[:, None] * b2[None, :]) * a_diff
    s11 = complex(np.sum(a_sum.conj() * (x @ a_sum @ x.T)))
    return s_l4, s21, s11


def _raw_sums_brute(frame: NeedletFrame, f: HarmonicDensity):
    s = frame.shell.shape[0]
    if float(s) ** 4 > BRUTE_CAP:
        raise ShellTooLarge(
            f"|shell|^4 = {float(s)**4:.3g} exceeds brute-force cap {BRUTE_CAP:.3g}"
        )
    l4, s21r, s21i, s11r, s11i = _accel.contraction_sums(
        frame.shell, frame.b2weights, f._flat, f.side
    )
    return l4, complex(s21r, s21i), complex(s11r, s11i)


def contraction_norms(
    frame: NeedletFrame, f: HarmonicDensity, budget: float, method: str = "auto"
) -> ContractionNorms:
    """The three contraction norms plus the variance, exact at desk scale.

    ``method``: "brute" (quadruple loop, capped), "convolution" (histogram /
    matrix route), or "auto".
    """
    box = int(np.max(np.abs(frame.shell)))
    if f.bandlimit < 4 * box:
        raise InsufficientBandlimit(
            f"need bandlimit >= {4 * box} for alternating sums, got {f.bandlimit}"
        )
    if method == "auto":
        method = "brute" if float(frame.shell.shape[0]) ** 4 <= 1e7 else "convolution"
    if method == "brute":
        s_l4, s21, s11 = _raw_sums_brute(frame, f)
    elif method == "convolution":
        s_l4, s21, s11 = _raw_sums_convolution(frame, f)
    else:
        raise ValueError(f"unknown method {method!r}")

    for name, val in (("star21 sum", s21), ("star11 sum", s11)):
        if abs(val.imag) > _IMAG_TOL * (abs(val.real) + 1.0):
            raise ValueError(f"{name} has imaginary residual {val.imag:.3e}")

    q = frame.q
    l4_fourth = 4.0 * budget**2 * TWO_PI ** (-3 * q) * s_l4
    star21_sq = 8.0 * budget**3 * TWO_PI ** (-2.5 * q) * s21.real
    star11_sq = 16.0 * budget**4 * TWO_PI ** (-2 * q) * s11.real
    variance = ustat.analytic_variance(frame, f, budget, method="auto")

    return ContractionNorms(
        l4_fourth=_guard_nonnegative("l4_fourth", l4_fourth, abs(l4_fourth)),
        star21_sq=_guard_nonnegative("star21_sq", star21_sq, abs(star21_sq)),
        star11_sq=_guard_nonnegative("star11_sq", star11_sq, abs(star11_sq)),
        variance=variance,
    )


def bound_terms(norms: ContractionNorms) -> tuple[float, float, float]:
    """The three addends of the normalized Wasserstein bound.

    Each squared norm is degree 4 in the kernel, so dividing the kernel by
    sqrt(variance) divides each term sqrt(raw norm) by the variance.
    """
    if norms.variance <= 0:
        raise NonpositiveVariance(f"variance={norms.variance}")
    v = norms.variance
    return (
        SQRT8 * np.sqrt(norms.star11_sq) / v,
        STAR21_CONST * np.sqrt(norms.star21_sq) / v,
        SQRT8 * np.sqrt(norms.l4_fourth) / v,
    )


def wasserstein_bound(norms: ContractionNorms) -> float:
    """Gaussian-approximation bound for the variance-normalized statistic."""
    return float(sum(bound_terms(norms)))


def regime(alpha: float) -> str:
    if alpha < 0.5:
        raise InvalidAlpha(f"alpha={alpha} < 1/2")
    return "alpha_ge_1" if alpha >= 1.0 else "alpha_in_half_one"


def rate_envelope_terms(
    q: int, B: float, j: int, budget: float, alpha: float, condition: str = "cond1"
) -> tuple[float, float, float]:
    """Constant-free envelope terms; for product-form decay j enters as j*q."""
    if alpha < 0.5:
        raise InvalidAlpha(f"alpha={alpha} < 1/2")
    e = j * q if condition == "cond2" else j
    r = float(budget)
    if alpha >= 1.0:
        return (
            r**-0.5 * B ** (e / 4.0),
            r**-0.5,
            B ** (-e / 2.0),
        )
    return (
        r**-0.5 * B ** (e / 4.0),
        r**-0.5 * B ** (e * (1.0 - alpha)),
        B ** (e * (1.0 - 2.0 * alpha)),
    )


def rate_envelope(
    q: int, B: float, j: int, budget: float, alpha: float, condition: str = "cond1"
) -> float:
    return float(sum(rate_envelope_terms(q, B, j, budget, alpha, condition)))


def clt_condition(
    q: int, B: float, j_of_t, budgets, alpha: float, condition: str = "cond1"
) -> bool:
    """Finite-horizon proxy: does R^-1/2 B^(j max(1/4, 1-alpha)) decrease?"""
    if alpha < 0.5:
        raise InvalidAlpha(f"alpha={alpha} < 1/2")
    js = np.asarray(list(j_of_t), dtype=float)
    rs = np.asarray(list(budgets), dtype=float)
    if js.shape != rs.shape or js.size < 2:
        raise ValueError("need matched sequences of at least two steps")
    expo = max(0.25, 1.0 - alpha) * (q if condition == "cond2" else 1)
    vals = rs**-0.5 * B ** (js * expo)
    steps = np.diff(vals)
    return bool(np.all(steps <= 1e-12) and vals[-1] < vals[0])


@dataclass(frozen=True)
class BoundReport:
    q: int
    B: float
    j: int
    budget: float
    alpha: float
    condition: str
    regime: str
    norms: ContractionNorms
    wasserstein_bound: float
    bound_terms: tuple[float, float, float]
    rate_envelope: float
    envelope_terms: tuple[float, float, float]
    c: float | None = None

    def as_dict(self) -> dict:
        return {
            "params": {
                "q": self.q,
                "B": self.B,
                "j": self.j,
                "budget": self.budget,
                "alpha": self.alpha,
                "condition": self.condition,
                "c": self.c,
            },
            "regime": self.regime,
            "norms": self.norms.as_dict(),
            "wasserstein_bound": self.wasserstein_bound,
            "bound_terms": {
                "star11": self.bound_terms[0],
                "star21": self.bound_terms[1],
                "l4": self.bound_terms[2],
            },
            "rate_envelope": self.rate_envelope,
            "envelope_terms": {
                "term1": self.envelope_terms[0],
                "term2": self.envelope_terms[1],
                "term3": self.envelope_terms[2],
            },
        }


def make_bound_report(
    q: int,
    B: float,
    j: int,
    budget: float,
    alpha: float,
    condition: str = "cond1",
    c: float | None = None,
    method: str = "auto",
    frame: NeedletFrame | None = None,
    density: HarmonicDensity | None = None,
) -> BoundReport:
    """Build frame + density (bandlimit 4 B^(j+1)) and assemble the report."""
    if frame is None:
        frame = build_frame(q, B, j, build_window(B))
    if density is None:
        box = int(np.max(np.abs(frame.shell)))
        density = make_density(q, alpha, 4 * box, condition=condition, c=c)
    norms = contraction_norms(frame, density, budget, method=method)
    terms = bound_terms(norms)
    env_terms = rate_envelope_terms(q, B, j, budget, alpha, condition)
    return BoundReport(
        q=q,
        B=B,
        j=j,
        budget=budget,
        alpha=alpha,
        condition=condition,
        regime=regime(alpha),
        norms=norms,
        wasserstein_bound=float(sum(terms)),
        bound_terms=terms,
        rate_envelope=float(sum(env_terms)),
        envelope_terms=env_terms,
        c=density.c,
    )
