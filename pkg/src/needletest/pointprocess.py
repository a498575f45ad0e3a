"""Poisson sampling on two labeled torus copies.

The two observation windows are modeled as one coordinate torus with a
label in {1, 2}; disjointness enters every downstream formula only through
the label.  A sample with budget R is drawn as N ~ Poisson(R) points i.i.d.
from the density f, by rejection against the uniform proposal under the
grid-plus-margin envelope from :func:`needletest.harmonics.density_sup`.

Streams are counter-based (Philox) and split deterministically by
(base_seed, replica, label), so replicas parallelize without coordination
and identical keys reproduce identical samples bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, EnvelopeBreach, RejectionStall
from .harmonics import TWO_PI, HarmonicDensity, density_eval, density_sup

_STALL_RATE = 1e-4
_STALL_MIN_PROPOSALS = 10_000


@dataclass(frozen=True, eq=False)
class PointSample:
    label: int
    points: np.ndarray  # (N, q), coordinates in [0, 2pi)
    budget: float  # expected total count R
    seed_trace: str = ""

    @property
    def q(self) -> int:
        return self.points.shape[1]

    @property
    def count(self) -> int:
        return self.points.shape[0]


def stream(base_seed: int, replica: int = 0, label: int = 1) -> np.random.Generator:
    """Deterministic substream for one (replica, label) cell."""
    ss = np.random.SeedSequence(base_seed, spawn_key=(replica, label))
    return np.random.Generator(np.random.Philox(ss))


def sample_process(
    f: HarmonicDensity,
    budget: float,
    label: int = 1,
    rng: np.random.Generator | int | None = None,
    envelope: float | None = None,
    seed_trace: str = "",
) -> PointSample:
    """Draw one Poisson(budget) sample from f on the torus copy ``label``."""
    if budget <= 0:
        raise ValueError("budget must be positive")
    if label not in (1, 2):
        raise ValueError("label must be 1 or 2")
    if rng is None or isinstance(rng, (int, np.integer)):
        rng = stream(0 if rng is None else int(rng), 0, label)
    env = density_sup(f) if envelope is None else float(envelope)

    n = int(rng.poisson(budget))
    pts = np.empty((n, f.q))
    got = 0
    proposed = 0
    accepted = 0
    while got < n:
        batch = max(256, 2 * (n - got))
        prop = rng.uniform(0.0, TWO_PI, size=(batch, f.q))
        fv = np.atleast_1d(density_eval(f, prop))
        if np.any(fv > env * (1.0 + 1e-12)):
            worst = float(fv.max())
            raise EnvelopeBreach(f"density {worst:.6g} exceeds envelope {env:.6g}")
        keep = rng.uniform(0.0, env, size=batch) <= fv
        proposed += batch
        accepted += int(keep.sum())
        if proposed >= _STALL_MIN_PROPOSALS and accepted < _STALL_RATE * proposed:
            raise RejectionStall(
                f"acceptance rate {accepted/proposed:.2e} after {proposed} proposals"
            )
        take = prop[keep][: n - got]
        pts[got : got + take.shape[0]] = take
        got += take.shape[0]
    return PointSample(label=label, points=pts, budget=float(budget), seed_trace=seed_trace)


def sample_pair(
    f1: HarmonicDensity,
    f2: HarmonicDensity,
    budget: float,
    base_seed: int,
    replica: int = 0,
) -> tuple[PointSample, PointSample]:
    """Two independent processes on the labeled copies (f1 on 1, f2 on 2)."""
    if f1.q != f2.q:
        raise DimensionMismatch("paired densities must share q")
    out = []
    for label, f in ((1, f1), (2, f2)):
        trace = f"seed={base_seed}/replica={replica}/label={label}"
        out.append(
            sample_process(
                f, budget, label=label, rng=stream(base_seed, replica, label),
                seed_trace=trace,
            )
        )
    return out[0], out[1]


def save_points(samples, path) -> None:
    """Write one row per point: ``label theta_1 .. theta_q``."""
    with open(path, "w", encoding="utf-8") as fh:
        for s in samples:
            for row in s.points:
                fh.write(" ".join([str(s.label)] + [repr(float(x)) for x in row]) + "\n")


def load_points(path, budget: float = float("nan")) -> list[PointSample]:
    """Read samples written by save_points, grouped by label (sorted)."""
    rows = np.loadtxt(path, ndmin=2)
    if rows.size == 0:
        return []
    labels = rows[:, 0].astype(int)
    out = []
    for lab in sorted(set(labels.tolist())):
        pts = rows[labels == lab, 1:]
        out.append(PointSample(label=int(lab), points=pts, budget=budget))
    return out
