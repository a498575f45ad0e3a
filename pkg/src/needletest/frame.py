"""Window function and needlet frames on the flat q-torus.

The window b is built the standard way: integrate the compactly supported
bump omega(s) = exp(-1/(1-s^2)) over an affine image of [B^-1, 1], set

    phi(t) = 1                                   for t <= B^-1,
    phi(t) = 1 - int_{B^-1}^t omega / int_{B^-1}^1 omega   on [B^-1, 1],
    phi(t) = 0                                   for t >= 1,

and b(x) = sqrt(phi(x/B) - phi(x)).  Then b is supported in [B^-1, B] and
sum_{j>=0} b^2(B^-j c) = 1 for any c > 1 by telescoping, which holds to
machine precision here because both terms of consecutive levels evaluate
the same cached phi.

A frame at level j >= 1 collects the frequency shell
Lambda_j = {n : B^(j-1) <= |n|_2 <= B^(j+1)} together with the product
cubature grid of side M_j = floor(2 B^(j+1)) + 1 and equal weights
(2pi)^q / M_j^q.  That grid integrates every product of two shell
harmonics exactly (all difference frequencies are below M_j per axis),
which is the only property any formula downstream relies on.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.interpolate import CubicSpline

from . import _accel, harmonics
from .errors import DimensionMismatch, EmptyShell
from .harmonics import TWO_PI, HarmonicDensity, _index_grid

_IMAG_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class WindowFunction:
    B: float
    resolution: int
    _spline: CubicSpline

    def phi(self, x) -> np.ndarray | float:
        """Smooth cutoff: 1 below 1/B, 0 above 1, monotone in between."""
        arr = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.empty_like(arr)
        lo = arr <= 1.0 / self.B
        hi = arr >= 1.0
        mid = ~(lo | hi)
        out[lo] = 1.0
        out[hi] = 0.0
        out[mid] = np.clip(self._spline(arr[mid]), 0.0, 1.0)
        return float(out[0]) if np.asarray(x).ndim == 0 else out

    def b(self, x) -> np.ndarray | float:
        val = np.asarray(self.phi(np.asarray(x) / self.B)) - np.asarray(self.phi(x))
        out = np.sqrt(np.clip(val, 0.0, None))
        return float(out) if np.asarray(x).ndim == 0 else out

    def b2(self, x) -> np.ndarray | float:
        val = np.asarray(self.phi(np.asarray(x) / self.B)) - np.asarray(self.phi(x))
        out = np.clip(val, 0.0, None)
        return float(out) if np.asarray(x).ndim == 0 else out


def build_window(B: float, resolution: int = 4096) -> WindowFunction:
    """Tabulate phi on [1/B, 1] by composite Simpson and spline it cubically."""
    if B <= 1.0:
        raise ValueError("scale parameter B must exceed 1")
    if resolution < 1024:
        raise ValueError("resolution must be >= 1024")
    invB = 1.0 / B
    t = np.linspace(invB, 1.0, resolution + 1)
    s = (2.0 * t - (1.0 + invB)) / (1.0 - invB)
    omega = np.zeros_like(s)
    inside = np.abs(s) < 1.0
    omega[inside] = np.exp(-1.0 / (1.0 - s[inside] ** 2))
    cum = cumulative_simpson(omega, x=t, initial=0.0)
    phi_tab = 1.0 - cum / cum[-1]
    # the true phi has vanishing derivative at both endpoints
    spline = CubicSpline(t, phi_tab, bc_type="clamped")
    return WindowFunction(B=B, resolution=resolution, _spline=spline)


def partition_residual(window: WindowFunction, c_values, j_max: int = 64):
    """max_c |sum_{j=0..j_max} b^2(B^-j c) - 1| over the given c > 1."""
    cs = np.atleast_1d(np.asarray(c_values, dtype=float))
    total = np.zeros_like(cs)
    for j in range(j_max + 1):
        total += window.b2(window.B ** (-j) * cs)
    return float(np.max(np.abs(total - 1.0)))


@dataclass(frozen=True, eq=False)
class NeedletFrame:
    """Shell, window weights and cubature grid at one resolution level."""

    q: int
    B: float
    j: int
    window: WindowFunction
    shell: np.ndarray  # (S, q) int64 frequency vectors
    bweights: np.ndarray  # (S,) b(B^-j |n|)
    grid_side: int  # M_j, cubature points per dimension

    @property
    def n_centers(self) -> int:
        return self.grid_side**self.q

    @property
    def weight(self) -> float:
        """Cubature weight lambda_{j,k} (equal across k)."""
        return (TWO_PI / self.grid_side) ** self.q

    @cached_property
    def shellf(self) -> np.ndarray:
        return np.ascontiguousarray(self.shell.astype(np.float64))

    @cached_property
    def eigs(self) -> np.ndarray:
        return harmonics.eigenvalue(self.shell)

    @cached_property
    def b2weights(self) -> np.ndarray:
        return self.bweights**2

    @cached_property
    def centers(self) -> np.ndarray:
        """Cubature points xi_k, shape (K, q), row-major in the grid index."""
        axes = np.meshgrid(
            *([np.arange(self.grid_side)] * self.q), indexing="ij"
        )
        pts = np.stack(axes, axis=-1).reshape(-1, self.q)
        return np.ascontiguousarray(pts * (TWO_PI / self.grid_side))


def build_frame(
    q: int, B: float, j: int, window: WindowFunction, bandlimit_box: int | None = None
) -> NeedletFrame:
    """Enumerate Lambda_j and attach the exact cubature grid.

    ``bandlimit_box`` optionally caps the per-coordinate frequency (the shell
    is intersected with that box); by default the box is floor(B^(j+1)).
    """
    if j < 1:
        raise ValueError("resolution level j must be >= 1")
    if window.B != B:
        raise ValueError("window built for a different B")
    hi = B ** (j + 1)
    lo = B ** (j - 1)
    box = int(np.floor(hi + 1e-9))
    if bandlimit_box is not None:
        box = min(box, int(bandlimit_box))
    lattice = _index_grid(q, box).reshape(-1, q)
    eigs = harmonics.eigenvalue(lattice)
    mask = (eigs >= lo - 1e-9) & (eigs <= hi + 1e-9)
    shell = lattice[mask]
    if shell.shape[0] == 0:
        raise EmptyShell(f"no lattice point with |n| in [{lo:g}, {hi:g}]")
    bw = np.asarray(window.b(eigs[mask] / B**j), dtype=float)
    grid_side = int(np.floor(2.0 * hi + 1e-9)) + 1
    return NeedletFrame(
        q=q,
        B=B,
        j=j,
        window=window,
        shell=np.ascontiguousarray(shell.astype(np.int64)),
        bweights=np.ascontiguousarray(bw),
        grid_side=grid_side,
    )


def needlet_matrix(frame: NeedletFrame, theta, centers=None) -> np.ndarray:
    """psi_{j,k}(theta) for all requested centers; shape (T, K).

    The shell is symmetric under n -> -n, so the defining complex sum is
    real and computed directly in cosine form.
    """
    th = np.atleast_2d(np.asarray(theta, dtype=np.float64))
    if th.shape[1] != frame.q:
        raise DimensionMismatch(f"expected q={frame.q}, got {th.shape[1]}")
    if centers is None:
        centers = frame.centers
    centers = np.atleast_2d(np.asarray(centers, dtype=np.float64))
    scale = np.sqrt(frame.weight) * TWO_PI ** (-frame.q)
    return _accel.needlet_cross(
        np.ascontiguousarray(th),
        np.ascontiguousarray(centers),
        frame.shellf,
        frame.bweights,
        scale,
    )


def needlet_eval(frame: NeedletFrame, k: int, theta) -> np.ndarray | float:
    """psi_{j,k}(theta) for one center index k in [0, K)."""
    if not 0 <= k < frame.n_centers:
        raise IndexError(f"center index {k} outside [0, {frame.n_centers})")
    vals = needlet_matrix(frame, theta, centers=frame.centers[k : k + 1])[:, 0]
    return float(vals[0]) if np.asarray(theta).ndim == 1 else vals


def _synth_centered(frame: NeedletFrame, oversample: int = 4) -> np.ndarray:
    """psi_{j,k} centered at 0 on an oversampled grid (translation profile)."""
    G = oversample * frame.grid_side
    spec = np.zeros((G,) * frame.q, dtype=np.complex128)
    wrapped = tuple((frame.shell[:, d] % G) for d in range(frame.q))
    np.add.at(spec, wrapped, frame.bweights.astype(np.complex128))
    vals = np.fft.ifftn(spec) * G**frame.q
    prof = vals.real * np.sqrt(frame.weight) * TWO_PI ** (-frame.q)
    resid = float(np.max(np.abs(vals.imag))) * np.sqrt(frame.weight) * TWO_PI ** (-frame.q)
    if resid > _IMAG_TOL:
        raise ValueError(f"non-real needlet synthesis, residual {resid:.3e}")
    return prof


def lp_norm(frame: NeedletFrame, p: float, oversample: int = 4) -> float:
    """L^p(T^q, dtheta) norm of psi_{j,k} (independent of k by translation)."""
    prof = _synth_centered(frame, oversample)
    cell = (TWO_PI / prof.shape[0]) ** frame.q
    return float((np.sum(np.abs(prof) ** p) * cell) ** (1.0 / p))


def lp_norm_scan(q: int, B: float, window: WindowFunction, p: float, j_range) -> dict:
    """Least-squares slope of log ||psi_j||_p versus j.

    The frame scaling predicts slope q(1/2 - 1/p) log B.
    """
    js = sorted(int(j) for j in j_range)
    if len(js) < 3:
        raise ValueError("need at least 3 levels for a slope")
    norms = []
    for j in js:
        fr = build_frame(q, B, j, window)
        norms.append(lp_norm(fr, p))
    slope = float(np.polyfit(js, np.log(norms), 1)[0])
    return {
        "p": p,
        "levels": js,
        "norms": norms,
        "slope": slope,
        "target": q * (0.5 - 1.0 / p) * np.log(B),
    }


def needlet_coeffs(f: HarmonicDensity, frame: NeedletFrame) -> np.ndarray:
    """beta_{j,k} = sqrt(lambda) sum_n b(B^-j |n|) a_n s_n(xi_k), all k.

    Spectral shortcut to the analysis integral, exact for bandlimited f.
    """
    if f.q != frame.q:
        raise DimensionMismatch("density and frame dimension differ")
    M = frame.grid_side
    an = f.coefficient(frame.shell)
    spec = np.zeros((M,) * frame.q, dtype=np.complex128)
    wrapped = tuple((frame.shell[:, d] % M) for d in range(frame.q))
    np.add.at(spec, wrapped, frame.bweights * an)
    vals = np.fft.ifftn(spec) * M**frame.q
    beta = vals * np.sqrt(frame.weight) * TWO_PI ** (-frame.q / 2.0)
    resid = float(np.max(np.abs(beta.imag)))
    if resid > _IMAG_TOL:
        raise ValueError(f"non-real needlet coefficients, residual {resid:.3e}")
    return beta.real.ravel()


def reconstruct(f: HarmonicDensity, frames, theta) -> np.ndarray:
    """mean + sum_{j,k} beta_{j,k} psi_{j,k}(theta) over the given frames."""
    th = np.atleast_2d(np.asarray(theta, dtype=np.float64))
    out = np.full(th.shape[0], f.mean_value())
    for fr in frames:
        beta = needlet_coeffs(f, fr)
        out += needlet_matrix(fr, th) @ beta
    return out


def cubature_residual(frame: NeedletFrame) -> float:
    """max |lambda sum_k s_{n1}(xi_k) conj(s_{n2}(xi_k)) - delta| over the shell."""
    phases = np.exp(1j * (frame.centers @ frame.shellf.T))  # (K, S)
    gram = frame.weight * (phases.conj().T @ phases) * TWO_PI ** (-frame.q)
    return float(np.max(np.abs(gram - np.eye(frame.shell.shape[0]))))


def localization_ratio(frame: NeedletFrame, radius_factor: float = 10.0) -> float:
    """max |psi| outside a ball of radius radius_factor * B^-j over peak |psi|."""
    prof = _synth_centered(frame, oversample=4)
    G = prof.shape[0]
    ax = np.arange(G) * (TWO_PI / G)
    ax = np.minimum(ax, TWO_PI - ax)
    grids = np.meshgrid(*([ax] * frame.q), indexing="ij")
    dist = np.sqrt(sum(g**2 for g in grids))
    outside = dist > radius_factor * frame.B ** (-frame.j)
    peak = float(np.max(np.abs(prof)))
    if not outside.any():
        return 0.0
    return float(np.max(np.abs(prof[outside]))) / peak


def frame_check(q: int, B: float, j_values, window: WindowFunction | None = None) -> dict:
    """Invariant report backing the ``frame-check`` CLI subcommand."""
    if window is None:
        window = build_window(B)
    js = sorted(int(j) for j in j_values)
    xs = np.concatenate(
        [
            np.linspace(1e-6, 1.0 / B - 1e-12, 5000),
            np.linspace(B + 1e-12, 4.0 * B, 5000),
        ]
    )
    support_max = float(np.max(np.abs(window.b(xs))))
    cs = np.exp(np.linspace(np.log(1.0 + 1e-6), np.log(B ** max(js)), 512))
    partition_max = partition_residual(window, cs, j_max=max(js) + 8)
    report = {
        "q": q,
        "B": B,
        "levels": js,
        "window_support_max_outside": support_max,
        "partition_of_unity_max_abs_error": partition_max,
        "cubature_max_abs_error": {},
        "shell_size": {},
        "l2_norm": {},
        "localization_outside_over_peak": {},
    }
    for j in js:
        fr = build_frame(q, B, j, window)
        report["cubature_max_abs_error"][str(j)] = cubature_residual(fr)
        report["shell_size"][str(j)] = int(fr.shell.shape[0])
        report["l2_norm"][str(j)] = lp_norm(fr, 2)
        report["localization_outside_over_peak"][str(j)] = localization_ratio(fr)
    if len(js) >= 3:
        report["lp_slopes"] = {
            str(p): lp_norm_scan(q, B, window, p, js) for p in (1, 2, 4)
        }
    return report
