"""Fourier analysis on the flat q-torus [0, 2pi)^q.

Basis convention:
    s_n(theta) = (2pi)^(-q/2) exp(i <n, theta>),  n in Z^q,
orthonormal with respect to the Lebesgue measure d(theta).  A density is
specified spectrally by a truncated coefficient table {a_n} and synthesized
as f = sum_n a_n s_n.  The zero mode is pinned to a_0 = (2pi)^(-q/2) so that
the synthesized f integrates to one.

Two built-in decay models for the off-zero coefficients, with exponent
alpha >= 1/2 and scale c:
    "cond1":  a_n = c (|n|_2 + 1)^(-alpha)          (isotropic decay)
    "cond2":  a_n = c prod_d (|n_d| + 1)^(-alpha)   (product-form decay)
The two coincide for q = 1.  When c is not given it is chosen so that
sum_{n != 0} |a_n| = 0.9 a_0, a sufficient condition for strict positivity
of f (the decay models alone do not guarantee a nonnegative synthesis).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import _accel
from .errors import DimensionMismatch, InvalidAlpha, PositivityViolation

TWO_PI = 2.0 * np.pi

CONDITIONS = ("cond1", "cond2", "custom")

#: default padding applied on top of the grid maximum by density_sup
SUP_MARGIN = 0.1

#: grid points per unit bandlimit used for positivity / sup scans
GRID_FACTOR = 4

POSITIVITY_FLOOR = 1e-6

_IMAG_TOL = 1e-10


def eigenvalue(n) -> np.ndarray | float:
    """Euclidean norm |n|_2 of one frequency vector or a stack of them."""
    arr = np.asarray(n, dtype=float)
    out = np.sqrt(np.sum(arr * arr, axis=-1))
    return float(out) if out.ndim == 0 else out


def basis_eval(n, theta) -> np.ndarray | complex:
    """Evaluate s_n(theta) = (2pi)^(-q/2) exp(i <n, theta>).

    ``n`` has shape (q,) or (S, q); ``theta`` has shape (q,) or (T, q).
    Both batched at once gives an (S, T)-shaped result.
    """
    n = np.atleast_2d(np.asarray(n, dtype=float))
    th = np.atleast_2d(np.asarray(theta, dtype=float))
    if n.shape[1] != th.shape[1]:
        raise DimensionMismatch(f"frequency q={n.shape[1]} vs point q={th.shape[1]}")
    q = n.shape[1]
    out = (TWO_PI) ** (-q / 2.0) * np.exp(1j * (n @ th.T))
    if out.size == 1:
        return complex(out[0, 0])
    return np.squeeze(out)


def condition_coefficient(n, alpha: float, condition: str, c: float = 1.0):
    """Raw decay-model coefficient for n != 0 (the zero mode is pinned)."""
    if alpha < 0.5:
        raise InvalidAlpha(f"alpha={alpha} < 1/2")
    arr = np.asarray(n, dtype=float)
    if condition == "cond1":
        return c * (eigenvalue(arr) + 1.0) ** (-alpha)
    if condition == "cond2":
        return c * np.prod((np.abs(arr) + 1.0) ** (-alpha), axis=-1)
    raise ValueError(f"unknown condition {condition!r}")


@dataclass(frozen=True, eq=False)
class HarmonicDensity:
    """Truncated spectral density on T^q.

    ``coeffs`` is the dense table of a_n with shape (2*bandlimit+1,)*q and
    axis index n_d + bandlimit.  Instances are immutable and safe to share
    across workers.
    """

    q: int
    bandlimit: int
    coeffs: np.ndarray
    condition: str = "custom"
    alpha: float | None = None
    c: float | None = None
    positivity_floor: float = POSITIVITY_FLOOR

    @property
    def side(self) -> int:
        return 2 * self.bandlimit + 1

    @cached_property
    def _flat(self) -> np.ndarray:
        return np.ascontiguousarray(self.coeffs.ravel())

    @cached_property
    def _support(self) -> tuple[np.ndarray, np.ndarray]:
        """(indices, values) of nonzero table entries, for scattered synthesis."""
        mask = self.coeffs != 0
        pos = np.argwhere(mask)
        idx = np.ascontiguousarray((pos - self.bandlimit).astype(np.float64))
        vals = self.coeffs[mask]
        return idx, vals

    def coefficient(self, n):
        """a_n lookup; frequencies outside the table are zero."""
        vec = np.atleast_2d(np.asarray(n, dtype=np.int64))
        if vec.shape[1] != self.q:
            raise DimensionMismatch(f"expected q={self.q}, got {vec.shape[1]}")
        vals = _accel._flat_lookup_numpy(vec, self._flat, self.side)
        return complex(vals[0]) if np.asarray(n).ndim == 1 else vals

    def mean_value(self) -> float:
        """Constant part of f, i.e. a_0 s_0 = (2pi)^(-q)."""
        center = (self.bandlimit,) * self.q
        return float((self.coeffs[center] * TWO_PI ** (-self.q / 2.0)).real)


def _index_grid(q: int, bandlimit: int) -> np.ndarray:
    axes = np.meshgrid(*([np.arange(-bandlimit, bandlimit + 1)] * q), indexing="ij")
    return np.stack(axes, axis=-1)


def make_density(
    q: int,
    alpha: float,
    bandlimit: int,
    condition: str = "cond1",
    c: float | None = None,
    positivity_floor: float = POSITIVITY_FLOOR,
) -> HarmonicDensity:
    """Build a decay-model density, validating positivity on a dense grid.

    Raises InvalidAlpha for alpha < 1/2 and PositivityViolation when the
    synthesized f dips below ``positivity_floor`` anywhere on a grid of
    GRID_FACTOR * bandlimit points per dimension.
    """
    if alpha < 0.5:
        raise InvalidAlpha(f"alpha={alpha} < 1/2")
    if bandlimit < 1:
        raise ValueError("bandlimit must be >= 1")
    if condition not in ("cond1", "cond2"):
        raise ValueError(f"condition must be cond1 or cond2, got {condition!r}")

    idx = _index_grid(q, bandlimit)
    unit = condition_coefficient(idx, alpha, condition, c=1.0)
    a0 = TWO_PI ** (-q / 2.0)
    center = (bandlimit,) * q
    unit[center] = 0.0
    if c is None:
        total = float(unit.sum())
        c = 0.9 * a0 / total if total > 0 else 0.0
    table = (c * unit).astype(np.complex128)
    table[center] = a0

    dens = HarmonicDensity(
        q=q,
        bandlimit=bandlimit,
        coeffs=table,
        condition=condition,
        alpha=alpha,
        c=c,
        positivity_floor=positivity_floor,
    )
    validate_density(dens)
    return dens


def from_coeffs(
    q: int,
    indices,
    values,
    bandlimit: int | None = None,
    validate: bool = True,
    positivity_floor: float = POSITIVITY_FLOOR,
) -> HarmonicDensity:
    """Assemble a custom density from (index, coefficient) pairs.

    The zero mode defaults to (2pi)^(-q/2) when absent.  Hermitian symmetry
    a_{-n} = conj(a_n) is required so the synthesis is real.
    """
    idx = np.atleast_2d(np.asarray(indices, dtype=np.int64))
    vals = np.asarray(values, dtype=np.complex128).ravel()
    if idx.shape[1] != q or idx.shape[0] != vals.size:
        raise DimensionMismatch("indices/values shape mismatch")
    if bandlimit is None:
        bandlimit = max(1, int(np.max(np.abs(idx)))) if idx.size else 1
    if idx.size and int(np.max(np.abs(idx))) > bandlimit:
        raise ValueError("index outside requested bandlimit")

    table = np.zeros((2 * bandlimit + 1,) * q, dtype=np.complex128)
    for row, v in zip(idx, vals):
        table[tuple(row + bandlimit)] = v
    center = (bandlimit,) * q
    if table[center] == 0:
        table[center] = TWO_PI ** (-q / 2.0)

    flipped = np.flip(table)
    if not np.allclose(flipped, table.conj(), atol=1e-12):
        raise ValueError("coefficient table is not Hermitian (a_{-n} != conj(a_n))")

    dens = HarmonicDensity(
        q=q,
        bandlimit=bandlimit,
        coeffs=table,
        condition="custom",
        positivity_floor=positivity_floor,
    )
    if validate:
        validate_density(dens)
    return dens


def density_grid(f: HarmonicDensity, gridsize: int) -> np.ndarray:
    """Synthesize f on the uniform grid theta_g = 2pi g / gridsize (per axis).

    FFT-based; exact for gridsize > 2*bandlimit.  Returns the real part and
    checks that the imaginary residual is negligible.
    """
    if gridsize <= 2 * f.bandlimit:
        raise ValueError("gridsize must exceed 2*bandlimit to avoid aliasing")
    spec = np.zeros((gridsize,) * f.q, dtype=np.complex128)
    rng = np.arange(-f.bandlimit, f.bandlimit + 1)
    wrapped = np.ix_(*([rng % gridsize] * f.q))
    spec[wrapped] = f.coeffs
    vals = np.fft.ifftn(spec) * gridsize**f.q * TWO_PI ** (-f.q / 2.0)
    resid = float(np.max(np.abs(vals.imag)))
    if resid > _IMAG_TOL:
        raise ValueError(f"non-real synthesis, imaginary residual {resid:.3e}")
    return vals.real


def validate_density(f: HarmonicDensity) -> dict:
    """Positivity / normalization gate used by make_density and loaders."""
    grid = max(GRID_FACTOR * f.bandlimit, 32)
    vals = density_grid(f, grid)
    fmin = float(vals.min())
    if fmin <= f.positivity_floor:
        raise PositivityViolation(
            f"min grid density {fmin:.3e} <= floor {f.positivity_floor:.1e}"
        )
    integral = float(vals.mean()) * TWO_PI**f.q
    return {"min": fmin, "max": float(vals.max()), "integral": integral}


def density_eval(f: HarmonicDensity, theta) -> np.ndarray | float:
    """Evaluate f at scattered points; shape (q,) or (T, q)."""
    th = np.atleast_2d(np.asarray(theta, dtype=np.float64))
    if th.shape[1] != f.q:
        raise DimensionMismatch(f"expected q={f.q}, got {th.shape[1]}")
    idx, vals = f._support
    out, im_max = _accel.density_values(
        np.ascontiguousarray(th),
        idx,
        np.ascontiguousarray(vals.real),
        np.ascontiguousarray(vals.imag),
        TWO_PI ** (-f.q / 2.0),
    )
    if im_max > _IMAG_TOL:
        raise ValueError(f"non-real density evaluation, residual {im_max:.3e}")
    return float(out[0]) if np.asarray(theta).ndim == 1 else out


def density_sup(f: HarmonicDensity, margin: float = SUP_MARGIN) -> float:
    """Upper envelope for rejection sampling: (1+margin) * dense-grid max."""
    grid = max(GRID_FACTOR * f.bandlimit, 32)
    return (1.0 + margin) * float(density_grid(f, grid).max())


def save_coeffs(f: HarmonicDensity, path) -> None:
    """Write the nonzero table entries as rows ``n_1 .. n_q re im``."""
    idx, vals = f._support
    with open(path, "w", encoding="utf-8") as fh:
        for row, v in zip(idx.astype(np.int64), vals):
            cols = [str(int(x)) for x in row] + [repr(v.real), repr(v.imag)]
            fh.write(" ".join(cols) + "\n")


def load_coeffs(path, validate: bool = True) -> HarmonicDensity:
    """Read a coefficient table written by save_coeffs (whitespace-separated)."""
    rows = np.loadtxt(path, ndmin=2)
    if rows.shape[1] < 3:
        raise ValueError("expected columns n_1 .. n_q re im")
    q = rows.shape[1] - 2
    idx = rows[:, :q].astype(np.int64)
    vals = rows[:, q] + 1j * rows[:, q + 1]
    return from_coeffs(q, idx, vals, validate=validate)
