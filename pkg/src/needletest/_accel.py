"""Hot numeric kernels, in two interchangeable flavors.

Every kernel exists as a numba ``@njit`` loop (``*_numba``) and as a pure
vectorized numpy implementation (``*_numpy``).  The active flavor is chosen
once at import time: set ``NEEDLETEST_NO_NUMBA=1`` to force the numpy path
(the same fallback is used automatically if numba cannot be imported).
``benchmarks/bench_kernels.py`` times the two paths against each other.

All kernels take C-contiguous float64 / int64 / complex128 arrays.  Dense
coefficient tables are passed flattened (row-major) together with their
per-axis side length; frequency vectors outside the table are treated as
zero coefficients.
"""

from __future__ import annotations

import math
import os

import numpy as np

ACCEL_ENV = "NEEDLETEST_NO_NUMBA"

_disabled = os.environ.get(ACCEL_ENV, "0") not in ("", "0")
try:
    if _disabled:
        raise ImportError("numba disabled via " + ACCEL_ENV)
    from numba import njit

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

_CHUNK = 1 << 15


# ---------------------------------------------------------------------------
# phase sums:  out[s] = sum_p exp(i <freqs[s], points[p]>)
# ---------------------------------------------------------------------------

def freq_sums_numpy(points: np.ndarray, freqs: np.ndarray) -> np.ndarray:
    n = points.shape[0]
    out = np.zeros(freqs.shape[0], dtype=np.complex128)
    for lo in range(0, n, _CHUNK):
        block = points[lo : lo + _CHUNK]
        out += np.exp(1j * (block @ freqs.T)).sum(axis=0)
    return out


# ---------------------------------------------------------------------------
# density synthesis at scattered points:
#   out[p] = norm * sum_m Re( (fre[m] + i fim[m]) exp(i <fidx[m], points[p]>) )
# imag accumulator returned for the Hermitian-residual check
# ---------------------------------------------------------------------------

def density_values_numpy(points, fidx, fre, fim, norm):
    n = points.shape[0]
    coeff = fre + 1j * fim
    re = np.empty(n)
    im_max = 0.0
    for lo in range(0, n, _CHUNK):
        block = points[lo : lo + _CHUNK]
        vals = np.exp(1j * (block @ fidx.T)) @ coeff
        re[lo : lo + _CHUNK] = norm * vals.real
        if vals.size:
            im_max = max(im_max, norm * float(np.max(np.abs(vals.imag))))
    return re, im_max


# ---------------------------------------------------------------------------
# needlet cross matrix:
#   out[p, k] = scale * sum_s w[s] cos(<freqs[s], points[p] - centers[k]>)
# ---------------------------------------------------------------------------

def needlet_cross_numpy(points, centers, freqs, weights, scale):
    ep = np.exp(1j * (points @ freqs.T)) * weights
    ec = np.exp(-1j * (centers @ freqs.T))
    return scale * (ep @ ec.T).real


# ---------------------------------------------------------------------------
# quadratic shell sum (variance lattice sum):
#   sum_{s1,s2} b2[s1] b2[s2] |a[shell[s1]-shell[s2]]|^2
# ---------------------------------------------------------------------------

def _flat_lookup_numpy(vecs, aflat, side):
    """Gather a[v] for integer vectors v on the cubic table; outside -> 0."""
    off = (side - 1) // 2
    shifted = vecs + off
    ok = np.all((shifted >= 0) & (shifted < side), axis=-1)
    idx = np.zeros(vecs.shape[:-1], dtype=np.int64)
    for d in range(vecs.shape[-1]):
        idx = idx * side + np.where(ok, shifted[..., d], 0)
    vals = aflat[idx]
    vals[~ok] = 0.0
    return vals


def variance_sum_numpy(shell, b2, aflat, side):
    diffs = shell[:, None, :] - shell[None, :, :]
    av = _flat_lookup_numpy(diffs.reshape(-1, shell.shape[1]), aflat, side)
    w = np.outer(b2, b2).ravel()
    return float(w @ (av.real**2 + av.imag**2))


# ---------------------------------------------------------------------------
# quartic shell sums (contraction lattice sums), brute force:
#   l4  = sum b2*b2*b2*b2 |a[n1-n2+n3-n4]|^2
#   s21 = sum b2^4 conj(a[n1-n2+n3-n4]) a[n1-n2] a[n3-n4]
#   s11 = sum b2^4 conj(a[n1+n3]) a[n2+n4] a[n1-n2] a[n3-n4]
# ---------------------------------------------------------------------------

def contraction_sums_numpy(shell, b2, aflat, side):
    s = shell.shape[0]
    pair_i, pair_j = np.meshgrid(np.arange(s), np.arange(s), indexing="ij")
    pair_i, pair_j = pair_i.ravel(), pair_j.ravel()
    d34 = shell[pair_i] - shell[pair_j]
    w34 = b2[pair_i] * b2[pair_j]
    a34 = _flat_lookup_numpy(d34, aflat, side)
    n3 = shell[pair_i]
    n4 = shell[pair_j]

    l4 = 0.0
    s21 = 0.0 + 0.0j
    s11 = 0.0 + 0.0j
    for i1 in range(s):
        a13 = _flat_lookup_numpy(n3 + shell[i1], aflat, side).conj()
        for i2 in range(s):
            m12 = shell[i1] - shell[i2]
            au = _flat_lookup_numpy(m12 + d34, aflat, side)
            a12 = complex(_flat_lookup_numpy(m12[None, :], aflat, side)[0])
            w12 = b2[i1] * b2[i2]
            l4 += w12 * float(w34 @ (au.real**2 + au.imag**2))
            s21 += w12 * a12 * complex(w34 @ (a34 * au.conj()))
            a24 = _flat_lookup_numpy(n4 + shell[i2], aflat, side)
            s11 += w12 * a12 * complex(w34 @ (a13 * a24 * a34))
    return l4, s21.real, s21.imag, s11.real, s11.imag


if HAVE_NUMBA:

    @njit(cache=True)
    def freq_sums_numba(points, freqs):
        n, q = points.shape
        s = freqs.shape[0]
        out = np.zeros(s, dtype=np.complex128)
        for k in range(s):
            acc_re = 0.0
            acc_im = 0.0
            for p in range(n):
                phase = 0.0
                for d in range(q):
                    phase += freqs[k, d] * points[p, d]
                acc_re += math.cos(phase)
                acc_im += math.sin(phase)
            out[k] = acc_re + 1j * acc_im
        return out

    @njit(cache=True)
    def density_values_numba(points, fidx, fre, fim, norm):
        n, q = points.shape
        m = fidx.shape[0]
        out = np.empty(n)
        im_max = 0.0
        for p in range(n):
            acc_re = 0.0
            acc_im = 0.0
            for k in range(m):
                phase = 0.0
                for d in range(q):
                    phase += fidx[k, d] * points[p, d]
                c = math.cos(phase)
                si = math.sin(phase)
                acc_re += fre[k] * c - fim[k] * si
                acc_im += fre[k] * si + fim[k] * c
            out[p] = norm * acc_re
            if abs(acc_im) * norm > im_max:
                im_max = abs(acc_im) * norm
        return out, im_max

    @njit(cache=True)
    def needlet_cross_numba(points, centers, freqs, weights, scale):
        n, q = points.shape
        kk = centers.shape[0]
        s = freqs.shape[0]
        out = np.empty((n, kk))
        for p in range(n):
            for k in range(kk):
                acc = 0.0
                for t in range(s):
                    phase = 0.0
                    for d in range(q):
                        phase += freqs[t, d] * (points[p, d] - centers[k, d])
                    acc += weights[t] * math.cos(phase)
                out[p, k] = scale * acc
        return out

    @njit(cache=True, inline="always")
    def _aget(vec, aflat, side, off, q):
        idx = 0
        for d in range(q):
            m = vec[d] + off
            if m < 0 or m >= side:
                return 0.0 + 0.0j
            idx = idx * side + m
        return aflat[idx]

    @njit(cache=True)
    def variance_sum_numba(shell, b2, aflat, side):
        s, q = shell.shape
        off = (side - 1) // 2
        diff = np.empty(q, dtype=np.int64)
        total = 0.0
        for i in range(s):
            for j in range(s):
                for d in range(q):
                    diff[d] = shell[i, d] - shell[j, d]
                a = _aget(diff, aflat, side, off, q)
                total += b2[i] * b2[j] * (a.real * a.real + a.imag * a.imag)
        return total

    @njit(cache=True)
    def contraction_sums_numba(shell, b2, aflat, side):
        s, q = shell.shape
        off = (side - 1) // 2
        v = np.empty(q, dtype=np.int64)
        l4 = 0.0
        s21 = 0.0 + 0.0j
        s11 = 0.0 + 0.0j
        for i1 in range(s):
            for i2 in range(s):
                w12 = b2[i1] * b2[i2]
                for d in range(q):
                    v[d] = shell[i1, d] - shell[i2, d]
                a12 = _aget(v, aflat, side, off, q)
                for i3 in range(s):
                    for d in range(q):
                        v[d] = shell[i1, d] + shell[i3, d]
                    a13c = _aget(v, aflat, side, off, q).conjugate()
                    for i4 in range(s):
                        w = w12 * b2[i3] * b2[i4]
                        for d in range(q):
                            v[d] = shell[i3, d] - shell[i4, d]
                        a34 = _aget(v, aflat, side, off, q)
                        for d in range(q):
                            v[d] = (
                                shell[i1, d] - shell[i2, d] + shell[i3, d] - shell[i4, d]
                            )
                        au = _aget(v, aflat, side, off, q)
                        l4 += w * (au.real * au.real + au.imag * au.imag)
                        s21 += w * a12 * a34 * au.conjugate()
                        for d in range(q):
                            v[d] = shell[i2, d] + shell[i4, d]
                        a24 = _aget(v, aflat, side, off, q)
                        s11 += w * a12 * a34 * a13c * a24
        return l4, s21.real, s21.imag, s11.real, s11.imag

    freq_sums = freq_sums_numba
    density_values = density_values_numba
    needlet_cross = needlet_cross_numba
    variance_sum = variance_sum_numba
    contraction_sums = contraction_sums_numba
else:
    freq_sums_numba = None
    density_values_numba = None
    needlet_cross_numba = None
    variance_sum_numba = None
    contraction_sums_numba = None

    freq_sums = freq_sums_numpy
    density_values = density_values_numpy
    needlet_cross = needlet_cross_numpy
    variance_sum = variance_sum_numpy
    contraction_sums = contraction_sums_numpy


def active_path() -> str:
    return "numba" if HAVE_NUMBA else "numpy"
