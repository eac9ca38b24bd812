"""Numba kernels for spectral sums over the (l, m) index set.

All kernels consume a packed description of the active index set: for each
order m in 0..mmax, rows l = m..lhi[m] live at packed positions
start[m] + (l - m), and fvals holds the multiplier value at the pair's
eigenvalue.  Sums include the m < 0 partners through the weight 2 for m > 0
(profiles have the same magnitude for +-m and built-in multipliers depend on
m only through lambda).

Kernels that can meet degrees beyond ~1500 track a per-point log offset so
seeds below the double range still contribute once their magnitude recovers.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from .harmonics import _rec_c, _rec_d, _seed_log

_BIG = 1e270
_LOG_BIG = math.log(_BIG)


@njit(cache=True, nogil=True)
def _profile_run(m, l_hi, x, out):
    """Fill out[l - m] = Ytilde_{l,m}(x) for l = m..l_hi (plain float64)."""
    s = _seed_log(m, x)
    y1 = math.exp(s) if s > -745.0 else 0.0
    if m % 2 == 1:
        y1 = -y1
    out[0] = y1
    if l_hi == m:
        return
    y0 = y1
    y1 = _rec_c(m + 1, m) * x * y0
    out[1] = y1
    for el in range(m + 2, l_hi + 1):
        y2 = _rec_c(el, m) * x * y1 - _rec_d(el, m) * y0
        y0 = y1
        y1 = y2
        out[el - m] = y1


@njit(cache=True, nogil=True)
def gcols(mmax, lhi, start, fvals, xnodes, xprimes):
    """G[m, i, q] = sum_l fvals * Ytilde_{l,m}(xnodes[i]) * Ytilde_{l,m}(xprimes[q]).

    Plain float64 recurrences: callers guarantee max(lhi) <= ~1500 so seeds
    in the double range are the only ones that matter.  The m and -m terms
    are merged (weight 2 for m > 0).
    """
    nx = xnodes.shape[0]
    nq = xprimes.shape[0]
    G = np.zeros((mmax + 1, nx, nq))
    width = 0
    for m in range(mmax + 1):
        if lhi[m] - m + 1 > width:
            width = lhi[m] - m + 1
    bufs = np.empty((nq, width))
    for m in range(mmax + 1):
        if lhi[m] < m:
            continue
        w = 1.0 if m == 0 else 2.0
        for q in range(nq):
            _profile_run(m, lhi[m], xprimes[q], bufs[q])
        for i in range(nx):
            x = xnodes[i]
            s = _seed_log(m, x)
            y1 = math.exp(s) if s > -745.0 else 0.0
            if m % 2 == 1:
                y1 = -y1
            y0 = 0.0
            for el in range(m, lhi[m] + 1):
                if el == m + 1:
                    y0 = y1
                    y1 = _rec_c(m + 1, m) * x * y0
                elif el > m + 1:
                    y2 = _rec_c(el, m) * x * y1 - _rec_d(el, m) * y0
                    y0 = y1
                    y1 = y2
                f = fvals[start[m] + el - m]
                if f != 0.0 and y1 != 0.0:
                    v = w * f * y1
                    for q in range(nq):
                        G[m, i, q] += v * bufs[q, el - m]
    return G


@njit(cache=True, nogil=True)
def sum_f2y2(mmax, lhi, start, f2vals, xpoints):
    """S[j] = sum over pairs of f2vals * Ytilde_{l,m}(xpoints[j])^2.

    Offset-tracked, so arbitrary degrees are fine.  f2vals is |F(lambda)|^2
    packed like fvals; +-m merged via weight 2.
    """
    npt = xpoints.shape[0]
    S = np.zeros(npt)
    for j in range(npt):
        x = xpoints[j]
        acc = 0.0
        for m in range(mmax + 1):
            if lhi[m] < m:
                continue
            w = 1.0 if m == 0 else 2.0
            slog = _seed_log(m, x)
            if slog == -np.inf:
                continue
            off = slog
            scale = math.exp(off) if off > -700.0 else 0.0
            y1 = 1.0
            f = f2vals[start[m]]
            if f != 0.0:
                v = y1 * scale
                acc += w * f * v * v
            if lhi[m] == m:
                continue
            y0 = y1
            y1 = _rec_c(m + 1, m) * x * y0
            for el in range(m + 1, lhi[m] + 1):
                if el > m + 1:
                    y2 = _rec_c(el, m) * x * y1 - _rec_d(el, m) * y0
                    y0 = y1
                    y1 = y2
                    ay = abs(y1)
                    if ay > _BIG:
                        y0 *= 1.0 / _BIG
                        y1 *= 1.0 / _BIG
                        off += _LOG_BIG
                        scale = math.exp(off) if off > -700.0 else 0.0
                    elif 0.0 < ay < 1.0 / _BIG:
                        y0 *= _BIG
                        y1 *= _BIG
                        off -= _LOG_BIG
                        scale = math.exp(off) if off > -700.0 else 0.0
                f = f2vals[start[m] + el - m]
                if f != 0.0 and scale != 0.0:
                    v = y1 * scale
                    acc += w * f * v * v
        S[j] = acc
    return S


@njit(cache=True, nogil=True)
def weighted_s_chunk(mmax, lhi, start, fvals, xnodes, ybufs):
    """S[q, i] = sum_m w_m (sum_l fvals * Y_l(xnodes[i]) * Ybuf_l(xprime_q))^2.

    ybufs[q, start[m] + (l - m)] holds precomputed Ytilde_{l,m}(xprime_q) in
    the same packed layout as fvals; the caller chunks xnodes across
    threads.  Offset tracking on the node recurrence keeps deep-seed pairs
    contributing.
    """
    nx = xnodes.shape[0]
    nq = ybufs.shape[0]
    S = np.zeros((nq, nx))
    g = np.zeros(nq)
    for i in range(nx):
        x = xnodes[i]
        for m in range(mmax + 1):
            if lhi[m] < m:
                continue
            w = 1.0 if m == 0 else 2.0
            slog = _seed_log(m, x)
            if slog == -np.inf:
                continue
            for q in range(nq):
                g[q] = 0.0
            off = slog
            scale = math.exp(off) if off > -700.0 else 0.0
            y0 = 0.0
            y1 = 1.0
            for el in range(m, lhi[m] + 1):
                if el == m + 1:
                    y0 = y1
                    y1 = _rec_c(m + 1, m) * x * y0
                elif el > m + 1:
                    y2 = _rec_c(el, m) * x * y1 - _rec_d(el, m) * y0
                    y0 = y1
                    y1 = y2
                    ay = abs(y1)
                    if ay > _BIG:
                        y0 *= 1.0 / _BIG
                        y1 *= 1.0 / _BIG
                        off += _LOG_BIG
                        scale = math.exp(off) if off > -700.0 else 0.0
                    elif 0.0 < ay < 1.0 / _BIG:
                        y0 *= _BIG
                        y1 *= _BIG
                        off -= _LOG_BIG
                        scale = math.exp(off) if off > -700.0 else 0.0
                f = fvals[start[m] + el - m]
                if f != 0.0 and scale != 0.0:
                    v = f * y1 * scale
                    for q in range(nq):
                        g[q] += v * ybufs[q, start[m] + el - m]
            for q in range(nq):
                S[q, i] += w * g[q] * g[q]
    return S


@njit(cache=True, nogil=True)
def profile_rows_scaled(mmax, lhi, start, npairs, xprimes):
    """ybufs[q, start[m]+(l-m)] = Ytilde_{l,m}(xprimes[q]), offset-tracked."""
    nq = xprimes.shape[0]
    out = np.zeros((nq, npairs))
    for m in range(mmax + 1):
        if lhi[m] < m:
            continue
        sgn = -1.0 if m % 2 == 1 else 1.0
        for q in range(nq):
            x = xprimes[q]
            slog = _seed_log(m, x)
            if slog == -np.inf:
                continue
            off = slog
            scale = math.exp(off) if off > -700.0 else 0.0
            y0 = 0.0
            y1 = 1.0
            out[q, start[m]] = sgn * y1 * scale
            for el in range(m + 1, lhi[m] + 1):
                if el == m + 1:
                    y0 = y1
                    y1 = _rec_c(m + 1, m) * x * y0
                else:
                    y2 = _rec_c(el, m) * x * y1 - _rec_d(el, m) * y0
                    y0 = y1
                    y1 = y2
                    ay = abs(y1)
                    if ay > _BIG:
                        y0 *= 1.0 / _BIG
                        y1 *= 1.0 / _BIG
                        off += _LOG_BIG
                        scale = math.exp(off) if off > -700.0 else 0.0
                    elif 0.0 < ay < 1.0 / _BIG:
                        y0 *= _BIG
                        y1 *= _BIG
                        off -= _LOG_BIG
                        scale = math.exp(off) if off > -700.0 else 0.0
                out[q, start[m] + el - m] = sgn * y1 * scale
    return out


@njit(cache=True, nogil=True)
def plancherel_sums(xs, i_max, eps, alphas, high_regime):
    """Block sums behind the weighted Plancherel estimates.

    out[j, i-1, a] = sum over (l, m) with lambda in [i^2, (i+1)^2] and the
    regime filter (|m| >= eps[l] if high_regime else |m| <= eps[l]) of
    lambda^alpha |m|^{-2 alpha} |Ytilde_{l,m}(x_j)|^2   (alpha = 0 in the low
    regime; the alphas axis is still present for a uniform shape).
    Normalizations (1/i and the max{1/i,|x|} factor) are applied by callers.
    """
    nx = xs.shape[0]
    na = alphas.shape[0]
    lam_top = float((i_max + 1) * (i_max + 1))
    out = np.zeros((nx, i_max, na))
    mmax = int(lam_top)
    for j in range(nx):
        x = xs[j]
        for m in range(mmax + 1):
            l_hi = int(math.floor(math.sqrt(m * m + lam_top + 0.25) - 0.5 + 1e-9))
            if high_regime:
                lim = int(math.floor(m / eps - 0.5 + 1e-9))
                if l_hi > lim:
                    l_hi = lim
            if l_hi < m:
                continue
            w = 1.0 if m == 0 else 2.0
            slog = _seed_log(m, x)
            if slog == -np.inf:
                continue
            off = slog
            scale = math.exp(off) if off > -700.0 else 0.0
            y0 = 0.0
            y1 = 1.0
            for el in range(m, l_hi + 1):
                if el == m + 1:
                    y0 = y1
                    y1 = _rec_c(m + 1, m) * x * y0
                elif el > m + 1:
                    y2 = _rec_c(el, m) * x * y1 - _rec_d(el, m) * y0
                    y0 = y1
                    y1 = y2
                    ay = abs(y1)
                    if ay > _BIG:
                        y0 *= 1.0 / _BIG
                        y1 *= 1.0 / _BIG
                        off += _LOG_BIG
                        scale = math.exp(off) if off > -700.0 else 0.0
                    elif 0.0 < ay < 1.0 / _BIG:
                        y0 *= _BIG
                        y1 *= _BIG
                        off -= _LOG_BIG
                        scale = math.exp(off) if off > -700.0 else 0.0
                if high_regime:
                    if m < eps * (el + 0.5):
                        continue
                elif m > eps * (el + 0.5):
                    continue
                lam = float(el * (el + 1) - m * m)
                if scale == 0.0:
                    continue
                v = y1 * scale
                v2 = w * v * v
                if v2 == 0.0:
                    continue
                # closed blocks [i^2, (i+1)^2] overlap at exact squares
                i_lo = int(math.floor(math.sqrt(lam)))
                for i in range(max(i_lo - 1, 1), min(i_lo, i_max) + 1):
                    if lam < float(i * i) or lam > float((i + 1) * (i + 1)):
                        continue
                    for a in range(na):
                        alpha = alphas[a]
                        if alpha == 0.0:
                            out[j, i - 1, a] += v2
                        elif m > 0:
                            out[j, i - 1, a] += lam**alpha * float(m) ** (-2.0 * alpha) * v2
    return out
