"""Distance to the triadic Cantor set K and to K_inf = union of 3^n K (n >= 0)."""

from __future__ import annotations

import math

import numpy as np

_THIRD = 1.0 / 3.0
_TWO_THIRDS = 2.0 / 3.0
_LN3 = math.log(3.0)


def _check(x, max_depth):
    if max_depth < 1:
        raise ValueError("max_depth must be >= 1")
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("dist_cantor / dist_kinf need finite input")
    return x


def dist_cantor(x, max_depth: int = 64):
    """Distance from ``x`` to the Cantor set, absolute error <= 3**-max_depth.

    Ternary descent: a point in the left or right third is mapped onto
    [0, 1] and the distance divided by 3; a point in the middle third is
    in a gap.  Points still undecided at ``max_depth`` count as inside.
    """
    x = _check(x, max_depth)
    scalar = x.ndim == 0
    y = np.atleast_1d(x).copy()
    out = np.zeros_like(y)
    scale = np.ones_like(y)
    live = np.ones(y.shape, bool)
    for _ in range(max_depth):
        if not live.any():
            break
        yl, sl = y[live], scale[live]
        res = np.full(yl.shape, np.nan)
        res = np.where(yl < 0.0, -yl, res)
        res = np.where(yl > 1.0, yl - 1.0, res)
        mid = (yl > _THIRD) & (yl < _TWO_THIRDS)
        res = np.where(mid, np.minimum(yl - _THIRD, _TWO_THIRDS - yl), res)
        done = ~np.isnan(res)
        idx = np.flatnonzero(live)
        out[idx[done]] = sl[done] * res[done]
        left = ~done & (yl <= _THIRD)
        yl = np.where(left, 3.0 * yl, 3.0 * yl - 2.0)
        y[idx] = yl
        scale[idx] = sl / 3.0
        live[idx[done]] = False
    return float(out[0]) if scalar else out


def _pow3(x, j):
    # 3**j is exact for |j| <= 33, so small rescalings round once
    small = np.abs(j) <= 33
    out = np.empty_like(x)
    out[small] = x[small] * np.power(3.0, j[small])
    big = ~small
    if big.any():
        half = j[big] // 2
        out[big] = x[big] * np.power(3.0, half) * np.power(3.0, j[big] - half)
    return out


def dist_kinf(x, max_depth: int = 64):
    """Distance from ``x`` to K_inf.

    K_inf is contained in [0, inf) and contains 0, so negative ``x`` is at
    distance ``|x|``.  For ``x >= 0``: the copies 3^n K are nested
    (K/3 is a subset of K) and ``K_inf`` meets ``[0, 3^n]`` exactly in
    ``3^n K``.  Every point of K_inf within ``d(x, K_inf) <= x`` of ``x``
    lies in ``[0, 2x]``, so once ``3^n >= 2x`` the n-th copy already holds
    the nearest point and no later copy can be nearer.  With
    ``n_max = ceil(log3(max(x, 1))) + 1`` we have ``3^n_max >= 3x``, which
    is enough.

    K_inf is also invariant under multiplication by 3 and by 1/3, so
    ``d(x, K_inf) = 3^-j d(3^j x, K_inf)``.  Positive inputs are first
    rescaled into ``[1/3, 1]``; this keeps the relative error small for tiny
    ``x`` where a plain descent would run out of depth.
    """
    x = _check(x, max_depth)
    scalar = x.ndim == 0
    xs = np.atleast_1d(x)
    out = np.where(xs < 0.0, -xs, 0.0)
    pos = np.flatnonzero(xs > 0.0)
    if pos.size:
        xp = xs[pos]
        j = np.floor(-np.log(xp) / _LN3).astype(int)
        y = _pow3(xp, j)
        # guard the log rounding at the edges of [1/3, 1]
        hi = y > 1.0
        y[hi], j[hi] = _pow3(y[hi], np.full(hi.sum(), -1)), j[hi] - 1
        lo = y < _THIRD
        y[lo], j[lo] = _pow3(y[lo], np.full(lo.sum(), 1)), j[lo] + 1
        best = np.full(y.shape, np.inf)
        n_max = 1  # ceil(log3(max(y, 1))) + 1 with y <= 1
        for n in range(n_max + 1):
            cand = 3.0 ** n * dist_cantor(y / 3.0 ** n, max_depth)
            best = np.minimum(best, cand)
        out[pos] = _pow3(best, -j)
    return float(out[0]) if scalar else out


def cantor_endpoints(depth: int) -> np.ndarray:
    """Endpoints of the 2**depth intervals of the depth-th Cantor stage."""
    lefts = np.zeros(1)
    width = 1.0
    for _ in range(depth):
        width /= 3.0
        lefts = np.concatenate([lefts, lefts + 2.0 * width])
    return np.sort(np.concatenate([lefts, lefts + width]))
