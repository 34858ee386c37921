"""Shellwise quasi-distances, jet norms, Lipschitz ratios and tangency.

All suprema are taken over the samples of a :class:`~jetzoom.scale.ShellSchedule`.
For each quantity we record the per-shell maximum and the cumulative
supremum from the inside, ``values[j] = max(per_shell[j:])``, which is the
sampled ``d^{r_j}`` and is nonincreasing in ``j``.

The reported limit is ``values[N - N//4]``, the supremum over the innermost
quarter of the shells.  The innermost shell alone is too thin to contain a
full oscillation of germs such as ``x sin(log|x|)``.  The estimate is
flagged as converged when the supremum over the innermost half agrees with
it to ``tol_conv`` (relative).
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np

from .germs import Germ, check_same_frame, zero_germ
from .scale import ScaleBatch, ScalePoint, ShellSchedule, norm_ratio

TOL = 1e-6
TOL_CONV = 1e-5
TOL_GAP = 1e-3


@dataclass(frozen=True, eq=False)
class LimitEstimate:
    log_radii: np.ndarray
    values: np.ndarray
    per_shell: np.ndarray
    estimate: float
    converged: bool
    tail_slope: float
    note: str = ""

    @property
    def shells(self) -> list[tuple[ScalePoint, float]]:
        return [(ScalePoint(1, float(r)), float(v)) for r, v in zip(self.log_radii, self.values)]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("shell_index,log_radius,value\n")
        for j, (r, v) in enumerate(zip(self.log_radii, self.values)):
            buf.write(f"{j},{float(r)!r},{float(v)!r}\n")
        return buf.getvalue()


def shell_max(values, shell_idx, n_shells: int) -> np.ndarray:
    """Per-shell maximum ignoring nan; shells without samples get nan."""
    out = np.full(n_shells, np.nan)
    v = np.asarray(values, dtype=float)
    np.fmax.at(out, np.asarray(shell_idx), v)
    return out


def limit_estimate(per_shell, s: ShellSchedule, tol_conv: float = TOL_CONV,
                   note: str = "") -> LimitEstimate:
    per_shell = np.asarray(per_shell, dtype=float)
    n = per_shell.size
    values = np.fmax.accumulate(per_shell[::-1])[::-1]
    q = n - max(1, n // 4)
    h = n - max(1, n // 2)
    est = float(values[q])
    half = float(values[h])
    converged = bool(np.isfinite(est) and np.isfinite(half)
                     and abs(half - est) <= tol_conv * max(1.0, abs(est)))
    tail = np.arange(q, n)
    tv = values[q:]
    fin = np.isfinite(tv)
    slope = float(np.polyfit(tail[fin], tv[fin], 1)[0]) if fin.sum() >= 2 else 0.0
    return LimitEstimate(s.radius_log(np.arange(n)), values, per_shell, est, converged, slope,
                         note)


def _default(s, f):
    if s is None:
        from .gallery import recommended_schedules
        return recommended_schedules(f)[0]
    return s


def quasi_distance(f: Germ, g: Germ, s: ShellSchedule | None = None,
                   tol_conv: float = TOL_CONV) -> LimitEstimate:
    """Sampled ``d^r(f, g) = sup ||f(x) - g(x)|| / ||x - a||`` and its limit."""
    check_same_frame(f, g)
    s = _default(s, f)
    x, idx = s.all_batches(f.dim_in)
    ok = np.flatnonzero(f.admissible(x) & g.admissible(x))
    xs = x[ok]
    r = norm_ratio(f.eval(xs) - g.eval(xs), xs)
    return limit_estimate(shell_max(r, idx[ok], s.shells), s, tol_conv)


def tangency_test(f: Germ, g: Germ, s: ShellSchedule | None = None, tol: float = TOL,
                  estimate: LimitEstimate | None = None) -> str:
    """``tangent``, ``not_tangent`` or ``inconclusive``.

    Tangency needs a converged limit below ``tol``.  Refutation needs the
    per-shell supremum (not the cumulative one) to stay above ``2 tol`` over
    the innermost quarter, so an isolated outer spike never refutes.
    """
    est = estimate if estimate is not None else quasi_distance(f, g, s)
    if est.converged and est.estimate < tol:
        return "tangent"
    n = est.per_shell.size
    tail = est.per_shell[n - max(1, n // 4):]
    tail = tail[np.isfinite(tail)]
    if tail.size and np.all(tail > 2 * tol):
        return "not_tangent"
    return "inconclusive"


# ---------------------------------------------------------------------------
# Lipschitz ratio


def _close_partners(x: ScaleBatch, rng, lo=1e-6, hi=1e-2) -> ScaleBatch:
    n = len(x)
    eps = np.exp(rng.uniform(math.log(lo), math.log(hi), n))
    if x.dim == 1:
        u = rng.choice([-1.0, 1.0], n)[:, None]
    else:
        u = rng.standard_normal((n, x.dim))
        u /= np.linalg.norm(u, axis=1, keepdims=True)
    nrm = np.linalg.norm(x.mant, axis=1, keepdims=True)
    return ScaleBatch(x.scale, x.mant + (eps[:, None] * nrm) * u)


def _within_shell_partner(n_shells, spp, rng) -> np.ndarray:
    base = np.arange(n_shells * spp)
    offs = rng.integers(1, max(spp, 2), n_shells) if spp > 1 else np.zeros(n_shells, int)
    j = base // spp
    return j * spp + (base % spp + offs[j]) % spp


def _refine_around(w: ScaleBatch, s: ShellSchedule, n: int = 64) -> tuple[ScaleBatch,
                                                                          ScaleBatch]:
    """Points around witnesses ``w`` (one per shell) paired with tight partners."""
    width = 2.0 * s.step / s.samples_per_shell
    d = np.linspace(-width, width, n)
    k = len(w)
    scale = np.repeat(np.asarray(w.scale), n)
    mant = np.repeat(w.mant, n, axis=0)
    if w.dim == 1:
        pts = ScaleBatch(scale, mant * np.exp(np.tile(d, k))[:, None])
        h = 1e-7
        part = ScaleBatch(scale, pts.mant * (1.0 + h))
    else:
        rng = np.random.default_rng([s.rng_seed, 7])
        u = rng.standard_normal(mant.shape)
        nrm = np.linalg.norm(mant, axis=1, keepdims=True)
        pts = ScaleBatch(scale, mant + np.tile(d, k)[:, None] * nrm * u / np.linalg.norm(
            u, axis=1, keepdims=True))
        v = rng.standard_normal(mant.shape)
        v /= np.linalg.norm(v, axis=1, keepdims=True)
        part = ScaleBatch(scale, pts.mant + 1e-7 * np.linalg.norm(pts.mant, axis=1,
                                                                  keepdims=True) * v)
    return pts, part


def _pair_slopes(f: Germ, xa: ScaleBatch, xb: ScaleBatch, s: ShellSchedule):
    ok = np.flatnonzero(f.admissible(xa) & f.admissible(xb))
    a, b = xa[ok], xb[ok]
    slope = norm_ratio(f.eval(a) - f.eval(b), a - b)
    shell = s.shell_of(np.fmax(a.norm_log(), b.norm_log()))
    return slope, shell, ok


def lipschitz_ratio(f: Germ, s: ShellSchedule | None = None,
                    tol_conv: float = TOL_CONV) -> LimitEstimate:
    """Sampled Lipschitz constant of ``f`` on shrinking balls around its base.

    Pairs: each sample against the base point, against a random point of
    its own shell, against a nearby point (relative offset 1e-6..1e-2) and
    against a point of the next shell; then a refinement around the best
    pair of each shell.  This is an estimate for the given representative;
    for exactly homogeneous germs it is the ratio of the jet itself.
    """
    s = _default(s, f)
    x, idx = s.all_batches(f.dim_in)
    spp, N = s.samples_per_shell, s.shells
    rng = np.random.default_rng([s.rng_seed, 1_000_003])
    zero = ScaleBatch.zeros(len(x), f.dim_in)
    partners = [
        zero,
        x[_within_shell_partner(N, spp, rng)],
        _close_partners(x, rng),
        x[np.where(idx + 1 < N, idx + 1, idx) * spp + rng.integers(0, spp, len(x))],
    ]
    slopes, shells = [], []
    best = np.full(N, -np.inf)
    witness = np.zeros(N, int)
    for y in partners:
        sl, sh, ok = _pair_slopes(f, x, y, s)
        slopes.append(sl)
        shells.append(sh)
        fin = np.isfinite(sl)
        if not fin.any():
            continue
        # witness of the current max in each shell
        order = np.lexsort((sl[fin], sh[fin]))
        last = np.r_[np.flatnonzero(np.diff(sh[fin][order])), order.size - 1]
        js = sh[fin][order][last]
        vals = sl[fin][order][last]
        better = vals > best[js]
        best[js[better]] = vals[better]
        witness[js[better]] = ok[fin][order][last][better]
    have = np.isfinite(best)
    if have.any():
        pts, part = _refine_around(x[witness[have]], s)
        sl, sh, _ = _pair_slopes(f, pts, part, s)
        slopes.append(sl)
        shells.append(sh)
    per_shell = shell_max(np.concatenate(slopes), np.concatenate(shells), N)
    note = "jet" if (f.meta.exact_positively_homogeneous
                     or f.meta.exact_fractal_ratio is not None) else "representative"
    return limit_estimate(per_shell, s, tol_conv, note)


# ---------------------------------------------------------------------------
# summary


@dataclass(frozen=True, eq=False)
class JetSummary:
    norm_to_zero: LimitEstimate
    rho: LimitEstimate
    good_jet: str


def jet_summary(f: Germ, s: ShellSchedule | None = None, tol_gap: float = TOL_GAP,
                tol_conv: float = TOL_CONV) -> JetSummary:
    """Norm ``d(f, 0)``, Lipschitz ratio, and the good-jet verdict.

    ``good`` when both limits converged and agree to ``tol_gap``;
    ``not_good`` when both converged and the ratio exceeds the norm by more
    than ``3 tol_gap``; otherwise ``inconclusive``.
    """
    s = _default(s, f)
    z = zero_germ(f.dim_in, f.dim_out, f.base, f.base_image)
    norm = quasi_distance(f, z, s, tol_conv)
    rho = lipschitz_ratio(f, s, tol_conv)
    verdict = "inconclusive"
    if norm.converged and rho.converged:
        gap = rho.estimate - norm.estimate
        if abs(gap) <= tol_gap:
            verdict = "good"
        elif gap > 3 * tol_gap:
            verdict = "not_good"
    return JetSummary(norm, rho, verdict)
