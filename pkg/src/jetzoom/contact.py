"""Valued monoids, homogeneity, contacts (zoom limits) and linear jets."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize
from scipy.stats import qmc

from .germs import Germ, GermMeta, check_same_frame
from .jets import TOL, limit_estimate, LimitEstimate, shell_max, tangency_test
from .scale import ScaleBatch, ScalePoint, ShellSchedule, default_schedule, norm_ratio

TOL_HOM = 1e-9
TOL_CONTACT = 1e-9
OSC_THRESHOLD = 0.5


@dataclass(frozen=True)
class ValuedMonoid:
    """One of ``R`` (valued by ``|t|``), ``R+`` or ``Nk`` = powers of ``k``."""

    kind: str
    k: float | None = None

    def __post_init__(self):
        if self.kind not in ("R", "R+", "Nk"):
            raise ValueError(f"unknown monoid kind {self.kind!r}")
        if self.kind == "Nk" and not (self.k is not None and 0.0 < self.k < 1.0):
            raise ValueError("powers-of-k monoid needs 0 < k < 1")

    @classmethod
    def reals(cls) -> ValuedMonoid:
        return cls("R")

    @classmethod
    def nonneg_reals(cls) -> ValuedMonoid:
        return cls("R+")

    @classmethod
    def powers_of(cls, k: float) -> ValuedMonoid:
        return cls("Nk", float(k))

    @classmethod
    def parse(cls, text: str) -> ValuedMonoid:
        t = text.strip()
        if t in ("R", "R+"):
            return cls(t)
        if t.startswith("Nk:"):
            from .gallery import parse_real
            return cls.powers_of(parse_real(t[3:]))
        raise ValueError(f"bad monoid {text!r}; expected R, R+ or Nk:<k>")

    def __str__(self):
        return f"Nk:{self.k!r}" if self.kind == "Nk" else self.kind

    def valuation(self, t):
        return np.abs(t) if self.kind == "R" else np.asarray(t)

    @property
    def default_steps(self) -> int:
        return 200 if self.kind == "Nk" else 400

    def zoom(self, n: int) -> tuple[float, float]:
        """``(log v, v)`` of the n-th zoom factor: ``k**n`` or ``exp(-n/2)``."""
        if self.kind == "Nk":
            return n * math.log(self.k), self.k ** n
        return -n / 2.0, math.exp(-n / 2.0)

    def probe_logs(self, rng: np.random.Generator, n: int = 8) -> list[tuple[float, float]]:
        """Valuations in ``(0, 1]`` used by the homogeneity test."""
        if self.kind == "Nk":
            return [self.zoom(i) for i in (1, 2, 3)]
        # negative t in R act through v(t) = |t|, i.e. like their absolute value
        lv = rng.uniform(-3.0, 0.0, n)
        return [(float(v), math.exp(v)) for v in lv]


def _unscale(b: ScaleBatch, lv: float, fv: float) -> ScaleBatch:
    if fv >= 1e-290:
        return ScaleBatch(b.scale, b.mant / fv)
    return ScaleBatch(b.scale - lv, b.mant)


# ---------------------------------------------------------------------------
# homogeneity


@dataclass(frozen=True, eq=False)
class HomogeneityReport:
    monoid: ValuedMonoid
    defect_by_shell: list[tuple[ScalePoint, float]]
    verdict: str
    max_defect: float


def homogeneity_test(h: Germ, m: ValuedMonoid, s: ShellSchedule | None = None,
                     tol_hom: float = TOL_HOM) -> HomogeneityReport:
    """Normalized defects ``||h(t*x) - t*h(x)|| / (v(t) ||x||)`` on shell samples."""
    if h.base.any() or h.base_image.any():
        raise ValueError("homogeneity_test expects a germ based at 0")
    s = s or default_schedule()
    x, idx = s.all_batches(h.dim_in)
    hx = h.eval(x)
    rng = np.random.default_rng([s.rng_seed, 31337])
    per_shell = np.full(s.shells, np.nan)
    for lv, fv in m.probe_logs(rng):
        tx = x.scaled(lv, fv)
        ok = np.flatnonzero(h.admissible(x) & h.admissible(tx))
        d = norm_ratio(h.eval(tx[ok]) - hx[ok].scaled(lv, fv), tx[ok])
        per_shell = np.fmax(per_shell, shell_max(d, idx[ok], s.shells))
    worst = float(np.nanmax(per_shell)) if np.isfinite(per_shell).any() else math.nan
    if worst <= tol_hom:
        verdict = "homogeneous"
    elif worst > 1e3 * tol_hom:
        verdict = "not_homogeneous"
    else:
        verdict = "inconclusive"
    rows = [(s.radius(j), float(v)) for j, v in enumerate(per_shell)]
    return HomogeneityReport(m, rows, verdict, worst)


def _monoid_from_meta(h: Germ) -> ValuedMonoid:
    if h.meta.exact_positively_homogeneous:
        return ValuedMonoid.nonneg_reals()
    if h.meta.exact_fractal_ratio is not None:
        return ValuedMonoid.powers_of(h.meta.exact_fractal_ratio)
    raise ValueError("hom_norm needs a monoid (germ metadata certifies none)")


def _sphere(dim: int, n: int, seed: int = 0) -> np.ndarray:
    pts = qmc.Sobol(dim, scramble=True, seed=seed).random(n)
    from scipy.stats import norm as _norm
    z = _norm.ppf(np.clip(pts, 1e-12, 1 - 1e-12))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def hom_norm(h: Germ, monoid: ValuedMonoid | None = None, samples: int = 4096) -> float:
    """``sup ||h(x)|| / ||x||`` of a homogeneous germ, from one annulus or sphere.

    Homogeneity carries the supremum over one fundamental domain to the whole
    space: the unit sphere for ``R``/``R+``, the annulus ``k < ||x|| <= 1``
    for powers of ``k``.  The best grid point is polished with a local
    optimizer.
    """
    m = monoid or _monoid_from_meta(h)

    def ratio_1d(L, sgn):
        x = ScaleBatch.from_logmag(sgn, L)
        return norm_ratio(h.eval(x), x)

    if h.dim_in == 1:
        if m.kind != "Nk":
            return float(np.max(ratio_1d(np.zeros(2), np.array([-1.0, 1.0]))))
        lk = math.log(m.k)
        grid = np.linspace(lk, 0.0, samples)
        best = 0.0
        for sgn in (-1.0, 1.0):
            r = ratio_1d(grid, np.full(grid.size, sgn))
            i = int(np.nanargmax(r))
            best = max(best, float(r[i]))
            lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, grid.size - 1)]
            if hi > lo:
                res = optimize.minimize_scalar(
                    lambda L: -float(ratio_1d(np.array([L]), np.array([sgn]))[0]),
                    bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
                best = max(best, -float(res.fun))
        return best

    d = h.dim_in
    u = _sphere(d, samples)
    if m.kind == "Nk":
        radii = np.linspace(math.log(m.k), 0.0, 16)
        u = np.repeat(u[: max(samples // 16, 256)], radii.size, axis=0)
        logs = np.tile(radii, len(u) // radii.size)
    else:
        logs = np.zeros(len(u))
    x = ScaleBatch.from_logmag(None, logs, direction=u)
    r = norm_ratio(h.eval(x), x)
    best = float(np.nanmax(r))

    def neg(z):
        nz = np.linalg.norm(z)
        if nz == 0:
            return 0.0
        xb = ScaleBatch(np.zeros(1), (z / nz)[None, :])
        return -float(norm_ratio(h.eval(xb), xb)[0])

    if m.kind != "Nk":
        for i in np.argsort(r)[-4:]:
            res = optimize.minimize(neg, u[i], method="Nelder-Mead",
                                    options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 4000})
            best = max(best, -float(res.fun))
    return best


# ---------------------------------------------------------------------------
# contacts


@dataclass(frozen=True, eq=False)
class ContactResult:
    monoid: ValuedMonoid
    verdict: str
    contact: Germ | None
    directions: np.ndarray
    log_v: np.ndarray
    traces: np.ndarray
    oscillation: np.ndarray
    alternations: np.ndarray = field(default=None)

    def trace_csv(self) -> str:
        lines = ["direction_id,n,log_v_t," + ",".join(
            f"quotient_component_{i}" for i in range(self.traces.shape[2]))]
        for d in range(self.traces.shape[0]):
            for n in range(self.traces.shape[1]):
                comps = ",".join(repr(float(q)) for q in self.traces[d, n])
                lines.append(f"{d},{n + 1},{float(self.log_v[n])!r},{comps}")
        return "\n".join(lines) + "\n"


class ContactNotFound(ValueError):
    pass


def _default_directions(dim: int) -> np.ndarray:
    if dim == 1:
        return np.array([[-1.0], [1.0]])
    e = np.eye(dim)
    return np.vstack([e, -e])


def _sign_changes(d: np.ndarray) -> int:
    s = np.sign(d[d != 0])
    return int(np.count_nonzero(s[1:] != s[:-1]))


def contact_germ(f: Germ, m: ValuedMonoid, n: int) -> Germ:
    """The homogeneous germ ``y -> f(v_n y) / v_n`` made exactly homogeneous.

    For ``R``/``R+`` the quotient is read on the unit sphere and extended
    by positive scaling; for powers of ``k`` it is read on the annulus
    ``k < ||y|| <= 1`` and extended by ``h(k y) = k h(y)``.
    """
    lv, fv = m.zoom(n)

    def quotient(u: ScaleBatch) -> ScaleBatch:
        return _unscale(f.eval(u.scaled(lv, fv)), lv, fv)

    if m.kind == "Nk":
        lk = math.log(m.k)

        def action(y: ScaleBatch) -> ScaleBatch:
            ln = y.norm_log()
            j = np.floor(ln / lk)
            # guard rounding at the annulus edges
            j = np.where(ln - j * lk > 0.0, j + 1, j)
            j = np.where(ln - j * lk <= lk, j - 1, j)
            small = np.abs(j * lk) < 600.0
            fac = np.where(small, m.k ** np.where(small, j, 0.0), 1.0)
            u = ScaleBatch(np.where(small, y.scale, y.scale - j * lk), y.mant / fac[:, None])
            q = quotient(u)
            return ScaleBatch(np.where(small, q.scale, q.scale + j * lk), q.mant * fac[:, None])

        meta = GermMeta(exact_fractal_ratio=m.k, label=f"contact[{m}]({f.label})")
    else:

        def action(y: ScaleBatch) -> ScaleBatch:
            ln, unit = y.split_rows()
            q = quotient(ScaleBatch(np.zeros(len(y)), unit))
            return ScaleBatch(q.scale + ln, q.mant)

        meta = GermMeta(exact_positively_homogeneous=True, label=f"contact[{m}]({f.label})")
    return Germ(action, f.dim_in, f.dim_out, np.zeros(f.dim_in), np.zeros(f.dim_out), meta=meta)


def extract_contact(f: Germ, m: ValuedMonoid, directions=None, n_steps: int | None = None,
                    tol_contact: float = TOL_CONTACT,
                    osc_threshold: float = OSC_THRESHOLD) -> ContactResult:
    """Zoom quotients ``q_n(x) = (f(a + v_n x) - f(a)) / v_n`` and their verdict.

    ``found``: every direction's tail (last quarter) is Cauchy within
    ``tol_contact``.  ``refuted``: some tail oscillates by more than
    ``osc_threshold`` with at least 3 sign changes about its mean.
    """
    n_steps = n_steps or m.default_steps
    if n_steps < 16:
        raise ValueError("extract_contact needs n_steps >= 16")
    dirs = _default_directions(f.dim_in) if directions is None else np.asarray(
        directions, dtype=float).reshape(-1, f.dim_in)
    if np.any(np.abs(np.linalg.norm(dirs, axis=1) - 1.0) > 1e-12):
        raise ValueError("contact directions must be unit vectors")
    nd = len(dirs)
    u = ScaleBatch(np.zeros(nd), dirs)
    traces = np.full((nd, n_steps, f.dim_out), np.nan)
    log_v = np.empty(n_steps)
    for i, n in enumerate(range(1, n_steps + 1)):
        lv, fv = m.zoom(n)
        log_v[i] = lv
        p = u.scaled(lv, fv)
        ok = np.flatnonzero(f.admissible(p))
        if ok.size:
            traces[ok, i] = _unscale(f.eval(p[ok]), lv, fv).to_float()
    tail = traces[:, n_steps - max(4, n_steps // 4):, :]
    with np.errstate(invalid="ignore"):
        osc = np.max(np.max(tail, axis=1) - np.min(tail, axis=1), axis=1)
        size = np.maximum(1.0, np.max(np.abs(tail), axis=(1, 2)))
    alt = np.zeros(nd, int)
    for d in range(nd):
        if np.all(np.isfinite(tail[d])):
            c = int(np.argmax(np.ptp(tail[d], axis=0)))
            alt[d] = _sign_changes(tail[d, :, c] - tail[d, :, c].mean())
    finite = np.isfinite(osc)
    if np.all(finite) and np.all(osc <= tol_contact * size):
        verdict = "found"
        contact = contact_germ(f, m, n_steps)
    else:
        contact = None
        refuted = finite & (osc > osc_threshold) & (alt >= 3)
        verdict = "refuted" if refuted.any() else "inconclusive"
    return ContactResult(m, verdict, contact, dirs, log_v, traces, osc, alt)


@dataclass(frozen=True, eq=False)
class NeofractalScan:
    results: list[tuple[float, ContactResult]]
    summary: str


def neofractal_scan(f: Germ, k_grid, directions=None, n_steps: int | None = None) -> NeofractalScan:
    ks = [float(k) for k in k_grid]
    if not ks:
        raise ValueError("neofractal_scan needs a nonempty grid")
    res = [(k, extract_contact(f, ValuedMonoid.powers_of(k), directions, n_steps)) for k in ks]
    found = [k for k, r in res if r.verdict == "found"]
    if found:
        summary = "neofractal at k = " + ", ".join(repr(k) for k in found)
    elif all(r.verdict == "refuted" for _, r in res):
        summary = "not neofractal on grid"
    else:
        summary = "inconclusive"
    return NeofractalScan(res, summary)


# ---------------------------------------------------------------------------
# linear jets

SCALARS = (-1.0, 0.5, -0.5, 2.0, -2.0, math.e, -math.e)


@dataclass(frozen=True, eq=False)
class LinearityReport:
    verdict: str
    additivity: LimitEstimate
    scaling: LimitEstimate
    additivity_decay: float
    scaling_decay: float

    @property
    def log_radii(self):
        return self.additivity.log_radii


def _decay_order(per_shell: np.ndarray, log_radii: np.ndarray) -> float:
    """Slope of log(defect) against log|log r| over the inner half of the shells."""
    n = per_shell.size
    sl = slice(n - max(2, n // 2), n)
    y, lr = per_shell[sl], np.abs(log_radii[sl]) + 1.0
    ok = np.isfinite(y) & (y > 0)
    if ok.sum() < 2 or np.ptp(np.log(lr[ok])) == 0:
        return 0.0
    return float(np.polyfit(np.log(lr[ok]), np.log(y[ok]), 1)[0])


def linearity_defects(f: Germ, s: ShellSchedule) -> tuple[np.ndarray, np.ndarray]:
    """Per-shell sups of the additivity and scaling defects of ``f`` at 0.

    Additivity: ``||f(x+y) - f(x) - f(y)|| / ||(x, y)||`` with ``y = +-x``,
    ``y`` at relative sizes 1 and 0.1 (times a factor in [1/2, 2]) and at
    ``exp(-sqrt(|log||x|||))``.  Scaling: ``||f(lx) - l f(x)|| / ||x||`` for
    ``l`` in {-1, +-0.5, +-2, +-e}.
    """
    if f.base.any() or f.base_image.any():
        raise ValueError("linearity_test expects a germ based at 0")
    x, idx = s.all_batches(f.dim_in)
    n = len(x)
    rng = np.random.default_rng([s.rng_seed, 4242])
    ln = x.norm_log()
    fx = f.eval(x)
    add = np.full(s.shells, np.nan)

    def direction():
        if f.dim_in == 1:
            return rng.choice([-1.0, 1.0], n)[:, None] * np.abs(x.mant)
        v = rng.standard_normal((n, f.dim_in))
        return v / np.linalg.norm(v, axis=1, keepdims=True) * np.linalg.norm(
            x.mant, axis=1, keepdims=True)

    ys = [x, -x]
    for rel in (1.0, 0.1):
        w = np.exp(rng.uniform(-math.log(2.0), math.log(2.0), n))[:, None]
        ys.append(ScaleBatch(x.scale, direction() * rel * w))
    ys.append(ScaleBatch(x.scale - np.sqrt(np.abs(ln)), direction()))
    for y in ys:
        xy = x + y
        ok = np.flatnonzero(f.admissible(x) & f.admissible(y) & f.admissible(xy))
        d = norm_ratio(f.eval(xy[ok]) - fx[ok] - f.eval(y[ok]), x[ok].hstack(y[ok]))
        add = np.fmax(add, shell_max(d, idx[ok], s.shells))
    scl = np.full(s.shells, np.nan)
    for lam in SCALARS:
        lx = x.times(lam)
        ok = np.flatnonzero(f.admissible(x) & f.admissible(lx))
        d = norm_ratio(f.eval(lx[ok]) - fx[ok].times(lam), x[ok])
        scl = np.fmax(scl, shell_max(d, idx[ok], s.shells))
    return add, scl


def linearity_test(f: Germ, s: ShellSchedule | None = None, tol: float = TOL) -> LinearityReport:
    """``linear_jet``, ``not_linear`` or ``inconclusive``.

    Linear when both defect limits (inner-quarter sups) are <= ``tol``.
    Not linear when a per-shell defect stays above ``2 tol`` over the inner
    quarter and shows no decay (log-log slope against ``|log r|`` above
    -1/2).  Germs like ``x sin(log|log|x||)`` whose defects decay like
    ``1/|log r|`` are inconclusive until the schedule reaches deep enough.
    """
    if s is None:
        from .gallery import recommended_schedules
        s = recommended_schedules(f)[1]
    add, scl = linearity_defects(f, s)
    ea, es = limit_estimate(add, s), limit_estimate(scl, s)
    da, ds = _decay_order(add, ea.log_radii), _decay_order(scl, es.log_radii)
    if ea.estimate <= tol and es.estimate <= tol:
        verdict = "linear_jet"
    else:
        verdict = "inconclusive"
        n = s.shells
        for ps, decay in ((add, da), (scl, ds)):
            tail = ps[n - max(1, n // 4):]
            tail = tail[np.isfinite(tail)]
            if tail.size and np.all(tail > 2 * tol) and decay > -0.5:
                verdict = "not_linear"
    return LinearityReport(verdict, ea, es, da, ds)


# ---------------------------------------------------------------------------
# consistency between tangential linearity and contacts


@dataclass(frozen=True, eq=False)
class ConsistencyReport:
    linearity: LinearityReport
    contacts: dict[str, ContactResult]
    matrix: np.ndarray | None
    residual: float | None
    contact_linear: bool | None
    differentiable: bool | None
    consistent: bool


def fit_matrix(h: Germ, n_probe: int = 64) -> tuple[np.ndarray, float]:
    """Matrix from ``h`` on basis vectors, and the worst relative residual."""
    e = ScaleBatch(np.zeros(h.dim_in), np.eye(h.dim_in))
    mat = h.eval(e).to_float().T
    if h.dim_in == 1:
        probe = np.concatenate([np.array([-1.0, 1.0]), np.linspace(-2.0, 2.0, n_probe)])
        probe = probe[probe != 0][:, None]
    else:
        probe = _sphere(h.dim_in, n_probe, seed=3)
    y = ScaleBatch(np.zeros(len(probe)), probe)
    resid = norm_ratio(h.eval(y) - y.matmul(mat), y)
    return mat, float(np.max(resid))


def tl_and_contact_consistency(f: Germ, monoids, s: ShellSchedule | None = None,
                               tol: float = 1e-8) -> ConsistencyReport:
    """Check that tangential linearity plus a contact forces a linear contact.

    If the linearity test passes and some monoid yields a contact, the
    contact must be linear: homogeneous under ``R``, additive, and equal to
    the matrix read off the basis vectors up to ``tol``.
    """
    if isinstance(monoids, ValuedMonoid):
        monoids = [monoids]
    lin = linearity_test(f, s)
    contacts = {str(m): extract_contact(f, m) for m in monoids}
    found = [r for r in contacts.values() if r.verdict == "found"]
    matrix = residual = contact_linear = None
    if found:
        h = found[0].contact
        matrix, residual = fit_matrix(h)
        hom = homogeneity_test(h, ValuedMonoid.reals())
        add = linearity_test(h, default_schedule())
        contact_linear = (residual <= tol and hom.verdict == "homogeneous"
                          and add.verdict == "linear_jet")
    tl = lin.verdict == "linear_jet"
    if found:
        differentiable = bool(contact_linear)
    elif tl and all(r.verdict != "found" for r in contacts.values()):
        differentiable = None
    else:
        differentiable = None
    consistent = True
    if tl and found and not contact_linear:
        consistent = False
    if found and contact_linear and lin.verdict == "not_linear":
        consistent = False
    return ConsistencyReport(lin, contacts, matrix, residual, contact_linear, differentiable,
                             consistent)


# ---------------------------------------------------------------------------
# equidistribution of n alpha + gamma


@dataclass(frozen=True, eq=False)
class EquidistributionReport:
    values: np.ndarray
    largest_gap: float
    tail_oscillation: float
    n_distinct: int


def equidistribution_check(alpha: float, gamma: float = 0.0, n: int = 1000) -> EquidistributionReport:
    """Spread of ``x_n = sin(2 pi n alpha + gamma)`` for ``0 <= n < N``."""
    if n < 100:
        raise ValueError("equidistribution_check needs n >= 100")
    k = np.arange(n)
    # reduce n alpha mod 1 first so large n keep full phase precision
    phase = np.mod(k * alpha, 1.0)
    x = np.sin(2.0 * math.pi * phase + gamma)
    xs = np.sort(x)
    gap = float(np.max(np.diff(xs))) if n > 1 else 0.0
    tail = x[n // 2:]
    distinct = int(np.count_nonzero(np.diff(xs) > 1e-9)) + 1
    return EquidistributionReport(x, gap, float(tail.max() - tail.min()), distinct)


def check_tangent_to_source(result: ContactResult, f: Germ, s: ShellSchedule | None = None) -> str:
    """Tangency verdict between a found contact and its source germ (moved to 0)."""
    from .germs import translate_to_zero
    g = translate_to_zero(f)
    check_same_frame(g, result.contact)
    return tangency_test(result.contact, g, s)
