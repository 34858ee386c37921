"""Pointed germs ``f : (R^n, a) -> (R^m, a')`` stored by their displacement action.

A :class:`Germ` never sees ``f`` itself, only ``x -> f(a + x) - f(a)``.  The
base points are ordinary float vectors; only displacements need extended
range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .scale import ScaleBatch, ShellSchedule, norm_ratio

Action = Callable[[ScaleBatch], ScaleBatch]


@dataclass(frozen=True)
class GermMeta:
    """Analytic facts about a germ.

    Every populated field is a claim that the test-suite checks against
    ``eval`` on samples.

    ``eval_floor_logmag`` marks the depth below which ``eval`` is no longer
    faithful (e.g. ``sin(1/x)`` once ``1/x`` overflows); analysis routines
    drop samples below it.  ``deep_zoom`` flags germs whose local behaviour
    only shows at depths far below the default schedule.
    """

    lipschitz_bound: float | None = None
    parity: str | None = None
    exact_fractal_ratio: float | None = None
    exact_positively_homogeneous: bool = False
    label: str = ""
    eval_floor_logmag: float = -math.inf
    deep_zoom: bool = False


@dataclass(frozen=True, eq=False)
class Germ:
    action: Action
    dim_in: int = 1
    dim_out: int = 1
    base: np.ndarray = field(default_factory=lambda: np.zeros(1))
    base_image: np.ndarray = field(default_factory=lambda: np.zeros(1))
    domain_radius: float = math.inf
    meta: GermMeta = GermMeta()

    def __post_init__(self):
        object.__setattr__(self, "base", np.atleast_1d(np.asarray(self.base, dtype=float)))
        object.__setattr__(self, "base_image",
                           np.atleast_1d(np.asarray(self.base_image, dtype=float)))
        if self.base.shape != (self.dim_in,) or self.base_image.shape != (self.dim_out,):
            raise ValueError("base / base_image do not match the germ dimensions")
        if not self.domain_radius > 0:
            raise ValueError("domain_radius must be positive")

    @property
    def label(self) -> str:
        return self.meta.label

    def __repr__(self):
        return f"Germ({self.label or 'anonymous'}, {self.dim_in}->{self.dim_out})"

    def eval(self, x: ScaleBatch) -> ScaleBatch:
        """Displacement action; zero rows map to zero without calling ``action``."""
        if x.dim != self.dim_in:
            raise ValueError(f"expected {self.dim_in}-d displacements, got {x.dim}")
        zero = x.is_zero()
        if not zero.any():
            out = self.action(x)
        else:
            out = ScaleBatch.zeros(len(x), self.dim_out)
            if not zero.all():
                live = np.flatnonzero(~zero)
                part = self.action(x[live])
                out = ScaleBatch(_scatter(len(x), live, part.scale),
                                 _scatter(len(x), live, part.mant, part.dim))
        if out.dim != self.dim_out:
            raise ValueError(f"action returned {out.dim}-d values, expected {self.dim_out}")
        return out

    def __call__(self, x):
        """Evaluate on ordinary float displacements; returns floats."""
        arr = np.asarray(x, dtype=float)
        flat = arr.reshape(-1, self.dim_in)
        out = self.eval(ScaleBatch.from_float(flat)).to_float()
        if self.dim_in == 1 and self.dim_out == 1:
            return out.reshape(arr.shape)
        return out

    def admissible(self, x: ScaleBatch) -> np.ndarray:
        """Rows inside the domain and above the faithful-evaluation floor."""
        ln = x.norm_log()
        ok = ln < math.log(self.domain_radius) if math.isfinite(self.domain_radius) \
            else np.ones(len(x), bool)
        return ok & ((ln >= self.meta.eval_floor_logmag) | ~np.isfinite(ln))

    def with_meta(self, **changes) -> Germ:
        return replace(self, meta=replace(self.meta, **changes))


def _scatter(n, idx, values, dim=None):
    if dim is None:
        out = np.zeros(n)
    else:
        out = np.zeros((n, dim))
    out[idx] = values
    return out


def same_frame(f: Germ, g: Germ) -> bool:
    return (f.dim_in == g.dim_in and f.dim_out == g.dim_out
            and np.array_equal(f.base, g.base) and np.array_equal(f.base_image, g.base_image))


def check_same_frame(f: Germ, g: Germ):
    if not same_frame(f, g):
        raise ValueError(f"germs {f!r} and {g!r} do not share base points and dimensions")


# ---------------------------------------------------------------------------
# elementary germs


def zero_germ(dim_in: int = 1, dim_out: int = 1, base=None, base_image=None) -> Germ:
    return Germ(lambda x: ScaleBatch(x.scale, np.zeros((len(x), dim_out))), dim_in, dim_out,
                np.zeros(dim_in) if base is None else base,
                np.zeros(dim_out) if base_image is None else base_image,
                meta=GermMeta(lipschitz_bound=0.0, exact_positively_homogeneous=True,
                              label="zero"))


def linear_germ(matrix, label: str | None = None) -> Germ:
    """Germ at 0 of ``x -> matrix @ x``."""
    a = np.atleast_2d(np.asarray(matrix, dtype=float))
    m, n = a.shape
    op = float(np.linalg.norm(a, 2))
    return Germ(lambda x: x.matmul(a), n, m, np.zeros(n), np.zeros(m),
                meta=GermMeta(lipschitz_bound=op, exact_positively_homogeneous=True,
                              parity="odd" if n == m == 1 else None,
                              label=label or f"linear{a.tolist()}"))


def identity_germ(dim: int = 1) -> Germ:
    return linear_germ(np.eye(dim), label="identity")


def scalar_multiple(lam: float) -> Germ:
    """The germ ``m_lambda : x -> lambda x`` at 0."""
    return linear_germ([[lam]], label=f"m[{lam!r}]")


# ---------------------------------------------------------------------------
# operations


def compose(g: Germ, f: Germ) -> Germ:
    """Germ of ``g . f`` at ``f.base``."""
    if f.dim_out != g.dim_in:
        raise ValueError("dimension mismatch in compose")
    if not np.array_equal(g.base, f.base_image):
        raise ValueError(f"base-point mismatch: g is based at {g.base}, f maps to {f.base_image}")
    radius = f.domain_radius
    if math.isfinite(g.domain_radius):
        lip = f.meta.lipschitz_bound
        if lip is None:
            lip = 2.0 * _sampled_bound(f)
        if not math.isfinite(lip):
            raise ValueError("no finite Lipschitz bound available to shrink the domain")
        if lip > 0:
            radius = min(radius, g.domain_radius / lip)
    mf, mg = f.meta, g.meta
    lip = None
    if mf.lipschitz_bound is not None and mg.lipschitz_bound is not None:
        lip = mf.lipschitz_bound * mg.lipschitz_bound
    ratio = mf.exact_fractal_ratio if mf.exact_fractal_ratio == mg.exact_fractal_ratio else None
    if mf.exact_positively_homogeneous and mg.exact_positively_homogeneous:
        # both commute with every positive scaling, hence with k-scaling too
        ratio = mf.exact_fractal_ratio or mg.exact_fractal_ratio
    elif mf.exact_positively_homogeneous and mg.exact_fractal_ratio is not None:
        ratio = mg.exact_fractal_ratio
    elif mg.exact_positively_homogeneous and mf.exact_fractal_ratio is not None:
        ratio = mf.exact_fractal_ratio
    meta = GermMeta(
        lipschitz_bound=lip,
        exact_fractal_ratio=ratio,
        exact_positively_homogeneous=mf.exact_positively_homogeneous
        and mg.exact_positively_homogeneous,
        label=f"{mg.label}∘{mf.label}",
        eval_floor_logmag=max(mf.eval_floor_logmag, mg.eval_floor_logmag),
        deep_zoom=mf.deep_zoom or mg.deep_zoom,
    )
    return Germ(lambda x: g.eval(f.eval(x)), f.dim_in, g.dim_out, f.base, g.base_image,
                radius, meta)


def _sampled_bound(f: Germ) -> float:
    r0 = min(f.domain_radius, 1.0) * 0.999
    sched = ShellSchedule.from_logs(math.log(r0), math.log(0.5), 4, 256)
    x, _ = sched.all_batches(f.dim_in)
    ok = f.admissible(x)
    r = norm_ratio(f.eval(x[np.flatnonzero(ok)]), x[np.flatnonzero(ok)])
    return float(np.nanmax(r)) if r.size else math.inf


def add(f: Germ, g: Germ) -> Germ:
    """Pointwise sum ``f + g`` (germs in the same frame; images add as displacements)."""
    if f.dim_in != g.dim_in or f.dim_out != g.dim_out or not np.array_equal(f.base, g.base):
        raise ValueError("germs must share base point and dimensions")
    lip = None
    if f.meta.lipschitz_bound is not None and g.meta.lipschitz_bound is not None:
        lip = f.meta.lipschitz_bound + g.meta.lipschitz_bound
    ratio = f.meta.exact_fractal_ratio if f.meta.exact_fractal_ratio == g.meta.exact_fractal_ratio \
        else None
    meta = GermMeta(lipschitz_bound=lip, exact_fractal_ratio=ratio,
                    exact_positively_homogeneous=f.meta.exact_positively_homogeneous
                    and g.meta.exact_positively_homogeneous,
                    label=f"{f.label}+{g.label}",
                    eval_floor_logmag=max(f.meta.eval_floor_logmag, g.meta.eval_floor_logmag),
                    deep_zoom=f.meta.deep_zoom or g.meta.deep_zoom)
    return Germ(lambda x: f.eval(x) + g.eval(x), f.dim_in, f.dim_out, f.base,
                f.base_image + g.base_image, min(f.domain_radius, g.domain_radius), meta)


def translate_to_zero(f: Germ) -> Germ:
    """The same displacement action, relabelled as a germ ``(R^n, 0) -> (R^m, 0)``."""
    if not f.base.any() and not f.base_image.any():
        return f
    return replace(f, base=np.zeros(f.dim_in), base_image=np.zeros(f.dim_out))


def homog_translate(h: Germ, a, a_image) -> Germ:
    """``h^a(x) = a' + h(x - a)``: move a germ at 0 to base ``a`` with image ``a'``."""
    if h.base.any() or h.base_image.any():
        raise ValueError("homog_translate expects a germ based at 0 with image 0")
    return replace(h, base=np.atleast_1d(np.asarray(a, dtype=float)),
                   base_image=np.atleast_1d(np.asarray(a_image, dtype=float)))


def stretch(f: Germ, new_radius: float = math.inf) -> Germ:
    """Extend by the constant ``a'`` (displacement 0) outside the old domain."""
    if new_radius < f.domain_radius:
        raise ValueError("stretch cannot shrink the domain; use restrict")
    if math.isinf(f.domain_radius):
        return replace(f, domain_radius=new_radius)
    log_old = math.log(f.domain_radius)

    def action(x: ScaleBatch) -> ScaleBatch:
        inside = np.flatnonzero(x.norm_log() < log_old)
        out_scale = x.scale.copy()
        out_mant = np.zeros((len(x), f.dim_out))
        if inside.size:
            part = f.eval(x[inside])
            out_scale[inside] = part.scale
            out_mant[inside] = part.mant
        return ScaleBatch(out_scale, out_mant)

    meta = replace(f.meta, label=f"stretch({f.label})")
    return replace(f, action=action, domain_radius=new_radius, meta=meta)


def restrict(f: Germ, radius: float) -> Germ:
    if radius > f.domain_radius:
        raise ValueError("restrict cannot enlarge the domain")
    return replace(f, domain_radius=radius)
