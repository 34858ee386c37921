"""First-order optimality checks built on contacts."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import mpmath
import numpy as np

from .contact import ContactNotFound, ValuedMonoid, _sphere, extract_contact, hom_norm
from .germs import Germ, GermMeta
from .scale import ScaleBatch

TOL_POS = 1e-6
R_CHECK = 1e-3

__all__ = ["SegmentCheck", "ContactMinReport", "StrictMinReport", "ContactNotFound",
           "CannotCertify", "germ_at", "mean_value_check", "contact_min_check",
           "strict_min_certifier"]


class CannotCertify(ValueError):
    pass


def germ_at(fn: Callable, c: float, max_depth: float, label: str = "") -> Germ:
    """Germ of a 1-d real function ``fn`` at ``c``, displacements in mpmath.

    ``fn`` must accept mpmath numbers.  ``max_depth`` is the largest
    ``-log|x|`` the caller will use; the working precision covers it.
    """
    dps = int(math.ceil(max_depth / math.log(10.0))) + 30
    c = float(c)

    def action(x: ScaleBatch) -> ScaleBatch:
        out = np.empty(len(x))
        with mpmath.workdps(dps):
            cm = mpmath.mpf(c)
            fc = fn(cm)
            for i, (s, m) in enumerate(zip(x.scale, x.mant[:, 0])):
                z = mpmath.mpf(float(m)) * mpmath.exp(float(s))
                out[i] = float((fn(cm + z) - fc) / mpmath.exp(float(s)))
        return ScaleBatch(x.scale, out)

    return Germ(action, 1, 1, [c], [float(fn(mpmath.mpf(c)))],
                meta=GermMeta(label=label or f"germ_at[{c!r}]"))


def _as_function(f) -> tuple[Callable, str]:
    if isinstance(f, str):
        from .gallery import point_function
        return point_function(f), f
    if callable(f):
        return f, getattr(f, "__name__", "f")
    raise TypeError("mean_value_check needs a germ name or an mpmath-capable function")


@dataclass(frozen=True)
class SegmentCheck:
    a: float
    b: float
    samples: int
    k_used: float
    lhs: float
    rhs: float
    holds: bool
    skipped: int = 0


def mean_value_check(f, a: float, b: float, m: ValuedMonoid | None = None, grid: int = 32,
                     n_steps: int = 100, k_factor: float = 1.0) -> SegmentCheck:
    """Check ``|f(b) - f(a)| <= k |b - a|`` with ``k`` the largest contact norm on the grid.

    ``f`` is a gallery name or a real function accepting mpmath numbers.
    Contacts are extracted at ``grid`` interior points; up to ``grid/4``
    points without a found contact are tolerated as an exceptional set.
    ``k_factor`` rescales ``k`` (used to probe sharpness).
    """
    if grid < 8:
        raise ValueError("mean_value_check needs grid >= 8")
    m = m or ValuedMonoid.nonneg_reals()
    fn, label = _as_function(f)
    depth = -min(m.zoom(n_steps)[0], m.zoom(1)[0]) + 5.0
    k, skipped = 0.0, 0
    for i in range(1, grid + 1):
        c = a + (b - a) * i / (grid + 1)
        res = extract_contact(germ_at(fn, c, depth, label), m, n_steps=n_steps)
        if res.verdict != "found":
            skipped += 1
            continue
        k = max(k, hom_norm(res.contact, m))
    if skipped > grid / 4:
        raise CannotCertify(f"{skipped} of {grid} grid points have no contact")
    k *= k_factor
    with mpmath.workdps(40):
        lhs = float(abs(fn(mpmath.mpf(b)) - fn(mpmath.mpf(a))))
    rhs = k * abs(b - a)
    return SegmentCheck(float(a), float(b), grid, k, lhs, rhs, lhs <= rhs + 1e-12, skipped)


@dataclass(frozen=True)
class ContactMinReport:
    min_value: float
    argmin: float
    samples: int
    n_zeros: int
    holds: bool


def _fundamental_samples(dim: int, m: ValuedMonoid, n: int, extra=None) -> ScaleBatch:
    if dim == 1:
        if m.kind == "Nk":
            L = np.linspace(math.log(m.k), 0.0, n)
            pts = np.concatenate([-np.exp(L), np.exp(L)])
        else:
            pts = np.array([-1.0, 1.0])
        if extra is not None:
            pts = np.concatenate([pts, np.asarray(extra, dtype=float).ravel()])
        return ScaleBatch.from_float(pts[pts != 0])
    u = _sphere(dim, n)
    if m.kind == "Nk":
        r = np.exp(np.linspace(math.log(m.k), 0.0, 8))
        u = (u[:, None, :] * r[None, :, None]).reshape(-1, dim)
    if extra is not None:
        u = np.vstack([u, np.asarray(extra, dtype=float).reshape(-1, dim)])
    return ScaleBatch.from_float(u)


def contact_min_check(f: Germ, m: ValuedMonoid, samples: int = 4096, extra=None,
                      zero_tol: float = 1e-12) -> ContactMinReport:
    """Necessary condition for a local minimum: the contact is >= 0 everywhere.

    By homogeneity one annulus (powers of ``k``) or the unit sphere
    (``R``, ``R+``) carries the sign of the contact everywhere.  ``extra``
    adds caller-chosen sample points.
    """
    if f.dim_out != 1:
        raise ValueError("contact_min_check needs a scalar-valued germ")
    res = extract_contact(f, m)
    if res.verdict != "found":
        raise ContactNotFound(f"contact not found ({res.verdict}) for monoid {m}")
    x = _fundamental_samples(f.dim_in, m, samples, extra)
    v = res.contact.eval(x).to_float()[:, 0]
    i = int(np.argmin(v))
    arg = x[i].to_float()[0]
    return ContactMinReport(float(v[i]), float(arg[0]) if f.dim_in == 1 else arg, len(x),
                            int(np.count_nonzero(np.abs(v) <= zero_tol)),
                            bool(v[i] >= -zero_tol))


@dataclass(frozen=True)
class StrictMinReport:
    verdict: str
    sphere_min: float
    samples: int
    check_points: int
    check_min: float | None


def strict_min_certifier(f: Germ, probe: int = 256, tol_pos: float = TOL_POS,
                         r_check: float = R_CHECK, n_check: int = 1000,
                         seed: int = 0) -> StrictMinReport:
    """Certify a strict local minimum from a positive ``R+`` contact.

    The minimum ``m`` of the contact over unit-sphere samples (both signs in
    1-d) decides: ``m > tol_pos`` certifies, ``m <= 0`` means the
    hypothesis fails, anything between is inconclusive.  A certificate is
    cross-checked on ``n_check`` random points of the punctured ball of
    radius ``r_check``; a violation there downgrades it to inconclusive.
    """
    if f.dim_out != 1:
        raise ValueError("strict_min_certifier needs a scalar-valued germ")
    if f.dim_in > 8:
        raise ValueError("strict_min_certifier samples spheres of dimension <= 8 only")
    m = ValuedMonoid.nonneg_reals()
    res = extract_contact(f, m)
    if res.verdict != "found":
        raise ContactNotFound(f"contact not found ({res.verdict}) for monoid R+")
    u = _fundamental_samples(f.dim_in, m, probe)
    mins = float(np.min(res.contact.eval(u).to_float()))
    if mins <= 0.0:
        return StrictMinReport("hypothesis_fails", mins, len(u), 0, None)
    if mins <= tol_pos:
        return StrictMinReport("inconclusive", mins, len(u), 0, None)
    rng = np.random.default_rng(seed)
    if f.dim_in == 1:
        x = rng.uniform(-r_check, r_check, n_check)
        x = np.where(x == 0.0, r_check / 2, x)[:, None]
    else:
        d = rng.standard_normal((n_check, f.dim_in))
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        x = d * (r_check * rng.uniform(0.0, 1.0, n_check) ** (1.0 / f.dim_in))[:, None]
    vals = f.eval(ScaleBatch.from_float(x)).to_float()[:, 0]
    cmin = float(np.min(vals))
    verdict = "certified_strict_min" if cmin > 0.0 else "inconclusive"
    return StrictMinReport(verdict, mins, len(u), n_check, cmin)
