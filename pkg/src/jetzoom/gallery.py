"""Named example germs at 0.

Oscillatory germs of the form ``x * p(log|x|)`` are evaluated from the
log-magnitude of the argument, so they stay exact at depths like
``exp(-2575)`` that underflow ordinary floats.
"""

from __future__ import annotations

import math
import re
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import mpmath
import numpy as np

from .cantor import dist_kinf
from .germs import Germ, GermMeta, identity_germ, linear_germ, scalar_multiple, stretch, \
    zero_germ
from .scale import ScaleBatch

TWO_PI = 2.0 * math.pi
SQRT2 = math.sqrt(2.0)

#: default bifractal parameters (a/b = 1/sqrt(2) is irrational)
BIFRACTAL_DEFAULT = (1.0, SQRT2)


class UnknownGerm(KeyError):
    pass


def ratio_germ(profile: Callable[[np.ndarray, np.ndarray], np.ndarray], *,
               domain_radius: float = math.inf, **meta) -> Germ:
    """1-d germ ``x -> x * profile(log|x|, sign x)``."""

    def action(x: ScaleBatch) -> ScaleBatch:
        r = profile(x.logmag(), x.sign())
        return ScaleBatch(x.scale, x.mant * np.asarray(r, dtype=float)[:, None])

    return Germ(action, 1, 1, domain_radius=domain_radius, meta=GermMeta(**meta))


def abs_germ() -> Germ:
    return ratio_germ(lambda L, s: s, lipschitz_bound=1.0, parity="even",
                      exact_positively_homogeneous=True, label="abs")


def fractal_wave() -> Germ:
    """``x sin(log|x|)``."""
    return ratio_germ(lambda L, s: np.sin(L), lipschitz_bound=SQRT2, parity="odd",
                      exact_fractal_ratio=math.exp(-TWO_PI), label="fractal_wave")


def scaled_wave(r: float) -> Germ:
    """``x sin((2 pi / r) log|x|)``, an ``exp(-r)``-fractal wave."""
    if not r > 0:
        raise ValueError("scaled_wave needs r > 0")
    w = TWO_PI / r
    return ratio_germ(lambda L, s: np.sin(w * L), lipschitz_bound=1.0 + w, parity="odd",
                      exact_fractal_ratio=math.exp(-r), label=f"scaled_wave[r={r!r}]")


def uncanny() -> Germ:
    """``x sin(log|log|x||)`` on ``(-1, 1)``; 2-Lipschitz on ``|x| < 1/e``."""
    return ratio_germ(lambda L, s: np.sin(np.log(np.abs(L))), domain_radius=1.0,
                      lipschitz_bound=2.0, parity="odd", label="uncanny", deep_zoom=True)


def uncanny_ext() -> Germ:
    g = stretch(uncanny())
    return g.with_meta(label="uncanny_ext")


def bifractal(a: float = BIFRACTAL_DEFAULT[0], b: float = BIFRACTAL_DEFAULT[1]) -> Germ:
    """``x sin((2 pi/a) log|x|)`` for ``x < 0`` and ``x sin((2 pi/b) log|x|)`` for ``x > 0``."""
    if not (a > 0 and b > 0):
        raise ValueError("bifractal needs a, b > 0")
    if a == b or _small_rational(a / b):
        raise ValueError(f"bifractal needs an irrational ratio a/b; got a={a!r}, b={b!r}")
    if (a, b) != BIFRACTAL_DEFAULT:
        warnings.warn("irrationality of a/b cannot be certified from floating-point input; "
                      "only the default (1, sqrt 2) is certified", stacklevel=2)
    wa, wb = TWO_PI / a, TWO_PI / b

    def profile(L, s):
        return np.where(s < 0, np.sin(wa * L), np.sin(wb * L))

    return ratio_germ(profile, lipschitz_bound=max(1 + wa, 1 + wb),
                      label=f"bifractal[a={a!r},b={b!r}]")


def _small_rational(q: float, max_den: int = 1000) -> bool:
    return float(Fraction(q).limit_denominator(max_den)) == q


def f1() -> Germ:
    """``x sin(1/x)``: not tangentiable at 0 (negative control)."""
    return ratio_germ(lambda L, s: np.sin(s * np.exp(-L)), label="f1",
                      parity="even", eval_floor_logmag=-700.0)


def f2() -> Germ:
    """``x**2 sin(1/x**2)``: differentiable at 0 but not locally Lipschitz there."""

    def action(x: ScaleBatch) -> ScaleBatch:
        L = x.logmag()
        with np.errstate(over="ignore", invalid="ignore"):
            phase = np.sin(np.exp(-2.0 * L))
        return ScaleBatch(2.0 * x.scale, x.mant ** 2 * phase[:, None])

    return Germ(action, meta=GermMeta(label="f2", parity="even", eval_floor_logmag=-350.0))


_LN3 = math.log(3.0)


def giseh() -> Germ:
    """``x -> dist(x, K_inf)``; 1/3-fractal and 1-Lipschitz."""

    def action(x: ScaleBatch) -> ScaleBatch:
        m = x.mant[:, 0]
        sc = np.asarray(x.scale, dtype=float)
        out = np.abs(m)
        pos = np.flatnonzero(m > 0)
        if pos.size:
            direct = pos[np.abs(sc[pos]) <= 600.0]
            if direct.size:
                val = m[direct] * np.exp(sc[direct])
                out[direct] = dist_kinf(val) / np.exp(sc[direct])
            deep = pos[np.abs(sc[pos]) > 600.0]
            if deep.size:
                # g(x) = 3^-j g(3^j x) with 3^j x brought near 1
                L = sc[deep] + np.log(m[deep])
                j = np.round(-L / _LN3)
                y = np.exp(L + j * _LN3)
                out[deep] = dist_kinf(y) * np.exp(-j * _LN3 - sc[deep])
        return ScaleBatch(x.scale, out[:, None])

    return Germ(action, meta=GermMeta(lipschitz_bound=1.0, exact_fractal_ratio=1.0 / 3.0,
                                      label="giseh"))


def jet_translation(a, b) -> Germ:
    """Germ at ``a`` of the translation ``x -> x + b - a``."""
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    ident = identity_germ(a.size)
    return Germ(ident.action, a.size, a.size, a, b,
                meta=GermMeta(lipschitz_bound=1.0, exact_positively_homogeneous=True,
                              label=f"jet_translation[{a.tolist()}->{b.tolist()}]"))


def affine_tangent(value, linear, a) -> Germ:
    """Germ at ``a`` of ``x -> value + linear (x - a)``."""
    lin = np.atleast_2d(np.asarray(linear, dtype=float))
    a = np.atleast_1d(np.asarray(a, dtype=float))
    value = np.atleast_1d(np.asarray(value, dtype=float))
    if lin.shape != (value.size, a.size):
        raise ValueError(f"linear part has shape {lin.shape}, expected {(value.size, a.size)}")
    g = linear_germ(lin, label="affine")
    return Germ(g.action, a.size, value.size, a, value, meta=g.meta)


# ---------------------------------------------------------------------------
# periodic profiles


@dataclass(frozen=True)
class PeriodicProfile:
    period: float
    profile: Callable[[np.ndarray], np.ndarray]
    lipschitz_bound: float

    def validate(self, n: int = 1000, seed: int = 0):
        rng = np.random.default_rng(seed)
        t = rng.uniform(-50.0, 50.0, n)
        p = np.asarray(self.profile(t), dtype=float)
        if np.max(np.abs(np.asarray(self.profile(t + self.period)) - p)) > 1e-12 * max(
                1.0, float(np.max(np.abs(p)))):
            raise ValueError("profile is not periodic with the stated period")
        s = t + rng.uniform(-1.0, 1.0, n)
        ps = np.asarray(self.profile(s), dtype=float)
        if np.any(np.abs(p - ps) > self.lipschitz_bound * np.abs(t - s) + 1e-12):
            raise ValueError("profile violates its stated Lipschitz bound")

    def sup_abs(self, n: int = 4096) -> float:
        t = np.linspace(0.0, self.period, n)
        return float(np.max(np.abs(self.profile(t)))) + self.lipschitz_bound * self.period / n


def periodic_to_fractal(p: PeriodicProfile) -> Germ:
    """``x -> x p(log|x|)``: an ``exp(-T)``-fractal germ."""
    p.validate()
    prof = p.profile
    return ratio_germ(lambda L, s: prof(L), lipschitz_bound=p.sup_abs() + p.lipschitz_bound,
                      exact_fractal_ratio=math.exp(-p.period), label="periodic_fractal")


def sine_profile(j: int, period: float = TWO_PI) -> PeriodicProfile:
    w = TWO_PI * j / period
    return PeriodicProfile(period, lambda t: np.sin(w * np.asarray(t)), abs(w))


# ---------------------------------------------------------------------------
# names


_REAL_RE = re.compile(r"([+-]?(?:\d+\.?\d*|\.\d+)(?:e[+-]?\d+)?)?\*?(pi|e|sqrt\(?(\d+(?:\.\d*)?)\)?)?")


def parse_real(text: str) -> float:
    """Parse ``1.5``, ``sqrt2``, ``2pi``, ``pi/2``, ``-3e-2`` and similar."""
    t = text.strip().replace(" ", "")
    if "/" in t:
        num, den = t.split("/", 1)
        return parse_real(num) / parse_real(den)
    m = _REAL_RE.fullmatch(t)
    if not m or not t:
        raise ValueError(f"cannot parse real number {text!r}")
    coef = float(m.group(1)) if m.group(1) not in (None, "", "+", "-") else 1.0
    sym = m.group(2)
    if sym is None:
        if m.group(1) is None:
            raise ValueError(f"cannot parse real number {text!r}")
        return coef
    if sym == "pi":
        val = math.pi
    elif sym == "e":
        val = math.e
    else:
        val = math.sqrt(float(m.group(3)))
    return coef * val


def _params(text: str) -> dict[str, float]:
    out = {}
    for item in filter(None, text.split(",")):
        if "=" not in item:
            raise ValueError(f"bad germ parameter {item!r}; expected key=value")
        k, v = item.split("=", 1)
        out[k.strip()] = parse_real(v)
    return out


def make_named(name: str) -> Germ:
    """Resolve a germ name such as ``giseh``, ``bifractal:a=1,b=sqrt2`` or ``scaled_wave:r=2pi``."""
    head, _, rest = name.strip().partition(":")
    p = _params(rest)
    try:
        if head == "zero":
            return zero_germ()
        if head == "abs":
            return abs_germ()
        if head == "identity":
            return identity_germ()
        if head in ("mul", "m"):
            return scalar_multiple(p.get("lambda", p.get("l", 1.0)))
        if head == "giseh":
            return giseh()
        if head == "fractal_wave":
            return fractal_wave()
        if head == "uncanny":
            return uncanny()
        if head == "uncanny_ext":
            return uncanny_ext()
        if head == "bifractal":
            return bifractal(p.get("a", BIFRACTAL_DEFAULT[0]), p.get("b", BIFRACTAL_DEFAULT[1]))
        if head == "f1":
            return f1()
        if head == "f2":
            return f2()
        if head == "scaled_wave":
            return scaled_wave(p.get("r", TWO_PI))
        if head == "jet_translation":
            return jet_translation(p.get("a", 0.0), p.get("b", 0.0))
    except KeyError as exc:
        raise ValueError(f"missing parameter {exc} for germ {head!r}") from None
    raise UnknownGerm(f"unknown germ {name!r}; known: {', '.join(NAMES)}")


NAMES = ("zero", "abs", "identity", "mul:lambda=..", "giseh", "fractal_wave", "uncanny",
         "uncanny_ext", "bifractal:a=..,b=..", "f1", "f2", "scaled_wave:r=..",
         "jet_translation:a=..,b=..")


# ---------------------------------------------------------------------------
# pointwise functions (for germs at points other than 0)


def point_function(name: str) -> Callable:
    """The underlying real function of a named germ, evaluable on mpmath numbers.

    Used to build germs at base points other than 0, where the displacement
    ``f(a + x) - f(a)`` must be computed with extra working precision.
    """
    head, _, rest = name.strip().partition(":")
    p = _params(rest)

    def wave(w):
        return lambda z: mpmath.mpf(0) if z == 0 else z * mpmath.sin(w * mpmath.log(abs(z)))

    if head == "abs":
        return lambda z: abs(z)
    if head == "identity":
        return lambda z: z
    if head in ("mul", "m"):
        lam = p.get("lambda", p.get("l", 1.0))
        return lambda z: lam * z
    if head == "fractal_wave":
        return wave(1)
    if head == "scaled_wave":
        return wave(TWO_PI / p.get("r", TWO_PI))
    if head == "bifractal":
        a, b = p.get("a", BIFRACTAL_DEFAULT[0]), p.get("b", BIFRACTAL_DEFAULT[1])
        wa, wb = wave(TWO_PI / a), wave(TWO_PI / b)
        return lambda z: wa(z) if z < 0 else wb(z)
    if head == "zero":
        return lambda z: mpmath.mpf(0)
    raise UnknownGerm(f"no pointwise form for {name!r}")


def recommended_schedules(g: Germ):
    """``(metric, linearity)`` schedules suited to a germ.

    Germs flagged ``deep_zoom`` need shells far below the default: the
    metric schedule reaches log-magnitude -2600 (past the point
    ``exp(-exp(pi/2 + 2 pi))`` where ``sin(log|log x|) = 1``), the
    linearity schedule reaches -1e7.
    """
    from .scale import ShellSchedule, default_schedule, deep_schedule

    if g.meta.deep_zoom:
        return (ShellSchedule.from_logs(0.0, -6.5, 400), deep_schedule(1e7, shells=200))
    return default_schedule(), default_schedule()
