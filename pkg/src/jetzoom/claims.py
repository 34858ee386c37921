"""Registered numeric claims and their runner.

Claims live in ``claims.json`` as data; each names a procedure from
:data:`PROCEDURES` plus parameters, an expected value and a comparison.
Adding a claim means adding a JSON record (and at most a procedure here),
never touching the analysis modules.
"""

from __future__ import annotations

import csv
import fnmatch
import functools
import io
import itertools
import json
import math
import time
from dataclasses import dataclass
from importlib import resources
from typing import Any, Callable

import numpy as np

from . import gallery as G
from .cantor import cantor_endpoints, dist_kinf
from .contact import (ValuedMonoid, equidistribution_check, extract_contact, linearity_defects,
                      tl_and_contact_consistency)
from .germs import (Germ, add, compose, homog_translate, identity_germ, scalar_multiple, stretch,
                    zero_germ)
from .jets import jet_summary, lipschitz_ratio, quasi_distance, tangency_test
from .optimality import mean_value_check, strict_min_certifier
from .scale import ScaleBatch, ShellSchedule, default_schedule


@dataclass(frozen=True)
class Claim:
    id: str
    description: str
    anchor: str
    run: str
    params: dict
    expected: Any
    tolerance: float
    compare: str


@dataclass(frozen=True)
class ClaimResult:
    claim: Claim
    measured: Any
    passed: bool
    seconds: float


class UnknownFilter(LookupError):
    pass


def load_claims(path=None) -> list[Claim]:
    if path is None:
        text = resources.files("jetzoom").joinpath("claims.json").read_text()
    else:
        with open(path) as fh:
            text = fh.read()
    out = [Claim(**{k: v for k, v in rec.items()}) for rec in json.loads(text)]
    ids = [c.id for c in out]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate claim ids")
    for c in out:
        if c.run not in PROCEDURES:
            raise ValueError(f"claim {c.id!r} uses unknown procedure {c.run!r}")
    return sorted(out, key=lambda c: c.id)


def check(claim: Claim, measured) -> bool:
    e, tol, mode = claim.expected, claim.tolerance, claim.compare
    if mode == "eq":
        return measured == e
    m = float(measured)
    if not math.isfinite(m):
        return False
    if mode == "abs":
        return abs(m - float(e)) <= tol
    if mode == "le":
        return m <= float(e) + tol
    if mode == "ge":
        return m >= float(e) - tol
    if mode == "range":
        return float(e[0]) - tol <= m <= float(e[1]) + tol
    raise ValueError(f"unknown comparison {mode!r}")


def run_claims(filter: str | None = None, claims: list[Claim] | None = None) -> list[ClaimResult]:
    """Run the claims whose id matches ``filter`` (shell-style pattern), sorted by id."""
    claims = load_claims() if claims is None else sorted(claims, key=lambda c: c.id)
    if filter:
        claims = [c for c in claims if fnmatch.fnmatchcase(c.id, filter)]
        if not claims:
            raise UnknownFilter(f"no claims matched {filter!r}")
    _clear_caches()
    out = []
    for c in claims:
        t0 = time.perf_counter()
        measured = PROCEDURES[c.run](**c.params)
        dt = time.perf_counter() - t0
        out.append(ClaimResult(c, measured, check(c, measured), dt))
    return out


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (list, tuple)):
        return "..".join(_fmt(x) for x in v)
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def claims_csv(results: list[ClaimResult], timing: bool = True) -> str:
    """CSV with columns claim_id, expected, tolerance, measured, pass, seconds.

    With ``timing=False`` the seconds column is left empty, which makes the
    output byte-identical across runs.
    """
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["claim_id", "expected", "tolerance", "measured", "pass", "seconds"])
    for r in results:
        w.writerow([r.claim.id, _fmt(r.claim.expected), _fmt(float(r.claim.tolerance)),
                    _fmt(r.measured), _fmt(r.passed), f"{r.seconds:.3f}" if timing else ""])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# procedures

PROCEDURES: dict[str, Callable[..., Any]] = {}


def procedure(fn):
    PROCEDURES[fn.__name__.lstrip("_")] = fn
    return fn


@functools.lru_cache(maxsize=None)
def _summary(germ: str):
    return jet_summary(G.make_named(germ))


@functools.lru_cache(maxsize=None)
def _band_defects(germ: str, bands: tuple[float, ...]):
    f = G.make_named(germ)
    out = []
    for L in bands:
        s = ShellSchedule.from_logs(L, -1.0, 4, 256)
        a, sc = linearity_defects(f, s)
        out.append((float(np.nanmax(a)), float(np.nanmax(sc))))
    return out


@functools.lru_cache(maxsize=None)
def _embedding(j_max: int, period: float) -> np.ndarray:
    germs = [G.periodic_to_fractal(G.sine_profile(j, period)) for j in range(1, j_max + 1)]
    d = np.zeros((j_max, j_max))
    for i, j in itertools.product(range(j_max), repeat=2):
        d[i, j] = quasi_distance(germs[i], germs[j]).estimate
    return d


@functools.lru_cache(maxsize=None)
def _mean_value(germ: str, a: float, b: float, grid: int):
    return mean_value_check(germ, a, b, grid=grid)


def _clear_caches():
    for c in (_summary, _band_defects, _embedding, _mean_value):
        c.cache_clear()


def _sum_germ(terms) -> Germ:
    gs = [G.make_named(t) for t in terms]
    return functools.reduce(add, gs)


@procedure
def jet_norm(germ):
    return _summary(germ).norm_to_zero.estimate


@procedure
def jet_rho(germ):
    return _summary(germ).rho.estimate


@procedure
def jet_verdict(germ):
    return _summary(germ).good_jet


@procedure
def fractal_identity(germ, k, n, seed):
    g = G.make_named(germ)
    x = np.random.default_rng(seed).uniform(-10.0, 10.0, n)
    return float(np.max(np.abs(g(k * x) - k * g(x))))


def _probes(n: int = 64) -> np.ndarray:
    # log-uniform magnitudes in [1e-6, 1], both signs
    r = np.exp(np.linspace(math.log(1e-6), 0.0, n // 2))
    return np.concatenate([-r, r])


@procedure
def contact_recovery(germ, monoid):
    g = G.make_named(germ)
    res = extract_contact(g, ValuedMonoid.parse(monoid))
    if res.verdict != "found":
        return math.inf
    x = _probes()
    return float(np.max(np.abs(res.contact(x) - g(x))))


@procedure
def bifractal_refuted(ks):
    g = G.bifractal()
    n = 0
    for k in ks:
        r = extract_contact(g, ValuedMonoid.powers_of(k))
        n += r.verdict == "refuted" and bool(np.max(r.oscillation) > 0.5)
    return n


@procedure
def equidistribution_gap(ks, n):
    # phase step on the x < 0 side (a = 1) is 2 pi log(1/k)
    return max(equidistribution_check(math.log(1.0 / k), 0.0, n).largest_gap for k in ks)


@procedure
def linearity_band_bound(germ, bands):
    d = _band_defects(germ, tuple(bands))
    return max(max(a, s) * abs(L) for (a, s), L in zip(d, bands))


@procedure
def linearity_band_monotone(germ, bands):
    d = np.array(_band_defects(germ, tuple(bands)))
    ok = np.all(np.diff(d, axis=0) < 0)
    return "decreasing" if ok else "not_decreasing"


@procedure
def linearity_band_final(germ, bands):
    return max(_band_defects(germ, tuple(bands))[-1])


@procedure
def consistency(germ, monoids):
    f = G.make_named(germ)
    rep = tl_and_contact_consistency(f, [ValuedMonoid.parse(m) for m in monoids])
    tl = {"linear_jet": "TL", "not_linear": "not_TL"}.get(rep.linearity.verdict, "TL?")
    found = any(r.verdict == "found" for r in rep.contacts.values())
    parts = [tl, "found" if found else "not_found"]
    if found and tl == "TL":
        zero = rep.matrix is not None and float(np.max(np.abs(rep.matrix))) <= 1e-8
        parts.append("matrix_zero" if zero else "matrix_nonzero")
    return ";".join(parts)


@procedure
def embedding_offdiag_min(j_max, period):
    d = _embedding(j_max, period)
    return float(np.min(d[~np.eye(j_max, dtype=bool)]))


@procedure
def embedding_diag_max(j_max, period):
    return float(np.max(np.diag(_embedding(j_max, period))))


@procedure
def mean_value_k(germ, a, b, grid):
    return _mean_value(germ, a, b, grid).k_used


@procedure
def mean_value_holds(germ, a, b, grid):
    return "holds" if _mean_value(germ, a, b, grid).holds else "fails"


@procedure
def mean_value_gap(germ, a, b, grid):
    r = _mean_value(germ, a, b, grid)
    return abs(r.lhs - r.rhs)


@procedure
def strict_min_sphere(terms):
    return strict_min_certifier(_sum_germ(terms)).sphere_min


@procedure
def strict_min_verdict(terms):
    return strict_min_certifier(_sum_germ(terms)).verdict


# properties ----------------------------------------------------------------


def monotone_pairs():
    return [(G.abs_germ(), zero_germ()), (G.fractal_wave(), zero_germ()),
            (G.giseh(), G.abs_germ()), (G.f2(), zero_germ()),
            (G.uncanny_ext(), identity_germ())]


@procedure
def dr_monotone_violations():
    n = 0
    for f, g in monotone_pairs():
        v = quasi_distance(f, g, default_schedule()).values
        n += int(np.count_nonzero(v[1:] > v[:-1]))
    return n


def homogeneous_pairs() -> list[tuple[Germ, Germ]]:
    """20 composable pairs ``(g, f)`` sharing a homogeneity monoid."""
    rplus = [G.abs_germ(), identity_germ(), scalar_multiple(-2.0), scalar_multiple(0.5)]
    pairs = list(itertools.product(rplus, rplus))[:8]
    for h in (G.giseh(), G.fractal_wave(), G.scaled_wave(math.pi)):
        pairs += [(h, h), (rplus[0], h), (h, rplus[2]), (rplus[3], h)]
    return pairs


@procedure
def rho_submultiplicative_excess():
    s = default_schedule(shells=64)
    worst = -math.inf
    cache = {}

    def rho(f):
        if id(f) not in cache:
            cache[id(f)] = (f, lipschitz_ratio(f, s).estimate)
        return cache[id(f)][1]

    for g, f in homogeneous_pairs():
        worst = max(worst, lipschitz_ratio(compose(g, f), s).estimate - rho(g) * rho(f))
    return worst


def uniqueness_pairs() -> list[tuple[Germ, Germ, str]]:
    third = ValuedMonoid.powers_of(1.0 / 3.0)
    ek = ValuedMonoid.powers_of(math.exp(-2.0 * math.pi))
    xi = G.fractal_wave()
    return [
        (G.abs_germ(), compose(G.abs_germ(), scalar_multiple(-1.0)), "R+"),
        (G.giseh(), extract_contact(G.giseh(), third).contact, "Nk"),
        (xi, extract_contact(xi, ek).contact, "Nk"),
        (xi, compose(scalar_multiple(-1.0), compose(xi, scalar_multiple(-1.0))), "Nk"),
        (scalar_multiple(2.0), add(identity_germ(), identity_germ()), "R+"),
        (G.abs_germ(), identity_germ(), "R+"),
    ]


@procedure
def sigma_uniqueness_gap():
    s = default_schedule()
    x, _ = s.all_batches(1)
    worst, n_tangent = 0.0, 0
    for h1, h2, _m in uniqueness_pairs():
        if tangency_test(h1, h2, s) != "tangent":
            continue
        n_tangent += 1
        d = h1.eval(x) - h2.eval(x)
        rel = np.abs(d.to_float()[:, 0]) / np.abs(x.to_float()[:, 0])
        worst = max(worst, float(np.max(rel)))
    return worst if n_tangent else math.nan


@procedure
def isometry_max_diff():
    s = default_schedule(shells=64)
    worst = 0.0
    for f, g in monotone_pairs()[:4]:
        base = quasi_distance(f, g, s).values
        moved = quasi_distance(homog_translate(f, [0.7], [-1.3]),
                               homog_translate(g, [0.7], [-1.3]), s).values
        worst = max(worst, float(np.max(np.abs(moved - base))))
    u = G.uncanny()
    s1 = ShellSchedule.from_logs(-1.0, -0.5, 64, 256)
    a = quasi_distance(u, zero_germ(), s1).values
    b = quasi_distance(stretch(u), zero_germ(), s1).values
    return max(worst, float(np.max(np.abs(a - b))))


@procedure
def cantor_oracle_error(depth, n, seed):
    # K_inf meets [0, 9] in 9K; the depth-(depth+2) stage of 9K has width 3**-depth
    ends = 9.0 * cantor_endpoints(depth + 2)
    x = np.random.default_rng(seed).uniform(-0.5, 3.5, n)
    brute = np.min(np.abs(x[:, None] - ends[None, :]), axis=1)
    return float(np.max(np.abs(dist_kinf(x) - brute)))
