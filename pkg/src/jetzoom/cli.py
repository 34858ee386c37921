"""Command-line front end: ``analyze``, ``compare``, ``contact``, ``samples``, ``claims``.

Exit codes: 0 success, 1 claim failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import io
import math
import sys

import numpy as np

from . import gallery as G
from .claims import UnknownFilter, claims_csv, run_claims
from .contact import ValuedMonoid, extract_contact, homogeneity_test, linearity_test
from .jets import TOL, jet_summary, quasi_distance, tangency_test
from .scale import ScaleBatch, ScalePoint, ShellSchedule


class UsageError(Exception):
    pass


def _r0(text: str) -> ScalePoint:
    try:
        return ScalePoint.from_float(float(text))
    except ValueError:
        return ScalePoint.parse(text)


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("schedule and output")
    g.add_argument("--r0", help="outer radius: a real or a log form like +exp(-5)")
    g.add_argument("--ratio", type=float, help="shell ratio in (0, 1)")
    g.add_argument("--shells", type=int)
    g.add_argument("--spp", type=int, help="samples per shell")
    g.add_argument("--seed", type=int)
    g.add_argument("--tol", type=float, help="verdict tolerance")
    g.add_argument("--out", help="write the CSV trace to this path")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    p = argparse.ArgumentParser(prog="jetzoom", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    a = sub.add_parser("analyze", parents=[common], help="jet norm, ratio, homogeneity, linearity")
    a.add_argument("germ")
    c = sub.add_parser("compare", parents=[common], help="quasi-distance and tangency")
    c.add_argument("germ_a")
    c.add_argument("germ_b")
    k = sub.add_parser("contact", parents=[common], help="contact extraction")
    k.add_argument("germ")
    k.add_argument("monoid", help="R, R+ or Nk:<k>")
    k.add_argument("--steps", type=int, help="zoom steps (default 200 for Nk, 400 otherwise)")
    s = sub.add_parser("samples", parents=[common], help="CSV of (log_x, sign, f_ratio)")
    s.add_argument("germ")
    rng = s.add_mutually_exclusive_group(required=True)
    rng.add_argument("--logmag", help="range a..b of log|x| (x > 0)")
    rng.add_argument("--x", help="range a..b of x")
    s.add_argument("--count", type=int, default=1000)
    cl = sub.add_parser("claims", parents=[common], help="run the registered claims")
    cl.add_argument("--filter", help="shell-style claim id pattern")
    cl.add_argument("--timing", action="store_true", help="fill the seconds column")
    return p


def schedule_from(args) -> ShellSchedule | None:
    """Schedule from flags, or ``None`` to let each germ pick its own."""
    given = {k: getattr(args, k) for k in ("r0", "ratio", "shells", "spp", "seed")
             if getattr(args, k) is not None}
    if not given:
        return None
    kw = {}
    try:
        if "r0" in given:
            kw["r0"] = _r0(given["r0"])
        if "ratio" in given:
            kw["ratio"] = given["ratio"]
        if "shells" in given:
            kw["shells"] = given["shells"]
        if "spp" in given:
            kw["samples_per_shell"] = given["spp"]
        if "seed" in given:
            kw["rng_seed"] = given["seed"]
        return ShellSchedule(**kw)
    except (ValueError, TypeError) as exc:
        raise UsageError(f"invalid schedule: {exc}") from None


def _germ(name: str):
    try:
        return G.make_named(name)
    except G.UnknownGerm as exc:
        raise UsageError(exc.args[0]) from None
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _emit(args, text: str, out):
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        out.write(text)


def _tol(args, default):
    if args.tol is None:
        return default
    if not args.tol > 0:
        raise UsageError("--tol must be positive")
    return args.tol


def _f(x) -> str:
    return repr(float(x))


def cmd_analyze(args, out) -> int:
    f = _germ(args.germ)
    s = schedule_from(args)
    tol = _tol(args, TOL)
    js = jet_summary(f, s)
    lin = linearity_test(f, s, tol=tol)
    k = f.meta.exact_fractal_ratio or 0.5
    monoids = [ValuedMonoid.reals(), ValuedMonoid.nonneg_reals(), ValuedMonoid.powers_of(k)]
    rows = [("germ", f.label), ("norm", _f(js.norm_to_zero.estimate)),
            ("norm_converged", str(js.norm_to_zero.converged)),
            ("rho", _f(js.rho.estimate)), ("rho_converged", str(js.rho.converged)),
            ("good_jet", js.good_jet), ("linearity", lin.verdict)]
    if f.base.any() or f.base_image.any():
        rows.append(("homogeneity", "skipped (germ not based at 0)"))
    else:
        for m in monoids:
            rows.append((f"homogeneity[{m}]", homogeneity_test(f, m, s).verdict))
    w = max(len(r[0]) for r in rows)
    for name, val in rows:
        out.write(f"{name:<{w}}  {val}\n")
    if args.out:
        buf = io.StringIO()
        buf.write("shell_index,log_radius,norm,rho\n")
        n, r = js.norm_to_zero, js.rho
        for j, lr in enumerate(n.log_radii):
            buf.write(f"{j},{_f(lr)},{_f(n.values[j])},{_f(r.values[j])}\n")
        with open(args.out, "w") as fh:
            fh.write(buf.getvalue())
    return 0


def cmd_compare(args, out) -> int:
    f, g = _germ(args.germ_a), _germ(args.germ_b)
    if f.dim_in != g.dim_in or f.dim_out != g.dim_out:
        raise UsageError(f"dimension mismatch: {f!r} vs {g!r}")
    s = schedule_from(args)
    est = quasi_distance(f, g, s)
    verdict = tangency_test(f, g, s, tol=_tol(args, TOL), estimate=est)
    out.write(f"distance   {_f(est.estimate)}\nconverged  {est.converged}\n"
              f"tangency   {verdict}\n")
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(est.to_csv())
    return 0


def cmd_contact(args, out) -> int:
    try:
        m = ValuedMonoid.parse(args.monoid)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    f = _germ(args.germ)
    if args.steps is not None and args.steps < 16:
        raise UsageError("--steps must be >= 16")
    res = extract_contact(f, m, n_steps=args.steps, tol_contact=_tol(args, 1e-9))
    out.write(f"monoid   {m}\nverdict  {res.verdict}\n")
    for d, (u, osc) in enumerate(zip(res.directions, res.oscillation)):
        out.write(f"direction {d} {u.tolist()}: oscillation {_f(osc)}\n")
    if res.contact is not None:
        y = np.array([-1.0, -0.5, -0.25, 0.25, 0.5, 1.0])
        if f.dim_in == 1:
            vals = res.contact(y)
            for yi, vi in zip(y, np.ravel(vals)):
                out.write(f"contact({_f(yi)}) = {_f(vi)}\n")
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(res.trace_csv())
    return 0


def _range(text: str) -> tuple[float, float]:
    parts = text.split("..")
    if len(parts) != 2:
        raise UsageError(f"bad range {text!r}; expected a..b")
    try:
        a, b = float(parts[0]), float(parts[1])
    except ValueError:
        raise UsageError(f"bad range {text!r}; expected a..b") from None
    if not (math.isfinite(a) and math.isfinite(b)) or a == b:
        raise UsageError(f"bad range {text!r}")
    return a, b


def cmd_samples(args, out) -> int:
    f = _germ(args.germ)
    if f.dim_in != 1 or f.dim_out != 1:
        raise UsageError("samples supports 1-d germs only")
    if args.count < 1:
        raise UsageError("--count must be >= 1")
    n = args.count
    mid = (np.arange(n) + 0.5) / n
    if args.logmag is not None:
        a, b = _range(args.logmag)
        L = a + (b - a) * (np.arange(n) / max(n - 1, 1))
        x = ScaleBatch.from_logmag(np.ones(n), L)
    else:
        a, b = _range(args.x)
        x = ScaleBatch.from_float(a + (b - a) * mid)
    ok = f.admissible(x) & ~x.is_zero()
    ratio = np.full(n, np.nan)
    idx = np.flatnonzero(ok)
    if idx.size:
        fx = f.eval(x[idx])
        sign = x[idx].sign()
        # f(x)/x for 1-d: ratio of mantissas times exp(scale difference)
        with np.errstate(over="ignore", under="ignore"):
            ratio[idx] = (fx.mant[:, 0] / x[idx].mant[:, 0]) * np.exp(fx.scale - x[idx].scale)
        ratio[idx] = np.where(fx.mant[:, 0] == 0.0, 0.0, ratio[idx]) * np.where(sign != 0, 1, 0)
    lx, sx = x.logmag(), x.sign()
    buf = io.StringIO()
    buf.write("log_x,sign,f_ratio\n")
    for li, si, ri in zip(lx, sx, ratio):
        buf.write(f"{_f(li)},{int(si)},{_f(ri)}\n")
    _emit(args, buf.getvalue(), out)
    return 0


def cmd_claims(args, out) -> int:
    try:
        results = run_claims(args.filter)
    except UnknownFilter as exc:
        raise UsageError(str(exc.args[0])) from None
    _emit(args, claims_csv(results, timing=args.timing), out)
    return 0 if all(r.passed for r in results) else 1


COMMANDS = {"analyze": cmd_analyze, "compare": cmd_compare, "contact": cmd_contact,
            "samples": cmd_samples, "claims": cmd_claims}


def _join_ranges(argv: list[str]) -> list[str]:
    # a range such as -1..-1e6 looks like an option to argparse
    out, i = [], 0
    while i < len(argv):
        if argv[i] in ("--logmag", "--x") and i + 1 < len(argv):
            out.append(f"{argv[i]}={argv[i + 1]}")
            i += 2
        else:
            out.append(argv[i])
            i += 1
    return out


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    argv = _join_ranges(list(sys.argv[1:] if argv is None else argv))
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and 2
    try:
        schedule_from(args)
        return COMMANDS[args.command](args, out)
    except UsageError as exc:
        sys.stderr.write(f"jetzoom: error: {exc}\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
