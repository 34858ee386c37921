"""Mean-value bound from contact norms and a strict-minimum certificate.

    python3 demos/optimality.py
"""

from jetzoom import gallery as G
from jetzoom.germs import add, identity_germ, scalar_multiple
from jetzoom.optimality import mean_value_check, strict_min_certifier

r = mean_value_check("fractal_wave", -1.0, 1.0, grid=32)
print(f"fractal_wave on [-1, 1]: k={r.k_used:.5f} |f(b)-f(a)|={r.lhs:.3g} <= {r.rhs:.5f}: {r.holds}")
t = mean_value_check("mul:lambda=3", 0.0, 1.0)
print(f"3x on [0, 1]: k={t.k_used:.12f}, equality gap {abs(t.lhs - t.rhs):.1e}")

kink = add(G.abs_germ(), scalar_multiple(0.5))
for label, f in (("|x| + x/2", kink), ("x", identity_germ())):
    rep = strict_min_certifier(f)
    print(f"{label:10s} {rep.verdict:22s} sphere minimum {rep.sphere_min}")
