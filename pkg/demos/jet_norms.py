"""Zooming into four germs at 0: norm, Lipschitz ratio, good-jet verdict.

    python3 demos/jet_norms.py
"""

import math

from jetzoom import gallery as G
from jetzoom.jets import jet_summary

for name in ("abs", "giseh", "fractal_wave", "uncanny_ext"):
    g = G.make_named(name)
    s, _ = G.recommended_schedules(g)
    js = jet_summary(g, s)
    print(f"{name:13s} d(f,0)={js.norm_to_zero.estimate:.9f} rho={js.rho.estimate:.9f} "
          f"verdict={js.good_jet}")

# fractal_wave: the ratio f(x)/x = sin(log|x|) has slope sqrt 2 in the worst direction,
# so the jet is not good even though its norm is 1.
print(f"sqrt 2 = {math.sqrt(2):.9f}")

# uncanny_ext: sin(log|log x|) only reaches 1 at log x = -exp(pi/2 + 2 pi), hence deep shells.
js = jet_summary(G.uncanny_ext(), G.recommended_schedules(G.uncanny_ext())[0])
print("uncanny_ext, innermost shell values:", js.norm_to_zero.values[-3:])
