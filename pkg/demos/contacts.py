"""Contacts under different zoom monoids, and a neofractal scan.

    python3 demos/contacts.py
"""

import math

from jetzoom import gallery as G
from jetzoom.contact import ValuedMonoid, extract_contact, neofractal_scan

ek = math.exp(-2 * math.pi)
for name, monoid in (("abs", "R+"), ("giseh", "Nk:1/3"), ("fractal_wave", f"Nk:{ek!r}"),
                     ("fractal_wave", "R+"), ("f1", "R+"), ("f2", "R+")):
    r = extract_contact(G.make_named(name), ValuedMonoid.parse(monoid))
    print(f"{name:13s} {monoid:24s} {r.verdict:12s} max oscillation {max(r.oscillation):.3g}")

# the two-sided wave zooms at incommensurate rates on each side: no k works
scan = neofractal_scan(G.bifractal(), [0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9])
print("bifractal:", scan.summary)
print("fractal_wave:", neofractal_scan(G.fractal_wave(), [0.5, ek]).summary)
