"""
The equal-length hexagonal suspension
=====================================

Every edge has length 1.  The coordinate model places the apexes at
``(0, 0, +-z/2)`` and the equator vertexes on a circle of radius
``sqrt(1 - z^2/4)``; the equatorial dihedral then follows the closed form
``arccos(1 - 2 z^2 / 3)``.
"""

import numpy as np

from flexsusp import analysis as an
from flexsusp import symmetric as sy

s = sy.build_I_OEE(sy.HalfParamsIOEE(3, (1, 1, 1), (1, 1, 1), (1, 1, 1)))
iv = s.interval
print("flexion interval:", iv.z_lo, iv.z_hi, "(sqrt(3) =", np.sqrt(3), ")")
print("upper endpoint reached by a", iv.hi_reason, "limit")

# dihedrals from coordinates against the closed form
zs = np.linspace(0.1, 1.7, 9)
coords, ok, _ = s.embed_batch(zs)
eps, delta, Delta = an.dihedrals(coords)
print("\n   z     eps_1 (coords)   closed form")
for z, e in zip(zs, an.folded(eps[:, 0])):
    print(f"{z:5.2f}   {e:.12f}   {np.arccos(1 - 2 * z * z / 3):.12f}")

# with the symmetric sign pattern the hexagon doubles back on itself
emb = s.embed(1.0)
print("\nequator at z = 1:")
print(np.round(emb.v, 6))
print("v_6 == v_2:", np.allclose(emb.v[5], emb.v[1]), "  v_5 == v_3:", np.allclose(emb.v[4], emb.v[2]))

# so the faces at v_1 and v_4 are folded flat for the whole flex
tr = an.dihedral_trace(s, 33, lo=0.1, hi=1.7)
print("\ndihedral ranges over z in [0.1, 1.7] (rows eps, delta, Delta):")
print(np.round(tr.ranges().reshape(3, 6), 4))

# volume along the flex, and the convex control
print("\nmax |volume| along the flex:", np.abs(tr.volume).max())
print("regular hexagonal dipyramid, h = 1:", an.signed_volume(an.regular_dipyramid(6)),
      " sqrt(3) =", np.sqrt(3))
