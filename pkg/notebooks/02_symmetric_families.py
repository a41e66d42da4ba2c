"""
Symmetric families and their controls
=====================================

Random members of the three symmetric families close exactly along the
whole flex.  A 1% change of one edge breaks closure, and the rigidity
matrix sees the difference: one non-trivial flex for the family members,
none for the perturbed copies.
"""

import numpy as np

from flexsusp import analysis as an
from flexsusp import symmetric as sy
from flexsusp.coordinates import ConstructedSuspension

rng = np.random.default_rng(7)

print(f"{'type':8s} {'N':>3s} {'gap dev':>9s} {'perturbed':>9s} {'min range':>9s} "
      f"{'|V|/d^3':>9s} {'flex':>4s} {'flex*':>5s}")
for tag in sy.BUILDERS:
    for M in (3, 4, 6):
        s = sy.BUILDERS[tag](sy.random_half_params(tag, M, rng))
        v = an.verify_flexible(s)
        bent = ConstructedSuspension(s.params.with_length("m", 2, s.params.m[1] * 1.01),
                                     s.tag, s.theta1, s.signs, {})
        z = 0.5 * sum(s.interval.central())
        flex = an.rigidity_jacobian_rank(s.embed(z))[1]
        flex_bent = an.rigidity_jacobian_rank(bent.embed(0.5 * sum(bent.interval.central())))[1]
        print(f"{tag.value:8s} {2 * M:3d} {v.max_rel_gap_deviation:9.1e} "
              f"{sy.closure_deviation(bent):9.1e} {v.min_dihedral_range:9.3f} "
              f"{v.details['volume_rel']:9.1e} {flex:4d} {flex_bent:5d}")

# the face pairs whose volume contributions cancel
s = sy.build_I_OEE(sy.random_half_params(sy.SuspensionType.I_OEE, 4, rng))
emb = s.embed(0.5 * sum(s.interval.central()))
up, lo = an.face_volume_terms(emb.coords)
print("\nI-OEE, N = 8: upper-face volume terms  ", np.round(up, 5))
print("              partner lower-face terms ", np.round(np.roll(lo, -4), 5))
print("              pair sums                ", an.face_pair_cancellation(emb, s.tag))
