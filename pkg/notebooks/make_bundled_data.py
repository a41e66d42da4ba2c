#!/usr/bin/env python
"""Regenerate the documents shipped in ``flexsusp/data``.

Run from the repository root::

    python notebooks/make_bundled_data.py

Every document is rebuilt from its generator, so the files are
reproducible byte for byte.
"""

import json
import os

import numpy as np

from flexsusp import io, symmetric
from flexsusp.cli import type_iii_candidates
from flexsusp.coordinates import ConstructedSuspension
from flexsusp.geometry import SuspensionType
from flexsusp.type_iii import BuildFailure, build_III

DATA = os.path.join(os.path.dirname(__file__), "..", "src", "flexsusp", "data")


def dump_json(name, obj):
    with open(os.path.join(DATA, name), "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def first_build(tag, doc):
    for p in type_iii_candidates(tag, doc):
        r = build_III(p, 4)
        if not isinstance(r, BuildFailure):
            return r
    raise RuntimeError(f"no {tag.value} build from the bundled grid")


def main():
    os.makedirs(DATA, exist_ok=True)

    # half-parameter inputs for `flexsusp construct`
    params = {
        "params_i_oee.json": {"M": 3, "l_half": [1.0, 1.3, 0.9], "m_half": [1.2, 0.8, 1.1],
                              "L_half": [1.0, 1.1, 0.9]},
        "params_ii_aee.json": {"M": 3, "l": [1.0, 1.3, 0.9, 1.2, 0.8, 1.1], "L_half": [1.0, 1.1, 0.9]},
        "params_ii_oee.json": {"M": 3, "l_half": [1.0, 1.3, 0.9], "m_half": [1.2, 0.8, 1.1],
                               "L_half": [1.0, 1.1, 0.9]},
        "params_random_i_oee_m4.json": {"M": 4, "random": True},
        "iii_oas_seed_grid.json": {
            "M": 3,
            "grid": {"l1": [0.8, 1.0, 1.25], "m1": [0.8, 1.0, 1.25], "l2": [0.8, 1.0, 1.25],
                     "m2": [0.8, 1.0, 1.25], "L1": [0.8, 1.0, 1.25], "L_rest": [[1.0, 1.25]]},
        },
        "iii_oae_seed_grid.json": {
            "M": 3, "fold_L": 3,
            "grid": {"l1": [0.8, 1.0, 1.25], "m1": [0.8, 1.0, 1.25], "l2": [0.8, 1.0, 1.25],
                     "m2": [0.8, 1.0, 1.25], "L1": [0.8, 1.0, 1.25], "L_rest": [[1.0, 1.25]]},
        },
    }
    for name, obj in params.items():
        dump_json(name, obj)

    # equal-length I-OEE: every edge 1
    eq = symmetric.build_I_OEE(symmetric.HalfParamsIOEE(3, (1.0,) * 3, (1.0,) * 3, (1.0,) * 3))
    io.write_suspension(eq, os.path.join(DATA, "equal_length_i_oee.json"))

    built = {
        "example_i_oee.json": symmetric.build_I_OEE(symmetric.HalfParamsIOEE(
            3, (1.0, 1.3, 0.9), (1.2, 0.8, 1.1), (1.0, 1.1, 0.9))),
        "example_ii_aee.json": symmetric.build_II_AEE(symmetric.HalfParamsIIAEE(
            3, (1.0, 1.3, 0.9, 1.2, 0.8, 1.1), (1.0, 1.1, 0.9))),
        "example_ii_oee.json": symmetric.build_II_OEE(symmetric.HalfParamsIIOEE(
            3, (1.0, 1.3, 0.9), (1.2, 0.8, 1.1), (1.0, 1.1, 0.9))),
        "example_iii_oas.json": first_build(SuspensionType.III_OAS, params["iii_oas_seed_grid.json"]),
        "example_iii_oae.json": first_build(SuspensionType.III_OAE, params["iii_oae_seed_grid.json"]),
    }
    for name, s in built.items():
        io.write_suspension(s, os.path.join(DATA, name))

    # negative control: one upper edge of the I-OEE example lengthened by 1%
    base = built["example_i_oee.json"]
    bent = ConstructedSuspension(base.params.with_length("l", 2, base.params.l[1] * 1.01),
                                 base.tag, base.theta1, base.signs,
                                 {"generator": "perturbation", "negative_control": True,
                                  "note": "l_2 of example_i_oee scaled by 1.01"})
    io.write_suspension(bent, os.path.join(DATA, "perturbed_i_oee.json"))
    print("wrote", sorted(os.listdir(DATA)))


if __name__ == "__main__":
    np.seterr(all="ignore")
    main()
