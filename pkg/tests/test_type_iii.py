import math

import numpy as np
import pytest

from flexsusp import analysis as an
from flexsusp import face_angles_of, symmetric as sy
from flexsusp.coordinates import dihedral_from_z
from flexsusp.errors import PoleAtZero, PoleError, SingularR, ValidationError
from flexsusp.geometry import SuspensionType
from flexsusp.type_iii import (FoldSpec, TypeIIIParams, build_III, cot_half, cr, fold_residuals,
                               pair_invariant_K, seed_state, solve_stage, sr, stage_coefficients,
                               vertex_figure_delta, vertex_kinds, vp, vr)


@pytest.mark.parametrize("phi, expected", [
    (math.pi / 2, 1.0), (math.pi, 0.0), (math.pi / 3, math.sqrt(3)),
])
def test_cot_half(phi, expected):
    assert cot_half(phi) == pytest.approx(expected, abs=1e-14)


def test_cot_half_pole():
    with pytest.raises(PoleAtZero):
        cot_half(0.0)


def test_vp_vr():
    assert vp(math.pi / 2, math.pi / 2) == pytest.approx(1.0, abs=1e-14)
    assert vp(0.0, 1.234) == 0.0
    assert vr(math.pi / 2, math.pi / 3) == pytest.approx(math.sqrt(3), abs=1e-14)
    with pytest.raises(PoleError):
        vp(math.pi, 1.0)
    with pytest.raises(PoleError):
        vr(1.0, 0.0)


def test_sr_cr():
    assert sr(0.7, 0.7) == 0.0
    assert cr(math.pi / 3, math.pi / 3) == pytest.approx(2.0, abs=1e-14)
    assert sr(math.pi / 2, math.pi / 6) == pytest.approx(1 / math.sqrt(3), abs=1e-14)
    with pytest.raises(PoleError):
        cr(math.pi / 2, math.pi / 2)


def test_stage_coefficients_K0_case1():
    qA, qB, qC = 0.3, 0.7, -1.1
    a, b, c, R = stage_coefficients(qA, qB, qC, 0.0, 1)
    assert R == 1.0
    assert (a, b, c) == pytest.approx((qB + qC, -2 * qA, -(qC + qB)))


def test_stage_coefficients_K3_case2():
    qA, qB, qC = 0.3, 0.7, -1.1
    a, b, c, R = stage_coefficients(qA, qB, qC, 3.0, 2)
    assert R == 2.0
    assert (a, b, c) == pytest.approx((2 * qB - qC, -2 * qA * 2, -2 * (qB - 2 * qC)))


def test_stage_coefficients_singular():
    with pytest.raises(SingularR):
        stage_coefficients(0.3, 0.7, -1.1, -1.0, 1)
    with pytest.raises(SingularR):
        stage_coefficients(0.3, 0.7, -1.1, 1.0, 2)


def test_fold_residuals_L3():
    a = np.array([0.9, 0.8, 0.4, 0.3, 0.2, 0.6])
    r = fold_residuals(a, fold_L=3, parity="odd")
    assert r == pytest.approx((a[0] - a[2] - a[4], a[1] - a[3] - a[5]))


def test_fold_residuals_regular_cap():
    r = fold_residuals(np.full(6, math.pi / 3), fold_L=3)
    assert r == pytest.approx((-math.pi / 3, -math.pi / 3))


def test_fold_residuals_balanced():
    a = np.array([0.9, 0.8, 0.4, 0.3, 0.5, 0.5])
    assert fold_residuals(a, fold_L=3) == pytest.approx((0.0, 0.0), abs=1e-15)


def test_fold_residuals_parity_mismatch():
    with pytest.raises(ValueError):
        fold_residuals(np.full(8, 0.5), fold_L=4, parity="odd")


def test_fold_residuals_circular():
    a = np.array([1.0, 1.5, 1.0, 1.0, 1.14159265358979, 0.64159265358979])
    assert fold_residuals(a) == pytest.approx((0.0, 0.0), abs=1e-13)


def test_vertex_kinds_and_foldspec():
    assert vertex_kinds("OAS", 6) == ("OAE",) * 6
    assert vertex_kinds("OAE", 8, 4) == ("OAS", "OAE", "OAE", "OAS", "OAE", "OAE", "OAE", "OAE")
    np.testing.assert_array_equal(FoldSpec.of("OAS", 6, "open").delta, np.pi)
    np.testing.assert_array_equal(FoldSpec.of("OAS", 6, "compact").delta, 0.0)
    d = FoldSpec.of("OAE", 6, "open", 3).delta
    np.testing.assert_array_equal(d, [0, np.pi, 0, np.pi, np.pi, np.pi])
    np.testing.assert_array_equal(FoldSpec.of("OAE", 6, "compact", 3).delta, np.pi - d)


@pytest.mark.parametrize("kwargs, field", [
    (dict(variant="XYZ", M=3, seed=(1, 1, 1, 1), L_odd=(1, 1)), "variant"),
    (dict(variant="OAS", M=2, seed=(1, 1, 1, 1), L_odd=(1,)), "M"),
    (dict(variant="OAS", M=3, seed=(1, 1, 1), L_odd=(1, 1)), "seed"),
    (dict(variant="OAS", M=3, seed=(1, 1, 1, 1), L_odd=(1,)), "L_odd"),
    (dict(variant="OAE", M=3, seed=(1, 1, 1, 1), L_odd=(1, 1), fold_L=2), "fold_L"),
    (dict(variant="OAS", M=3, seed=(1, 1, 1, 1), L_odd=(1, 1), fold_L=3), "fold_L"),
])
def test_params_validation(kwargs, field):
    with pytest.raises(ValidationError) as err:
        TypeIIIParams(**kwargs)
    assert err.value.field == field


def test_equilateral_seed_apex_distance():
    # eps_1 = pi/2 at z^2 = 2 - 2 cos^2(pi/3)
    z = math.sqrt(1.5)
    assert dihedral_from_z(1, 1, math.pi / 3, math.pi / 3, z) == pytest.approx(math.pi / 2, abs=1e-12)
    p = TypeIIIParams("OAS", 3, (1, 1, 1, 1), (1, 1))
    st = seed_state(p)
    np.testing.assert_allclose([st.beta[1], st.B[1], st.beta[2], st.B[2]], math.pi / 3, atol=1e-14)
    # the two eps_1 choices exchange the assembly modes
    a = sorted(abs(pair_invariant_K(st, 1, math.pi / 2, m, "OAE")) for m in (1, -1))
    b = sorted(abs(pair_invariant_K(st, 1, 3 * math.pi / 2, m, "OAE")) for m in (1, -1))
    assert a == pytest.approx(b, abs=1e-12)


def test_vertex_figure_matches_coordinates():
    rng = np.random.default_rng(1)
    s = sy.build_I_OEE(sy.random_half_params(SuspensionType.I_OEE, 3, rng))
    emb = s.embed(0.5 * sum(s.interval.central()))
    eps, delta, _ = an.dihedrals(emb.coords)
    fa = face_angles_of(s.params)
    for k in range(s.N):
        km = (k - 1) % s.N
        got = [vertex_figure_delta(fa.gamma[km], fa.beta[k], fa.Bang[k], fa.Gamma[km], eps[k], m)
               for m in (1, -1)]
        # the vertex-figure frame is the mirror image of the embedding frame
        assert min(abs(g - (2 * np.pi - delta[k])) for g in got) <= 1e-9


def test_solve_stage_rejects_empty_discriminant():
    p = TypeIIIParams("OAS", 3, (1, 1.25, 1.1, 0.9), (1.0, 1.2))
    st = seed_state(p)
    # K far outside the range of the vertex-figure invariant
    out = [c for K in (1e6, -1e6) for c in solve_stage(st, K, 1.2)]
    for c in out:
        assert np.isfinite(c.beta[3]) and 0 < c.beta[3] < np.pi


def test_solve_stage_candidates_are_triangles():
    p = TypeIIIParams("OAS", 3, (1, 1.25, 1.1, 0.9), (1.0, 1.2))
    st = seed_state(p)
    cands = [c for mode in (1, -1) for sgn in (1, -1)
             for c in solve_stage(st, sgn * pair_invariant_K(st, 1, math.pi / 2, mode, "OAE"), 1.2)]
    assert cands
    for c in cands:
        assert c.l[3] + c.L[3] > c.l[4] and c.m[3] + c.L[3] > c.m[4]
        assert c.L[2] > 0 and c.k == 2


def test_budget_zero_fails_immediately():
    r = build_III(TypeIIIParams("OAS", 3, (1, 1.25, 1.1, 0.9), (1.0, 1.2)), 0)
    assert not r and r.leaves_tried == 0 and "budget" in r.reason


def test_unrefined_oae_seed_reports_residuals():
    p = TypeIIIParams("OAE", 3, (0.8, 0.8, 0.8, 1.0), (1.25, 1.0), 3)
    r = build_III(p, 2, refine=False)
    assert not r
    d = r.as_dict()
    assert d["status"] == "build_failure" and d["best_branch"] is not None
    assert d["best_residuals"]["pair"] > 1e-3


def test_equal_length_seed_is_not_certified():
    # all residuals vanish, but the folded regular octahedron has no open flat fold
    r = build_III(TypeIIIParams("OAS", 3, (1, 1, 1, 1), (1, 1)), 4, refine=False)
    assert not r and "flat folds" in r.reason


def test_oas_build_is_certified():
    s = build_III(TypeIIIParams("OAS", 3, (1, 1, 1.25, 0.8), (1, 1.25)), 4)
    assert s and s.tag is SuspensionType.III_OAS and s.N == 6
    assert sy.closure_deviation(s) <= 1e-8
    assert s.provenance["certification"]["closure_deviation"] <= 1e-8
    assert s.vertex_kinds == ("OAE",) * 6


def test_oae_build_needs_refinement():
    p = TypeIIIParams("OAE", 3, (0.8, 0.8, 0.8, 1.0), (1.25, 1.0), 3)
    s = build_III(p, 4)
    assert s and s.tag is SuspensionType.III_OAE and s.fold_index == 3
    assert s.provenance["vector"] != s.provenance["start_vector"]
    assert max(abs(v) for v in s.provenance["residuals"].values()) <= 1e-8
