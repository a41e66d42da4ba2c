import math

import numpy as np
import pytest

from flexsusp import analysis as an
from flexsusp import symmetric as sy
from flexsusp.coordinates import interior_samples
from flexsusp.errors import DegenerateConfiguration
from flexsusp.geometry import SuspensionType
from flexsusp.type_iii import FLAT_PATTERN_TOL, FoldSpec

TAGS = list(sy.BUILDERS)


@pytest.fixture(scope="module")
def equal6():
    return sy.build_I_OEE(sy.HalfParamsIOEE(3, (1, 1, 1), (1, 1, 1), (1, 1, 1)))


@pytest.fixture(scope="module")
def random_builds():
    rng = np.random.default_rng(11)
    return [sy.BUILDERS[t](sy.random_half_params(t, M, rng)) for t in TAGS for M in (3, 4)]


def test_equal_length_eps_closed_form(equal6):
    tr = an.dihedral_trace(equal6, 25, lo=0.1, hi=1.7)
    want = np.arccos(1 - (2 / 3) * tr.z_samples ** 2)
    np.testing.assert_allclose(an.folded(tr.eps), np.repeat(want[:, None], 6, 1), atol=1e-10)


def test_equal_length_eps_at_unit_z(equal6):
    eps, _, _ = an.dihedrals(equal6.embed(1.0).coords)
    np.testing.assert_allclose(an.folded(eps), math.acos(1 / 3), atol=1e-12)


def test_oriented_dihedral_range(random_builds):
    for s in random_builds:
        tr = an.dihedral_trace(s, 9)
        for arr in (tr.eps, tr.delta, tr.Delta):
            assert np.all((arr >= 0) & (arr < 2 * np.pi))


def test_eq3_cross_check(random_builds):
    for s in random_builds:
        assert an.dihedral_trace(s, 17).eq3_max_error <= 1e-10


def test_verify_symmetric_builds(random_builds):
    for s in random_builds:
        v = an.verify_flexible(s)
        assert v.flexible and v.strong and not v.inconclusive
        assert v.details["zero_volume"] and v.details["bellows_constant"]


def test_verify_perturbed_build(random_builds):
    s = random_builds[0]
    bent = type(s)(s.params.with_length("l", 2, s.params.l[1] * 1.01), s.tag, s.theta1, s.signs, {})
    v = an.verify_flexible(bent)
    assert not v.flexible and v.max_rel_gap_deviation > 1e-5


def test_verify_inconclusive(random_builds):
    s = random_builds[0]
    v = an.verify_flexible(s, S=1)
    assert v.inconclusive and not v.flexible


def test_strong_flexibility_equal_lengths(equal6):
    tr = an.dihedral_trace(equal6, 33, lo=0.1, hi=1.7)
    ranges = tr.ranges().reshape(3, 6)
    # v_6 = v_2 and v_5 = v_3, so the faces at v_1 and v_4 fold onto each other
    frozen = np.zeros((3, 6), bool)
    frozen[1:, [0, 3]] = True
    assert np.all(ranges[frozen] <= 1e-12)
    assert np.all(ranges[~frozen] >= 1.0)
    assert not an.strong_flexibility(tr)


def test_strong_flexibility_random(random_builds):
    for s in random_builds:
        assert an.strong_flexibility(an.dihedral_trace(s, 33, *s.interval.central()))


def test_strong_flexibility_frozen_column(equal6):
    tr = an.dihedral_trace(equal6, 33, lo=0.1, hi=1.7)
    tr.delta[:, 2] = 1.0
    assert not an.strong_flexibility(tr)


def test_strong_flexibility_tiny_interval(equal6):
    assert not an.strong_flexibility(an.dihedral_trace(equal6, 9, lo=1.0, hi=1.0 + 1e-6))


def test_signed_volume_zero(random_builds):
    for s in random_builds:
        for z in interior_samples(s.interval, 5):
            emb = s.embed(z)
            assert abs(an.signed_volume(emb)) <= 1e-10 * emb.diameter() ** 3


def test_face_pair_cancellation(random_builds):
    for s in random_builds:
        for z in interior_samples(s.interval, 5):
            assert np.abs(an.face_pair_cancellation(s.embed(z), s.tag)).max() <= 1e-12


def test_regular_dipyramid_volume():
    # 2 * (1/3) * (3 sqrt(3) / 2) * 1
    assert an.signed_volume(an.regular_dipyramid(6)) == pytest.approx(math.sqrt(3), abs=1e-12)


def test_regular_dipyramid_outward_windings():
    c = an.regular_dipyramid(6)
    centroid = c.mean(axis=0)
    for tri in np.concatenate(an._faces(6)):
        a, b, d = c[tri]
        n = np.cross(b - a, d - a)
        assert n @ ((a + b + d) / 3 - centroid) > 0


def test_bellows_synthetic_drift(equal6):
    tr = an.dihedral_trace(equal6, 9)
    assert an.bellows_check(tr) and an.bellows_check(tr, require_zero=True)
    tr.volume = tr.volume + 1e-3 * tr.z_samples
    assert not an.bellows_check(tr)


def test_rank_generic_dipyramid():
    rng = np.random.default_rng(5)
    c = an.regular_dipyramid(6) + rng.normal(0, 0.15, (8, 3))
    assert an.rigidity_jacobian_rank(c) == (18, 0)


def test_rank_flexible(random_builds):
    for s in random_builds:
        for z in interior_samples(s.interval, 3):
            rank, flex = an.rigidity_jacobian_rank(s.embed(z))
            assert flex >= 1 and rank <= 3 * (s.N + 2) - 7


def test_rank_coincident_vertexes(equal6):
    # v_3 = v_5 in the equal-length model
    with pytest.raises(DegenerateConfiguration):
        an.rigidity_jacobian_rank(equal6.embed(1.0))


def test_tetrahedral_residuals_refuse_symmetric(random_builds):
    s = random_builds[0]
    with pytest.raises(ValueError):
        an.tetrahedral_angle_residuals(s, an.dihedral_trace(s, 5))


@pytest.mark.parametrize("name", ["example_iii_oas.json", "example_iii_oae.json"])
def test_type_iii_residual_suite(bundled, name):
    s = bundled[name]
    tr = an.dihedral_trace(s, 33)
    res = an.tetrahedral_angle_residuals(s, tr)
    assert res["poles"] == 0
    for key in ("branch", "eps_cos", "delta_cos", "pair"):
        assert res["max"][key] <= 1e-8, key
    assert res["constant_branch"]


@pytest.mark.parametrize("name", ["example_iii_oas.json", "example_iii_oae.json"])
def test_type_iii_flat_states(bundled, name):
    s = bundled[name]
    variant = "OAE" if s.tag is SuspensionType.III_OAE else "OAS"
    states = an.flat_states(s)
    found = set()
    for st in states:
        assert st.coplanar
        # coplanar, hence zero volume
        assert abs(an.signed_volume(st.coords)) <= 1e-10
        for kind in ("open", "compact"):
            if np.max(st.pattern_error(FoldSpec.of(variant, s.N, kind, s.fold_index).delta)) <= FLAT_PATTERN_TOL:
                found.add(kind)
    assert found == {"open", "compact"}


def test_planarity_measure():
    c = an.regular_dipyramid(6)
    assert an.planarity(c) > 0.1
    c[:, 2] = 0.0
    assert an.planarity(c) == 0.0
