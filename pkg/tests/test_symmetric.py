import numpy as np
import pytest

from flexsusp import symmetric as sy
from flexsusp.coordinates import interior_samples
from flexsusp.errors import InvalidHalfParams
from flexsusp.geometry import SuspensionType


def test_i_oee_equal_lengths():
    s = sy.build_I_OEE(sy.HalfParamsIOEE(3, (1, 1, 1), (1, 1, 1), (1, 1, 1)))
    assert s.N == 6 and s.tag is SuspensionType.I_OEE
    assert s.interval.z_hi == pytest.approx(np.sqrt(3), abs=1e-9)
    assert sy.closure_deviation(s, 50) <= 1e-12


def test_i_oee_relations_and_symmetry():
    s = sy.build_I_OEE(sy.HalfParamsIOEE(3, (2, 3, 4), (1.5, 2.5, 3.5), (3, 3, 3)))
    p = s.params
    np.testing.assert_array_equal(p.m[:3], p.l[3:])
    np.testing.assert_array_equal(p.m[3:], p.l[:3])
    np.testing.assert_array_equal(p.L[3:], p.L[:3])
    assert p.m[3] == 2.0
    assert sy.closure_deviation(s) <= 1e-10
    assert sy.symmetry_residual(s, interior_samples(s.interval, 11)) <= 1e-10


@pytest.mark.parametrize("M", [2, 0, 2.5])
def test_bad_M(M):
    with pytest.raises(InvalidHalfParams):
        sy.build_I_OEE(sy.HalfParamsIOEE(M, (1,) * 2, (1,) * 2, (1,) * 2))


def test_ii_aee_equal_lengths():
    s = sy.build_II_AEE(sy.HalfParamsIIAEE(3, (1,) * 6, (1,) * 3))
    assert sy.closure_deviation(s, 50) <= 1e-12


def test_ii_aee_mirror():
    s = sy.build_II_AEE(sy.HalfParamsIIAEE(3, (1, 1.2, 1.4, 1.6, 1.4, 1.2), (1, 1.1, 1.3)))
    p = s.params
    assert p.m[0] == p.l[0]
    np.testing.assert_array_equal(p.L, [1, 1.1, 1.3, 1.3, 1.1, 1])
    zs = interior_samples(s.interval, 11)
    coords, ok, _ = s.embed_batch(zs)
    assert ok.all()
    # z_1 = 0 and z_N = -z_2
    np.testing.assert_array_equal(coords[:, 2, 2], 0.0)
    np.testing.assert_allclose(coords[:, -1, 2], -coords[:, 3, 2], atol=1e-12)
    assert sy.symmetry_residual(s, zs) <= 1e-10
    assert sy.closure_deviation(s) <= 1e-10


def test_ii_aee_broken_mirror_rejected():
    with pytest.raises(InvalidHalfParams):
        sy.build_II_AEE(sy.HalfParamsIIAEE(3, (1, 1.2, 1.4, 1.6, 1.4, 1.2), (1, 1.1, 1.3),
                                           m=(1, 1.4, 1.2, 1.6, 1.4, 1.2)))
    with pytest.raises(InvalidHalfParams):
        sy.build_II_AEE(sy.HalfParamsIIAEE(3, (1, 1.2, 1.4, 1.6, 1.4, 1.2), (1, 1.1, 1.3),
                                           L=(1, 1.1, 1.3, 1, 1.1, 1.3)))


def test_ii_oee_equal_lengths_match_i_oee():
    a = sy.build_II_OEE(sy.HalfParamsIIOEE(3, (1, 1, 1), (1, 1, 1), (1, 1, 1)))
    b = sy.build_I_OEE(sy.HalfParamsIOEE(3, (1, 1, 1), (1, 1, 1), (1, 1, 1)))
    assert a.params == b.params
    assert sy.closure_deviation(a) <= 1e-12


def test_ii_oee_periodic():
    s = sy.build_II_OEE(sy.HalfParamsIIOEE(3, (1, 2, 1.5), (1.3, 1.1, 1.7), (2, 2.2, 1.9)))
    for arr in (s.params.l, s.params.m, s.params.L):
        np.testing.assert_array_equal(arr[3:], arr[:3])
    assert sy.closure_deviation(s) <= 1e-10
    assert sy.symmetry_residual(s, interior_samples(s.interval, 11)) <= 1e-10


def test_ii_oee_negative_length():
    with pytest.raises(InvalidHalfParams):
        sy.build_II_OEE(sy.HalfParamsIIOEE(3, (1, -2, 1.5), (1.3, 1.1, 1.7), (2, 2.2, 1.9)))


@pytest.mark.parametrize("tag", list(sy.BUILDERS))
@pytest.mark.parametrize("M", [3, 4, 6])
def test_random_builds_close(tag, M):
    rng = np.random.default_rng(100 + M)
    for _ in range(5):
        s = sy.BUILDERS[tag](sy.random_half_params(tag, M, rng))
        assert s.N == 2 * M
        assert sy.closure_deviation(s) <= sy.CLOSURE_RTOL
        assert sy.symmetry_residual(s, interior_samples(s.interval, 5)) <= 1e-9


def test_random_half_params_deterministic():
    a = sy.random_half_params(SuspensionType.I_OEE, 4, np.random.default_rng(7))
    b = sy.random_half_params(SuspensionType.I_OEE, 4, np.random.default_rng(7))
    assert a == b
