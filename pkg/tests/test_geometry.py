import numpy as np
import pytest

from flexsusp import SuspensionParams, face_angles_of, validate_params
from flexsusp.errors import DegenerateTriangle
from flexsusp.geometry import SuspensionType, face_angle


def test_face_angle_equilateral():
    assert face_angle(1, 1, 1) == pytest.approx(np.pi / 3, abs=1e-14)


def test_face_angle_right_triangle():
    assert face_angle(3, 4, 5) == pytest.approx(np.pi / 2, abs=1e-14)


def test_face_angle_collinear_raises():
    with pytest.raises(DegenerateTriangle):
        face_angle(1, 1, 2)


def test_face_angles_equal_lengths(unit6):
    fa = face_angles_of(unit6)
    for arr in (fa.alpha, fa.beta, fa.gamma, fa.Aang, fa.Bang, fa.Gamma):
        np.testing.assert_allclose(arr, np.pi / 3, atol=1e-14)


def test_face_angles_right_angle_opposite_hypotenuse():
    # (l1, l2, L1) = (3, 4, 5): hypotenuse L1 is opposite u
    p = SuspensionParams([3, 4, 3, 3, 3, 3], [3, 3, 3, 3, 3, 3], [5, 2, 2, 2, 2, 2])
    fa = face_angles_of(p)
    assert fa.alpha[0] == pytest.approx(np.pi / 2, abs=1e-14)
    assert fa.beta[0] == pytest.approx(np.arccos(3 / 5), abs=1e-14)
    # (l1, L1, l2) = (3, 4, 5): hypotenuse l2 is opposite v1
    p = SuspensionParams([3, 5, 4, 4, 4, 4], [4, 4, 4, 4, 4, 4], [4, 4, 4, 4, 4, 4])
    assert face_angles_of(p).beta[0] == pytest.approx(np.pi / 2, abs=1e-14)


def test_face_angles_degenerate_face_index():
    p = SuspensionParams([1, 1, 1, 1, 1, 1], [1, 1, 1, 1, 1, 1], [2, 1, 1, 1, 1, 1])
    with pytest.raises(DegenerateTriangle) as err:
        face_angles_of(p)
    assert err.value.face_index == 1


def test_validate_equal_lengths_ok(unit6):
    assert validate_params(unit6).ok


def test_validate_odd_N():
    p = SuspensionParams(np.ones(5), np.ones(5), np.ones(5))
    assert "parity" in validate_params(p).kinds()


def test_validate_upper_face_violation():
    p = SuspensionParams([1, 1, 1, 1, 1, 1], [2, 2, 2, 2, 2, 2], [3, 1, 1, 1, 1, 1])
    rep = validate_params(p)
    hits = [v for v in rep.violations if v["index"] == 1]
    assert hits and any("upper" in v["kind"] for v in hits)


def test_validate_nonpositive_length():
    p = SuspensionParams([1, -1, 1, 1, 1, 1], np.ones(6), np.ones(6))
    assert not validate_params(p).ok


def test_cli_names_roundtrip():
    for t in SuspensionType:
        assert SuspensionType.from_cli(t.cli_name) is t
