import numpy as np
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from flexsusp import SuspensionParams, Theta1Rule, embed, io
from flexsusp import analysis as an
from flexsusp import symmetric as sy
from flexsusp.coordinates import axial_offset, flexion_interval, interior_samples, radial_distance
from flexsusp.errors import EmptyInterval, InvalidHalfParams, SuspensionError
from flexsusp.geometry import SuspensionType

length = st.floats(0.5, 2.0, allow_nan=False)
SETTINGS = settings(max_examples=40, deadline=None)


def half(M):
    return st.tuples(*[length] * M)


@SETTINGS
@given(st.sampled_from(list(sy.BUILDERS)), st.integers(3, 5), st.data())
def test_symmetric_families_close(tag, M, data):
    if tag is SuspensionType.II_AEE:
        h = sy.HalfParamsIIAEE(M, data.draw(half(2 * M)), data.draw(half(M)))
    else:
        cls = sy.HalfParamsIOEE if tag is SuspensionType.I_OEE else sy.HalfParamsIIOEE
        h = cls(M, data.draw(half(M)), data.draw(half(M)), data.draw(half(M)))
    try:
        s = sy.BUILDERS[tag](h)
    except InvalidHalfParams:
        assume(False)
    assert sy.closure_deviation(s) <= sy.CLOSURE_RTOL
    emb = s.embed(0.5 * sum(s.interval.central()))
    assert abs(an.signed_volume(emb)) <= 1e-9 * emb.diameter() ** 3


@SETTINGS
@given(st.integers(3, 5), st.data())
def test_embedding_realizes_lengths(M, data):
    N = 2 * M
    # a band of spokes that usually embeds
    spoke = st.tuples(*[st.floats(1.0, 1.3)] * N)
    l, m = np.array(data.draw(spoke)), np.array(data.draw(spoke))
    L = np.array(data.draw(st.tuples(*[st.floats(0.3, 0.8)] * N)))
    p = SuspensionParams(l, m, L)
    signs = data.draw(st.tuples(*[st.sampled_from((1, -1))] * (N - 1)))
    try:
        iv = flexion_interval(p)
    except EmptyInterval:
        assume(False)
    z = interior_samples(iv, 3)[1]
    try:
        emb = embed(p, z, Theta1Rule.fixed(data.draw(st.floats(-3, 3))), signs)
    except SuspensionError:
        assume(False)
    u, w, v = emb.u, emb.w, emb.v
    np.testing.assert_allclose(np.linalg.norm(v - u, axis=1), l, rtol=1e-10)
    np.testing.assert_allclose(np.linalg.norm(v - w, axis=1), m, rtol=1e-10)
    np.testing.assert_allclose(np.linalg.norm(v[1:] - v[:-1], axis=1), L[:-1], rtol=1e-9)


@SETTINGS
@given(length, length, st.floats(0.05, 1.0))
def test_offset_and_radius_swap(l, m, frac):
    z = frac * (l + m)
    assert axial_offset(l, m, z) == -axial_offset(m, l, z)
    try:
        r = radial_distance(l, m, z)
    except SuspensionError:
        return
    assert r == radial_distance(m, l, z)
    # |v - u| = l with u = (0, 0, z/2)
    zo = axial_offset(l, m, z)
    assert abs(np.hypot(r, zo - 0.5 * z) - l) <= 1e-12 * l


@SETTINGS
@given(st.integers(3, 8), st.floats(0.3, 3), st.floats(0.3, 3), st.floats(0, 2 * np.pi))
def test_volume_rigid_invariance(N, radius, height, angle):
    c = an.regular_dipyramid(N, radius, height)
    rot = np.array([[np.cos(angle), -np.sin(angle), 0], [np.sin(angle), np.cos(angle), 0], [0, 0, 1]])
    v0 = an.signed_volume(c)
    assert v0 > 0
    assert abs(an.signed_volume(c @ rot.T + 0.7) - v0) <= 1e-12 * max(1.0, v0)
    assert abs(an.signed_volume(c * np.array([1, 1, -1])) + v0) <= 1e-12 * max(1.0, v0)


@SETTINGS
@given(st.sampled_from(list(sy.BUILDERS)), st.integers(3, 6), st.integers(0, 2 ** 32 - 1))
def test_document_roundtrip(tag, M, seed):
    h = sy.random_half_params(tag, M, np.random.default_rng(seed))
    s = sy.BUILDERS[tag](h)
    text = io.save_suspension(s)
    assert io.save_suspension(io.load_suspension(text)) == text
    assert io.load_suspension(text).to_suspension().params == s.params
