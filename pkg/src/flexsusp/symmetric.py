"""Constructors for the three symmetric flexible families I-OEE, II-AEE, II-OEE.

Each constructor expands a free half-parameter set into the full length
arrays, attaches the azimuth rule and sign pattern under which the
coordinate model closes for every apex distance, and checks that the
resulting suspension actually closes along a sweep of the flex.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coordinates import (ConstructedSuspension, Theta1Rule, default_signs,
                          embed_batch, flexion_interval, interior_samples)
from .errors import EmptyInterval, FlexCertificationFailed, InvalidHalfParams
from .geometry import SuspensionParams, SuspensionType, validate_params

CLOSURE_RTOL = 1e-9
SWEEP_SAMPLES = 33


def _lengths(name, values, size=None):
    try:
        arr = np.array(values, dtype=float)
    except (TypeError, ValueError):
        raise InvalidHalfParams(f"{name} must be numeric") from None
    if arr.ndim != 1:
        raise InvalidHalfParams(f"{name} must be a 1-d sequence")
    if size is not None and arr.shape[0] != size:
        raise InvalidHalfParams(f"{name} needs {size} entries, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
        raise InvalidHalfParams(f"{name} entries must be positive finite lengths")
    return arr


def _check_M(M):
    if int(M) != M or M <= 2:
        raise InvalidHalfParams(f"M = {M}: need an integer M > 2 (N = 2M >= 6)")
    return int(M)


@dataclass(frozen=True)
class HalfParamsIOEE:
    """``l_1..l_M``, ``m_1..m_M``, ``L_1..L_M``; the rest follow by ``m_k = l_{k+M}``."""

    M: int
    l_half: tuple
    m_half: tuple
    L_half: tuple


@dataclass(frozen=True)
class HalfParamsIIAEE:
    """All ``N`` upper lengths ``l`` and ``L_1..L_M``.

    ``m`` and ``L_{M+1}..L_N`` are derived; if given, they must already
    satisfy the mirror relations ``m_1 = l_1``, ``m_k = l_{N-k+2}`` and
    ``L_{k+M} = L_{M-k+1}``.
    """

    M: int
    l: tuple
    L_half: tuple
    m: tuple = None
    L: tuple = None


@dataclass(frozen=True)
class HalfParamsIIOEE:
    """``l``, ``m``, ``L`` over one half-period; the full arrays repeat them."""

    M: int
    l_half: tuple
    m_half: tuple
    L_half: tuple


def expand_I_OEE(h: HalfParamsIOEE) -> SuspensionParams:
    M = _check_M(h.M)
    lh, mh, Lh = (_lengths(n, v, M) for n, v in
                  (("l_half", h.l_half), ("m_half", h.m_half), ("L_half", h.L_half)))
    return SuspensionParams(np.concatenate([lh, mh]), np.concatenate([mh, lh]),
                            np.concatenate([Lh, Lh]))


def expand_II_AEE(h: HalfParamsIIAEE) -> SuspensionParams:
    M = _check_M(h.M)
    N = 2 * M
    l = _lengths("l", h.l, N)
    Lh = _lengths("L_half", h.L_half, M)
    # m_1 = l_1 and m_k = l_{N-k+2}: with 0-based j = k-1 this is l[(N - j) % N]
    m = l[(N - np.arange(N)) % N]
    L = np.concatenate([Lh, Lh[::-1]])
    if h.m is not None:
        given = _lengths("m", h.m, N)
        if not np.allclose(given, m, rtol=1e-12, atol=0):
            raise InvalidHalfParams("m violates m_1 = l_1, m_k = l_{N-k+2}")
    if h.L is not None:
        given = _lengths("L", h.L, N)
        if not np.allclose(given, L, rtol=1e-12, atol=0):
            raise InvalidHalfParams("L violates L_{k+M} = L_{M-k+1}")
    return SuspensionParams(l, m, L)


def expand_II_OEE(h: HalfParamsIIOEE) -> SuspensionParams:
    M = _check_M(h.M)
    lh, mh, Lh = (_lengths(n, v, M) for n, v in
                  (("l_half", h.l_half), ("m_half", h.m_half), ("L_half", h.L_half)))
    return SuspensionParams(np.tile(lh, 2), np.tile(mh, 2), np.tile(Lh, 2))


def closure_deviation(s: ConstructedSuspension, S: int = SWEEP_SAMPLES) -> float:
    """``max |gap| / L_N`` over ``S`` interior Chebyshev samples."""
    zs = interior_samples(s.interval, S)
    coords, ok, _ = s.embed_batch(zs)
    if not ok.all():
        return float("inf")
    gap = np.linalg.norm(coords[:, -1] - coords[:, 2], axis=1) - s.params.L[-1]
    return float(np.max(np.abs(gap)) / s.params.L[-1])


def _finish(params, tag, theta1, provenance) -> ConstructedSuspension:
    report = validate_params(params)
    if not report.ok:
        raise InvalidHalfParams(f"derived lengths are invalid: {report}")
    s = ConstructedSuspension(params, tag, theta1, default_signs(params.N), provenance)
    try:
        flexion_interval(params)
    except EmptyInterval as exc:
        raise InvalidHalfParams(f"derived suspension cannot be embedded: {exc}") from None
    dev = closure_deviation(s)
    if not dev <= CLOSURE_RTOL:
        raise FlexCertificationFailed(f"closure gap varies by {dev:.3e} (relative) along the flex")
    return s


def build_I_OEE(h: HalfParamsIOEE) -> ConstructedSuspension:
    params = expand_I_OEE(h)
    prov = {"generator": "build_I_OEE", "M": int(h.M), "l_half": list(map(float, h.l_half)),
            "m_half": list(map(float, h.m_half)), "L_half": list(map(float, h.L_half))}
    return _finish(params, SuspensionType.I_OEE, Theta1Rule.symmetric_half(), prov)


def build_II_AEE(h: HalfParamsIIAEE) -> ConstructedSuspension:
    params = expand_II_AEE(h)
    prov = {"generator": "build_II_AEE", "M": int(h.M), "l": list(map(float, h.l)),
            "L_half": list(map(float, h.L_half))}
    return _finish(params, SuspensionType.II_AEE, Theta1Rule.fixed(0.0), prov)


def build_II_OEE(h: HalfParamsIIOEE) -> ConstructedSuspension:
    params = expand_II_OEE(h)
    prov = {"generator": "build_II_OEE", "M": int(h.M), "l_half": list(map(float, h.l_half)),
            "m_half": list(map(float, h.m_half)), "L_half": list(map(float, h.L_half))}
    return _finish(params, SuspensionType.II_OEE, Theta1Rule.symmetric_half(), prov)


def symmetry_residual(s: ConstructedSuspension, zs) -> float:
    """Largest violation of the coordinate symmetry that each family exhibits.

    I-OEE: ``v_{k+M} = (-x_k, y_k, -z_k)``; II-OEE: ``v_{k+M} = (-x_k, y_k, z_k)``;
    II-AEE: ``v_1 = (r_1, 0, 0)`` and ``v_{k+M} = (x, y, -z)`` of ``v_{M-k+2}``.
    """
    coords, ok, _ = s.embed_batch(zs)
    if not ok.all():
        return float("inf")
    v = coords[:, 2:]
    M = s.N // 2
    if s.tag is SuspensionType.I_OEE:
        target = v[:, :M] * np.array([-1.0, 1.0, -1.0])
        return float(np.abs(v[:, M:] - target).max())
    if s.tag is SuspensionType.II_OEE:
        target = v[:, :M] * np.array([-1.0, 1.0, 1.0])
        return float(np.abs(v[:, M:] - target).max())
    if s.tag is SuspensionType.II_AEE:
        worst = float(np.abs(v[:, 0, 1:]).max())
        # 0-based: v[k+M-1] against v[M-k+1] for k = 2..M
        for k in range(2, M + 1):
            mirrored = v[:, M - k + 1] * np.array([1.0, 1.0, -1.0])
            worst = max(worst, float(np.abs(v[:, k + M - 1] - mirrored).max()))
        return worst
    raise ValueError(f"no coordinate symmetry recorded for {s.tag}")


def random_half_params(kind: SuspensionType, M: int, rng, lo=0.5, hi=2.0, max_tries=1000):
    """Log-uniform half-parameters in ``[lo, hi]`` whose suspension embeds.

    Returns ``None`` after ``max_tries`` rejections.
    """
    kind = SuspensionType(kind)
    draw = lambda n: np.exp(rng.uniform(np.log(lo), np.log(hi), n))  # noqa: E731
    for _ in range(max_tries):
        if kind is SuspensionType.I_OEE:
            h = HalfParamsIOEE(M, tuple(draw(M)), tuple(draw(M)), tuple(draw(M)))
            params = expand_I_OEE(h)
        elif kind is SuspensionType.II_AEE:
            h = HalfParamsIIAEE(M, tuple(draw(2 * M)), tuple(draw(M)))
            params = expand_II_AEE(h)
        elif kind is SuspensionType.II_OEE:
            h = HalfParamsIIOEE(M, tuple(draw(M)), tuple(draw(M)), tuple(draw(M)))
            params = expand_II_OEE(h)
        else:
            raise ValueError(f"{kind} is not a symmetric family")
        if not validate_params(params).ok:
            continue
        try:
            flexion_interval(params)
        except EmptyInterval:
            continue
        return h
    return None


BUILDERS = {
    SuspensionType.I_OEE: build_I_OEE,
    SuspensionType.II_AEE: build_II_AEE,
    SuspensionType.II_OEE: build_II_OEE,
}
