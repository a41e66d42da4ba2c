"""Cylindrical coordinate model of a suspension as a function of the apex distance.

The apexes sit on the z-axis at ``u = (0, 0, z/2)`` and ``w = (0, 0, -z/2)``.
Each equator vertex ``v_k`` is placed at radius ``r_k``, height
``zoff_k = (m_k^2 - l_k^2) / (2z)`` and azimuth ``theta_k``, with the
azimuths chained by ``theta_{k+1} = theta_k + s_k * dtheta_k``.  Every
edge except ``v_N v_1`` then has its prescribed length for any ``z``; the
suspension flexes exactly when ``|v_N - v_1|`` does not depend on ``z``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import EmptyInterval, InfeasibleRadius, InfeasibleTurn, OutOfRange
from .geometry import SuspensionParams, SuspensionType

TURN_CLAMP_TOL = 1e-12
RADICAND_TOL = 1e-12
INTERVAL_ATOL = 1e-10
INTERIOR_MARGIN = 1e-6


@dataclass(frozen=True)
class Theta1Rule:
    """How the azimuth of ``v_1`` is chosen.

    ``kind == "fixed"`` uses ``value``; ``kind == "symmetric_half"`` uses
    ``(pi - sum of the first M turn angles) / 2`` recomputed at each z.
    """

    kind: str = "fixed"
    value: float = 0.0

    def __post_init__(self):
        if self.kind not in ("fixed", "symmetric_half"):
            raise ValueError(f"unknown theta1 rule {self.kind!r}")
        if not math.isfinite(self.value):
            raise ValueError("theta1 value must be finite")

    @classmethod
    def fixed(cls, value: float = 0.0) -> "Theta1Rule":
        return cls("fixed", float(value))

    @classmethod
    def symmetric_half(cls) -> "Theta1Rule":
        return cls("symmetric_half", 0.0)


def default_signs(N: int) -> tuple:
    """``+1`` for the first M turns, ``-1`` for the remaining ``M - 1``."""
    M = N // 2
    return tuple([1] * M + [-1] * (N - 1 - M))


def check_signs(signs, N: int) -> tuple:
    signs = tuple(int(s) for s in signs)
    if len(signs) != N - 1:
        raise ValueError(f"sign pattern needs {N - 1} entries, got {len(signs)}")
    if any(s not in (1, -1) for s in signs):
        raise ValueError("sign pattern entries must be +1 or -1")
    return signs


@dataclass(frozen=True)
class Embedding:
    """Vertex coordinates at one flexion value.

    ``coords`` rows are ``u, w, v_1, ..., v_N``.
    """

    z: float
    coords: np.ndarray
    r: np.ndarray
    theta: np.ndarray
    zoff: np.ndarray
    clamped: int = 0

    @property
    def N(self) -> int:
        return self.coords.shape[0] - 2

    @property
    def u(self) -> np.ndarray:
        return self.coords[0]

    @property
    def w(self) -> np.ndarray:
        return self.coords[1]

    @property
    def v(self) -> np.ndarray:
        return self.coords[2:]

    def diameter(self) -> float:
        diff = self.coords[:, None, :] - self.coords[None, :, :]
        return float(np.sqrt((diff ** 2).sum(-1)).max())

    __hash__ = None


@dataclass(frozen=True)
class FlexionInterval:
    z_lo: float
    z_hi: float
    lo_open: bool = True
    hi_open: bool = True
    lo_reason: str = ""
    hi_reason: str = ""

    @property
    def width(self) -> float:
        return self.z_hi - self.z_lo

    def interior(self, margin: float = INTERIOR_MARGIN) -> tuple:
        """Endpoints pulled inwards by ``margin`` times the width."""
        pad = margin * self.width
        return self.z_lo + pad, self.z_hi - pad

    def central(self, fraction: float = 0.8) -> tuple:
        mid = 0.5 * (self.z_lo + self.z_hi)
        half = 0.5 * fraction * self.width
        return mid - half, mid + half


def axial_offset(l, m, z):
    """Height of ``v_k`` above the midpoint of ``u w``: ``(m^2 - l^2) / (2 z)``."""
    if np.any(np.asarray(z) <= 0):
        raise ValueError("flexion value z must be positive")
    return (np.square(m) - np.square(l)) / (2.0 * np.asarray(z, dtype=float))


def _radicand(l, m, z):
    zk = axial_offset(l, m, z)
    return 0.5 * (np.square(m) + np.square(l)) - zk ** 2 - 0.25 * np.square(z)


def radial_distance(l, m, z):
    """Distance of ``v_k`` from the apex axis.

    Raises
    ------
    InfeasibleRadius
        When no point is at distance ``l`` from ``u`` and ``m`` from ``w``.
    """
    rad = _radicand(l, m, z)
    scale = 0.5 * (np.square(m) + np.square(l))
    if np.any(rad < -RADICAND_TOL * scale):
        raise InfeasibleRadius(f"radicand {rad} < 0 at z = {z}")
    r = np.sqrt(np.maximum(rad, 0.0))
    return float(r) if np.ndim(r) == 0 else r


def _turn_cosine(r_k, r_next, L_k, zoff_k, zoff_next):
    return (r_next ** 2 + r_k ** 2 - L_k ** 2 + (zoff_next - zoff_k) ** 2) / (2.0 * r_k * r_next)


def turn_angle(r_k, r_next, L_k, zoff_k, zoff_next):
    """Azimuth increment ``dtheta_k`` in ``[0, pi]`` between ``v_k`` and ``v_{k+1}``.

    The axial term enters with a plus sign: it is what makes
    ``|v_{k+1} - v_k| = L_k`` hold for the resulting coordinates.
    """
    if r_k <= 0 or r_next <= 0:
        raise InfeasibleTurn("turn angle undefined on the axis (r = 0)")
    t = _turn_cosine(r_k, r_next, L_k, zoff_k, zoff_next)
    if abs(t) > 1.0 + TURN_CLAMP_TOL:
        raise InfeasibleTurn(f"|t| = {abs(t)!r} > 1: edge length {L_k} unreachable")
    return math.acos(min(1.0, max(-1.0, t)))


def _feasibility(params: SuspensionParams, zs: np.ndarray):
    """Radicands and turn cosines on a batch of z values (rows = samples)."""
    zs = np.asarray(zs, dtype=float)[:, None]
    l, m, L = params.l, params.m, params.L
    zoff = (m ** 2 - l ** 2) / (2.0 * zs)
    rad = 0.5 * (m ** 2 + l ** 2) - zoff ** 2 - 0.25 * zs ** 2
    r = np.sqrt(np.maximum(rad, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        t = (r[:, 1:] ** 2 + r[:, :-1] ** 2 - L[:-1] ** 2
             + (zoff[:, 1:] - zoff[:, :-1]) ** 2) / (2.0 * r[:, :-1] * r[:, 1:])
    return rad, r, zoff, t


def _feasible_mask(params, zs):
    rad, r, zoff, t = _feasibility(params, zs)
    scale = 0.5 * (params.l ** 2 + params.m ** 2)
    rad_ok = np.all(rad >= -RADICAND_TOL * scale, axis=1) & np.all(r > 0, axis=1)
    with np.errstate(invalid="ignore"):
        turn_ok = np.all(np.abs(t) <= 1.0 + TURN_CLAMP_TOL, axis=1)
    return rad_ok & turn_ok, rad_ok


def embed_batch(params: SuspensionParams, zs, theta1: Theta1Rule, signs):
    """Vectorised embedding over many z values.

    Returns
    -------
    coords : ndarray, shape (S, N+2, 3)
        NaN rows where the sample is infeasible.
    ok : ndarray of bool, shape (S,)
    extras : dict
        ``r``, ``theta``, ``zoff`` arrays of shape (S, N) and ``clamped`` counts.
    """
    N = params.N
    signs = np.asarray(check_signs(signs, N), dtype=float)
    zs = np.atleast_1d(np.asarray(zs, dtype=float))
    rad, r, zoff, t = _feasibility(params, zs)
    ok, _ = _feasible_mask(params, zs)
    clamped = np.sum((np.abs(t) > 1.0) & (np.abs(t) <= 1.0 + TURN_CLAMP_TOL), axis=1)
    dtheta = np.arccos(np.clip(np.nan_to_num(t, nan=1.0), -1.0, 1.0))
    if theta1.kind == "symmetric_half":
        th1 = 0.5 * (np.pi - dtheta[:, :N // 2].sum(axis=1))
    else:
        th1 = np.full(len(zs), theta1.value)
    theta = np.concatenate([th1[:, None], th1[:, None] + np.cumsum(dtheta * signs, axis=1)], axis=1)
    coords = np.empty((len(zs), N + 2, 3))
    coords[:, 0] = np.stack([np.zeros_like(zs), np.zeros_like(zs), 0.5 * zs], axis=1)
    coords[:, 1] = np.stack([np.zeros_like(zs), np.zeros_like(zs), -0.5 * zs], axis=1)
    coords[:, 2:, 0] = r * np.cos(theta)
    coords[:, 2:, 1] = r * np.sin(theta)
    coords[:, 2:, 2] = zoff
    coords[~ok] = np.nan
    return coords, ok, {"r": r, "theta": theta, "zoff": zoff, "clamped": clamped}


def embed(params: SuspensionParams, z: float, theta1: Theta1Rule, signs) -> Embedding:
    """Coordinates of ``u, w, v_1..v_N`` at apex distance ``z``.

    Raises
    ------
    InfeasibleRadius, InfeasibleTurn
        With the 1-based index of the first vertex that cannot be placed.
    """
    z = float(z)
    if not z > 0:
        raise ValueError("flexion value z must be positive")
    N = params.N
    signs = check_signs(signs, N)
    zoff = axial_offset(params.l, params.m, z)
    r = np.empty(N)
    for k in range(N):
        try:
            r[k] = radial_distance(params.l[k], params.m[k], z)
        except InfeasibleRadius as exc:
            raise InfeasibleRadius(f"v_{k + 1}: {exc}", vertex_index=k + 1) from None
    dtheta = np.empty(N - 1)
    clamped = 0
    for k in range(N - 1):
        try:
            dtheta[k] = turn_angle(r[k], r[k + 1], params.L[k], zoff[k], zoff[k + 1])
        except InfeasibleTurn as exc:
            raise InfeasibleTurn(f"v_{k + 1} -> v_{k + 2}: {exc}", vertex_index=k + 1) from None
        if abs(_turn_cosine(r[k], r[k + 1], params.L[k], zoff[k], zoff[k + 1])) > 1.0:
            clamped += 1
    if theta1.kind == "symmetric_half":
        th1 = 0.5 * (math.pi - dtheta[:N // 2].sum())
    else:
        th1 = theta1.value
    theta = np.concatenate([[th1], th1 + np.cumsum(dtheta * np.asarray(signs))])
    coords = np.empty((N + 2, 3))
    coords[0] = (0.0, 0.0, 0.5 * z)
    coords[1] = (0.0, 0.0, -0.5 * z)
    coords[2:, 0] = r * np.cos(theta)
    coords[2:, 1] = r * np.sin(theta)
    coords[2:, 2] = zoff
    return Embedding(z=z, coords=coords, r=r, theta=theta, zoff=zoff, clamped=clamped)


def closure_gap(emb: Embedding, L_N: float) -> float:
    """Signed mismatch ``|v_N - v_1| - L_N`` of the one edge the model leaves free."""
    return float(np.linalg.norm(emb.v[-1] - emb.v[0]) - L_N)


def _bisect(params, good, bad, atol):
    """Shrink ``[good, bad]`` (in either order) onto the feasibility boundary."""
    for _ in range(200):
        mid = 0.5 * (good + bad)
        if mid in (good, bad) or abs(good - bad) <= atol:
            break
        if _feasible_mask(params, [mid])[0][0]:
            good = mid
        else:
            bad = mid
    return good, bad


def flexion_interval(params: SuspensionParams, theta1: Theta1Rule = None, signs=None,
                     atol: float = 0.0, grid: int = 4000) -> FlexionInterval:
    """Largest interval of apex distances on which :func:`embed` succeeds.

    Feasibility depends only on the lengths, so ``theta1`` and ``signs`` are
    accepted for interface symmetry and ignored.  Endpoints are bisected
    down to ``atol`` (default: until the bracket stops shrinking, which is
    well below the 1e-10 contract).  An endpoint is open when a radius
    vanishes there and closed when a turn cosine reaches +-1 (a flat fold).
    """
    z_max = 2.0 * float(np.max(np.sqrt(0.5 * (params.m ** 2 + params.l ** 2))))
    z_max = min(z_max, float(np.min(params.l + params.m)))
    zs = np.concatenate([np.geomspace(1e-9 * z_max, 1e-3 * z_max, 200, endpoint=False),
                         np.linspace(1e-3 * z_max, z_max, grid)])
    ok, _ = _feasible_mask(params, zs)
    if not ok.any():
        raise EmptyInterval(f"no feasible z in (0, {z_max}]")
    # longest run of consecutive feasible samples
    edges = np.diff(np.concatenate([[0], ok.astype(int), [0]]))
    starts, stops = np.flatnonzero(edges == 1), np.flatnonzero(edges == -1) - 1
    widths = zs[stops] - zs[starts]
    best = int(np.argmax(widths))
    i0, i1 = starts[best], stops[best]
    if i0 == 0:
        z_lo, lo_open, lo_reason = 0.0, True, "z -> 0"
    else:
        z_lo, bad = _bisect(params, zs[i0], zs[i0 - 1], atol)
        lo_open, lo_reason = _endpoint_kind(params, bad)
    if i1 == len(zs) - 1:
        z_hi, bad = _bisect(params, zs[i1], z_max * (1 + 1e-12), atol)
        if _feasible_mask(params, [bad])[0][0]:
            z_hi = bad
    else:
        z_hi, bad = _bisect(params, zs[i1], zs[i1 + 1], atol)
    hi_open, hi_reason = _endpoint_kind(params, bad)
    if not z_hi > z_lo:
        raise EmptyInterval("feasible set is a single point")
    return FlexionInterval(z_lo, z_hi, lo_open, hi_open, lo_reason, hi_reason)


def _endpoint_kind(params, z_bad):
    feasible, rad_ok = _feasible_mask(params, [z_bad])
    if not rad_ok[0]:
        return True, "radius"
    return False, "turn"


def interior_samples(interval: FlexionInterval, S: int, margin: float = INTERIOR_MARGIN,
                     lo: float = None, hi: float = None) -> np.ndarray:
    """``S`` Chebyshev nodes strictly inside the interval (increasing)."""
    a, b = interval.interior(margin)
    if lo is not None:
        a, b = lo, hi
    k = np.arange(S)
    nodes = np.cos(np.pi * (2 * k + 1) / (2 * S))[::-1]
    return 0.5 * (a + b) + 0.5 * (b - a) * nodes


def dihedral_from_z(l, m, beta, Bang, z):
    """Dihedral ``eps_k`` along ``v_k v_{k+1}`` from the apex distance.

    Solves ``z^2 = l^2 + m^2 - 2 m l (cos b cos B + sin b sin B cos eps)``
    for ``eps`` in ``[0, pi]``.
    """
    sb, sB = np.sin(beta), np.sin(Bang)
    if np.any(np.abs(sb * sB) == 0):
        raise OutOfRange("face angle of 0 or pi at v_k")
    c = ((np.square(l) + np.square(m) - np.square(z)) / (2.0 * m * l)
         - np.cos(beta) * np.cos(Bang)) / (sb * sB)
    if np.any(np.abs(c) > 1.0 + 1e-12):
        raise OutOfRange(f"cos(eps) = {c} outside [-1, 1]")
    eps = np.arccos(np.clip(c, -1.0, 1.0))
    return float(eps) if np.ndim(eps) == 0 else eps


@dataclass(frozen=True)
class ConstructedSuspension:
    """A parameter set together with the branch choices that make it flex.

    ``vertex_kinds`` (``"OAE"``/``"OAS"`` per equator vertex) and
    ``fold_index`` are only set for the Type III families.
    """

    params: SuspensionParams
    tag: SuspensionType
    theta1: Theta1Rule = field(default_factory=Theta1Rule.fixed)
    signs: tuple = ()
    provenance: dict = field(default_factory=dict)
    vertex_kinds: tuple = None
    fold_index: int = None

    def __post_init__(self):
        signs = self.signs or default_signs(self.params.N)
        object.__setattr__(self, "signs", check_signs(signs, self.params.N))
        object.__setattr__(self, "tag", SuspensionType(self.tag))

    @property
    def N(self) -> int:
        return self.params.N

    def embed(self, z: float) -> Embedding:
        return embed(self.params, z, self.theta1, self.signs)

    def embed_batch(self, zs):
        return embed_batch(self.params, zs, self.theta1, self.signs)

    @cached_property
    def interval(self) -> FlexionInterval:
        return flexion_interval(self.params, self.theta1, self.signs)

    __hash__ = None
