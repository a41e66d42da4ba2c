"""Flex certification: dihedral traces, closure, strong flexibility, volume, rigidity.

Face orientation follows the windings ``(u, v_{k+1}, v_k)`` for upper faces
and ``(w, v_k, v_{k+1})`` for lower faces; their right-hand normals are
taken as the outward side.  Dihedral angles are the interior angles with
respect to that orientation and live in ``[0, 2*pi)``, so reflex values
do occur.  For a coordinate-model embedding with increasing azimuth these
normals point towards the apex axis.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .coordinates import (ConstructedSuspension, Embedding, dihedral_from_z,
                          interior_samples)
from .errors import DegenerateConfiguration
from .geometry import SuspensionType, face_angles_of

GAP_RTOL = 1e-9
STRONG_MIN_RANGE = 1e-3
VOLUME_RTOL = 1e-9
RANK_RTOL = 1e-8
DEFAULT_SAMPLES = 33

TWO_PI = 2.0 * np.pi


# ---------------------------------------------------------------------------
# oriented dihedrals


def _unit(x):
    return x / np.linalg.norm(x, axis=-1, keepdims=True)


def oriented_dihedral(p, q, a, b, n_a):
    """Interior dihedral along edge ``p q`` between the face holding ``a`` and the one holding ``b``.

    ``n_a`` is the outward normal of the face holding ``a``.  All arguments
    broadcast over leading axes.  The result lies in ``[0, 2*pi)``.
    """
    e = _unit(q - p)
    ha = (a - p) - np.sum((a - p) * e, axis=-1, keepdims=True) * e
    hb = (b - p) - np.sum((b - p) * e, axis=-1, keepdims=True) * e
    ha, hb = _unit(ha), _unit(hb)
    # rotating ha about e by +90 degrees gives e x ha = +-n_a; the interior is -n_a
    sigma = -np.sign(np.sum(np.cross(e, ha) * n_a, axis=-1))
    sigma = np.where(sigma == 0, 1.0, sigma)
    ang = np.arctan2(np.sum(np.cross(ha, hb) * e, axis=-1), np.sum(ha * hb, axis=-1))
    return np.mod(sigma * ang, TWO_PI)


def face_normals(coords):
    """Outward (winding) normals of the upper and lower faces, shape (..., N, 3) each."""
    u, w, v = coords[..., 0:1, :], coords[..., 1:2, :], coords[..., 2:, :]
    vn = np.roll(v, -1, axis=-2)
    upper = np.cross(vn - u, v - u)
    lower = np.cross(v - w, vn - w)
    return upper, lower


def dihedrals(coords):
    """``(eps, delta, Delta)`` from coordinates, each shape (..., N).

    ``eps_k`` sits on ``v_k v_{k+1}``, ``delta_k`` on ``u v_k`` and
    ``Delta_k`` on ``w v_k``.
    """
    coords = np.asarray(coords, dtype=float)
    u = coords[..., 0:1, :]
    w = coords[..., 1:2, :]
    v = coords[..., 2:, :]
    vn = np.roll(v, -1, axis=-2)
    vp = np.roll(v, 1, axis=-2)
    n_up, n_lo = face_normals(coords)
    n_up_prev = np.roll(n_up, 1, axis=-2)
    n_lo_prev = np.roll(n_lo, 1, axis=-2)
    u_b = np.broadcast_to(u, v.shape)
    w_b = np.broadcast_to(w, v.shape)
    eps = oriented_dihedral(v, vn, u_b, w_b, n_up)
    delta = oriented_dihedral(u_b, v, vp, vn, n_up_prev)
    Delta = oriented_dihedral(w_b, v, vp, vn, n_lo_prev)
    return eps, delta, Delta


def folded(angle):
    """Map an angle in ``[0, 2*pi)`` onto ``[0, pi]`` (same cosine)."""
    angle = np.mod(angle, TWO_PI)
    return np.where(angle > np.pi, TWO_PI - angle, angle)


def angular_distance(a, b):
    d = np.mod(np.asarray(a) - np.asarray(b), TWO_PI)
    return np.minimum(d, TWO_PI - d)


# ---------------------------------------------------------------------------
# volume


def _faces(N):
    """Vertex-index triples of the 2N oriented faces (u = 0, w = 1, v_k = k + 1)."""
    k = np.arange(N)
    vk, vn = k + 2, (k + 1) % N + 2
    upper = np.stack([np.zeros(N, int), vn, vk], axis=1)
    lower = np.stack([np.ones(N, int), vk, vn], axis=1)
    return upper, lower


def face_volume_terms(coords):
    """Signed tetrahedron volumes ``det[a, b, c] / 6`` per face: (upper, lower), each (..., N)."""
    coords = np.asarray(coords, dtype=float)
    N = coords.shape[-2] - 2
    upper, lower = _faces(N)

    def terms(tri):
        a, b, c = (coords[..., tri[:, j], :] for j in range(3))
        return np.sum(a * np.cross(b, c), axis=-1) / 6.0

    return terms(upper), terms(lower)


def signed_volume(emb) -> float:
    """Oriented volume enclosed by the 2N faces (accepts an Embedding or a coordinate array)."""
    coords = emb.coords if isinstance(emb, Embedding) else np.asarray(emb, dtype=float)
    up, lo = face_volume_terms(coords)
    return float(np.sum(up) + np.sum(lo))


def face_pair_cancellation(emb, tag) -> np.ndarray:
    """Sum of the volume terms of each face and its symmetry partner.

    Partners are the images under the symmetry of each family: upper face
    ``k`` with lower face ``k+M`` (I-OEE), upper ``k`` with upper ``k+M`` and
    lower ``k`` with lower ``k+M`` (II-OEE), upper ``k`` with lower
    ``N-k+1`` (II-AEE).  Returns one sum per pair.
    """
    coords = emb.coords if isinstance(emb, Embedding) else np.asarray(emb, dtype=float)
    up, lo = face_volume_terms(coords)
    N = up.shape[-1]
    M = N // 2
    k = np.arange(N)
    tag = SuspensionType(tag)
    if tag is SuspensionType.I_OEE:
        return up + lo[(k + M) % N]
    if tag is SuspensionType.II_OEE:
        return np.concatenate([up[:M] + up[M:], lo[:M] + lo[M:]])
    if tag is SuspensionType.II_AEE:
        # 1-based partner N-k+1 is 0-based N-1-k
        return up + lo[N - 1 - k]
    raise ValueError(f"no face pairing for {tag}")


def regular_dipyramid(N: int, radius: float = 1.0, height: float = 1.0) -> np.ndarray:
    """Convex control: planar regular N-gon equator, apexes at +-height.

    The equator runs clockwise seen from ``u`` so that the face windings
    give outward normals and a positive volume.
    """
    ang = -TWO_PI * np.arange(N) / N
    v = np.stack([radius * np.cos(ang), radius * np.sin(ang), np.zeros(N)], axis=1)
    return np.vstack([[0.0, 0.0, height], [0.0, 0.0, -height], v])


# ---------------------------------------------------------------------------
# traces and verdicts


@dataclass
class DihedralTrace:
    z_samples: np.ndarray
    eps: np.ndarray
    delta: np.ndarray
    Delta: np.ndarray
    volume: np.ndarray
    gap: np.ndarray
    feasible: np.ndarray
    diameter: np.ndarray
    eq3_max_error: float = np.nan
    coords: np.ndarray = field(default=None, repr=False)

    @property
    def N(self) -> int:
        return self.eps.shape[1]

    def ranges(self) -> np.ndarray:
        """Per-column range of the 3N dihedral traces (folded onto [0, pi])."""
        ok = self.feasible
        cols = np.concatenate([folded(self.eps[ok]), folded(self.delta[ok]),
                               folded(self.Delta[ok])], axis=1)
        if cols.shape[0] == 0:
            return np.zeros(cols.shape[1])
        return cols.max(axis=0) - cols.min(axis=0)


def dihedral_trace(s: ConstructedSuspension, S: int = DEFAULT_SAMPLES, lo=None, hi=None,
                   keep_coords: bool = False) -> DihedralTrace:
    """Sample the flex at ``S`` Chebyshev points strictly inside the flexion interval.

    ``lo``/``hi`` restrict the sampled range.  The coordinate dihedrals
    ``eps_k`` are cross-checked against the apex-distance relation and the
    largest disagreement is stored in ``eq3_max_error``.
    """
    zs = interior_samples(s.interval, S, lo=lo, hi=hi)
    coords, ok, _ = s.embed_batch(zs)
    eps, delta, Delta = dihedrals(coords)
    up, lo_t = face_volume_terms(coords)
    volume = up.sum(-1) + lo_t.sum(-1)
    gap = np.linalg.norm(coords[:, -1] - coords[:, 2], axis=1) - s.params.L[-1]
    diff = coords[:, :, None, :] - coords[:, None, :, :]
    diameter = np.sqrt((diff ** 2).sum(-1)).max(axis=(1, 2))
    fa = face_angles_of(s.params)
    err = np.nan
    if ok.any():
        eps3 = dihedral_from_z(s.params.l, s.params.m, fa.beta, fa.Bang, zs[ok][:, None])
        err = float(np.max(np.abs(folded(eps[ok]) - eps3)))
    return DihedralTrace(zs, eps, delta, Delta, volume, gap, ok, diameter, err,
                         coords if keep_coords else None)


def strong_flexibility(trace: DihedralTrace, min_range: float = STRONG_MIN_RANGE) -> bool:
    """Every one of the 3N dihedral traces moves by at least ``min_range`` radians."""
    if trace.feasible.sum() < 2:
        return False
    return bool(np.all(trace.ranges() >= min_range))


def bellows_check(trace: DihedralTrace, rtol: float = VOLUME_RTOL, require_zero: bool = False) -> bool:
    """Volume constant along the trace (and zero, if ``require_zero``) up to ``rtol * diameter^3``."""
    ok = trace.feasible
    if ok.sum() < 2:
        return False
    vol = trace.volume[ok]
    tol = rtol * float(trace.diameter[ok].max()) ** 3
    if require_zero:
        return bool(np.max(np.abs(vol)) <= tol)
    return bool(np.max(np.abs(vol - vol[0])) <= tol)


@dataclass
class FlexVerdict:
    flexible: bool
    max_rel_gap_deviation: float
    strong: bool
    min_dihedral_range: float
    volume_max_abs: float
    inconclusive: bool = False
    details: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"flexible": self.flexible, "inconclusive": self.inconclusive,
                "max_rel_gap_deviation": self.max_rel_gap_deviation, "strong": self.strong,
                "min_dihedral_range": self.min_dihedral_range,
                "volume_max_abs": self.volume_max_abs, **self.details}


def verify_flexible(s: ConstructedSuspension, S: int = DEFAULT_SAMPLES,
                    tol: float = GAP_RTOL) -> FlexVerdict:
    """Closure-gap sweep plus strong-flexibility and volume checks.

    ``flexible`` holds iff ``max |gap| / L_N <= tol`` over ``S`` interior
    samples.  Strong flexibility is judged on the central 80% of the
    interval.  Fewer than two feasible samples gives an inconclusive,
    non-flexible verdict.
    """
    from .errors import EmptyInterval

    try:
        trace = dihedral_trace(s, S)
    except EmptyInterval as exc:
        return FlexVerdict(False, np.inf, False, 0.0, np.nan, True, {"reason": str(exc)})
    ok = trace.feasible
    if ok.sum() < 2:
        return FlexVerdict(False, np.inf, False, 0.0, np.nan, True,
                           {"reason": f"only {int(ok.sum())} feasible samples"})
    dev = float(np.max(np.abs(trace.gap[ok])) / s.params.L[-1])
    flexible = dev <= tol
    lo, hi = s.interval.central(0.8)
    central = dihedral_trace(s, S, lo=lo, hi=hi)
    ranges = central.ranges()
    vol_abs = float(np.max(np.abs(trace.volume[ok])))
    diam = float(trace.diameter[ok].max())
    details = {
        "samples": int(ok.sum()),
        "z_interval": [float(s.interval.z_lo), float(s.interval.z_hi)],
        "eq3_max_error": trace.eq3_max_error,
        "volume_rel": vol_abs / diam ** 3,
        "bellows_constant": bool(bellows_check(trace)),
        "zero_volume": bool(bellows_check(trace, require_zero=True)),
    }
    return FlexVerdict(bool(flexible), dev, strong_flexibility(central), float(ranges.min()),
                       vol_abs, False, details)


# ---------------------------------------------------------------------------
# infinitesimal rigidity


def edge_list(N: int) -> np.ndarray:
    """The 3N edges as vertex-index pairs (u = 0, w = 1, v_k = k + 1)."""
    k = np.arange(N)
    vk, vn = k + 2, (k + 1) % N + 2
    return np.concatenate([np.stack([np.zeros(N, int), vk], 1),
                           np.stack([np.ones(N, int), vk], 1),
                           np.stack([vk, vn], 1)])


def rigidity_matrix(coords) -> np.ndarray:
    coords = np.asarray(coords, dtype=float)
    n = coords.shape[0]
    edges = edge_list(n - 2)
    R = np.zeros((len(edges), 3 * n))
    for row, (i, j) in enumerate(edges):
        d = coords[i] - coords[j]
        R[row, 3 * i:3 * i + 3] = d
        R[row, 3 * j:3 * j + 3] = -d
    return R


def rigidity_jacobian_rank(emb, rtol: float = RANK_RTOL, coincide_rtol: float = 1e-9):
    """Numerical rank of the edge-length Jacobian and the non-trivial flex dimension.

    Returns
    -------
    rank : int
    flex_dim : int
        ``3(N+2) - 6 - rank``.

    Raises
    ------
    DegenerateConfiguration
        If two vertexes coincide (relative to the diameter).
    """
    coords = emb.coords if isinstance(emb, Embedding) else np.asarray(emb, dtype=float)
    diff = coords[:, None, :] - coords[None, :, :]
    dist = np.sqrt((diff ** 2).sum(-1))
    diam = dist.max()
    iu = np.triu_indices(len(coords), 1)
    close = dist[iu] <= coincide_rtol * diam
    if np.any(close):
        i, j = iu[0][close][0], iu[1][close][0]
        raise DegenerateConfiguration(f"vertexes {i} and {j} coincide")
    sv = np.linalg.svd(rigidity_matrix(coords), compute_uv=False)
    rank = int(np.sum(sv > rtol * sv[0]))
    return rank, 3 * len(coords) - 6 - rank


# ---------------------------------------------------------------------------
# flat states


FLAT_SNAP_TOL = 1e-7
FLAT_RTOL = 1e-8


@dataclass
class FlatState:
    """A configuration with all vertexes in one plane, reached at ``eps_1 = 0`` or ``pi``.

    The coordinates are built with every turn angle snapped to exactly 0
    or ``pi``; ``edge_error`` then certifies that this planar placement
    still realizes all 3N lengths.
    """

    z: float
    eps1: float
    coords: np.ndarray = field(repr=False)
    edge_error: float
    planarity: float
    delta: np.ndarray
    path_distance: float = np.nan

    @property
    def coplanar(self) -> bool:
        return bool(self.edge_error <= FLAT_RTOL and self.planarity <= FLAT_RTOL)

    def pattern_error(self, target) -> np.ndarray:
        return angular_distance(self.delta, target)

    def as_dict(self) -> dict:
        return {"z": self.z, "eps1": self.eps1, "edge_error": self.edge_error,
                "planarity": self.planarity, "coplanar": self.coplanar,
                "delta": [float(d) for d in self.delta], "path_distance": self.path_distance}


def edge_length_error(coords, params) -> float:
    """Largest relative deviation of the 3N edge lengths of ``coords`` from ``params``."""
    coords = np.asarray(coords, dtype=float)
    edges = edge_list(params.N)
    got = np.linalg.norm(coords[edges[:, 0]] - coords[edges[:, 1]], axis=1)
    want = np.concatenate([params.l, params.m, params.L])
    return float(np.max(np.abs(got - want) / want))


def planarity(coords) -> float:
    """Smallest singular value of the centred coordinates over the diameter (0 iff coplanar)."""
    coords = np.asarray(coords, dtype=float)
    sv = np.linalg.svd(coords - coords.mean(axis=0), compute_uv=False)
    diff = coords[:, None, :] - coords[None, :, :]
    return float(sv[-1] / np.sqrt((diff ** 2).sum(-1)).max())


def flat_state_at(s: ConstructedSuspension, z: float, eps1=np.nan):
    """Planar placement at apex distance ``z``, or ``None`` if some turn is not flat there."""
    from .coordinates import _turn_cosine, axial_offset, radial_distance
    from .errors import SuspensionError

    p = s.params
    try:
        r = np.atleast_1d(radial_distance(p.l, p.m, z))
    except SuspensionError:
        return None
    zoff = axial_offset(p.l, p.m, z)
    N = p.N
    theta = np.zeros(N)
    for k in range(N - 1):
        if r[k] == 0 or r[k + 1] == 0:
            step = 0.0
        else:
            t = _turn_cosine(r[k], r[k + 1], p.L[k], zoff[k], zoff[k + 1])
            if abs(abs(t) - 1.0) > FLAT_SNAP_TOL:
                return None
            step = 0.0 if t > 0 else np.pi
        theta[k + 1] = theta[k] + step
    v = np.stack([r * np.cos(theta), r * np.sin(theta), zoff], axis=1)
    coords = np.vstack([[0.0, 0.0, 0.5 * z], [0.0, 0.0, -0.5 * z], v])
    _, delta, _ = dihedrals(coords)
    state = FlatState(float(z), float(eps1), coords, edge_length_error(coords, p),
                      planarity(coords), delta)
    try:
        emb = s.embed(float(z))
        state.path_distance = float(np.min([
            np.abs(emb.coords - coords * np.array([1.0, sgn, 1.0])).max()
            for sgn in (1.0, -1.0)]))
    except SuspensionError:
        pass
    return state


def flat_states(s: ConstructedSuspension) -> list:
    """Flat placements at the two apex distances where ``eps_1`` is 0 or ``pi``."""
    p = s.params
    fa = face_angles_of(p)
    b, B = fa.beta[0], fa.Bang[0]
    l, m = p.l[0], p.m[0]
    out = []
    for eps1, ang in ((0.0, b - B), (np.pi, b + B)):
        z2 = l * l + m * m - 2 * l * m * np.cos(ang)
        if z2 <= 0:
            continue
        st = flat_state_at(s, float(np.sqrt(z2)), eps1)
        if st is not None:
            out.append(st)
    return out


# ---------------------------------------------------------------------------
# tetrahedral-angle relations


def tetrahedral_angle_residuals(s: ConstructedSuspension, trace: DihedralTrace) -> dict:
    """Residuals of the vertex relations along a trace of a Type-III suspension.

    Per vertex (columns) and sample (rows):

    ``branch``
        smallest residual over the two tetrahedral-angle branches,
        ``V_P = C_R`` or ``V_P = -S_R`` at OAE vertexes and
        ``-C_R`` or ``S_R`` at OAS vertexes, with ``C_R, S_R`` taking
        ``(B_k, beta_k)``.  The relations are stated for the mirror image
        of our frame, where the upper dihedral is our ``Delta_k``; at OAS
        vertexes they hold for the reciprocal ratio
        ``tan(eps/2) / tan(Delta/2)``.  ``branch_index`` records which
        branch is met.
    ``eps_cos``, ``delta_cos``
        ``|cos eps_{k-1} - cos eps_k|`` and ``|cos delta_k - cos Delta_k|``.
    ``opposite_eps``, ``opposite_delta``
        raw residuals of the two spherical cosine identities at ``v_k``.
    ``pair``
        per listed vertex pair, ``| |f_i| - |f_j| |`` of the invariants.

    Pole samples are masked as NaN and counted in ``poles``.

    Raises
    ------
    ValueError
        For suspensions without an OAE/OAS vertex classification.
    """
    from .errors import PoleError
    from .type_iii import cr, sr, vp, vr

    if s.vertex_kinds is None:
        raise ValueError(f"{s.tag.value} has no OAE/OAS vertex classification")
    ok = trace.feasible
    eps, delta, Delta = trace.eps[ok], trace.delta[ok], trace.Delta[ok]
    S, N = eps.shape
    fa = face_angles_of(s.params)
    g_prev, G_prev = np.roll(fa.gamma, 1), np.roll(fa.Gamma, 1)
    eps_prev = np.roll(eps, 1, axis=1)
    inv = np.full((S, N), np.nan)
    branch = np.full((S, N), np.nan)
    which = np.full((S, N), -1)
    poles = 0
    for k in range(N):
        oae = s.vertex_kinds[k] == "OAE"
        try:
            c = cr(fa.Bang[k], fa.beta[k])
            sn = sr(fa.Bang[k], fa.beta[k])
        except PoleError:
            poles += S
            continue
        targets = (c, -sn) if oae else (-c, sn)
        for i in range(S):
            try:
                inv[i, k] = vp(delta[i, k], eps[i, k]) if oae else vr(delta[i, k], eps[i, k])
                g = vp(Delta[i, k], eps[i, k]) if oae else 1.0 / vr(Delta[i, k], eps[i, k])
            except (PoleError, ZeroDivisionError):
                poles += 1
                continue
            res = [abs(g - t) / (1.0 + abs(t)) for t in targets]
            which[i, k] = int(np.argmin(res))
            branch[i, k] = min(res)
    pairs = [(1, 3)] + [(2 * k - 2, 2 * k + 1) for k in range(2, N // 2)] + [(N - 2, N)]
    pair_res = {f"{i},{j}": float(np.nanmax(np.abs(np.abs(inv[:, i - 1]) - np.abs(inv[:, j - 1]))))
                for i, j in pairs}
    opp_eps = (np.cos(g_prev) * np.cos(G_prev) + np.sin(g_prev) * np.sin(G_prev) * np.cos(eps_prev)
               - np.cos(fa.beta) * np.cos(fa.Bang) - np.sin(fa.beta) * np.sin(fa.Bang) * np.cos(eps))
    opp_delta = (np.cos(g_prev) * np.cos(fa.beta) + np.sin(g_prev) * np.sin(fa.beta) * np.cos(delta)
                 - np.cos(G_prev) * np.cos(fa.Bang) - np.sin(G_prev) * np.sin(fa.Bang) * np.cos(Delta))
    constant_branch = all(len(set(which[:, k][which[:, k] >= 0])) <= 1 for k in range(N))
    return {
        "branch": branch, "branch_index": which, "invariant": inv,
        "eps_cos": np.abs(np.cos(eps_prev) - np.cos(eps)),
        "delta_cos": np.abs(np.cos(delta) - np.cos(Delta)),
        "opposite_eps": opp_eps, "opposite_delta": opp_delta,
        "pair": pair_res, "poles": poles, "constant_branch": constant_branch,
        "max": {
            "branch": float(np.nanmax(branch)) if np.isfinite(branch).any() else np.nan,
            "eps_cos": float(np.abs(np.cos(eps_prev) - np.cos(eps)).max()),
            "delta_cos": float(np.abs(np.cos(delta) - np.cos(Delta)).max()),
            "opposite_eps": float(np.abs(opp_eps).max()),
            "opposite_delta": float(np.abs(opp_delta).max()),
            "pair": max(pair_res.values()),
        },
    }
