"""Staged construction of the III-OAE and III-OAS families.

The free data are the two seed faces (``l_1, m_1, l_2, m_2, L_1``) and the
odd equator edges ``L_3, ..., L_{N-3}``.  Each stage fixes the face angles
at ``v_{2k+1}`` from a quadratic in ``X = cot(beta_{2k+1} / 2)`` whose
coefficients carry the pair invariant ``K_k`` of an earlier vertex, then
completes four faces by the laws of sines and cosines.  The last stage is
closed by the flat-fold angle sums instead of a free edge.

The recursion has discrete open choices (assembly mode of a vertex
figure, sign of ``K_k``, coefficient case, quadratic root).  A depth-first
search enumerates them; the surviving leaves are ranked by their final
residuals and the best ones are refined over the continuous seed
parameters until the remaining pair condition holds.  Nothing is
returned unless the result also passes the closure sweep and shows both
flat states.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares, minimize

from .analysis import flat_states
from .coordinates import (ConstructedSuspension, Theta1Rule, embed_batch,
                          flexion_interval, interior_samples)
from .errors import (EmptyInterval, PoleAtZero, PoleError, SingularR,
                     SuspensionError, UndefinedDihedral, ValidationError)
from .geometry import (SuspensionParams, SuspensionType, face_angle,
                       face_angles_of, validate_params)

log = logging.getLogger(__name__)

PI = np.pi
POLE_TOL = 1e-9
DENOM_TOL = 1e-12
DISC_TOL = 1e-12
STAGE_RTOL = 1e-10
FINAL_TOL = 1e-8
FLEX_RTOL = 1e-8
FLAT_PATTERN_TOL = 1e-6
EPS1_CHOICES = (0.5 * PI, 1.5 * PI)
SIGN_SAMPLES = 9


# ---------------------------------------------------------------------------
# half-angle helpers


def cot_half(phi):
    """``cot(phi / 2)``; raises PoleAtZero when ``phi`` is a multiple of ``2 pi``."""
    phi = float(phi)
    if abs(np.sin(0.5 * phi)) <= DENOM_TOL:
        raise PoleAtZero(f"cot(phi/2) has a pole at phi = {phi}")
    return float(np.cos(0.5 * phi) / np.sin(0.5 * phi))


def _tan_half(x, what):
    c = np.cos(0.5 * x)
    if abs(c) <= POLE_TOL:
        raise PoleError(f"tan({what}/2) has a pole at {what} = {x}")
    return np.sin(0.5 * x) / c


def vp(delta, eps):
    """``tan(delta/2) tan(eps/2)``."""
    return float(_tan_half(delta, "delta") * _tan_half(eps, "eps"))


def vr(delta, eps):
    """``tan(delta/2) / tan(eps/2)``."""
    te = _tan_half(eps, "eps")
    if abs(te) <= POLE_TOL:
        raise PoleError(f"tan(eps/2) vanishes at eps = {eps}")
    return float(_tan_half(delta, "delta") / te)


def sr(rho, sigma):
    """``sin((rho - sigma)/2) / sin((rho + sigma)/2)``."""
    d = np.sin(0.5 * (rho + sigma))
    if abs(d) <= DENOM_TOL:
        raise PoleError(f"sin((rho + sigma)/2) vanishes for rho = {rho}, sigma = {sigma}")
    return float(np.sin(0.5 * (rho - sigma)) / d)


def cr(rho, sigma):
    """``cos((rho - sigma)/2) / cos((rho + sigma)/2)``."""
    d = np.cos(0.5 * (rho + sigma))
    if abs(d) <= DENOM_TOL:
        raise PoleError(f"cos((rho + sigma)/2) vanishes for rho = {rho}, sigma = {sigma}")
    return float(np.cos(0.5 * (rho - sigma)) / d)


# ---------------------------------------------------------------------------
# parameters and fold patterns


@dataclass(frozen=True)
class TypeIIIParams:
    """Free data of a Type-III build.

    Attributes
    ----------
    variant : {"OAE", "OAS"}
    M : int
        Half the number of equator vertexes.
    seed : tuple
        ``(l_1, m_1, l_2, m_2)``.
    L_odd : tuple
        ``(L_1, L_3, ..., L_{N-3})``, ``M - 1`` entries.
    fold_L : int or None
        Second OAS vertex of the OAE variant, ``2 < fold_L < N - 2``.
    """

    variant: str
    M: int
    seed: tuple
    L_odd: tuple
    fold_L: int = None

    def __post_init__(self):
        variant = str(self.variant).upper()
        object.__setattr__(self, "variant", variant)
        if variant not in ("OAE", "OAS"):
            raise ValidationError(f"unknown variant {self.variant!r}", field="variant")
        if int(self.M) != self.M or self.M <= 2:
            raise ValidationError(f"M = {self.M} must be an integer > 2", field="M")
        if len(self.seed) != 4:
            raise ValidationError("seed needs (l_1, m_1, l_2, m_2)", field="seed")
        if len(self.L_odd) != self.M - 1:
            raise ValidationError(f"L_odd needs {self.M - 1} entries", field="L_odd")
        vals = np.array(list(self.seed) + list(self.L_odd), dtype=float)
        if not np.all(np.isfinite(vals)) or np.any(vals <= 0):
            raise ValidationError("lengths must be positive and finite", field="seed")
        N = 2 * self.M
        if variant == "OAE":
            if self.fold_L is None or not 2 < int(self.fold_L) < N - 2:
                raise ValidationError(f"fold_L must satisfy 2 < L < {N - 2}", field="fold_L")
        elif self.fold_L is not None:
            raise ValidationError("the OAS variant has no fold index", field="fold_L")

    @property
    def N(self) -> int:
        return 2 * self.M

    @property
    def tag(self) -> SuspensionType:
        return SuspensionType.III_OAE if self.variant == "OAE" else SuspensionType.III_OAS

    def vector(self) -> np.ndarray:
        """``[l_1, m_1, l_2, m_2, L_1, L_3, ...]``: the continuous search variables."""
        return np.array(list(self.seed) + list(self.L_odd), dtype=float)

    def with_vector(self, x) -> "TypeIIIParams":
        x = [float(v) for v in x]
        return TypeIIIParams(self.variant, self.M, tuple(x[:4]), tuple(x[4:]), self.fold_L)


def vertex_kinds(variant: str, N: int, fold_L=None) -> tuple:
    """OAE/OAS label of ``v_1..v_N``: all OAE, except ``v_1`` and ``v_L`` in the OAE variant."""
    kinds = ["OAE"] * N
    if variant == "OAE":
        kinds[0] = "OAS"
        kinds[fold_L - 1] = "OAS"
    return tuple(kinds)


@dataclass(frozen=True)
class FoldSpec:
    kind: str
    delta: np.ndarray

    @classmethod
    def of(cls, variant: str, N: int, kind: str, fold_L=None) -> "FoldSpec":
        """The upper dihedral pattern of the open or compact flat fold."""
        if kind not in ("open", "compact"):
            raise ValueError(f"fold kind must be 'open' or 'compact', not {kind!r}")
        if variant == "OAS":
            d = np.full(N, PI if kind == "open" else 0.0)
        else:
            special = 0.0 if kind == "open" else PI
            d = np.full(N, PI - special)
            d[[0, fold_L - 1]] = special
        d.setflags(write=False)
        return cls(kind, d)


# ---------------------------------------------------------------------------
# stage algebra


def stage_coefficients(qA, qB, qC, K, case):
    """Coefficients ``(a, b, c)`` of the stage quadratic in ``X(beta)`` and the ratio ``R``.

    Case 1 links ``X(B) = R X(beta)`` with ``R = (1 - K)/(1 + K)``; case 2
    links ``X(B) = R / X(beta)`` with ``R = (1 + K)/(K - 1)``.
    """
    if case == 1:
        if abs(1.0 + K) <= DENOM_TOL:
            raise SingularR("K = -1 makes R undefined in case 1")
        R = (1.0 - K) / (1.0 + K)
        return R * (qB + qC * R), -2.0 * qA * R, -(qC + qB * R), R
    if case == 2:
        if abs(K - 1.0) <= DENOM_TOL:
            raise SingularR("K = 1 makes R undefined in case 2")
        R = (1.0 + K) / (K - 1.0)
        return qB * R - qC, -2.0 * qA * R, -R * (qB - qC * R), R
    raise ValueError(f"case must be 1 or 2, not {case!r}")


def fold_residuals(angles, fold_L=None, parity=None):
    """Flat-fold balance of apical angles, as ``(odd residual, even residual)``.

    ``angles`` holds ``alpha_1..alpha_N`` (or ``A_1..A_N``), or a FaceAngles
    whose ``alpha`` is used.  With ``fold_L`` the open fan fold at ``v_1``
    and ``v_L`` applies; with ``fold_L=None`` the circular fold applies and
    both alternating sums must equal ``pi``.
    """
    a = np.asarray(getattr(angles, "alpha", angles), dtype=float)
    N = a.shape[0]
    M = N // 2
    odd, even = a[0::2], a[1::2]  # alpha_{2k-1}, alpha_{2k} for k = 1..M
    if fold_L is None:
        return float(odd.sum() - PI), float(even.sum() - PI)
    L = int(fold_L)
    actual = "even" if L % 2 == 0 else "odd"
    if parity is not None and parity != actual:
        raise ValueError(f"fold index {L} is {actual}, not {parity}")
    if L % 2 == 0:
        kx = L // 2
        r_odd = odd[:kx].sum() - odd[kx:].sum()
        r_even = even[:kx - 1].sum() - even[kx - 1:].sum()
    else:
        kx = (L - 1) // 2
        r_odd = odd[:kx].sum() - odd[kx:].sum()
        r_even = even[:kx].sum() - even[kx:].sum()
    assert odd.shape[0] == M
    return float(r_odd), float(r_even)


def vertex_figure_delta(g_prev, beta, B, G_prev, eps, mode):
    """Upper dihedral ``delta`` at a vertex from its four face angles and ``eps``.

    The unit directions from the vertex towards ``u``, ``v_{k+1}``, ``w``
    and ``v_{k-1}`` span angles ``beta`` (u, v+), ``B`` (v+, w), ``G_prev``
    (w, v-) and ``g_prev`` (v-, u).  Fixing the dihedral ``eps`` along
    the edge to ``v_{k+1}`` leaves two positions for ``v_{k-1}``; ``mode``
    (+1 or -1) picks one.

    Raises
    ------
    UndefinedDihedral
        If the vertex figure cannot be assembled.
    """
    b = np.array([0.0, 0.0, 1.0])
    a = np.array([np.sin(beta), 0.0, np.cos(beta)])
    c = np.array([np.sin(B) * np.cos(eps), np.sin(B) * np.sin(eps), np.cos(B)])
    n = np.cross(a, c)
    nn = np.linalg.norm(n)
    if nn <= 1e-14:
        raise UndefinedDihedral("directions to u and w are parallel")
    p = np.linalg.lstsq(np.array([a, c]), np.array([np.cos(g_prev), np.cos(G_prev)]),
                        rcond=None)[0]
    t2 = 1.0 - p @ p
    if t2 < -1e-12:
        raise UndefinedDihedral("vertex figure does not close at this eps")
    d = p + mode * np.sqrt(max(t2, 0.0)) * n / nn

    def perp(x):
        y = x - (x @ a) * a
        return y / np.linalg.norm(y)

    pd, pb = perp(d), perp(b)
    ang = np.arccos(np.clip(pd @ pb, -1.0, 1.0))
    return float(ang if np.cross(pb, pd) @ a >= 0 else 2 * PI - ang)


def pair_invariant_K(state, i, eps1, mode, kind):
    """``V_P`` (OAE) or ``V_R`` (OAS) of ``v_i`` on the vertex figure at ``eps1``."""
    gp, Gp = state.prev_angles(i)
    d = vertex_figure_delta(gp, state.beta[i], state.B[i], Gp, eps1, mode)
    return vp(d, eps1) if kind == "OAE" else vr(d, eps1)


@dataclass
class TypeIIIBuildState:
    """Partial build; all arrays 1-based (index 0 unused), length ``N + 1``."""

    N: int
    kinds: tuple
    k: int = 1
    l: np.ndarray = None
    m: np.ndarray = None
    L: np.ndarray = None
    alpha: np.ndarray = None
    beta: np.ndarray = None
    gamma: np.ndarray = None
    A: np.ndarray = None
    B: np.ndarray = None
    G: np.ndarray = None
    K: float = np.nan
    case: int = None
    root: int = None
    branch: tuple = ()

    def __post_init__(self):
        for name in ("l", "m", "L", "alpha", "beta", "gamma", "A", "B", "G"):
            if getattr(self, name) is None:
                setattr(self, name, np.full(self.N + 1, np.nan))

    def copy(self) -> "TypeIIIBuildState":
        arrays = {n: getattr(self, n).copy() for n in
                  ("l", "m", "L", "alpha", "beta", "gamma", "A", "B", "G")}
        return TypeIIIBuildState(self.N, self.kinds, self.k, K=self.K, case=self.case,
                                 root=self.root, branch=self.branch, **arrays)

    def kind(self, i: int) -> str:
        return self.kinds[(i - 1) % self.N]

    def prev_angles(self, i: int):
        """``(gamma_{i-1}, Gamma_{i-1})``; for ``v_1`` from its OAE/OAS rule."""
        if i == 1:
            if self.kind(1) == "OAE":
                return self.B[1], self.beta[1]
            return PI - self.B[1], PI - self.beta[1]
        return self.gamma[i - 1], self.G[i - 1]

    def set_next_vertex(self, j: int, g_prev, G_prev):
        """``beta_j, B_j`` from the face angles of face ``j - 1`` at ``v_j``."""
        if self.kind(j) == "OAE":
            self.beta[j], self.B[j] = G_prev, g_prev
        else:
            self.beta[j], self.B[j] = PI - G_prev, PI - g_prev


def seed_state(p: TypeIIIParams, x=None) -> TypeIIIBuildState:
    """Stage-1 state: faces 1 complete, ``beta_2, B_2`` set.

    Raises DegenerateTriangle if a seed face is not a proper triangle.
    """
    x = p.vector() if x is None else np.asarray(x, dtype=float)
    l1, m1, l2, m2, L1 = x[:5]
    st = TypeIIIBuildState(p.N, vertex_kinds(p.variant, p.N, p.fold_L))
    st.l[1], st.m[1], st.l[2], st.m[2], st.L[1] = l1, m1, l2, m2, L1
    st.alpha[1] = face_angle(l1, l2, L1)
    st.beta[1] = face_angle(l1, L1, l2)
    st.gamma[1] = face_angle(l2, L1, l1)
    st.A[1] = face_angle(m1, m2, L1)
    st.B[1] = face_angle(m1, L1, m2)
    st.G[1] = face_angle(m2, L1, m1)
    st.set_next_vertex(2, st.gamma[1], st.G[1])
    return st


def _positive_angle(x):
    return np.isfinite(x) and 0.0 < x < PI


def solve_stage(state: TypeIIIBuildState, K: float, L_next, tag=()) -> list:
    """Extend ``state`` by one stage for every (case, root) that survives.

    ``L_next`` is ``L_{2k+1}`` or ``None`` at the final stage, where only
    the faces up to ``L_{2k}`` and the edges ``l_{2k+1}, m_{2k+1}`` are
    completed (the fold sums do the rest).
    """
    k = state.k
    j = 2 * k
    out = []
    l, m = state.l[j], state.m[j]
    bj, Bj = state.beta[j], state.B[j]
    qA = l * np.cos(bj) - m * np.cos(Bj)
    qB = m * np.sin(Bj)
    qC = -l * np.sin(bj)
    oas_next = state.kind(j + 1) == "OAS"
    if oas_next:
        qA = -qA
    for case in (1, 2):
        try:
            a, b, c, R = stage_coefficients(qA, qB, qC, K, case)
        except SingularR:
            continue
        disc = b * b - 4 * a * c
        scale = max(abs(a), abs(b), abs(c))
        if disc < -DISC_TOL * scale ** 2 or abs(a) <= 1e-14 * scale:
            continue
        sq = np.sqrt(max(disc, 0.0))
        roots = sorted({(-b + sq) / (2 * a), (-b - sq) / (2 * a)}, key=lambda t: -abs(t))
        for root, X in enumerate(roots, start=1):
            if abs(a * X * X + b * X + c) > 1e-9 * scale * max(1.0, X * X):
                continue
            XB = R * X if case == 1 else (R / X if X != 0 else np.inf)
            beta_n = 2.0 * np.arctan2(1.0, X)
            B_n = 2.0 * np.arctan2(1.0, XB)
            if not (_positive_angle(beta_n) and _positive_angle(B_n)):
                continue
            s = state.copy()
            s.K, s.case, s.root = K, case, root
            s.branch = state.branch + (tag + (case, root),)
            s.beta[j + 1], s.B[j + 1] = beta_n, B_n
            if oas_next:
                s.gamma[j], s.G[j] = PI - B_n, PI - beta_n
            else:
                s.gamma[j], s.G[j] = B_n, beta_n
            s.alpha[j] = PI - bj - s.gamma[j]
            s.A[j] = PI - Bj - s.G[j]
            if not (_positive_angle(s.alpha[j]) and _positive_angle(s.A[j])
                    and _positive_angle(s.gamma[j]) and _positive_angle(s.G[j])):
                continue
            s.L[j] = l * np.sin(s.alpha[j]) / np.sin(s.gamma[j])
            L_low = m * np.sin(s.A[j]) / np.sin(s.G[j])
            if abs(s.L[j] - L_low) > STAGE_RTOL * 1e2 * s.L[j]:
                continue
            s.l[j + 1] = l * np.sin(bj) / np.sin(s.gamma[j])
            s.m[j + 1] = m * np.sin(Bj) / np.sin(s.G[j])
            if L_next is not None:
                Ln = float(L_next)
                s.L[j + 1] = Ln
                l1, m1 = s.l[j + 1], s.m[j + 1]
                l2 = np.sqrt(l1 ** 2 + Ln ** 2 - 2 * l1 * Ln * np.cos(beta_n))
                m2 = np.sqrt(m1 ** 2 + Ln ** 2 - 2 * m1 * Ln * np.cos(B_n))
                s.l[j + 2], s.m[j + 2] = l2, m2
                try:
                    s.gamma[j + 1] = face_angle(l2, Ln, l1)
                    s.G[j + 1] = face_angle(m2, Ln, m1)
                except SuspensionError:
                    continue
                s.alpha[j + 1] = PI - beta_n - s.gamma[j + 1]
                s.A[j + 1] = PI - B_n - s.G[j + 1]
                if not (_positive_angle(s.alpha[j + 1]) and _positive_angle(s.A[j + 1])):
                    continue
                s.set_next_vertex(j + 2, s.gamma[j + 1], s.G[j + 1])
                s.k = k + 1
            out.append(s)
    return out


def _forced_apex_angles(known, N, fold_L):
    """``(x_{N-1}, x_N)`` that zero the fold residuals given ``x_1..x_{N-2}`` (1-based array)."""
    a = np.array(known[1:N + 1], dtype=float)
    a[N - 2:] = 0.0
    r_odd, r_even = fold_residuals(a, fold_L)
    # x_{N-1} and x_N sit on the right-hand sides (or in the pi-sums of the circular fold)
    return r_odd, r_even


def _finish_state(s: TypeIIIBuildState, fold_L):
    """Close the last two faces; returns (lengths, raw residual dict) or None."""
    N = s.N
    al = _forced_apex_angles(s.alpha, N, fold_L)
    Al = _forced_apex_angles(s.A, N, fold_L)
    if fold_L is None:
        al = (-al[0], -al[1])
        Al = (-Al[0], -Al[1])
    s.alpha[N - 1], s.alpha[N] = al
    s.A[N - 1], s.A[N] = Al
    if not all(_positive_angle(x) for x in (*al, *Al)):
        return None
    s.gamma[N - 1] = PI - s.alpha[N - 1] - s.beta[N - 1]
    s.G[N - 1] = PI - s.A[N - 1] - s.B[N - 1]
    if not (_positive_angle(s.gamma[N - 1]) and _positive_angle(s.G[N - 1])):
        return None
    s.L[N - 1] = s.l[N - 1] * np.sin(s.alpha[N - 1]) / np.sin(s.gamma[N - 1])
    L_low = s.m[N - 1] * np.sin(s.A[N - 1]) / np.sin(s.G[N - 1])
    s.l[N] = s.l[N - 1] * np.sin(s.beta[N - 1]) / np.sin(s.gamma[N - 1])
    s.m[N] = s.m[N - 1] * np.sin(s.B[N - 1]) / np.sin(s.G[N - 1])
    lam = np.sqrt(s.l[N] ** 2 + s.l[1] ** 2 - 2 * s.l[N] * s.l[1] * np.cos(s.alpha[N]))
    lam_w = np.sqrt(s.m[N] ** 2 + s.m[1] ** 2 - 2 * s.m[N] * s.m[1] * np.cos(s.A[N]))
    s.L[N] = lam
    gN, _ = s.prev_angles(1)
    beta_N = face_angle(s.l[N], lam, s.l[1]) if lam > 0 else np.nan
    raw = {
        "L_N-1": (s.L[N - 1] - L_low) / s.L[N - 1],
        "lambda_N": (lam - lam_w) / lam,
        "alpha_N": s.alpha[N] - (PI - beta_N - gN),
    }
    return raw


@dataclass
class BuildFailure:
    """Structured failure of :func:`build_III`: never raised, always returned."""

    reason: str
    best_residuals: dict = field(default_factory=dict)
    best_branch: tuple = None
    best_vector: list = None
    leaves_tried: int = 0

    def __bool__(self):
        return False

    def as_dict(self) -> dict:
        branch = None
        if self.best_branch is not None:
            eps1, stages, modes = self.best_branch
            branch = {"eps1": float(eps1), "stages": [list(map(int, s)) for s in stages],
                      "final_modes": [int(x) for x in modes]}
        return {"status": "build_failure", "reason": self.reason,
                "best_residuals": {k: float(v) for k, v in self.best_residuals.items()},
                "best_branch": branch, "best_vector": self.best_vector,
                "leaves_tried": self.leaves_tried}


def _params_from_state(s: TypeIIIBuildState) -> SuspensionParams:
    return SuspensionParams(s.l[1:], s.m[1:], s.L[1:])


def final_residuals(params: SuspensionParams, variant, fold_L, eps1, modes) -> dict:
    """Every closing condition of a finished build, evaluated on its own lengths.

    ``vertex_kind``: largest violation of the OAE/OAS angle rule over all
    vertexes.  ``fold_u``/``fold_w``: the flat-fold sums.  ``pair``:
    difference of the invariant magnitudes of ``v_{N-2}`` and ``v_N`` on
    the vertex figures at ``eps1`` (assembly modes ``modes``).
    """
    N = params.N
    fa = face_angles_of(params)
    kinds = vertex_kinds(variant, N, fold_L)
    g_prev, G_prev = np.roll(fa.gamma, 1), np.roll(fa.Gamma, 1)
    worst = 0.0
    for i in range(N):
        if kinds[i] == "OAE":
            r = max(abs(fa.beta[i] - G_prev[i]), abs(fa.Bang[i] - g_prev[i]))
        else:
            r = max(abs(fa.beta[i] + G_prev[i] - PI), abs(fa.Bang[i] + g_prev[i] - PI))
        worst = max(worst, r)
    fu = fold_residuals(fa.alpha, fold_L)
    fw = fold_residuals(fa.Aang, fold_L)
    inv = []
    for i, mode in zip((N - 2, N), modes):
        d = vertex_figure_delta(g_prev[i - 1], fa.beta[i - 1], fa.Bang[i - 1], G_prev[i - 1],
                                eps1, mode)
        inv.append(abs(vp(d, eps1) if kinds[i - 1] == "OAE" else vr(d, eps1)))
    return {"vertex_kind": worst, "fold_u": max(map(abs, fu)), "fold_w": max(map(abs, fw)),
            "pair": (inv[0] - inv[1]) / (1.0 + inv[0] + inv[1])}


def _stage_inputs(st, k, eps1, mode, sgn):
    i = 1 if k == 1 else 2 * k - 2
    return sgn * pair_invariant_K(st, i, eps1, mode, st.kind(i))


def run_branch(p: TypeIIIParams, x, eps1, stages, final_modes):
    """Replay one fixed branch on the continuous data ``x``.

    Returns ``(params, residual dict)`` or ``None`` if the branch breaks.
    """
    try:
        st = seed_state(p, x)
        L_odd = np.asarray(x[4:], dtype=float)
        M = p.M
        for k, (mode, sgn, case, root) in enumerate(stages, start=1):
            K = _stage_inputs(st, k, eps1, mode, sgn)
            L_next = L_odd[k] if k < M - 1 else None
            cand = [c for c in solve_stage(st, K, L_next) if c.case == case and c.root == root]
            if not cand:
                return None
            st = cand[0]
        raw = _finish_state(st, p.fold_L)
        if raw is None:
            return None
        params = _params_from_state(st)
        if not validate_params(params).ok:
            return None
        res = dict(raw)
        res.update(final_residuals(params, p.variant, p.fold_L, eps1, final_modes))
        return params, res
    except (SuspensionError, FloatingPointError, ValueError):
        return None


def _leaves(p: TypeIIIParams, x, max_leaves):
    """Depth-first enumeration of all branches that reach the final stage."""
    M = p.M
    L_odd = np.asarray(x[4:], dtype=float)
    found = []

    def dfs(st, k, eps1, stages):
        if len(found) >= max_leaves:
            return
        if k == M:
            s = st.copy()
            raw = _finish_state(s, p.fold_L)
            if raw is None:
                return
            params = _params_from_state(s)
            if not validate_params(params).ok:
                return
            for modes in itertools.product((1, -1), repeat=2):
                try:
                    res = dict(raw)
                    res.update(final_residuals(params, p.variant, p.fold_L, eps1, modes))
                except SuspensionError:
                    continue
                found.append(((eps1, tuple(stages), modes), params, res))
            return
        for mode in (1, -1):
            for sgn in (1, -1):
                try:
                    K = _stage_inputs(st, k, eps1, mode, sgn)
                except SuspensionError:
                    continue
                L_next = L_odd[k] if k < M - 1 else None
                for c in solve_stage(st, K, L_next):
                    dfs(c, k + 1, eps1, stages + [(mode, sgn, c.case, c.root)])

    try:
        st0 = seed_state(p, x)
    except SuspensionError:
        return found
    for eps1 in EPS1_CHOICES:
        dfs(st0, 1, eps1, [])
    return found


def _score(res) -> float:
    return float(max(abs(v) for v in res.values()))


def refine_branch(p: TypeIIIParams, x0, branch, tol=FINAL_TOL * 1e-3, maxiter=4000):
    """Move the continuous data ``x`` so that the fixed branch closes.

    A simplex descent on the largest residual brings the branch near a
    solution; a least-squares polish on the (smooth) pair residual then
    drives it to machine precision.  Returns ``(x, params, residuals)`` of
    the best point seen, or ``None`` if the branch never evaluates.
    """
    eps1, stages, modes = branch
    scale = np.asarray(x0, dtype=float)

    def evaluate(y):
        x = scale * np.exp(y)
        out = run_branch(p, x, eps1, stages, modes)
        return x, out

    def objective(y):
        _, out = evaluate(y)
        return 1e3 if out is None else _score(out[1])

    y0 = np.zeros_like(scale)
    best = evaluate(y0)
    if best[1] is None:
        return None
    if _score(best[1][1]) > tol:
        sol = minimize(objective, y0, method="Nelder-Mead",
                       options={"xatol": 1e-13, "fatol": 1e-15, "maxiter": maxiter,
                                "initial_simplex": y0 + np.vstack([np.zeros_like(y0),
                                                                   0.05 * np.eye(len(y0))])})
        cand = evaluate(sol.x)
        if cand[1] is not None and _score(cand[1][1]) < _score(best[1][1]):
            best, y0 = cand, sol.x

    def pair_vec(y):
        _, out = evaluate(y)
        if out is None:
            return np.array([1.0])
        return np.array([out[1]["pair"]])

    if _score(best[1][1]) > tol and _score(best[1][1]) < 1e-2:
        try:
            sol = least_squares(pair_vec, y0, method="trf", xtol=1e-15, ftol=1e-15, gtol=1e-15,
                                max_nfev=200)
            cand = evaluate(sol.x)
            if cand[1] is not None and _score(cand[1][1]) < _score(best[1][1]):
                best = cand
        except (ValueError, np.linalg.LinAlgError):
            pass
    x, (params, res) = best
    return x, params, res


# ---------------------------------------------------------------------------
# certification


def choose_signs(params: SuspensionParams, S: int = SIGN_SAMPLES):
    """Sign pattern (``s_1 = +1``) with the smallest closure gap over the flexion interval.

    Returns ``(signs, interval, relative gap)``.  Raises EmptyInterval if
    the lengths cannot be embedded at all.
    """
    N = params.N
    theta1 = Theta1Rule.fixed(0.0)
    interval = flexion_interval(params, theta1)
    zs = interior_samples(interval, S)
    best = (None, np.inf)
    for tail in itertools.product((1, -1), repeat=N - 2):
        signs = (1,) + tail
        coords, ok, _ = embed_batch(params, zs, theta1, signs)
        if not ok.all():
            continue
        gap = np.abs(np.linalg.norm(coords[:, -1] - coords[:, 2], axis=1) - params.L[-1])
        g = float(gap.max() / params.L[-1])
        if g < best[1]:
            best = (signs, g)
    return best[0], interval, best[1]


def certify_III(params: SuspensionParams, p: TypeIIIParams, provenance: dict):
    """Wrap ``params`` as a ConstructedSuspension if it flexes and shows both flat folds.

    Returns ``(suspension or None, report dict)``.
    """
    from .symmetric import closure_deviation

    report = {}
    try:
        signs, interval, g = choose_signs(params)
    except EmptyInterval as exc:
        return None, {"reason": f"no feasible z: {exc}"}
    if signs is None:
        return None, {"reason": "no sign pattern embeds the lengths"}
    s = ConstructedSuspension(params, p.tag, Theta1Rule.fixed(0.0), signs, provenance,
                              vertex_kinds(p.variant, p.N, p.fold_L), p.fold_L)
    dev = closure_deviation(s)
    report["closure_deviation"] = dev
    if not dev <= FLEX_RTOL:
        report["reason"] = f"closure gap varies by {dev:.3e}"
        return None, report
    flats = flat_states(s)
    report["flat_states"] = [f.as_dict() for f in flats]
    kinds_found = set()
    for f in flats:
        if not f.coplanar:
            continue
        for kind in ("open", "compact"):
            fold = FoldSpec.of(p.variant, p.N, kind, p.fold_L)
            if np.max(f.pattern_error(fold.delta)) <= FLAT_PATTERN_TOL:
                kinds_found.add(kind)
    report["flat_kinds"] = sorted(kinds_found)
    if kinds_found != {"open", "compact"}:
        report["reason"] = f"flat folds found: {sorted(kinds_found) or 'none'}"
        return None, report
    return s, report


def build_III(p: TypeIIIParams, search_budget: int = 64, refine: bool = True,
              max_leaves: int = 50000):
    """Search the recursion for a flexible Type-III suspension.

    Parameters
    ----------
    p : TypeIIIParams
        Starting seed faces and odd edges.
    search_budget : int
        Number of branches that may be refined and certified.
    refine : bool
        Allow the continuous data to move away from ``p`` (the pair
        condition of the last stage is generically not met otherwise).

    Returns
    -------
    ConstructedSuspension or BuildFailure
    """
    if search_budget <= 0:
        return BuildFailure("search budget is zero")
    x0 = p.vector()
    leaves = _leaves(p, x0, max_leaves)
    if not leaves:
        return BuildFailure("no branch of the recursion reaches the final stage", leaves_tried=0)
    leaves.sort(key=lambda t: _score(t[2]))
    best_fail = BuildFailure("search budget exhausted", dict(leaves[0][2]), leaves[0][0],
                             list(map(float, x0)), 0)
    for n, (branch, params, res) in enumerate(leaves[:search_budget], start=1):
        best_fail.leaves_tried = n
        x = x0
        if _score(res) > FINAL_TOL and refine:
            out = refine_branch(p, x0, branch)
            if out is None:
                continue
            x, params, res = out
        if _score(res) < _score(best_fail.best_residuals):
            best_fail.best_residuals, best_fail.best_branch = dict(res), branch
            best_fail.best_vector = list(map(float, x))
        if _score(res) > FINAL_TOL:
            continue
        prov = {"generator": "build_III", "variant": p.variant, "fold_L": p.fold_L,
                "start_vector": list(map(float, x0)), "vector": list(map(float, x)),
                "eps1": float(branch[0]), "stages": [list(map(int, s)) for s in branch[1]],
                "final_modes": list(branch[2]),
                "residuals": {k: float(v) for k, v in res.items()}}
        s, report = certify_III(params, p.with_vector(x), prov)
        log.debug("branch %s: %s", branch, report)
        if s is not None:
            s.provenance["certification"] = {"closure_deviation": report["closure_deviation"]}
            return s
        best_fail.reason = f"search budget exhausted; last certification: {report.get('reason')}"
    return best_fail
