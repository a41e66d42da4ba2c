"""Dipyramid (suspension) data types and face-angle computations.

Index conventions: every public interface speaks 1-based vertex and edge
indices with the cyclic rule ``N + 1 == 1``.  Internally arrays are plain
0-based numpy vectors, so ``l[k - 1]`` is the length of edge ``u v_k``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateTriangle

# slack on the strict triangle inequality, relative to the semi-perimeter
TRIANGLE_RTOL = 1e-14


class SuspensionType(str, enum.Enum):
    I_OEE = "I_OEE"
    II_AEE = "II_AEE"
    II_OEE = "II_OEE"
    III_OAE = "III_OAE"
    III_OAS = "III_OAS"

    @property
    def cli_name(self) -> str:
        return self.value.lower().replace("_", "-")

    @classmethod
    def from_cli(cls, name: str) -> "SuspensionType":
        return cls(name.upper().replace("-", "_"))


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class SuspensionParams:
    """Edge lengths of a suspension with ``N`` equator vertexes.

    Attributes
    ----------
    l : ndarray
        ``l[k-1] = |u - v_k|``
    m : ndarray
        ``m[k-1] = |w - v_k|``
    L : ndarray
        ``L[k-1] = |v_k - v_{k+1}|`` with ``v_{N+1} = v_1``
    """

    l: np.ndarray
    m: np.ndarray
    L: np.ndarray

    def __post_init__(self):
        for name in ("l", "m", "L"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        if not (self.l.shape == self.m.shape == self.L.shape) or self.l.ndim != 1:
            raise ValueError("l, m and L must be 1-d arrays of equal length")

    @property
    def N(self) -> int:
        return self.l.shape[0]

    @property
    def M(self) -> int:
        return self.N // 2

    def with_length(self, family: str, k: int, value: float) -> "SuspensionParams":
        """Copy with one edge replaced; ``family`` is 'l', 'm' or 'L', ``k`` 1-based."""
        arrays = {"l": self.l.copy(), "m": self.m.copy(), "L": self.L.copy()}
        arrays[family][k - 1] = value
        return SuspensionParams(**arrays)

    def __eq__(self, other):
        if not isinstance(other, SuspensionParams):
            return NotImplemented
        return (np.array_equal(self.l, other.l) and np.array_equal(self.m, other.m)
                and np.array_equal(self.L, other.L))

    __hash__ = None


@dataclass(frozen=True)
class FaceAngles:
    """Face angles of all 2N faces, radians, 0-based arrays.

    ``alpha, beta, gamma`` belong to the upper face ``u v_k v_{k+1}`` at
    ``u, v_k, v_{k+1}``; ``Aang, Bang, Gamma`` to the lower face
    ``w v_k v_{k+1}`` at ``w, v_k, v_{k+1}``.
    """

    alpha: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    Aang: np.ndarray
    Bang: np.ndarray
    Gamma: np.ndarray

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma", "Aang", "Bang", "Gamma"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))

    __hash__ = None


@dataclass
class ValidationReport:
    """Every violated parameter invariant; empty iff the parameters are valid."""

    violations: list = field(default_factory=list)

    def add(self, kind: str, message: str, index=None):
        self.violations.append({"kind": kind, "index": index, "message": message})

    @property
    def ok(self) -> bool:
        return not self.violations

    def kinds(self) -> set:
        return {v["kind"] for v in self.violations}

    def __bool__(self):
        return bool(self.violations)

    def __str__(self):
        if self.ok:
            return "valid"
        return "; ".join(v["message"] for v in self.violations)


def _triangle_slack(a, b, c):
    s = 0.5 * (a + b + c)
    return s, s - a, s - b, s - c


def face_angle(a, b, opposite):
    """Angle between sides ``a`` and ``b`` of a triangle whose third side is ``opposite``.

    Uses the half-angle form ``tan(C/2) = sqrt((s-a)(s-b) / (s(s-c)))``,
    which stays accurate for thin triangles where the plain law of
    cosines loses digits.  Accepts scalars or broadcastable arrays.

    Raises
    ------
    DegenerateTriangle
        If the strict triangle inequality fails anywhere.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    c = np.asarray(opposite, dtype=float)
    s, sa, sb, sc = _triangle_slack(a, b, c)
    tol = TRIANGLE_RTOL * s
    bad = (a <= 0) | (b <= 0) | (c < 0) | (sa <= tol) | (sb <= tol) | (sc <= tol)
    bad = bad | ~np.isfinite(s)
    if np.any(bad):
        raise DegenerateTriangle(
            f"triangle ({a}, {b}, {c}) violates the strict triangle inequality")
    ang = 2.0 * np.arctan2(np.sqrt(sa * sb), np.sqrt(s * sc))
    return float(ang) if ang.ndim == 0 else ang


def _face_ok(a, b, c) -> bool:
    s, sa, sb, sc = _triangle_slack(a, b, c)
    tol = TRIANGLE_RTOL * s
    return bool(min(sa, sb, sc) > tol)


def validate_params(params) -> ValidationReport:
    """Check parity of N, positivity/finiteness and strict triangle inequalities.

    ``params`` may be a :class:`SuspensionParams` or any object with
    ``l, m, L`` sequences.  Never raises; all problems go in the report.
    """
    report = ValidationReport()
    try:
        l = np.asarray(params.l, dtype=float)
        m = np.asarray(params.m, dtype=float)
        L = np.asarray(params.L, dtype=float)
    except (TypeError, ValueError) as exc:
        report.add("type", f"lengths are not numeric arrays: {exc}")
        return report
    if not (l.ndim == m.ndim == L.ndim == 1) or not (len(l) == len(m) == len(L)):
        report.add("shape", "l, m and L must be 1-d arrays of equal length")
        return report
    N = len(l)
    if N % 2:
        report.add("parity", f"N = {N} is odd; N must be even")
    if N < 6:
        report.add("size", f"N = {N} < 6; N = 2M with M > 2 is required")
    for name, arr in (("l", l), ("m", m), ("L", L)):
        for k, x in enumerate(arr, start=1):
            if not np.isfinite(x) or x <= 0:
                report.add("positivity", f"{name}_{k} = {x} is not a positive finite length", k)
    if "positivity" in report.kinds() or N == 0:
        return report
    for k in range(1, N + 1):
        kn = k % N
        if not _face_ok(l[k - 1], l[kn], L[k - 1]):
            report.add("upper_face", f"upper face {k}: (l_{k}, l_{kn + 1}, L_{k}) "
                       f"= ({l[k - 1]}, {l[kn]}, {L[k - 1]}) is not a proper triangle", k)
        if not _face_ok(m[k - 1], m[kn], L[k - 1]):
            report.add("lower_face", f"lower face {k}: (m_{k}, m_{kn + 1}, L_{k}) "
                       f"= ({m[k - 1]}, {m[kn]}, {L[k - 1]}) is not a proper triangle", k)
    return report


def face_angles_of(params: SuspensionParams) -> FaceAngles:
    """All six face-angle families of ``params``.

    Raises
    ------
    DegenerateTriangle
        Carrying the 1-based index of the first offending face.
    """
    l, m, L = params.l, params.m, params.L
    ln, mn = np.roll(l, -1), np.roll(m, -1)
    out = {}
    for k in range(params.N):
        try:
            face_angle(l[k], ln[k], L[k])
            face_angle(m[k], mn[k], L[k])
        except DegenerateTriangle as exc:
            raise DegenerateTriangle(f"face {k + 1}: {exc}", face_index=k + 1) from None
    out["alpha"] = face_angle(l, ln, L)
    out["beta"] = face_angle(l, L, ln)
    out["gamma"] = face_angle(ln, L, l)
    out["Aang"] = face_angle(m, mn, L)
    out["Bang"] = face_angle(m, L, mn)
    out["Gamma"] = face_angle(mn, L, m)
    return FaceAngles(**out)
