"""Parameter documents, trace tables and mesh frames.

Parameter documents are JSON with a fixed key order and every float
written with 17 significant digits, so ``save(load(text))`` is the
canonical form of ``text`` and doubles survive the trip exactly.  Arrays
are 1-based in meaning (first entry is ``l_1``) and stored in order.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .coordinates import ConstructedSuspension, Theta1Rule, check_signs, default_signs
from .errors import ParseError, SchemaVersionError, ValidationError
from .geometry import SuspensionParams, SuspensionType, validate_params

SCHEMA_VERSION = "1.0"
FLOAT_FMT = "{:.17g}"
MESH_FMT = "{:.9g}"


# ---------------------------------------------------------------------------
# canonical JSON


def _num(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if not math.isfinite(x):
        return "null"
    s = FLOAT_FMT.format(x)
    # keep floats recognisable as floats after a round trip
    if all(c not in s for c in ".en"):
        s += ".0"
    return s


def _emit(obj, indent=0, sort=True) -> str:
    pad = "  " * indent
    if obj is None:
        return "null"
    if isinstance(obj, (bool, int, float, np.integer, np.floating)):
        return _num(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, (list, tuple)):
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(_emit(v) for v in obj) + "]"
        inner = ",\n".join(pad + "  " + _emit(v, indent + 1) for v in obj)
        return "[\n" + inner + "\n" + pad + "]"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        keys = sorted(obj) if sort else list(obj)
        inner = ",\n".join(f"{pad}  {json.dumps(str(k))}: {_emit(obj[k], indent + 1)}"
                           for k in keys)
        return "{\n" + inner + "\n" + pad + "}"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


# ---------------------------------------------------------------------------
# parameter documents


@dataclass
class SuspensionDocument:
    """Self-contained description of a suspension and the branch that makes it flex."""

    type: SuspensionType
    l: np.ndarray
    m: np.ndarray
    L: np.ndarray
    theta1: Theta1Rule = field(default_factory=Theta1Rule.fixed)
    signs: tuple = ()
    provenance: dict = field(default_factory=dict)
    vertex_kinds: tuple = None
    fold_index: int = None
    schema_version: str = SCHEMA_VERSION

    @property
    def N(self) -> int:
        return len(self.l)

    @property
    def params(self) -> SuspensionParams:
        return SuspensionParams(self.l, self.m, self.L)

    def to_suspension(self) -> ConstructedSuspension:
        return ConstructedSuspension(self.params, self.type, self.theta1,
                                     tuple(self.signs), dict(self.provenance),
                                     None if self.vertex_kinds is None else tuple(self.vertex_kinds),
                                     self.fold_index)

    @classmethod
    def from_suspension(cls, s: ConstructedSuspension) -> "SuspensionDocument":
        p = s.params
        return cls(s.tag, p.l.copy(), p.m.copy(), p.L.copy(), s.theta1, tuple(s.signs),
                   dict(s.provenance), s.vertex_kinds, s.fold_index)

    def to_mapping(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "type": self.type.value,
            "N": self.N,
            "lengths": {"l": list(map(float, self.l)), "m": list(map(float, self.m)),
                        "L": list(map(float, self.L))},
            "theta1": {"rule": self.theta1.kind,
                       "value": None if self.theta1.kind != "fixed" else float(self.theta1.value)},
            "signs": [int(s) for s in self.signs],
            "vertex_kinds": None if self.vertex_kinds is None else list(self.vertex_kinds),
            "fold_index": self.fold_index,
            "provenance": self.provenance,
        }


_TOP_KEYS = ("schema_version", "type", "N", "lengths", "theta1", "signs",
             "vertex_kinds", "fold_index", "provenance")


def save_suspension(doc) -> str:
    """Canonical text of a document (or of a ConstructedSuspension)."""
    if isinstance(doc, ConstructedSuspension):
        doc = SuspensionDocument.from_suspension(doc)
    mapping = doc.to_mapping()
    lines = []
    for key in _TOP_KEYS:
        value = mapping[key]
        if key == "lengths":
            inner = ",\n".join(f'    "{k}": {_emit(value[k])}' for k in ("l", "m", "L"))
            text = "{\n" + inner + "\n  }"
        elif key == "theta1":
            text = "{" + f'"rule": {json.dumps(value["rule"])}, "value": {_emit(value["value"])}' + "}"
        else:
            text = _emit(value, 1)
        lines.append(f'  "{key}": {text}')
    return "{\n" + ",\n".join(lines) + "\n}\n"


def _key_line(text: str, key: str):
    for i, line in enumerate(text.splitlines(), start=1):
        if f'"{key}"' in line:
            return i
    return None


def _array(raw, name, text, n=None):
    line = _key_line(text, name)
    if not isinstance(raw, list):
        raise ValidationError("must be an array", field=name)
    try:
        arr = np.array([float(v) for v in raw], dtype=float)
    except (TypeError, ValueError):
        raise ParseError(f"{name} holds a non-numeric entry", line=line) from None
    if n is not None and len(arr) != n:
        raise ValidationError(f"has {len(arr)} entries, N = {n}", field=name)
    return arr


def load_suspension(text: str) -> SuspensionDocument:
    """Parse and validate a parameter document.

    Raises
    ------
    ParseError
        Malformed JSON or missing keys (with the line number where known).
    SchemaVersionError
        Unknown ``schema_version``.
    ValidationError
        Inconsistent content; ``field`` names the offending entry
        (``"parity"`` for odd N, ``"signs"`` for a wrong sign pattern).
    """
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno) from None
    if not isinstance(raw, dict):
        raise ParseError("top level must be an object", line=1)
    missing = [k for k in ("schema_version", "type", "N", "lengths") if k not in raw]
    if missing:
        raise ParseError(f"missing keys: {', '.join(missing)}")
    if raw["schema_version"] != SCHEMA_VERSION:
        raise SchemaVersionError(f"unsupported schema_version {raw['schema_version']!r}; "
                                 f"this reader knows {SCHEMA_VERSION!r}")
    try:
        tag = SuspensionType(str(raw["type"]).upper().replace("-", "_"))
    except ValueError:
        raise ValidationError(f"unknown type {raw['type']!r}", field="type") from None
    N = raw["N"]
    if not isinstance(N, int) or isinstance(N, bool) or N <= 0:
        raise ValidationError(f"N = {N!r} must be a positive integer", field="N")
    if N % 2:
        raise ValidationError(f"N = {N} is odd", field="parity")
    if N < 6:
        raise ValidationError(f"N = {N} < 6", field="N")
    lengths = raw["lengths"]
    if not isinstance(lengths, dict):
        raise ValidationError("must be an object with l, m, L", field="lengths")
    arrs = {}
    for name in ("l", "m", "L"):
        if name not in lengths:
            raise ValidationError("missing", field=f"lengths.{name}")
        arrs[name] = _array(lengths[name], name, text, N)
        if not np.all(np.isfinite(arrs[name])) or np.any(arrs[name] <= 0):
            raise ValidationError("entries must be positive finite lengths", field=f"lengths.{name}")
    report = validate_params(SuspensionParams(**arrs))
    if not report.ok:
        raise ValidationError(str(report), field="lengths")
    th = raw.get("theta1") or {"rule": "fixed", "value": 0.0}
    try:
        if th.get("rule") == "symmetric_half":
            theta1 = Theta1Rule.symmetric_half()
        elif th.get("rule") == "fixed":
            theta1 = Theta1Rule.fixed(float(th.get("value") or 0.0))
        else:
            raise ValueError(th.get("rule"))
    except (AttributeError, TypeError, ValueError):
        raise ValidationError(f"unknown rule {th!r}", field="theta1") from None
    signs = raw.get("signs")
    if signs is None:
        signs = default_signs(N)
    try:
        signs = check_signs([int(s) if s in (1, -1) else s for s in signs], N)
    except (TypeError, ValueError) as exc:
        raise ValidationError(str(exc), field="signs") from None
    kinds = raw.get("vertex_kinds")
    if kinds is not None:
        if len(kinds) != N or any(k not in ("OAE", "OAS") for k in kinds):
            raise ValidationError("needs N entries of 'OAE'/'OAS'", field="vertex_kinds")
        kinds = tuple(kinds)
    fold = raw.get("fold_index")
    if fold is not None and (not isinstance(fold, int) or not 2 < fold < N - 2):
        raise ValidationError(f"fold_index {fold!r} outside 2 < L < N - 2", field="fold_index")
    prov = raw.get("provenance") or {}
    if not isinstance(prov, dict):
        raise ValidationError("must be an object", field="provenance")
    return SuspensionDocument(tag, arrs["l"], arrs["m"], arrs["L"], theta1, signs, prov,
                              kinds, fold)


def read_suspension(path) -> ConstructedSuspension:
    with open(path, encoding="utf-8") as fh:
        return load_suspension(fh.read()).to_suspension()


def write_suspension(s, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(save_suspension(s))


# ---------------------------------------------------------------------------
# traces


def trace_header(N: int) -> list:
    head = ["z [length]", "gap [length]", "volume [length^3]", "feasible [0/1]"]
    for name in ("eps", "delta", "Delta"):
        head += [f"{name}_{k} [rad]" for k in range(1, N + 1)]
    return head


def write_trace_csv(trace, path_or_file) -> None:
    """One row per sample: z, gap, volume, feasibility flag, then eps, delta, Delta per vertex."""
    N = trace.N
    rows = np.column_stack([trace.z_samples, trace.gap, trace.volume,
                            trace.feasible.astype(float), trace.eps, trace.delta, trace.Delta])
    own = isinstance(path_or_file, (str, os.PathLike))
    fh = open(path_or_file, "w", newline="", encoding="utf-8") if own else path_or_file
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(trace_header(N))
        for row in rows:
            out = [FLOAT_FMT.format(v) if np.isfinite(v) else "nan" for v in row]
            out[3] = str(int(row[3]))
            w.writerow(out)
    finally:
        if own:
            fh.close()


def read_trace_csv(path):
    """Header and float table of a trace file."""
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float)


# ---------------------------------------------------------------------------
# mesh frames


def mesh_faces(N: int) -> np.ndarray:
    """1-based OBJ face triples: upper ``(u, v_{k+1}, v_k)``, lower ``(w, v_k, v_{k+1})``."""
    k = np.arange(1, N + 1)
    vk, vn = k + 2, k % N + 3
    upper = np.stack([np.ones(N, int), vn, vk], axis=1)
    lower = np.stack([np.full(N, 2), vk, vn], axis=1)
    return np.vstack([upper, lower])


def mesh_text(coords) -> str:
    coords = np.asarray(coords, dtype=float)
    lines = ["v " + " ".join(MESH_FMT.format(c) for c in row) for row in coords]
    lines += ["f " + " ".join(str(i) for i in f) for f in mesh_faces(coords.shape[0] - 2)]
    return "\n".join(lines) + "\n"


def read_mesh(path):
    """Vertexes and 1-based faces of an OBJ file written by :func:`export_mesh_frames`."""
    verts, faces = [], []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "v":
                verts.append([float(x) for x in parts[1:4]])
            elif parts[0] == "f":
                faces.append([int(x.split("/")[0]) for x in parts[1:]])
    return np.array(verts), np.array(faces, dtype=int)


def export_mesh_frames(s: ConstructedSuspension, S: int, directory) -> list:
    """Write ``S`` OBJ frames sampled along the flex plus ``manifest.csv``.

    Returns the frame paths.
    """
    from .coordinates import interior_samples

    os.makedirs(directory, exist_ok=True)
    zs = interior_samples(s.interval, S)
    coords, ok, _ = s.embed_batch(zs)
    width = max(4, len(str(S - 1)))
    paths = []
    with open(os.path.join(directory, "manifest.csv"), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["frame", "file", "z"])
        for i, (z, c, good) in enumerate(zip(zs, coords, ok)):
            if not good:
                continue
            name = f"frame_{i:0{width}d}.obj"
            path = os.path.join(directory, name)
            with open(path, "w", encoding="utf-8") as out:
                out.write(mesh_text(c))
            w.writerow([i, name, FLOAT_FMT.format(z)])
            paths.append(path)
    return paths
