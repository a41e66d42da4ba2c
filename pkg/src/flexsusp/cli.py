"""Command-line interface: ``flexsusp {construct,verify,trace,export,rank,fold-check}``.

Exit codes: 0 success, 1 usage, 2 invalid input, 3 certification
failed, 4 Type-III build failure.
"""

from __future__ import annotations

import argparse
import itertools
import json
import logging
import sys

import numpy as np

from . import analysis, io, symmetric
from .errors import (DegenerateConfiguration, FlexCertificationFailed, InvalidHalfParams,
                     ParseError, SchemaVersionError, SuspensionError, ValidationError)
from .geometry import SuspensionType

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_UNCERTIFIED, EXIT_BUILD = 0, 1, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


class _Out:
    def __init__(self, args):
        self.quiet, self.json = args.quiet, args.json

    def report(self, text: str, payload: dict):
        if self.json:
            print(json.dumps(payload, sort_keys=True, default=_jsonable))
        elif not self.quiet:
            print(text)

    def error(self, text: str, payload=None):
        if self.json:
            print(json.dumps({"error": text, **(payload or {})}, sort_keys=True, default=_jsonable))
        print(f"error: {text}", file=sys.stderr)


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    return str(x)


def _read_json(path):
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno) from None


# ---------------------------------------------------------------------------
# construct


def _symmetric_half(tag, doc, rng):
    M = int(doc["M"])
    if doc.get("random"):
        h = symmetric.random_half_params(tag, M, rng, doc.get("lo", 0.5), doc.get("hi", 2.0))
        if h is None:
            raise InvalidHalfParams("no feasible random half-parameters found")
        return h
    if tag is SuspensionType.II_AEE:
        return symmetric.HalfParamsIIAEE(M, tuple(doc["l"]), tuple(doc["L_half"]),
                                         doc.get("m"), doc.get("L"))
    cls = symmetric.HalfParamsIOEE if tag is SuspensionType.I_OEE else symmetric.HalfParamsIIOEE
    return cls(M, tuple(doc["l_half"]), tuple(doc["m_half"]), tuple(doc["L_half"]))


def type_iii_candidates(tag, doc):
    """TypeIIIParams to try, from an explicit seed or a cartesian seed grid."""
    from .type_iii import TypeIIIParams

    variant = "OAE" if tag is SuspensionType.III_OAE else "OAS"
    M = int(doc["M"])
    fold_L = doc.get("fold_L")
    if "grid" in doc:
        g = doc["grid"]
        axes = [g["l1"], g["m1"], g["l2"], g["m2"], g["L1"]]
        rest = g.get("L_rest", [[1.0]] * (M - 2))
        for combo in itertools.product(*axes, *rest):
            yield TypeIIIParams(variant, M, tuple(combo[:4]), tuple(combo[4:]), fold_L)
    else:
        yield TypeIIIParams(variant, M, tuple(doc["seed"]), tuple(doc["L_odd"]), fold_L)


def cmd_construct(args, out):
    from .type_iii import BuildFailure, build_III

    tag = SuspensionType.from_cli(args.type)
    doc = _read_json(args.params)
    if not isinstance(doc, dict) or "M" not in doc:
        raise ValidationError("parameter file needs an object with M", field="M")
    if tag in symmetric.BUILDERS:
        rng = np.random.default_rng(args.seed)
        s = symmetric.BUILDERS[tag](_symmetric_half(tag, doc, rng))
    else:
        budget = args.budget
        best = None
        tried = 0
        s = None
        for p in type_iii_candidates(tag, doc):
            tried += 1
            if args.max_seeds is not None and tried > args.max_seeds:
                break
            r = build_III(p, budget)
            if not isinstance(r, BuildFailure):
                s = r
                break
            if best is None or _worst(r) < _worst(best):
                best = r
        if s is None:
            payload = best.as_dict() if best is not None else {"reason": "no seeds"}
            payload["seeds_tried"] = tried
            out.error("Type III build failed", {"residual_report": payload})
            if not out.json:
                print(json.dumps(payload, indent=2, sort_keys=True, default=_jsonable), file=sys.stderr)
            return EXIT_BUILD
    io.write_suspension(s, args.out)
    out.report(f"wrote {args.out}: {s.tag.cli_name}, N = {s.N}",
               {"status": "ok", "out": args.out, "type": s.tag.value, "N": s.N})
    return EXIT_OK


def _worst(fail) -> float:
    vals = [abs(v) for v in fail.best_residuals.values()]
    return max(vals) if vals else np.inf


# ---------------------------------------------------------------------------
# analysis commands


def cmd_verify(args, out):
    s = io.read_suspension(args.infile)
    v = analysis.verify_flexible(s, S=args.samples, tol=args.tol)
    status = "flexible" if v.flexible else ("inconclusive" if v.inconclusive else "not flexible")
    out.report(f"{status}: max relative gap deviation {v.max_rel_gap_deviation:.3e}, "
               f"strong = {v.strong}, |volume| <= {v.volume_max_abs:.3e}", v.as_dict())
    return EXIT_OK if v.flexible else EXIT_UNCERTIFIED


def cmd_trace(args, out):
    s = io.read_suspension(args.infile)
    tr = analysis.dihedral_trace(s, S=args.samples)
    io.write_trace_csv(tr, args.out)
    out.report(f"wrote {args.out}: {len(tr.z_samples)} samples",
               {"status": "ok", "out": args.out, "samples": len(tr.z_samples)})
    return EXIT_OK


def cmd_export(args, out):
    s = io.read_suspension(args.infile)
    paths = io.export_mesh_frames(s, args.frames, args.dir)
    out.report(f"wrote {len(paths)} frames to {args.dir}",
               {"status": "ok", "dir": args.dir, "frames": len(paths)})
    return EXIT_OK


def cmd_rank(args, out):
    s = io.read_suspension(args.infile)
    emb = s.embed(args.z)
    rank, flex_dim = analysis.rigidity_jacobian_rank(emb)
    out.report(f"rank {rank}, flex dimension {flex_dim} at z = {args.z}",
               {"z": args.z, "rank": rank, "flex_dim": flex_dim})
    return EXIT_OK


def cmd_fold_check(args, out):
    from .type_iii import FLAT_PATTERN_TOL, FoldSpec

    s = io.read_suspension(args.infile)
    if s.vertex_kinds is None:
        raise ValidationError(f"{s.tag.value} has no flat folds to check", field="type")
    variant = "OAE" if s.tag is SuspensionType.III_OAE else "OAS"
    states = analysis.flat_states(s)
    found = {}
    for st in states:
        for kind in ("open", "compact"):
            err = float(np.max(st.pattern_error(FoldSpec.of(variant, s.N, kind, s.fold_index).delta)))
            if st.coplanar and err <= FLAT_PATTERN_TOL:
                found[kind] = {**st.as_dict(), "pattern_error": err}
    ok = set(found) == {"open", "compact"}
    lines = [f"{k}: z = {v['z']:.12g}, planarity {v['planarity']:.2e}, "
             f"edge error {v['edge_error']:.2e}" for k, v in sorted(found.items())]
    out.report("\n".join(lines + ["both flat folds present" if ok else "flat folds missing"]),
               {"ok": ok, "flat_states": found, "candidates": [st.as_dict() for st in states]})
    return EXIT_OK if ok else EXIT_UNCERTIFIED


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="seed for every stochastic choice")
    mode = common.add_mutually_exclusive_group()
    mode.add_argument("--quiet", action="store_true", help="print nothing on success")
    mode.add_argument("--json", action="store_true", help="machine-readable output")
    common.add_argument("-v", "--verbose", action="store_true", help="debug logging")

    parser = _Parser(prog="flexsusp", parents=[common],
                     description="Construct and certify flexible suspensions.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("construct", parents=[common], help="build a suspension from parameters")
    p.add_argument("--type", required=True, choices=[t.cli_name for t in SuspensionType])
    p.add_argument("--params", required=True, help="JSON parameter file")
    p.add_argument("--out", required=True, help="output document")
    p.add_argument("--budget", type=int, default=4, help="Type III branches refined per seed")
    p.add_argument("--max-seeds", type=int, default=None, help="stop a seed grid after this many")
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("verify", parents=[common], help="closure-gap certification")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--samples", type=int, default=analysis.DEFAULT_SAMPLES)
    p.add_argument("--tol", type=float, default=analysis.GAP_RTOL)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("trace", parents=[common], help="dihedral/volume trace as CSV")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--samples", type=int, default=analysis.DEFAULT_SAMPLES)
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("export", parents=[common], help="OBJ mesh frames along the flex")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--frames", type=int, required=True)
    p.add_argument("--dir", required=True)
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("rank", parents=[common], help="rigidity-matrix rank at one z")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--z", type=float, required=True)
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("fold-check", parents=[common], help="Type III flat folds")
    p.add_argument("--in", dest="infile", required=True)
    p.set_defaults(func=cmd_fold_check)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    out = _Out(args)
    try:
        return args.func(args, out)
    except FlexCertificationFailed as exc:
        out.error(str(exc))
        return EXIT_UNCERTIFIED
    except (ParseError, SchemaVersionError, ValidationError, InvalidHalfParams,
            DegenerateConfiguration, KeyError, TypeError, ValueError, OSError) as exc:
        out.error(f"{type(exc).__name__}: {exc}")
        return EXIT_INVALID
    except SuspensionError as exc:
        out.error(f"{type(exc).__name__}: {exc}")
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
