"""Command-line front end for certifying, refuting and solving sphere covers.

Every command prints one canonical JSON document (sorted keys, floats with
17 significant digits).  Exit codes: 0 positive, 1 refuted, 2 input error,
3 resource limit.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction

import numpy as np

from . import __version__, geom
from .caps import (
    Cap,
    cap_from_json,
    cap_membership,
    cap_to_json,
    shortset_from_json,
    shortset_to_json,
)
from .certify import (
    FamilySizeError,
    WitnessError,
    cover_certificate,
    facet_caps,
    shortset_family_check,
    uncovered_witness,
)
from .oracle import (
    ArcSet,
    arcset_to_shortset,
    cap_to_arcset,
    circle_cover_check,
    random_arc_family,
    random_simplex_with_origin,
    sample_sphere,
    sampling_cover_check,
    shatter_cap,
)
from .solver import (
    DEPTH_LIMIT,
    common_point,
    hemisphere_voronoi_instance,
    make_instance,
    star_instance,
)

EXIT_OK, EXIT_REFUTED, EXIT_INPUT, EXIT_LIMIT = 0, 1, 2, 3
MESH_DEPTH = 5


class InputError(Exception):
    """Bad file contents or flag combination; reported with exit code 2."""


# -- canonical JSON -------------------------------------------------------


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, Fraction):
        return int(obj) if obj.denominator == 1 else float(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    return obj


def _encode(obj) -> str:
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        if not math.isfinite(obj):
            raise ValueError("non-finite float in report")
        text = format(obj, ".17g")
        # keep floats recognizable as floats after a round trip
        return text if any(ch in text for ch in ".en") else text + ".0"
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=True)
    if isinstance(obj, list):
        return "[" + ",".join(_encode(v) for v in obj) + "]"
    if isinstance(obj, dict):
        items = sorted(obj.items())
        return "{" + ",".join(json.dumps(k) + ":" + _encode(v) for k, v in items) + "}"
    raise TypeError(f"cannot encode {type(obj).__name__}")


def canonical_json(obj) -> str:
    return _encode(_plain(obj))


def digest(obj) -> str:
    return hashlib.sha256(canonical_json(obj).encode()).hexdigest()


def run_report(command, instance, mode, result, seed, started) -> dict:
    return {
        "command": command,
        "instance_digest": digest(instance),
        "mode": mode,
        "result": result,
        "seed": seed,
        "timings_ms": {"total": round((time.perf_counter() - started) * 1000.0, 3)},
        "version": __version__,
    }


def thread_limit() -> int:
    raw = os.environ.get("SPHERECOVER_THREADS", "")
    try:
        value = int(raw)
    except ValueError:
        value = 0
    return value if value > 0 else (os.cpu_count() or 1)


# -- family files ---------------------------------------------------------


def family_document(kind: str, dim: int, members) -> dict:
    if kind == "caps":
        body = [cap_to_json(c) for c in members]
    elif kind == "shortsets":
        body = [shortset_to_json(s) for s in members]
    else:
        body = [a.to_json() for a in members]
    return {"kind": kind, "dim": dim, "family": body}


def _load_json(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc


def parse_family(doc, exact: bool = False):
    """Return (kind, dim, members, arcsets) from a family document.

    ``arcsets`` is the family as parsed exactly when the file holds arcs,
    None otherwise.
    """
    try:
        kind = doc["kind"]
        items = doc["family"]
        if kind == "arcs":
            arcsets = [ArcSet.from_json(a, exact=exact) for a in items]
            members = [arcset_to_shortset(a) for a in arcsets]
            if all(len(s.parts) == 1 for s in members):
                members = [s.parts[0] for s in members]
        elif kind == "caps":
            members = [cap_from_json(c) for c in items]
            arcsets = None
        elif kind == "shortsets":
            members = [shortset_from_json(s) for s in items]
            arcsets = None
        else:
            raise InputError(f"unknown family kind {kind!r}")
    except (KeyError, TypeError) as exc:
        raise InputError(f"malformed family document: {exc!r}") from exc
    if not members:
        raise InputError("empty family")
    dims = {m.dim for m in members}
    if len(dims) != 1:
        raise InputError(f"family mixes dimensions {sorted(dims)}")
    dim = dims.pop()
    if "dim" in doc and doc["dim"] != dim:
        raise InputError(f"declared dim {doc['dim']} but vectors give {dim}")
    return kind, dim, members, arcsets


def _circle_family(members) -> list:
    """Arc view of caps on S^1 for the exact oracle.

    Single-point parts are dropped: a point never closes an open gap, so
    the coverage verdict and the gaps are unchanged.
    """
    family = []
    for m in members:
        parts = [m] if isinstance(m, Cap) else list(m.parts)
        arcs = tuple(a for p in parts for a in _part_arcs(p))
        if arcs:
            family.append(ArcSet(arcs))
    return family


def _part_arcs(cap: Cap):
    try:
        return cap_to_arcset(cap).arcs
    except geom.GeometryError:
        # all generators on one ray: the part is a single point
        return ()


def parse_instance(doc):
    try:
        chart_doc = doc["chart"]
        kind = geom.ChartKind(chart_doc["kind"])
        chart = geom.SimplexChart(kind, np.array(chart_doc["vertices"], dtype=float),
                                  None if chart_doc.get("pole") is None
                                  else np.array(chart_doc["pole"], dtype=float))
        sets = [shortset_from_json(s) if "parts" in s else cap_from_json(s) for s in doc["sets"]]
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, geom.GeometryError):
            raise
        raise InputError(f"malformed instance document: {exc!r}") from exc
    return make_instance(chart, sets)


def instance_document(inst) -> dict:
    chart = inst.chart
    return {
        "chart": {
            "kind": chart.kind.value,
            "vertices": chart.vertices.tolist(),
            "pole": None if chart.pole is None else chart.pole.tolist(),
        },
        "sets": [shortset_to_json(s) for s in inst.sets],
    }


# -- commands -------------------------------------------------------------


def cmd_generate(args):
    n, seed = args.dim, args.seed
    if n < 1:
        raise InputError("--dim must be at least 1")
    if args.depth < 0:
        raise InputError("--depth must be non-negative")
    if args.kind == "simplex-cover":
        doc = family_document("caps", n, facet_caps(random_simplex_with_origin(n, seed)))
    elif args.kind == "shattered-cover":
        caps = facet_caps(random_simplex_with_origin(n, seed))
        doc = family_document("shortsets", n, [shatter_cap(c, args.depth) for c in caps])
    elif args.kind == "arcs":
        if n != 1:
            raise InputError("--kind arcs needs --dim 1")
        doc = family_document("arcs", 1, random_arc_family(seed))
    elif args.kind == "lemma1-voronoi":
        if n != 2:
            raise InputError("--kind lemma1-voronoi needs --dim 2")
        doc = instance_document(hemisphere_voronoi_instance(seed))
    else:
        inst, _ = star_instance(n, seed, max(args.depth, 0))
        doc = instance_document(inst)
    text = canonical_json(doc)
    if args.output:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    return EXIT_OK, doc, None, text


def _oracle(dim, members, arcsets, mesh_depth):
    if dim == 1:
        rep = circle_cover_check(arcsets if arcsets is not None else _circle_family(members))
        return rep.covered, {"kind": "circle", **rep.to_json()}
    rep = sampling_cover_check(members, sample_sphere(dim, mesh_depth))
    return rep.all_covered, {"kind": "sampling", **rep.to_json()}


def check_one(doc, mode, mesh_depth, exact):
    """Returns (exit code, result payload) for one family document."""
    kind, dim, members, arcsets = parse_family(doc, exact=exact)
    if exact and dim != 1:
        raise InputError("--exact is only available for n = 1")
    result = {}
    cert_ok = oracle_ok = None
    if mode in ("certificate", "both"):
        if len(members) != dim + 2:
            raise InputError(f"certificate mode needs n+2 = {dim + 2} members, got {len(members)}")
        if all(isinstance(m, Cap) for m in members):
            cert = cover_certificate(members)
        else:
            cert = shortset_family_check(members)
        cert_ok = cert.certificate.certified if hasattr(cert, "certificate") else cert.certified
        result["certificate"] = cert.to_json()
    if mode in ("oracle", "both"):
        oracle_ok, result["oracle"] = _oracle(dim, members, arcsets, mesh_depth)
    if mode == "both":
        result["agreement"] = cert_ok == oracle_ok
    if mode == "certificate":
        return (EXIT_OK if cert_ok else EXIT_REFUTED), result
    if mode == "oracle":
        return (EXIT_OK if oracle_ok else EXIT_REFUTED), result
    return (EXIT_OK if cert_ok and oracle_ok else EXIT_REFUTED), result


def _check_guarded(doc, args):
    try:
        return check_one(doc, args.mode, args.mesh_depth, args.exact)
    except (InputError, geom.GeometryError, FamilySizeError) as exc:
        return EXIT_INPUT, {"error": str(exc)}


def cmd_check(args):
    docs = [_load_json(p) for p in args.files]
    if len(docs) == 1:
        code, result = check_one(docs[0], args.mode, args.mesh_depth, args.exact)
        return code, docs[0], result, None
    with ThreadPoolExecutor(max_workers=thread_limit()) as pool:
        outcomes = list(pool.map(lambda d: _check_guarded(d, args), docs))
    codes = [c for c, _ in outcomes]
    code = EXIT_INPUT if EXIT_INPUT in codes else max(codes)
    return code, docs, [{"exit": c, **r} for c, r in outcomes], None


def cmd_witness(args):
    doc = _load_json(args.file)
    _, dim, members, _ = parse_family(doc)
    if not all(isinstance(m, Cap) for m in members):
        raise InputError("witness takes a family of caps")
    if len(members) > dim + 1:
        raise InputError("family size admits a cover; use check")
    x = uncovered_witness(members)
    if any(cap_membership(c, x) for c in members):
        raise WitnessError("witness failed re-verification")
    return EXIT_OK, doc, {"point": x, "verified": True}, None


def cmd_solve(args):
    doc = _load_json(args.file)
    if not args.eps > 0:
        raise InputError("--eps must be positive")
    inst = parse_instance(doc)
    res = common_point(inst, args.eps, depth_limit=args.depth_limit)
    payload = res.to_json()
    payload["bary"] = res.bary
    payload["face_condition_checked"] = inst.face_condition_checked
    if res.message:
        payload["message"] = res.message
    code = {"ok": EXIT_OK, "not_a_cover": EXIT_REFUTED}.get(res.status, EXIT_LIMIT)
    return code, doc, payload, None


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="spherecover", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a seeded family or closed-cover Sperner instance")
    g.add_argument("--dim", type=int, required=True)
    g.add_argument("--kind", default="simplex-cover",
                   choices=["simplex-cover", "shattered-cover", "arcs",
                            "lemma1-voronoi", "lemma1-star"])
    g.add_argument("--depth", type=int, default=1)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("-o", "--output")
    g.set_defaults(func=cmd_generate)

    c = sub.add_parser("check", help="certify and/or oracle-check n+2 families")
    c.add_argument("files", nargs="+")
    c.add_argument("--mode", default="certificate", choices=["certificate", "oracle", "both"])
    c.add_argument("--mesh-depth", type=int, default=MESH_DEPTH)
    c.add_argument("--exact", action="store_true")
    c.add_argument("--seed", type=int, default=0)
    c.set_defaults(func=cmd_check)

    w = sub.add_parser("witness", help="uncovered point for at most n+1 caps")
    w.add_argument("file")
    w.add_argument("--seed", type=int, default=0)
    w.set_defaults(func=cmd_witness)

    s = sub.add_parser("solve-lemma1", help="common point of a closed-cover Sperner instance")
    s.add_argument("file")
    s.add_argument("--eps", type=float, default=1e-6)
    s.add_argument("--depth-limit", type=int, default=DEPTH_LIMIT)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_solve)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    started = time.perf_counter()
    try:
        code, instance, result, raw = args.func(args)
    except (InputError, geom.GeometryError, FamilySizeError) as exc:
        print(f"spherecover: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if raw is not None and not args.output:
        print(raw)
        return code
    if result is None:
        result = {"written": args.output}
    mode = getattr(args, "mode", None) or args.command
    report = run_report(args.command, instance, mode, result, args.seed, started)
    print(canonical_json(report))
    return code


if __name__ == "__main__":
    sys.exit(main())
