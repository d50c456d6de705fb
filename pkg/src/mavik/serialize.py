"""Versioned JSON schemas for bases, fit reports and reduction reports.

A basis file stores the construction DAG once (children before parents) and
references polynomials by node id, so evaluation data can be rebuilt on any
compatible point set by replay.  Fit reports are written without timings so
that reruns with identical inputs produce byte-identical files; wall-clock
numbers go to a sidecar.
"""

from __future__ import annotations

import hashlib
import json

import numpy as np

from .core import Basis, PConst, PLin, PProd, PVar, Poly, replay
from .errors import ContractViolation

__all__ = [
    "SCHEMA_VERSION",
    "points_digest",
    "basis_to_json",
    "basis_from_json",
    "report_to_json",
    "reduction_to_json",
    "dump_json",
]

SCHEMA_VERSION = 1


def points_digest(X):
    """Hash of the exact float64 point array (order-sensitive)."""
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(X.points).tobytes())
    h.update(str(X.points.shape).encode())
    return h.hexdigest()


def dump_json(obj, path):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _flatten_dag(roots):
    nodes = []
    ids = {}

    def visit(node):
        key = id(node)
        if key in ids:
            return ids[key]
        if isinstance(node, PConst):
            rec = {"kind": "const", "value": node.value}
        elif isinstance(node, PVar):
            rec = {"kind": "var", "index": node.index}
        elif isinstance(node, PProd):
            rec = {"kind": "product", "left": visit(node.left), "right": visit(node.right)}
        elif isinstance(node, PLin):
            rec = {
                "kind": "lincomb",
                "children": [visit(c) for c in node.children],
                "weights": list(map(float, node.weights)),
            }
        else:
            raise ContractViolation(f"unknown provenance node {type(node)!r}")
        ids[key] = len(nodes)
        nodes.append(rec)
        return ids[key]

    root_ids = [visit(r) for r in roots]
    return nodes, root_ids


def _rebuild_dag(nodes):
    built = []
    for rec in nodes:
        kind = rec["kind"]
        if kind == "const":
            built.append(PConst(rec["value"]))
        elif kind == "var":
            built.append(PVar(rec["index"]))
        elif kind == "product":
            built.append(PProd(built[rec["left"]], built[rec["right"]]))
        elif kind == "lincomb":
            built.append(PLin(tuple(built[i] for i in rec["children"]), rec["weights"]))
        else:
            raise ContractViolation(f"unknown node kind {kind!r} in basis file")
    return built


def basis_to_json(basis, points=None, meta=None, expansions=None):
    """Serialize a basis; ``expansions`` optionally maps polynomials to
    CoeffVec objects to embed alongside them."""
    f_polys = basis.f_polys()
    g_polys = basis.g_polys()
    nodes, root_ids = _flatten_dag([p.prov for p in f_polys + g_polys])

    def poly_rec(p, root, extent=None):
        rec = {"degree": p.degree, "root": root}
        if extent is not None:
            rec["extent"] = float(extent)
        if expansions is not None and p in expansions:
            rec["expansion"] = expansions[p].to_json_obj()
        return rec

    g_extents = basis.g_extents()
    obj = {
        "schema_version": SCHEMA_VERSION,
        "n": basis.n,
        "n_points": len(basis.pointset),
        "nodes": nodes,
        "f": [poly_rec(p, r) for p, r in zip(f_polys, root_ids[: len(f_polys)])],
        "g": [
            poly_rec(p, r, extent=e)
            for p, r, e in zip(g_polys, root_ids[len(f_polys) :], g_extents)
        ],
    }
    if points is not None:
        obj["points_sha256"] = points_digest(points)
    if meta:
        obj["meta"] = meta
    return obj


def basis_from_json(obj, X):
    """Rebuild a Basis on ``X`` by replaying the stored construction DAG."""
    if obj.get("schema_version") != SCHEMA_VERSION:
        raise ContractViolation("unsupported basis schema version")
    if obj["n"] != X.n:
        raise ContractViolation(
            f"basis was built in n={obj['n']} but points have n={X.n}"
        )
    built = _rebuild_dag(obj["nodes"])
    cache = {}

    def make(rec):
        ev, gr = replay(built[rec["root"]], X.points, _cache=cache)
        return Poly(rec["degree"], ev, gr, built[rec["root"]], X)

    f_polys = [make(rec) for rec in obj["f"]]
    g_polys = [make(rec) for rec in obj["g"]]
    g_ext = [rec.get("extent", float(np.linalg.norm(p.eval))) for rec, p in zip(obj["g"], g_polys)]

    top = max(
        [p.degree for p in f_polys + g_polys],
        default=0,
    )
    F = [[] for _ in range(top + 1)]
    G = [[] for _ in range(top + 1)]
    extents = [[] for _ in range(top + 1)]
    for p in f_polys:
        F[p.degree].append(p)
    for p, e in zip(g_polys, g_ext):
        G[p.degree].append(p)
        extents[p.degree].append(e)
    return Basis(F=F, G=G, extents=[np.array(e) for e in extents])


def report_to_json(report):
    """Deterministic part of a fit report (timings live in a sidecar)."""
    return {
        "schema_version": SCHEMA_VERSION,
        "config": report.config,
        "n": report.n,
        "n_points": report.n_points,
        "m_constant": report.m_constant,
        "f_counts": report.f_counts,
        "g_counts": report.g_counts,
        "g_total": report.g_total,
        "max_degree_reached": len(report.g_counts) - 1,
        "spectra": [list(map(float, lam)) for lam in report.spectra],
        "extents": [list(map(float, e)) for e in report.extents],
        "termination": report.termination,
    }


def reduction_to_json(report, basis_meta=None):
    def profile(polys):
        top = max((p.degree for p in polys), default=0)
        counts = [0] * (top + 1)
        for p in polys:
            counts[p.degree] += 1
        return counts

    obj = {
        "schema_version": SCHEMA_VERSION,
        "threshold": report.threshold,
        "kept_count": len(report.kept),
        "removed_count": len(report.removed),
        "kept_profile": profile(report.kept),
        "removed": [
            {"degree": p.degree, "max_rel_residual": r} for p, r in report.removed
        ],
    }
    if basis_meta:
        obj["meta"] = basis_meta
    return obj
