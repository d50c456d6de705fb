"""Sparse symbolic expansion of construction trees into monomial coefficients.

The basis construction itself never touches monomials; this module exists for
the coefficient-normalization mode, for the degree-wise rescaling transform,
and as an independent oracle against which the evaluation representation can
be checked.  Exponent vectors are fixed-length integer tuples; iteration
order is graded lexicographic, purely as a storage/serialization convention.
"""

from __future__ import annotations

import numpy as np

from .core import PConst, PLin, PProd, PVar
from .errors import ContractViolation, ResourceLimitError

__all__ = ["CoeffVec", "expand", "expand_many", "coeff_gram", "degreewise_rescale"]

PRUNE_TOL = 1e-14
DEFAULT_TERM_CAP = 10**6


def _grlex_key(exps):
    return (sum(exps), exps)


class CoeffVec:
    """Sparse map from exponent vectors to coefficients, in n indeterminates."""

    __slots__ = ("terms", "n")

    def __init__(self, terms, n):
        self.n = int(n)
        pruned = {}
        for exps, c in terms.items():
            if abs(c) < PRUNE_TOL:
                continue
            key = tuple(int(e) for e in exps)
            if len(key) != self.n or any(e < 0 for e in key):
                raise ContractViolation("exponent vectors must be length-n nonnegative")
            pruned[key] = float(c)
        self.terms = pruned

    def total_degree(self):
        return max((sum(e) for e in self.terms), default=0)

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda kv: _grlex_key(kv[0]))

    def evaluate(self, points):
        """Evaluate the expansion at an (m, n) array of points."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[1] != self.n:
            raise ContractViolation("point dimension does not match expansion")
        out = np.zeros(pts.shape[0])
        for exps, c in self.terms.items():
            out += c * np.prod(pts ** np.array(exps), axis=1)
        return out

    def to_json_obj(self):
        return [{"exps": list(e), "coef": c} for e, c in self.sorted_terms()]

    def __eq__(self, other):
        return isinstance(other, CoeffVec) and self.n == other.n and self.terms == other.terms

    def __repr__(self):
        return f"CoeffVec(n={self.n}, terms={len(self.terms)})"


def _add_scaled(acc, terms, w):
    for exps, c in terms.items():
        acc[exps] = acc.get(exps, 0.0) + w * c


def _mul(a, b, n, cap):
    prod = {}
    for ea, ca in a.items():
        for eb, cb in b.items():
            key = tuple(x + y for x, y in zip(ea, eb))
            prod[key] = prod.get(key, 0.0) + ca * cb
            if len(prod) > cap:
                raise ResourceLimitError(
                    f"expansion exceeded the term cap ({cap} terms)"
                )
    return prod


def _expand_node(node, n, cap, cache):
    key = id(node)
    hit = cache.get(key)
    if hit is not None:
        return hit[1]
    if isinstance(node, PConst):
        terms = {(0,) * n: node.value}
    elif isinstance(node, PVar):
        exps = [0] * n
        exps[node.index] = 1
        terms = {tuple(exps): 1.0}
    elif isinstance(node, PProd):
        terms = _mul(
            _expand_node(node.left, n, cap, cache),
            _expand_node(node.right, n, cap, cache),
            n,
            cap,
        )
    elif isinstance(node, PLin):
        terms = {}
        for child, w in zip(node.children, node.weights):
            _add_scaled(terms, _expand_node(child, n, cap, cache), w)
        if len(terms) > cap:
            raise ResourceLimitError(f"expansion exceeded the term cap ({cap} terms)")
    else:
        raise ContractViolation(f"unknown provenance node {type(node)!r}")
    terms = {e: c for e, c in terms.items() if abs(c) >= PRUNE_TOL}
    cache[key] = (node, terms)
    return terms


def expand(poly, term_cap=DEFAULT_TERM_CAP, _cache=None):
    """Exact symbolic expansion of a polynomial's construction tree."""
    n = poly.points.n
    cache = {} if _cache is None else _cache
    return CoeffVec(_expand_node(poly.prov, n, term_cap, cache), n)


def expand_many(polys, term_cap=DEFAULT_TERM_CAP):
    """Expand several polynomials with a shared subtree cache."""
    cache = {}
    return [expand(p, term_cap=term_cap, _cache=cache) for p in polys]


def coeff_gram(polys, term_cap=DEFAULT_TERM_CAP):
    """Gram matrix of coefficient vectors over the union of their monomials."""
    if not polys:
        return np.zeros((0, 0))
    vecs = expand_many(polys, term_cap=term_cap)
    monomials = sorted({e for v in vecs for e in v.terms}, key=_grlex_key)
    index = {e: i for i, e in enumerate(monomials)}
    M = np.zeros((len(monomials), len(vecs)))
    for j, v in enumerate(vecs):
        for e, c in v.terms.items():
            M[index[e], j] = c
    gram = M.T @ M
    return 0.5 * (gram + gram.T)


def degreewise_rescale(cv, alpha, t):
    """Scale each total-degree-tau monomial by alpha**(t - tau)."""
    if alpha == 0:
        raise ContractViolation("alpha must be nonzero")
    scaled = {
        exps: c * float(alpha) ** (t - sum(exps)) for exps, c in cv.terms.items()
    }
    return CoeffVec(scaled, cv.n)
