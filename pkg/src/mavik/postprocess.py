"""Gradient-based basis post-processing.

Two consumers of the stored per-point gradients: removal of redundant basis
polynomials (a vanishing polynomial whose gradient lies, at every data
point, in the span of the gradients of the kept lower-degree ones behaves
identically to an ideal member of those up to first order and is dropped),
and estimation of the dimension of the underlying variety from per-point
tangent-space codimensions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .engine import DIM_RANK_TOL, _rank_stacks
from .errors import ContractViolation

__all__ = ["ReductionReport", "reduce_basis", "estimate_dimension"]

PINV_RANK_TOL = 1e-12


@dataclass
class ReductionReport:
    """Outcome of a reduction pass: kept members, removed members with their
    worst relative gradient residual, and the threshold used."""

    kept: list
    removed: list  # (Poly, max relative residual over X)
    threshold: float

    def kept_profile(self, max_degree=None):
        top = max_degree
        if top is None:
            top = max((p.degree for p in self.kept), default=0)
        counts = [0] * (top + 1)
        for p in self.kept:
            counts[p.degree] += 1
        return counts


def _relative_residuals(g, pool_pinvs, pool_stacks):
    """Per-point relative residual of projecting grad g onto the pool span."""
    m = g.grad.shape[0]
    out = np.zeros(m)
    for i in range(m):
        target = g.grad[i]
        norm = np.linalg.norm(target)
        if norm == 0.0:
            out[i] = 0.0
            continue
        if pool_stacks is None:
            out[i] = 1.0
            continue
        v = target @ pool_pinvs[i]
        out[i] = np.linalg.norm(target - v @ pool_stacks[i]) / norm
    return out


def reduce_basis(basis, X, threshold=1e-6):
    """Drop vanishing polynomials generable from kept lower-degree ones.

    Degrees are processed in ascending order; the candidate pool for a
    degree-t member is every already-kept polynomial of degree < t (members
    of one degree are mutually independent under gradient normalization, so
    no reduction is attempted within a degree).  A polynomial is removed iff
    at every point the least-squares residual of its gradient against the
    pool gradients is at most ``threshold`` times its own gradient norm.
    """
    if not 0 <= threshold < 1:
        raise ContractViolation("threshold must lie in [0, 1)")
    g_polys = basis.g_polys() if hasattr(basis, "g_polys") else list(basis)
    if not g_polys:
        return ReductionReport(kept=[], removed=[], threshold=threshold)
    order = sorted(range(len(g_polys)), key=lambda i: (g_polys[i].degree, i))
    m = len(X)

    kept, removed = [], []
    pool_degree = None  # pool rebuilt whenever the current degree advances
    pool_pinvs = pool_stacks = None
    for idx in order:
        g = g_polys[idx]
        if g.degree != pool_degree:
            pool_degree = g.degree
            lower = [p for p in kept if p.degree < pool_degree]
            if lower:
                pool_stacks = [
                    np.stack([p.grad[i] for p in lower]) for i in range(m)
                ]
                pool_pinvs = [
                    np.linalg.pinv(s, rcond=PINV_RANK_TOL) for s in pool_stacks
                ]
            else:
                pool_stacks = pool_pinvs = None
        residuals = _relative_residuals(g, pool_pinvs, pool_stacks)
        if np.all(residuals <= threshold):
            removed.append((g, float(residuals.max())))
        else:
            kept.append(g)
    return ReductionReport(kept=kept, removed=removed, threshold=threshold)


def estimate_dimension(basis, X, tol=DIM_RANK_TOL):
    """Estimate (d_min, d_max) of the variety carved out by the G polynomials.

    Per point, the rank of the stacked gradients is the codimension of the
    tangent space; d_max = n minus the smallest rank over points with a
    nonzero stack (n when every stack vanishes), d_min = n minus the largest
    rank over all points.  An empty basis gives (n, n).
    """
    g_polys = basis.g_polys() if hasattr(basis, "g_polys") else list(basis)
    n = X.n
    if not g_polys:
        return n, n
    ranks, nonzero = _rank_stacks(g_polys, X, tol)
    d_min = n - int(ranks.max())
    d_max = n - int(ranks[nonzero].min()) if np.any(nonzero) else n
    return d_min, d_max
