"""Degree-incremental basis construction with pluggable normalization.

Starting from a nonzero constant, each degree t generates candidate
polynomials as products of the degree-1 and degree-(t-1) nonvanishing
strata, removes the span of everything already built (orthogonal projection
of evaluation vectors), and solves a generalized symmetric eigenproblem

    C_t(X)^T C_t(X) V = N(C_t) V Lambda

whose normalization matrix N depends on the chosen mode: the identity
(plain VCA), the Gram of coefficient vectors, or the Gram of stacked
per-point gradients.  Each surviving combination g = C_t v has extent of
vanishing ||g(X)|| (equal to sqrt(lambda), and computed directly from the
assembled evaluation vector for precision) and is classified as vanishing
iff the extent is <= epsilon.  Directions in the numerical nullspace of N
are dropped entirely: with the coefficient or gradient normalization these
are exactly the combinations with no polynomial content (or none visible
at the data), which is what keeps the basis free of spuriously vanishing
members.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .coefficients import DEFAULT_TERM_CAP, coeff_gram
from .core import Basis, constant_poly, linear_combine, multiply, replay_many, variables
from .errors import ContractViolation, InternalInvariantViolation
from .linalg import gen_eig_sym, numerical_rank, orthogonal_project

__all__ = [
    "NormalizationMode",
    "EngineConfig",
    "FitReport",
    "fit",
    "normalization_gram",
    "evaluate",
    "check_termination_dimension",
]

# Rank cutoff used when estimating tangent-space dimensions from gradient
# stacks; independent of both epsilon and the whitening rank tolerance.
DIM_RANK_TOL = 1e-6

# Extents this far below the stratum's evaluation scale are floating-point
# zeros and always classified as vanishing, so that epsilon = 0 behaves like
# exact arithmetic instead of sending rounding noise into the nonvanishing
# side (where its near-zero norm would poison later projections).
ZERO_EXTENT_REL = 1e-12


@dataclass(frozen=True)
class NormalizationMode:
    """One of the three normalizations: ``vca``, ``coefficient``, ``gradient``.

    ``z`` is the positive constant dividing the gradient norm in gradient
    mode (ignored by the other modes).
    """

    kind: str
    z: float = 1.0

    def __post_init__(self):
        if self.kind not in ("vca", "coefficient", "gradient"):
            raise ContractViolation(f"unknown normalization mode {self.kind!r}")
        if not self.z > 0:
            raise ContractViolation("z must be positive")

    @staticmethod
    def vca_baseline():
        return NormalizationMode("vca")

    @staticmethod
    def coefficient():
        return NormalizationMode("coefficient")

    @staticmethod
    def gradient(z=1.0):
        return NormalizationMode("gradient", z=float(z))


@dataclass(frozen=True)
class EngineConfig:
    epsilon: float
    mode: NormalizationMode
    m_constant: float | None = None  # None -> mode-dependent default
    max_degree: int | None = None  # None -> |X| safety cap
    d_max: int | None = None  # dimension rule; None or 0 disables
    d_min: int | None = None
    dedup_degree2: bool = True
    rank_tol: float = 1e-12
    term_cap: int = DEFAULT_TERM_CAP

    def echo(self):
        return {
            "epsilon": self.epsilon,
            "mode": self.mode.kind,
            "z": self.mode.z,
            "m_constant": self.m_constant,
            "max_degree": self.max_degree,
            "d_max": self.d_max,
            "d_min": self.d_min,
            "dedup_degree2": self.dedup_degree2,
            "rank_tol": self.rank_tol,
            "term_cap": self.term_cap,
        }


@dataclass
class FitReport:
    """Run record: counts, spectra, termination and configuration echo.

    ``spectra`` holds the per-degree generalized eigenvalues; ``extents``
    holds the per-degree evaluation norms of the retained polynomials (the
    values actually compared against epsilon -- they agree with
    sqrt(eigenvalue) up to the Gram matrix's numerical resolution but stay
    accurate far below it).
    """

    config: dict
    n: int
    n_points: int
    m_constant: float
    f_counts: list = field(default_factory=list)
    g_counts: list = field(default_factory=list)
    spectra: list = field(default_factory=list)  # per-degree eigenvalues, t >= 1
    extents: list = field(default_factory=list)  # per-degree classification norms
    termination: str = ""
    wall_time_s: float = 0.0

    @property
    def g_total(self):
        return sum(self.g_counts)

    @property
    def f_total(self):
        return sum(self.f_counts)


def default_m_constant(pointset, mode):
    """Mode-dependent constant polynomial value, chosen for cross-mode
    comparability: unit evaluation-vector norm for plain VCA, unit
    coefficient for coefficient mode, and the mean max-norm of the points
    (which scales linearly with the data) for gradient mode."""
    if mode.kind == "vca":
        return 1.0 / math.sqrt(len(pointset))
    if mode.kind == "coefficient":
        return 1.0
    m = float(np.mean(np.max(np.abs(pointset.points), axis=1)))
    return m if m > 0 else 1.0


def normalization_gram(cands, mode, term_cap=DEFAULT_TERM_CAP):
    """Normalization matrix N for a candidate stratum under ``mode``."""
    k = len(cands)
    if mode.kind == "vca":
        return np.eye(k)
    if mode.kind == "coefficient":
        return coeff_gram(cands, term_cap=term_cap)
    stack = np.stack([c.grad for c in cands])  # (k, |X|, n)
    gram = np.einsum("ixk,jxk->ij", stack, stack) / (mode.z**2)
    return 0.5 * (gram + gram.T)


def _candidate_products(f1, f_prev, dedup_pairs):
    cands = []
    if dedup_pairs:
        for i, p in enumerate(f1):
            for q in f_prev[i:]:
                cands.append(multiply(p, q))
    else:
        for p in f1:
            for q in f_prev:
                cands.append(multiply(p, q))
    return cands


def _rank_stacks(g_polys, X, tol):
    """Per-point numerical rank of the stacked gradients of ``g_polys``.

    Returns (ranks, nonzero_mask); a stack counts as zero when its Frobenius
    norm is negligible relative to the largest stack over all points.
    """
    m = len(X)
    stacks = np.stack([g.grad for g in g_polys])  # (|G|, |X|, n)
    fro = np.sqrt(np.sum(stacks**2, axis=(0, 2)))
    fmax = float(fro.max()) if m else 0.0
    nonzero = fro > tol * fmax if fmax > 0 else np.zeros(m, dtype=bool)
    ranks = np.array(
        [numerical_rank(stacks[:, i, :], tol) if nonzero[i] else 0 for i in range(m)]
    )
    return ranks, nonzero


def check_termination_dimension(g_polys, X, d_max=None, d_min=None, tol=DIM_RANK_TOL):
    """Dimension-based stopping rule from per-point tangent-space codimension.

    Fires when the estimated variety dimension has been pushed down to the
    requested target: with ``d_max`` set, once n - rank <= d_max at every
    point with a nonzero gradient stack; with ``d_min`` set, once
    n - rank <= d_min at some point.  A target of 0 (or None) disables the
    corresponding rule so the full basis is computed.
    """
    d_max = None if not d_max else int(d_max)
    d_min = None if not d_min else int(d_min)
    if (d_max is None and d_min is None) or not g_polys:
        return False
    n = X.n
    ranks, nonzero = _rank_stacks(g_polys, X, tol)
    if d_max is not None and np.any(nonzero):
        if n - int(ranks[nonzero].min()) <= d_max:
            return True
    if d_min is not None:
        if n - int(ranks.max()) <= d_min:
            return True
    return False


def _verify_size_bounds(f_counts, t, n):
    if sum(f_counts) > math.comb(n + t, n):
        raise InternalInvariantViolation(
            f"|F^({t})| = {sum(f_counts)} exceeds C({n}+{t},{n}); "
            "nonvanishing strata are no longer independent"
        )


def _verify_gradient_norms(polys, z):
    for p in polys:
        norm = float(np.linalg.norm(p.grad))
        if not 0.5 * z <= norm <= 2.0 * z:
            raise InternalInvariantViolation(
                f"retained polynomial has gradient norm {norm:0.3e}, "
                f"expected {z:0.3e}; normalization is broken"
            )


def fit(X, config):
    """Run the basis construction on ``X``; returns (Basis, FitReport).

    The loop is deterministic: candidate order is fixed, eigenvalues are
    sorted descending with stable tie-breaks, and eigenvector signs are
    pinned, so repeated runs on one platform are bitwise identical.
    """
    t_start = time.perf_counter()
    if len(X) < 1:
        raise ContractViolation("point set is empty")
    eps = float(config.epsilon)
    if eps < 0:
        raise ContractViolation("epsilon must be nonnegative")
    n = X.n
    for name, d in (("d_max", config.d_max), ("d_min", config.d_min)):
        if d is not None and not 0 <= d <= n:
            raise ContractViolation(f"{name} must lie in [0, n]")
    m_const = (
        float(config.m_constant)
        if config.m_constant is not None
        else default_m_constant(X, config.mode)
    )
    if m_const == 0:
        raise ContractViolation("m_constant must be nonzero")
    max_degree = config.max_degree if config.max_degree is not None else len(X)
    if max_degree < 1:
        raise ContractViolation("max_degree must be at least 1")

    F = [[constant_poly(m_const, X)]]
    G = [[]]
    extents = [np.zeros(0)]
    spectra = []
    extent_arrays = []
    termination = None
    t = 0
    while termination is None:
        t += 1
        if t == 1:
            cands_pre = variables(X)
        else:
            cands_pre = _candidate_products(
                F[1], F[t - 1], dedup_pairs=(t == 2 and config.dedup_degree2)
            )
        f_flat = [f for stratum in F for f in stratum]
        cands = orthogonal_project(cands_pre, f_flat)

        E = np.column_stack([c.eval for c in cands])
        A = E.T @ E
        A = 0.5 * (A + A.T)
        N = normalization_gram(cands, config.mode, term_cap=config.term_cap)
        res = gen_eig_sym(A, N, rank_tol=config.rank_tol)

        new_polys = [
            linear_combine(cands, res.vectors[:, i]) for i in range(res.retained_rank)
        ]
        if config.mode.kind == "gradient":
            _verify_gradient_norms(new_polys, config.mode.z)

        # Extents taken directly from the assembled evaluation vectors: the
        # Gram eigenvalues can only resolve extents down to sqrt(eps)*scale.
        norms = np.array([float(np.linalg.norm(p.eval)) for p in new_polys])
        zero_floor = ZERO_EXTENT_REL * float(np.linalg.norm(E))
        eps_eff = max(eps, zero_floor)
        f_t, g_t, ext_t = [], [], []
        for p, s in zip(new_polys, norms):
            if s > eps_eff:
                f_t.append(p)
            else:
                g_t.append(p)
                ext_t.append(s)
        F.append(f_t)
        G.append(g_t)
        extents.append(np.array(ext_t))
        spectra.append(res.values)
        extent_arrays.append(norms)
        _verify_size_bounds([len(s) for s in F], t, n)

        if not f_t:
            termination = "f-empty"
        elif t >= max_degree:
            termination = "max-degree"
        elif check_termination_dimension(
            [g for stratum in G for g in stratum], X, config.d_max, config.d_min
        ):
            termination = "dimension-rule"

    basis = Basis(F=F, G=G, extents=extents)
    g_total = sum(len(s) for s in G)
    # The n(|X|-n) output bound holds once the point count reaches the
    # quadratic saturation threshold C(n+2, n); below it, genuine vanishing
    # quadrics exist and legitimate bases can exceed the bound (e.g. 10
    # generic points in R^4 give |G| = 25 > 24), so the guard is scoped.
    if (
        config.mode.kind in ("coefficient", "gradient")
        and len(X) > n
        and len(X) >= math.comb(n + 2, n)
    ):
        if g_total > n * (len(X) - n):
            raise InternalInvariantViolation(
                f"|G| = {g_total} exceeds n(|X|-n) = {n * (len(X) - n)}"
            )
    report = FitReport(
        config=config.echo(),
        n=n,
        n_points=len(X),
        m_constant=m_const,
        f_counts=[len(s) for s in F],
        g_counts=[len(s) for s in G],
        spectra=spectra,
        extents=extent_arrays,
        termination=termination,
        wall_time_s=time.perf_counter() - t_start,
    )
    return basis, report


def evaluate(basis, X_new):
    """Replay every basis polynomial on new points.

    Returns (F_matrix, G_matrix) whose columns follow the degree-stratified
    order of the basis.  On the training points this reproduces the stored
    evaluation vectors.
    """
    pts = X_new.points if hasattr(X_new, "points") else np.asarray(X_new, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != basis.n:
        raise ContractViolation("new points must be m x n with the training n")
    f_polys = basis.f_polys()
    g_polys = basis.g_polys()
    results = replay_many(f_polys + g_polys, pts)
    m = pts.shape[0]
    f_vals = [ev for ev, _ in results[: len(f_polys)]]
    g_vals = [ev for ev, _ in results[len(f_polys) :]]
    F_mat = np.column_stack(f_vals) if f_vals else np.zeros((m, 0))
    G_mat = np.column_stack(g_vals) if g_vals else np.zeros((m, 0))
    return F_mat, G_mat
