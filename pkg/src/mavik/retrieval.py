"""Configuration-retrieval harness.

A run samples a parametric variety, normalizes it to the unit box, perturbs
it with Gaussian noise, rescales by alpha, and then searches a fixed
epsilon grid for thresholds at which the fitted vanishing strata match a
target per-degree profile.  The grid is scale-covariant: it always contains
the same number of points, at the same positions relative to alpha.

The scan exploits that a fit is a piecewise-constant function of epsilon:
classification decisions only flip when epsilon crosses one of the extents
of vanishing encountered during the run, so consecutive grid points
between breakpoints reuse the previous fit verbatim.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from importlib import resources

import numpy as np

from . import datasets
from .engine import EngineConfig, NormalizationMode, evaluate, fit
from .errors import ContractViolation

__all__ = [
    "GRID_LO_FRAC",
    "GRID_STEP_FRAC",
    "grid_epsilons",
    "scan_g_profiles",
    "mode_from_kind",
    "RetrievalOutcome",
    "run_retrieval",
    "load_target_profiles",
]

GRID_LO_FRAC = 1e-5
GRID_STEP_FRAC = 1e-3
DEFAULT_POINTS_PER_RUN = 100


def grid_epsilons(alpha):
    """The epsilon search grid for scale ``alpha``: [1e-5 a, a) step 1e-3 a."""
    if alpha <= 0:
        raise ContractViolation("alpha must be positive")
    count = math.ceil((1.0 - GRID_LO_FRAC) / GRID_STEP_FRAC)
    return alpha * (GRID_LO_FRAC + np.arange(count) * GRID_STEP_FRAC)


def mode_from_kind(kind, n_points=None, z=None):
    """Map a CLI mode name to a NormalizationMode with harness defaults.

    In gradient mode the harness normalizes the *mean per-point* gradient
    norm to one (z = sqrt(|X|)) rather than the norm of the full stacked
    gradient vector: extents of vanishing then sit at the per-point noise
    scale, which keeps the epsilon search grid (relative step 1e-3) fine
    enough to resolve the valid window.
    """
    if kind in ("vca", "vca-baseline"):
        return NormalizationMode.vca_baseline()
    if kind in ("coeff", "coefficient"):
        return NormalizationMode.coefficient()
    if kind in ("grad", "gradient"):
        if z is None:
            z = math.sqrt(n_points) if n_points else 1.0
        return NormalizationMode.gradient(z=z)
    raise ContractViolation(f"unknown mode {kind!r}")


def _next_breakpoint(report, eps):
    nxt = math.inf
    for norms in report.extents:
        for value in norms:
            if eps < value < nxt:
                nxt = float(value)
    return nxt


def scan_g_profiles(X, mode, max_degree, epsilons):
    """Vanishing-stratum profiles of fits at each epsilon (ascending grid)."""
    profiles = []
    current = None
    next_bp = -math.inf
    for eps in epsilons:
        if current is None or eps >= next_bp:
            _, report = fit(
                X, EngineConfig(epsilon=float(eps), mode=mode, max_degree=max_degree)
            )
            current = tuple(report.g_counts)
            next_bp = _next_breakpoint(report, eps)
        profiles.append(current)
    return profiles


def _matches_target(profile, target):
    padded = list(profile) + [0] * max(0, len(target) - len(profile))
    return padded[: len(target)] == list(target)


def _contiguous_runs(indices):
    runs = []
    for i in indices:
        if runs and i == runs[-1][1] + 1:
            runs[-1][1] = i
        else:
            runs.append([i, i])
    return runs


@dataclass
class RetrievalOutcome:
    """One retrieval run: did any searched threshold reproduce the target?

    ``success`` holds iff ``valid_eps_range`` is nonempty; the range is the
    widest contiguous block of working grid thresholds; ``trials`` counts
    the thresholds searched.  ``extent_at_unperturbed`` is the mean
    evaluation norm of the fitted vanishing polynomials at the scaled
    unperturbed points, and ``noncontiguous`` flags a fragmented valid set
    (the widest block is then reported)."""

    success: bool
    valid_eps_range: tuple | None
    extent_at_unperturbed: float | None
    trials: int
    noncontiguous: bool = False


def _single_trial(args):
    (which, noise, alpha, run_seed, mode_kind, z, target, n_points) = args
    clean = datasets.center_and_unitbox(
        datasets.sample_variety(which, n_points, seed=run_seed)
    )
    perturbed = datasets.perturb(clean, noise, seed=run_seed + 7_000_003)
    X_run = datasets.scale(perturbed, alpha)
    X_ref = datasets.scale(clean, alpha)

    mode = mode_from_kind(mode_kind, n_points=len(X_run), z=z)
    max_degree = len(target) - 1
    eps_grid = grid_epsilons(alpha)
    profiles = scan_g_profiles(X_run, mode, max_degree, eps_grid)
    hits = [i for i, p in enumerate(profiles) if _matches_target(p, target)]
    if not hits:
        return RetrievalOutcome(False, None, None, len(eps_grid))
    runs = _contiguous_runs(hits)
    widest = max(runs, key=lambda r: r[1] - r[0])
    lo, hi = float(eps_grid[widest[0]]), float(eps_grid[widest[1]])

    basis, _ = fit(
        X_run,
        EngineConfig(epsilon=0.5 * (lo + hi), mode=mode, max_degree=max_degree),
    )
    _, G_mat = evaluate(basis, X_ref)
    extent = float(np.mean(np.linalg.norm(G_mat, axis=0))) if G_mat.shape[1] else 0.0
    return RetrievalOutcome(True, (lo, hi), extent, len(eps_grid), len(runs) > 1)


def run_retrieval(
    which,
    noise,
    scales,
    runs,
    mode_kind,
    target,
    base_seed=0,
    z=None,
    n_points=DEFAULT_POINTS_PER_RUN,
    workers=None,
):
    """Retrieval table for one variety/mode.

    Returns {"runs": {alpha: [RetrievalOutcome, ...]}, "per_scale": {alpha:
    aggregate dict}} where the aggregate averages the valid range and the
    unperturbed extent over the successful runs.  Worker-pool size comes
    from ``workers`` or the MAVIK_THREADS environment variable (default
    serial); aggregation order is fixed regardless of pool size.
    """
    if workers is None:
        workers = max(1, int(os.environ.get("MAVIK_THREADS", "1")))
    jobs = [
        (which, noise, float(alpha), base_seed + r, mode_kind, z, tuple(target), n_points)
        for alpha in scales
        for r in range(runs)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_single_trial, jobs))
    else:
        results = [_single_trial(job) for job in jobs]

    per_scale = {}
    per_run = {}
    for i, alpha in enumerate(scales):
        chunk = results[i * runs : (i + 1) * runs]
        per_run[float(alpha)] = chunk
        ok = [c for c in chunk if c.success]
        per_scale[float(alpha)] = {
            "successes": len(ok),
            "runs": len(chunk),
            "success_rate": len(ok) / len(chunk),
            "valid_eps_range": (
                (
                    float(np.mean([c.valid_eps_range[0] for c in ok])),
                    float(np.mean([c.valid_eps_range[1] for c in ok])),
                )
                if ok
                else None
            ),
            "extent_at_unperturbed": (
                float(np.mean([c.extent_at_unperturbed for c in ok])) if ok else None
            ),
        }
    return {"per_scale": per_scale, "runs": per_run}


def load_target_profiles(path=None):
    """Per-variety target profiles (counts of vanishing polynomials by degree)."""
    if path is not None:
        text = open(path).read()
    else:
        text = resources.files("mavik").joinpath("data/target_profiles.json").read_text()
    try:
        payload = json.loads(text)
        return {k: list(v) for k, v in payload["profiles"].items()}
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise ContractViolation(f"malformed target profile file: {exc}") from exc
