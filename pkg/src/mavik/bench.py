"""Generic-points benchmark: basis sizes and runtimes across modes."""

from __future__ import annotations

from .datasets import sample_generic
from .engine import EngineConfig, fit
from .retrieval import mode_from_kind

__all__ = ["run_generic_bench"]


def run_generic_bench(dims, count, epsilon, modes, seed):
    """Fit uniform [-1,1]^n points for each (dim, mode); one row per fit.

    Gradient mode runs with z = 1 here (the harness z conventions only
    matter for the retrieval test).
    """
    rows = []
    for dim in dims:
        X = sample_generic(count, dim, seed)
        for kind in modes:
            mode = mode_from_kind(kind, z=1.0 if kind in ("grad", "gradient") else None)
            _, report = fit(X, EngineConfig(epsilon=epsilon, mode=mode))
            rows.append(
                {
                    "count": count,
                    "dim": dim,
                    "mode": kind,
                    "seed": seed,
                    "epsilon": epsilon,
                    "g_total": report.g_total,
                    "g_profile": report.g_counts,
                    "max_degree": len(report.g_counts) - 1,
                    "runtime_s": report.wall_time_s,
                }
            )
    return rows
