#!/usr/bin/env python3
"""Demonstrate the scaling *inconsistency* of coefficient normalization.

Setup: mean-centered points lying near (but not on) a line in the plane, so
a fit finds one nonvanishing linear polynomial and one approximately (not
strictly) vanishing linear polynomial.  For each normalization we record
the configuration (per-degree vanishing counts) the mode produces at scale
1, then ask at each scale alpha whether *any* threshold on the scaled data
reproduces that mode's own configuration.

Shrinking the input makes every degree-2 evaluation vector fall
quadratically while the near-vanishing linear one falls only linearly;
under coefficient normalization the quadratic stratum therefore dives below
the linear polynomial, and below some alpha no epsilon separates them.
Gradient normalization is immune: its extents respond linearly to the
scale at every degree, so the scale-1 window just moves by alpha.

This is a documented demonstration, not a test: the breakdown scale depends
on the data.  Run:  python3 scripts/coeff_scaling_demo.py
"""

import numpy as np

from mavik.core import PointSet
from mavik.engine import EngineConfig, NormalizationMode, fit
from mavik.retrieval import grid_epsilons

MAX_DEGREE = 2


def near_line_points(count=40, jitter=0.02, seed=7):
    rng = np.random.Generator(np.random.Philox(seed))
    t = rng.uniform(-1.0, 1.0, size=count)
    pts = np.column_stack([t, 0.6 * t + jitter * rng.normal(size=count)])
    return PointSet(pts - pts.mean(axis=0))


def g_profile(X, mode, eps):
    _, report = fit(X, EngineConfig(epsilon=eps, mode=mode, max_degree=MAX_DEGREE))
    counts = report.g_counts + [0] * (MAX_DEGREE + 1 - len(report.g_counts))
    return tuple(counts[: MAX_DEGREE + 1])


def base_configuration(X, mode):
    """The mode's configuration once the near-vanishing line is captured:
    profile at the smallest grid epsilon with one degree-1 vanisher."""
    for eps in grid_epsilons(1.0):
        profile = g_profile(X, mode, float(eps))
        if profile[1] == 1:
            return profile, float(eps)
    raise SystemExit("no epsilon captures the near-vanishing line; adjust jitter")


def reachable(X_scaled, mode, target, alpha):
    return any(
        g_profile(X_scaled, mode, float(eps)) == target
        for eps in grid_epsilons(alpha)
    )


def main():
    X = near_line_points()
    modes = {
        "coefficient": NormalizationMode.coefficient(),
        "gradient": NormalizationMode.gradient(z=np.sqrt(len(X))),
    }
    targets = {}
    for name, mode in modes.items():
        profile, eps = base_configuration(X, mode)
        targets[name] = profile
        print(f"{name}: scale-1 configuration {list(profile)} (first seen at eps={eps:.3g})")

    print(f"\n{'alpha':>8} {'coefficient':>12} {'gradient':>9}")
    for alpha in (1.0, 0.1, 0.03, 0.01):
        Xa = PointSet(alpha * X.points)
        row = []
        for name, mode in modes.items():
            row.append("found" if reachable(Xa, mode, targets[name], alpha) else "NO epsilon")
        print(f"{alpha:>8g} {row[0]:>12} {row[1]:>9}")

    print("\nCoefficient normalization loses its own configuration at small")
    print("scales; gradient normalization keeps its configuration at every")
    print("scale with the linearly rescaled threshold grid.")


if __name__ == "__main__":
    main()
