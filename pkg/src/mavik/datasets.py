"""Reproducible data generation and preprocessing.

All samplers are pure functions of their parameters and a seed, driven by
the counter-based Philox generator so that results reproduce across
platforms.  Noise convention: ``perturb(X, nu, seed)`` adds i.i.d. Gaussian
noise with *standard deviation* ``nu`` per coordinate (so nu = 0.05 on
unit-box data is "5% noise") and then re-subtracts the mean.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import PointSet
from .errors import ContractViolation, DegenerateInputError

__all__ = [
    "RNG_ALGORITHM",
    "VARIETIES",
    "sample_generic",
    "variety_points",
    "sample_variety",
    "perturb",
    "center_and_unitbox",
    "scale",
    "translate",
    "PreprocessResult",
    "svd_preprocess",
    "load_points",
    "save_points",
]

RNG_ALGORITHM = "philox4x64-10"

# Parametric curves/surfaces with known implicit equations, sampled uniformly
# in their parameter ranges.
VARIETY_PARAM_RANGES = {
    "V1": (-1.0, 1.0),
    "V2": (-2.5, 2.5),
    "V3": (-1.0, 1.0),
}
VARIETIES = tuple(VARIETY_PARAM_RANGES)


def _rng(seed):
    return np.random.Generator(np.random.Philox(seed))


def sample_generic(count, dim, seed):
    """``count`` i.i.d. points uniform on [-1, 1]^dim."""
    if count < 1 or dim < 1:
        raise ContractViolation("count and dim must be at least 1")
    pts = _rng(seed).uniform(-1.0, 1.0, size=(count, dim))
    note = {
        "kind": "generic-uniform",
        "count": count,
        "dim": dim,
        "seed": seed,
        "rng": RNG_ALGORITHM,
    }
    return PointSet(pts, (note,))


def variety_points(which, u, v=None):
    """Evaluate a variety's parametric map at parameter array(s).

    V1: (cos 2u cos u, cos 2u sin u) -- a four-petal rose in the plane.
    V2: (3(3-u^2), u(3-u^2), x+y) -- a nodal cubic on the plane x+y-z=0.
    V3: (v(u^2-v^2), u, u^2-v^2) -- a quartic surface in R^3.
    """
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if which == "V1":
        r = np.cos(2 * u)
        return np.column_stack([r * np.cos(u), r * np.sin(u)])
    if which == "V2":
        x = 3.0 * (3.0 - u**2)
        y = u * (3.0 - u**2)
        return np.column_stack([x, y, x + y])
    if which == "V3":
        v = np.atleast_1d(np.asarray(v, dtype=float))
        return np.column_stack([v * (u**2 - v**2), u, u**2 - v**2])
    raise ContractViolation(f"unknown variety {which!r}")


def sample_variety(which, count, seed):
    """Sample a parametric variety uniformly in its parameter range."""
    if which not in VARIETY_PARAM_RANGES:
        raise ContractViolation(f"unknown variety {which!r}")
    if count < 1:
        raise ContractViolation("count must be at least 1")
    lo, hi = VARIETY_PARAM_RANGES[which]
    rng = _rng(seed)
    u = rng.uniform(lo, hi, size=count)
    v = rng.uniform(lo, hi, size=count) if which == "V3" else None
    pts = variety_points(which, u, v)
    note = {
        "kind": "variety",
        "which": which,
        "count": count,
        "seed": seed,
        "rng": RNG_ALGORITHM,
    }
    return PointSet(pts, (note,))


def perturb(X, nu, seed):
    """Additive Gaussian noise (std ``nu`` per coordinate), then recenter."""
    if nu < 0:
        raise ContractViolation("nu must be nonnegative")
    noisy = X.points + _rng(seed).normal(0.0, nu, size=X.points.shape) if nu > 0 else X.points
    noisy = noisy - noisy.mean(axis=0)
    return X.derive(noisy, {"kind": "perturb", "nu": nu, "seed": seed, "rng": RNG_ALGORITHM})


def center_and_unitbox(X):
    """Subtract the mean, then divide by the max absolute entry."""
    centered = X.points - X.points.mean(axis=0)
    s = float(np.max(np.abs(centered)))
    if s == 0.0:
        raise DegenerateInputError("all points identical; cannot rescale")
    return X.derive(centered / s, {"kind": "center-unitbox", "scale": s})


def scale(X, alpha):
    """Multiply every point by ``alpha``."""
    if alpha == 0:
        raise ContractViolation("alpha must be nonzero")
    return X.derive(X.points * float(alpha), {"kind": "scale", "alpha": float(alpha)})


def translate(X, beta):
    """Shift every point by ``beta``."""
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (X.n,):
        raise ContractViolation("beta must be a length-n vector")
    return X.derive(X.points + beta, {"kind": "translate", "beta": beta.tolist()})


@dataclass
class PreprocessResult:
    """SVD split of the centered data into informative and near-null
    directions, plus the reduced coordinates ``Y`` = centered X times V_F
    (None when every direction is discarded)."""

    U_F: np.ndarray
    U_G: np.ndarray
    V_F: np.ndarray
    V_G: np.ndarray
    Y: PointSet | None
    mean: np.ndarray
    singular_values: np.ndarray

    @property
    def fully_degenerate(self):
        return self.V_F.shape[1] == 0


def svd_preprocess(X, epsilon):
    """Center, SVD, and split singular directions at ``epsilon``.

    Columns of V_F (singular value > epsilon) define reduced coordinates in
    which a fit sees fewer variables; columns of V_G give linear polynomials
    (x - mean) @ V_G whose evaluation norms on X are exactly the discarded
    singular values, i.e. epsilon-vanishing linear forms.
    """
    mean = X.points.mean(axis=0)
    X0 = X.points - mean
    U, s, Vt = np.linalg.svd(X0, full_matrices=True)
    n = X.n
    sigma = np.zeros(n)
    sigma[: s.shape[0]] = s
    k = int(np.count_nonzero(sigma > epsilon))
    V = Vt.T
    # Fully degenerate data leaves no coordinates to fit in; Y is then None.
    Y = X.derive(X0 @ V[:, :k], {"kind": "svd-reduce", "kept": k}) if k else None
    return PreprocessResult(
        U_F=U[:, :k],
        U_G=U[:, k:],
        V_F=V[:, :k],
        V_G=V[:, k:],
        Y=Y,
        mean=mean,
        singular_values=sigma,
    )


# ---------------------------------------------------------------------------
# Point-set files: CSV with an x1..xn header, or JSON with points+provenance.
# ---------------------------------------------------------------------------


def save_points(X, path):
    path = Path(path)
    if path.suffix.lower() == ".json":
        payload = {
            "points": X.points.tolist(),
            "provenance": list(X.provenance),
        }
        path.write_text(json.dumps(payload, indent=2) + "\n")
        return
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{i + 1}" for i in range(X.n)])
        writer.writerows(X.points.tolist())


def load_points(path):
    path = Path(path)
    if not path.exists():
        raise ContractViolation(f"points file not found: {path}")
    if path.suffix.lower() == ".json":
        try:
            payload = json.loads(path.read_text())
            return PointSet(payload["points"], tuple(payload.get("provenance", ())))
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise ContractViolation(f"malformed points JSON: {exc}") from exc
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        if len(rows) < 2:
            raise ContractViolation("points CSV needs a header and at least one row")
        data = [[float(v) for v in row] for row in rows[1:] if row]
        return PointSet(data, ({"kind": "file", "path": str(path)},))
    except ValueError as exc:
        raise ContractViolation(f"malformed points CSV: {exc}") from exc
