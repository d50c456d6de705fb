"""Shared oracles and builders for the test suite.

The oracles here are deliberately independent of the code paths they check:
finite differences go through provenance replay on displaced points, the
dense least-squares oracle uses a QR factorization, and random polynomials
are built directly from construction-tree primitives.
"""

import numpy as np
import pytest

from mavik.core import PointSet, constant_poly, linear_combine, multiply, variable_poly


def rng_for(seed):
    return np.random.Generator(np.random.Philox(seed))


def generic_points(count, dim, seed, centered=False):
    pts = rng_for(seed).uniform(-1.0, 1.0, size=(count, dim))
    if centered:
        pts = pts - pts.mean(axis=0)
    return PointSet(pts)


def fd_gradient(poly, points, h=1e-6):
    """Central-difference gradient of a polynomial via provenance replay."""
    pts = np.asarray(points, dtype=float)
    m, n = pts.shape
    grad = np.zeros((m, n))
    for k in range(n):
        step = np.zeros(n)
        step[k] = h
        plus, _ = poly.replay(pts + step)
        minus, _ = poly.replay(pts - step)
        grad[:, k] = (plus - minus) / (2 * h)
    return grad


def random_linear(X, rng, with_constant=True):
    parts = [variable_poly(k, X) for k in range(X.n)]
    weights = list(rng.normal(size=X.n))
    if with_constant:
        parts.append(constant_poly(1.0, X))
        weights.append(rng.normal())
    return linear_combine(parts, weights)


def random_poly(X, degree, rng):
    """Random polynomial of exactly the given construction degree."""
    if degree == 0:
        return constant_poly(rng.normal() or 1.0, X)
    if degree == 1:
        return random_linear(X, rng)
    product = multiply(random_linear(X, rng), random_poly(X, degree - 1, rng))
    lower = random_poly(X, rng.integers(0, degree), rng)
    return linear_combine([product, lower], [1.0, rng.normal()])


@pytest.fixture
def rng():
    return rng_for(12345)
