"""Basis reduction and variety-dimension estimation."""

import numpy as np

from conftest import generic_points, rng_for
from mavik.coefficients import expand
from mavik.core import Basis, PointSet, linear_combine, multiply, variable_poly
from mavik.engine import EngineConfig, NormalizationMode, fit
from mavik.postprocess import estimate_dimension, reduce_basis

GRAD = NormalizationMode.gradient()
CIRCLE4 = PointSet([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])


def circle_points(count=40, seed=0):
    theta = rng_for(seed).uniform(0.0, 2 * np.pi, size=count)
    return PointSet(np.column_stack([np.cos(theta), np.sin(theta)]))


def coeff_vector(poly, monomials):
    cv = expand(poly)
    return np.array([cv.terms.get(m, 0.0) for m in monomials])


class TestReduceBasis:
    def test_circle4_keeps_the_two_degree2_generators(self):
        basis, _ = fit(CIRCLE4, EngineConfig(epsilon=1e-8, mode=GRAD))
        report = reduce_basis(basis, CIRCLE4, threshold=1e-6)
        assert len(report.kept) == 2
        assert sorted(p.degree for p in report.kept) == [2, 2]
        assert all(p.degree == 3 for p, _ in report.removed)

        # kept members span {x^2 + y^2 - 1, x y} in coefficient space
        monomials = [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]
        targets = np.array(
            [[-1.0, 0.0, 0.0, 1.0, 0.0, 1.0], [0.0, 0.0, 0.0, 0.0, 1.0, 0.0]]
        )
        for p in report.kept:
            vec = coeff_vector(p, monomials)
            vec = vec / np.linalg.norm(vec)
            sol, *_ = np.linalg.lstsq(targets.T, vec, rcond=None)
            assert np.linalg.norm(vec - targets.T @ sol) < 1e-8

    def test_singleton_kept(self):
        X = circle_points(20, seed=1)
        basis, _ = fit(X, EngineConfig(epsilon=1e-6, mode=GRAD, d_max=1))
        assert len(basis.g_polys()) == 1
        report = reduce_basis(basis, X, threshold=1e-6)
        assert len(report.kept) == 1 and not report.removed

    def test_planted_composite_removed_with_zero_residual(self):
        basis, _ = fit(CIRCLE4, EngineConfig(epsilon=1e-8, mode=GRAD))
        g1, g2 = basis.G[2]
        x = variable_poly(0, CIRCLE4)
        y = variable_poly(1, CIRCLE4)
        composite = linear_combine([multiply(x, g1), multiply(y, g2)], [1.0, 1.0])
        stack = Basis(
            F=basis.F[:3],
            G=[[], [], [g1, g2], [composite]],
            extents=[np.zeros(0), np.zeros(0), basis.extents[2], np.zeros(1)],
        )
        report = reduce_basis(stack, CIRCLE4, threshold=1e-6)
        assert [p.degree for p in report.kept] == [2, 2]
        assert len(report.removed) == 1
        assert report.removed[0][1] < 1e-10

    def test_soundness_no_removal_above_threshold(self):
        X = generic_points(30, 2, seed=2)
        basis, _ = fit(X, EngineConfig(epsilon=1e-6, mode=GRAD))
        report = reduce_basis(basis, X, threshold=1e-6)
        for _, max_resid in report.removed:
            assert max_resid <= 1e-6

    def test_order_stable_under_same_degree_permutation(self):
        basis, _ = fit(CIRCLE4, EngineConfig(epsilon=1e-8, mode=GRAD))
        flipped = Basis(
            F=basis.F,
            G=[list(s) for s in basis.G],
            extents=basis.extents,
        )
        flipped.G[3] = flipped.G[3][::-1]
        base = reduce_basis(basis, CIRCLE4, threshold=1e-6)
        perm = reduce_basis(flipped, CIRCLE4, threshold=1e-6)
        assert len(base.kept) == len(perm.kept)
        assert {id(p) for p in base.kept} == {id(p) for p in perm.kept}

    def test_idempotent(self):
        X = circle_points(25, seed=3)
        basis, _ = fit(X, EngineConfig(epsilon=1e-6, mode=GRAD))
        first = reduce_basis(basis, X, threshold=1e-6)
        again = reduce_basis(first.kept, X, threshold=1e-6)
        assert not again.removed
        assert len(again.kept) == len(first.kept)

    def test_empty_basis(self):
        report = reduce_basis([], CIRCLE4, threshold=1e-6)
        assert report.kept == [] and report.removed == []


class TestEstimateDimension:
    def test_generic_zero_dimensional(self):
        for dim, seed in ((2, 0), (3, 1)):
            X = generic_points(50, dim, seed=seed)
            basis, _ = fit(X, EngineConfig(epsilon=1e-6, mode=GRAD))
            assert estimate_dimension(basis, X) == (0, 0)

    def test_single_circle_generator(self):
        X = circle_points(30, seed=4)
        basis, _ = fit(X, EngineConfig(epsilon=1e-6, mode=GRAD, d_max=1))
        assert estimate_dimension(basis, X) == (1, 1)

    def test_redundant_members_do_not_change_estimate(self):
        # cap the fit below the degree where the finite sample's own
        # zero-dimensional ideal appears; the extra strata are then all
        # multiples of the circle and leave the per-point ranks at 1
        X = circle_points(30, seed=5)
        basis, _ = fit(X, EngineConfig(epsilon=1e-6, mode=GRAD, max_degree=6))
        assert sum(len(s) for s in basis.G) > 1
        assert estimate_dimension(basis, X) == (1, 1)

    def test_empty_basis_returns_ambient(self):
        X = generic_points(5, 3, seed=6)
        assert estimate_dimension([], X) == (3, 3)
