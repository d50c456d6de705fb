"""The degree-incremental fit: classification, normalization modes,
termination rules, replay, and the consistency/robustness guarantees."""

import numpy as np
import pytest

from conftest import fd_gradient, generic_points, rng_for
from mavik.core import PointSet, variables
from mavik.datasets import scale, translate
from mavik.engine import (
    EngineConfig,
    NormalizationMode,
    check_termination_dimension,
    evaluate,
    fit,
    normalization_gram,
)
from mavik.errors import ContractViolation, ResourceLimitError
from mavik.coefficients import expand_many

GRAD = NormalizationMode.gradient()
CIRCLE4 = PointSet([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])


def circle_points(count=40, seed=0):
    theta = rng_for(seed).uniform(0.0, 2 * np.pi, size=count)
    return PointSet(np.column_stack([np.cos(theta), np.sin(theta)]))


class TestFitSmall:
    def test_single_point_terminates_at_degree_one(self):
        X = PointSet([[0.3, -0.7]])
        basis, report = fit(X, EngineConfig(epsilon=0.0, mode=GRAD))
        assert report.f_counts == [1, 0]
        assert report.g_counts == [0, 2]
        assert report.termination == "f-empty"

    def test_circle4_gradient_profile(self):
        basis, report = fit(CIRCLE4, EngineConfig(epsilon=1e-8, mode=GRAD))
        assert report.g_counts == [0, 0, 2, 2]
        assert report.g_total == 4

    def test_circle4_vca_without_dedup_keeps_spurious_member(self):
        _, report = fit(
            CIRCLE4,
            EngineConfig(
                epsilon=1e-8, mode=NormalizationMode.vca_baseline(), dedup_degree2=False
            ),
        )
        assert report.g_total == 5

    def test_generic_3d_profile(self):
        X = generic_points(50, 3, seed=0)
        _, report = fit(X, EngineConfig(epsilon=1e-6, mode=GRAD))
        assert report.g_counts == [0, 0, 0, 0, 0, 6, 34]
        assert report.g_total == 40

    def test_empty_epsilon_rejected(self):
        with pytest.raises(ContractViolation):
            fit(CIRCLE4, EngineConfig(epsilon=-1.0, mode=GRAD))

    def test_coefficient_mode_term_cap(self):
        X = generic_points(30, 4, seed=1)
        cfg = EngineConfig(
            epsilon=1e-6, mode=NormalizationMode.coefficient(), term_cap=3
        )
        with pytest.raises(ResourceLimitError):
            fit(X, cfg)

    def test_deterministic_rerun(self):
        X = generic_points(25, 3, seed=2)
        b1, r1 = fit(X, EngineConfig(epsilon=1e-7, mode=GRAD))
        b2, r2 = fit(X, EngineConfig(epsilon=1e-7, mode=GRAD))
        assert r1.g_counts == r2.g_counts
        for p1, p2 in zip(b1.g_polys(), b2.g_polys()):
            np.testing.assert_array_equal(p1.eval, p2.eval)
            np.testing.assert_array_equal(p1.grad, p2.grad)


class TestNormalizationGram:
    def test_gradient_gram_of_coordinates_is_count_times_identity(self):
        X = generic_points(7, 2, seed=3)
        N = normalization_gram(variables(X), NormalizationMode.gradient(z=1.0))
        np.testing.assert_allclose(N, len(X) * np.eye(2), atol=1e-12)

    def test_z_scaling(self):
        X = generic_points(5, 2, seed=4)
        N1 = normalization_gram(variables(X), NormalizationMode.gradient(z=1.0))
        N2 = normalization_gram(variables(X), NormalizationMode.gradient(z=2.0))
        np.testing.assert_allclose(N2, N1 / 4.0)

    def test_coefficient_gram_example(self):
        from mavik.core import linear_combine

        X = generic_points(4, 2, seed=5)
        x, y = variables(X)
        C = [linear_combine([x, y], [1.0, 1.0]), linear_combine([x, y], [1.0, -1.0])]
        N = normalization_gram(C, NormalizationMode.coefficient())
        np.testing.assert_allclose(N, [[2.0, 0.0], [0.0, 2.0]])

    def test_vca_is_identity(self):
        X = generic_points(4, 2, seed=6)
        N = normalization_gram(variables(X), NormalizationMode.vca_baseline())
        np.testing.assert_array_equal(N, np.eye(2))

    def test_gradient_gram_matches_finite_difference_stacks(self):
        X = generic_points(8, 2, seed=7)
        basis, _ = fit(X, EngineConfig(epsilon=1e-9, mode=GRAD, max_degree=2))
        stratum = basis.F[2]
        N = normalization_gram(stratum, NormalizationMode.gradient(z=1.0))
        stacks = [fd_gradient(p, X.points) for p in stratum]
        oracle = np.array(
            [[np.sum(a * b) for b in stacks] for a in stacks]
        )
        np.testing.assert_allclose(N, oracle, rtol=1e-5, atol=1e-5)


class TestEvaluate:
    def test_replay_on_training_points_reproduces_stored(self):
        X = generic_points(20, 3, seed=8)
        basis, _ = fit(X, EngineConfig(epsilon=1e-7, mode=GRAD))
        F_mat, G_mat = evaluate(basis, X)
        np.testing.assert_allclose(
            F_mat, np.column_stack([p.eval for p in basis.f_polys()]), rtol=1e-9, atol=1e-12
        )
        np.testing.assert_allclose(
            G_mat, np.column_stack([p.eval for p in basis.g_polys()]), rtol=1e-9, atol=1e-12
        )

    def test_constant_column(self):
        X = PointSet([[0.5, 0.5]])
        basis, report = fit(X, EngineConfig(epsilon=0.0, mode=GRAD, m_constant=3.0))
        F_mat, _ = evaluate(basis, PointSet([[9.0, -4.0], [1.0, 2.0]]))
        np.testing.assert_allclose(F_mat[:, 0], [3.0, 3.0])

    def test_replay_matches_expansion_on_new_points(self):
        X = generic_points(12, 2, seed=9)
        basis, _ = fit(X, EngineConfig(epsilon=1e-7, mode=GRAD, max_degree=4))
        polys = basis.f_polys() + basis.g_polys()
        vecs = expand_many(polys)
        probe = rng_for(10).uniform(-1, 1, size=(5, 2))
        F_mat, G_mat = evaluate(basis, PointSet(probe))
        stacked = np.column_stack([F_mat, G_mat])
        for j, cv in enumerate(vecs):
            scale_j = max(1.0, np.abs(stacked[:, j]).max())
            np.testing.assert_allclose(
                stacked[:, j], cv.evaluate(probe), rtol=1e-9, atol=1e-9 * scale_j
            )

    def test_dimension_mismatch(self):
        basis, _ = fit(CIRCLE4, EngineConfig(epsilon=1e-8, mode=GRAD))
        with pytest.raises(ContractViolation):
            evaluate(basis, PointSet([[1.0, 2.0, 3.0]]))


class TestDimensionTermination:
    def test_zero_targets_never_fire(self):
        X = circle_points(30, seed=11)
        _, full = fit(X, EngineConfig(epsilon=1e-6, mode=GRAD))
        _, zeroed = fit(X, EngineConfig(epsilon=1e-6, mode=GRAD, d_max=0, d_min=0))
        assert zeroed.g_counts == full.g_counts
        assert zeroed.termination == full.termination == "f-empty"

    def test_circle_with_dmax_one_stops_at_degree_two(self):
        X = circle_points(30, seed=12)
        basis, report = fit(X, EngineConfig(epsilon=1e-6, mode=GRAD, d_max=1))
        assert report.termination == "dimension-rule"
        assert len(report.g_counts) - 1 == 2
        assert report.g_counts[2] == 1

    def test_empty_basis_is_false(self):
        X = circle_points(10, seed=13)
        assert not check_termination_dimension([], X, d_max=1, d_min=None)

    def test_rejects_out_of_range_targets(self):
        with pytest.raises(ContractViolation):
            fit(CIRCLE4, EngineConfig(epsilon=1e-8, mode=GRAD, d_max=5))


class TestStructuralInvariants:
    def test_f_strata_evaluations_orthogonal(self):
        X = generic_points(30, 2, seed=14)
        basis, _ = fit(X, EngineConfig(epsilon=1e-7, mode=GRAD))
        E = np.column_stack([p.eval for p in basis.f_polys()])
        gram = E.T @ E
        off = gram - np.diag(np.diag(gram))
        assert np.max(np.abs(off)) < 1e-8 * max(1.0, np.diag(gram).max())

    def test_extent_bookkeeping(self):
        X = generic_points(30, 3, seed=15)
        basis, report = fit(X, EngineConfig(epsilon=1e-6, mode=GRAD))
        for stratum, extents in zip(basis.G, basis.extents):
            for p, e in zip(stratum, extents):
                assert np.linalg.norm(p.eval) == pytest.approx(e, abs=1e-8)
        # recorded extents agree with the eigenvalue square roots to within
        # the Gram matrix's resolution
        for lam, norms in zip(report.spectra, report.extents):
            scale = max(1.0, float(norms.max()))
            np.testing.assert_allclose(np.sqrt(lam), norms, atol=1e-7 * scale)

    def test_gradient_mode_retained_polys_have_norm_z(self):
        X = generic_points(25, 2, seed=16)
        for z in (1.0, 5.0):
            basis, _ = fit(X, EngineConfig(epsilon=1e-6, mode=NormalizationMode.gradient(z=z)))
            for p in basis.f_polys()[1:] + basis.g_polys():
                assert np.linalg.norm(p.grad) == pytest.approx(z, rel=1e-6)

    def test_intra_degree_gradient_independence(self):
        # within one vanishing stratum there is always a point where two
        # members' gradients are linearly independent
        X = generic_points(30, 3, seed=17)
        basis, _ = fit(X, EngineConfig(epsilon=1e-6, mode=GRAD))
        for stratum in basis.G:
            for i in range(len(stratum)):
                for j in range(i + 1, len(stratum)):
                    gi, gj = stratum[i].grad, stratum[j].grad
                    ranks = [
                        np.linalg.matrix_rank(np.stack([gi[k], gj[k]]), tol=1e-8)
                        for k in range(len(X))
                    ]
                    assert max(ranks) == 2

    def test_size_bounds_on_generic_runs(self):
        from math import comb

        for dim, seed in ((2, 0), (3, 1), (4, 2)):
            X = generic_points(50, dim, seed=seed)
            _, report = fit(X, EngineConfig(epsilon=1e-6, mode=GRAD))
            assert report.g_total <= dim * (50 - dim)
            for t in range(len(report.f_counts)):
                assert sum(report.f_counts[: t + 1]) <= comb(dim + t, dim)


class TestConsistency:
    def test_translation_consistency(self):
        X = generic_points(20, 2, seed=18, centered=True)
        beta = np.array([0.7, -1.3])
        cfg = EngineConfig(epsilon=1e-9, mode=GRAD, m_constant=1.0)
        b0, r0 = fit(X, cfg)
        b1, r1 = fit(translate(X, -beta), cfg)
        assert r0.g_counts == r1.g_counts and r0.f_counts == r1.f_counts
        for p0, p1 in zip(b0.g_polys(), b1.g_polys()):
            np.testing.assert_allclose(p1.eval, p0.eval, atol=1e-8)

    def test_coefficient_and_gradient_profiles_agree_on_random_instances(self):
        # the two data-aware normalizations retain the same candidate span
        # (directions with polynomial content) and classify by the same
        # evaluation norms, so their configurations coincide
        rng = rng_for(60)
        for trial in range(8):
            dim = int(rng.integers(2, 4))
            count = int(rng.integers(8, 22))
            X = PointSet(rng.uniform(-1, 1, size=(count, dim)))
            _, r_grad = fit(X, EngineConfig(epsilon=1e-7, mode=GRAD))
            _, r_coeff = fit(
                X, EngineConfig(epsilon=1e-7, mode=NormalizationMode.coefficient())
            )
            assert r_coeff.g_counts == r_grad.g_counts
            assert r_coeff.f_counts == r_grad.f_counts

    def test_translation_profiles_hold_in_every_mode(self):
        # which candidate combinations vanish is decided by the evaluation
        # nullspace, which mean subtraction makes translation-invariant, so
        # the degree profiles agree in every normalization; full evaluation
        # matrices additionally agree in vca/gradient mode where the
        # normalization matrices themselves are translation-invariant
        X = generic_points(15, 2, seed=30, centered=True)
        beta = np.array([-0.4, 2.2])
        for mode in (
            NormalizationMode.vca_baseline(),
            NormalizationMode.coefficient(),
            NormalizationMode.gradient(),
        ):
            cfg = EngineConfig(epsilon=1e-9, mode=mode, m_constant=1.0)
            _, r0 = fit(X, cfg)
            _, r1 = fit(translate(X, -beta), cfg)
            assert r1.g_counts == r0.g_counts and r1.f_counts == r0.f_counts

    def test_max_degree_cap(self):
        X = generic_points(40, 2, seed=31)
        _, report = fit(X, EngineConfig(epsilon=1e-7, mode=GRAD, max_degree=3))
        assert report.termination == "max-degree"
        assert len(report.g_counts) - 1 == 3

    def test_scaling_consistency(self):
        X = generic_points(20, 3, seed=19, centered=True)
        eps = 1e-9
        b0, r0 = fit(X, EngineConfig(epsilon=eps, mode=GRAD))
        for alpha in (0.1, 10.0):
            b1, r1 = fit(scale(X, alpha), EngineConfig(epsilon=abs(alpha) * eps, mode=GRAD))
            assert r1.g_counts == r0.g_counts and r1.f_counts == r0.f_counts
            for p0, p1 in zip(b0.g_polys(), b1.g_polys()):
                np.testing.assert_allclose(
                    p1.eval, alpha * p0.eval, atol=1e-7 * abs(alpha)
                )

    def test_perturbation_bound_spot_check(self):
        rng = rng_for(20)
        X_star = generic_points(25, 2, seed=21)
        delta = 1e-3
        dirs = rng.normal(size=X_star.points.shape)
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        noise = dirs * (delta * rng.uniform(0.1, 1.0, size=(len(X_star), 1)))
        X = PointSet(X_star.points + noise)
        basis, _ = fit(X, EngineConfig(epsilon=1e-6, mode=NormalizationMode.gradient(z=1.0)))
        _, G_star = evaluate(basis, X_star)
        for j, g in enumerate(basis.g_polys()):
            gap = np.linalg.norm(g.eval - G_star[:, j])
            assert gap <= 1.5 * delta
