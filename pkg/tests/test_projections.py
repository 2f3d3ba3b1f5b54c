"""Step directions and epsilon-ball projections."""

import numpy as np
import pytest

from capcloak.attacks import clamp_pixels, perturbation_norm, project, step_direction
from capcloak.exceptions import ConfigError, ValidationError

from oracles import grid_project_l1, qp_project


class TestStepDirection:
    def test_linf_is_signed(self):
        g = np.array([0.3, -2.0, 0.0])
        np.testing.assert_array_equal(
            step_direction(g, "linf", 0.1), [0.1, -0.1, 0.0]
        )

    def test_l2_is_normalized_gradient(self):
        g = np.array([3.0, 4.0])
        np.testing.assert_allclose(
            step_direction(g, "l2", 1.0), [0.6, 0.8], atol=1e-15
        )

    def test_l1_moves_single_steepest_coordinate(self):
        g = np.array([0.2, -0.9, 0.5])
        np.testing.assert_array_equal(
            step_direction(g, "l1", 0.5), [0.0, -0.5, 0.0]
        )

    def test_l1_tie_breaks_to_lowest_flat_index(self):
        g = np.array([[0.7, -0.7], [0.7, 0.1]])
        step = step_direction(g, "l1", 0.3)
        expected = np.zeros((2, 2))
        expected[0, 0] = 0.3
        np.testing.assert_array_equal(step, expected)

    @pytest.mark.parametrize("norm", ["linf", "l1", "l2"])
    def test_zero_gradient_zero_step(self, norm):
        step = step_direction(np.zeros((2, 3)), norm, 0.5)
        np.testing.assert_array_equal(step, np.zeros((2, 3)))

    @pytest.mark.parametrize("norm", ["l1", "l2"])
    def test_step_has_norm_alpha(self, norm):
        rng = np.random.default_rng(0)
        for _ in range(10):
            g = rng.standard_normal(12)
            step = step_direction(g, norm, 0.25)
            assert perturbation_norm(step, norm) == pytest.approx(0.25)

    def test_non_finite_gradient_rejected(self):
        with pytest.raises(ValidationError, match="non-finite"):
            step_direction(np.array([1.0, np.nan]), "linf", 0.1)

    def test_unknown_norm(self):
        with pytest.raises(ConfigError, match="unknown norm"):
            step_direction(np.ones(2), "l3", 0.1)


class TestProject:
    def test_linf_clips_coordinates(self):
        d = np.array([0.5, -0.3, 0.1])
        np.testing.assert_array_equal(
            project(d, "linf", 0.2), [0.2, -0.2, 0.1]
        )

    def test_l2_rescales_onto_sphere(self):
        d = np.array([0.6, 0.8])
        np.testing.assert_allclose(project(d, "l2", 0.5), [0.3, 0.4], atol=1e-15)

    def test_l1_soft_thresholds(self):
        # theta = 0.2: (0.5, -0.3, 0.1) -> (0.3, -0.1, 0.0), sum = 0.4.
        d = np.array([0.5, -0.3, 0.1])
        np.testing.assert_allclose(
            project(d, "l1", 0.4), [0.3, -0.1, 0.0], atol=1e-12
        )

    @pytest.mark.parametrize("norm", ["linf", "l1", "l2"])
    def test_identity_inside_ball(self, norm):
        d = np.array([0.01, -0.02, 0.005])
        np.testing.assert_array_equal(project(d, norm, 10.0), d)

    @pytest.mark.parametrize("norm", ["linf", "l1", "l2"])
    def test_idempotent(self, norm):
        rng = np.random.default_rng(4)
        for _ in range(20):
            d = rng.standard_normal(9)
            once = project(d, norm, 0.7)
            twice = project(once, norm, 0.7)
            np.testing.assert_allclose(twice, once, atol=1e-9)

    @pytest.mark.parametrize("norm", ["linf", "l1", "l2"])
    def test_result_is_feasible(self, norm):
        rng = np.random.default_rng(5)
        for _ in range(50):
            d = 3.0 * rng.standard_normal(rng.integers(2, 20))
            eps = float(rng.uniform(0.1, 2.0))
            assert perturbation_norm(project(d, norm, eps), norm) <= eps + 1e-9

    def test_shape_preserved(self):
        d = np.ones((2, 3, 3))
        for norm in ("linf", "l1", "l2"):
            assert project(d, norm, 0.5).shape == d.shape

    def test_epsilon_must_be_positive(self):
        with pytest.raises(ValidationError, match="epsilon"):
            project(np.ones(3), "l2", 0.0)

    def test_non_finite_delta_rejected(self):
        with pytest.raises(ValidationError, match="non-finite"):
            project(np.array([np.inf, 0.0]), "l1", 1.0)


class TestProjectionOptimality:
    """The projection must be the closest feasible point, not merely feasible."""

    @pytest.mark.parametrize("norm", ["l1", "l2"])
    def test_closer_than_random_feasible_points(self, norm):
        rng = np.random.default_rng(8)
        for trial in range(20):
            dim = int(rng.integers(2, 17))
            d = 2.0 * rng.standard_normal(dim)
            eps = float(rng.uniform(0.2, 1.5))
            projected = project(d, norm, eps)
            base = float(np.linalg.norm(projected - d))
            candidates = rng.standard_normal((1000, dim))
            if norm == "l2":
                norms = np.linalg.norm(candidates, axis=1, keepdims=True)
            else:
                norms = np.abs(candidates).sum(axis=1, keepdims=True)
            candidates = candidates / norms * eps * rng.uniform(
                0.0, 1.0, size=(1000, 1)
            )
            distances = np.linalg.norm(candidates - d, axis=1)
            assert base <= distances.min() + 1e-9

    def test_l1_matches_qp_oracle(self):
        rng = np.random.default_rng(13)
        for _ in range(10):
            dim = int(rng.integers(2, 10))
            d = 2.0 * rng.standard_normal(dim)
            eps = float(rng.uniform(0.3, 1.5))
            ours = project(d, "l1", eps)
            reference = qp_project(d, "l1", eps)
            np.testing.assert_allclose(ours, reference, atol=1e-5)

    def test_l1_matches_grid_oracle(self):
        rng = np.random.default_rng(14)
        for _ in range(5):
            d = 2.0 * rng.standard_normal(4)
            eps = 0.8
            ours = project(d, "l1", eps)
            reference = grid_project_l1(d, eps)
            np.testing.assert_allclose(ours, reference, atol=1e-3)


class TestClampAndNorms:
    def test_clamp_examples(self):
        np.testing.assert_array_equal(
            clamp_pixels(np.array([-0.1, 0.5, 1.3])), [0.0, 0.5, 1.0]
        )

    def test_clamp_idempotent(self):
        rng = np.random.default_rng(1)
        x = rng.standard_normal((4, 4, 3)) * 2
        once = clamp_pixels(x)
        np.testing.assert_array_equal(clamp_pixels(once), once)

    def test_perturbation_norm_values(self):
        d = np.array([[3.0, -4.0], [0.0, 0.0]])
        assert perturbation_norm(d, "linf") == 4.0
        assert perturbation_norm(d, "l1") == 7.0
        assert perturbation_norm(d, "l2") == 5.0

    def test_clamp_toward_feasible_interval_shrinks_perturbation(self):
        # Clipping image+delta into [0, 1] can only reduce |delta| per
        # coordinate when the clean pixel already lies in [0, 1].
        rng = np.random.default_rng(2)
        for _ in range(50):
            image = rng.uniform(size=12)
            delta = rng.standard_normal(12)
            clipped = np.clip(image + delta, 0.0, 1.0) - image
            assert np.all(np.abs(clipped) <= np.abs(delta) + 1e-15)
