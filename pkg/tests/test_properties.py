"""Property-based invariants (projection geometry, metric bounds, rates)."""

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from capcloak.attacks import NORMS, clamp_pixels, perturbation_norm, project, step_direction
from capcloak.metrics.image import PSNR_CAP_DB, mae, mse, psnr, ssim
from capcloak.metrics.lexicon import STOPWORDS, normalize_caption
from capcloak.metrics.text import (
    DIRECT_MATCH,
    NOT_FOUND,
    PresenceVerdict,
    SampleEvaluation,
    corpus_rates,
    object_present,
)

DELTA_SHAPES = st.tuples(
    st.integers(1, 4), st.integers(1, 4), st.just(3)
)
DELTAS = arrays(
    np.float64, DELTA_SHAPES,
    elements=st.floats(-2.0, 2.0, allow_nan=False, width=64),
)
EPSILONS = st.floats(0.01, 1.5, allow_nan=False)
SEEDS = st.integers(0, 2**32 - 1)


def random_pair(seed, size=12):
    rng = np.random.default_rng(seed)
    a = rng.uniform(0.0, 1.0, (size, size, 3))
    b = np.clip(a + rng.normal(0.0, 0.05, a.shape), 0.0, 1.0)
    return a, b


class TestProjectionProperties:
    @pytest.mark.parametrize("norm", NORMS)
    @given(delta=DELTAS, epsilon=EPSILONS)
    def test_projection_lands_in_ball(self, norm, delta, epsilon):
        projected = project(delta, norm, epsilon)
        assert perturbation_norm(projected, norm) <= epsilon + 1e-9

    @pytest.mark.parametrize("norm", NORMS)
    @given(delta=DELTAS, epsilon=EPSILONS)
    def test_projection_idempotent(self, norm, delta, epsilon):
        once = project(delta, norm, epsilon)
        twice = project(once, norm, epsilon)
        np.testing.assert_allclose(twice, once, atol=1e-9)

    @pytest.mark.parametrize("norm", NORMS)
    @given(delta=DELTAS, epsilon=EPSILONS)
    def test_interior_points_untouched(self, norm, delta, epsilon):
        size = perturbation_norm(delta, norm)
        assume(size > 1e-9)
        inside = delta * (0.5 * epsilon / size)
        np.testing.assert_array_equal(project(inside, norm, epsilon), inside)

    @pytest.mark.parametrize("norm", NORMS)
    @given(delta=DELTAS, epsilon=EPSILONS)
    def test_projection_never_moves_farther_than_origin(self, norm, delta,
                                                        epsilon):
        # The origin is always feasible, so the nearest feasible point
        # can be at most ||delta|| away.
        projected = project(delta, norm, epsilon)
        assert np.linalg.norm(projected - delta) <= (
            np.linalg.norm(delta) + 1e-12
        )


class TestStepDirectionProperties:
    @given(delta=DELTAS, alpha=st.floats(0.001, 2.0, allow_nan=False))
    def test_linf_components_are_zero_or_alpha(self, delta, alpha):
        step = step_direction(delta, "linf", alpha)
        magnitudes = np.unique(np.abs(step))
        assert set(magnitudes.tolist()) <= {0.0, alpha}

    @given(delta=DELTAS, alpha=st.floats(0.001, 2.0, allow_nan=False))
    def test_l2_step_has_norm_alpha(self, delta, alpha):
        assume(np.linalg.norm(delta) > 1e-6)
        step = step_direction(delta, "l2", alpha)
        assert np.linalg.norm(step) == pytest.approx(alpha, rel=1e-9)

    @given(delta=DELTAS, alpha=st.floats(0.001, 2.0, allow_nan=False))
    def test_l1_step_touches_one_coordinate(self, delta, alpha):
        assume(np.max(np.abs(delta)) > 1e-6)
        step = step_direction(delta, "l1", alpha)
        nonzero = np.flatnonzero(step)
        assert nonzero.size == 1
        assert abs(step.flat[nonzero[0]]) == pytest.approx(alpha, rel=1e-12)

    @pytest.mark.parametrize("norm", NORMS)
    @given(delta=DELTAS, alpha=st.floats(0.001, 2.0, allow_nan=False))
    def test_step_moves_uphill_on_linear_objective(self, norm, delta, alpha):
        assume(np.max(np.abs(delta)) > 1e-6)
        step = step_direction(delta, norm, alpha)
        assert float(np.sum(step * delta)) >= 0.0


class TestClampProperties:
    @given(delta=DELTAS)
    def test_clamp_bounded_and_idempotent(self, delta):
        clamped = clamp_pixels(delta)
        assert np.all(clamped >= 0.0)
        assert np.all(clamped <= 1.0)
        np.testing.assert_array_equal(clamp_pixels(clamped), clamped)

    @given(seed=SEEDS)
    def test_clamp_never_grows_perturbation(self, seed):
        rng = np.random.default_rng(seed)
        image = rng.uniform(0.0, 1.0, (4, 4, 3))
        delta = rng.normal(0.0, 0.3, image.shape)
        clamped_delta = clamp_pixels(image + delta) - image
        assert np.all(np.abs(clamped_delta) <= np.abs(delta) + 1e-12)


class TestNormProperties:
    @pytest.mark.parametrize("norm", NORMS)
    @given(a=DELTAS, seed=SEEDS)
    def test_triangle_inequality(self, norm, a, seed):
        b = np.random.default_rng(seed).normal(0.0, 1.0, a.shape)
        total = perturbation_norm(a + b, norm)
        assert total <= (
            perturbation_norm(a, norm) + perturbation_norm(b, norm) + 1e-9
        )

    @pytest.mark.parametrize("norm", NORMS)
    @given(a=DELTAS, scale=st.floats(0.0, 3.0, allow_nan=False))
    def test_absolute_homogeneity(self, norm, a, scale):
        assert perturbation_norm(scale * a, norm) == pytest.approx(
            scale * perturbation_norm(a, norm), rel=1e-9, abs=1e-12
        )


class TestImageMetricProperties:
    @given(seed=SEEDS)
    def test_error_metrics_symmetric_and_nonnegative(self, seed):
        a, b = random_pair(seed, size=6)
        assert mse(a, b) == mse(b, a)
        assert mae(a, b) == mae(b, a)
        assert mse(a, b) >= 0.0
        assert mae(a, b) >= 0.0

    @given(seed=SEEDS)
    def test_psnr_capped_and_symmetric(self, seed):
        a, b = random_pair(seed, size=6)
        value = psnr(a, b)
        assert value <= PSNR_CAP_DB
        assert value == psnr(b, a)
        assert psnr(a, a) == PSNR_CAP_DB

    @settings(max_examples=25, deadline=None)
    @given(seed=SEEDS)
    def test_ssim_symmetric_bounded_and_reflexive(self, seed):
        a, b = random_pair(seed)
        value = ssim(a, b)
        assert value == ssim(b, a)
        assert -1.0 - 1e-9 <= value <= 1.0 + 1e-9
        assert ssim(a, a) == 1.0


def make_evaluation(index, removal_ok, retention_ok):
    target_verdict = PresenceVerdict(
        present=not removal_ok,
        mechanism=DIRECT_MATCH if not removal_ok else NOT_FOUND,
    )
    retained = ()
    if retention_ok is not None:
        retained = (
            (
                "thing",
                PresenceVerdict(
                    present=retention_ok,
                    mechanism=DIRECT_MATCH if retention_ok else NOT_FOUND,
                ),
            ),
        )
    return SampleEvaluation(
        image_ref=f"img{index}.npy", target_label="target",
        target_verdict=target_verdict, retained_verdicts=retained,
        removal_ok=removal_ok, retention_ok=retention_ok,
    )


class TestRateProperties:
    VERDICT_PATTERNS = st.lists(
        st.tuples(st.booleans(), st.sampled_from((True, False, None))),
        min_size=1, max_size=30,
    )

    @given(patterns=VERDICT_PATTERNS)
    def test_asr_bounded_by_both_rates(self, patterns):
        assume(any(r is not None for _, r in patterns))
        evaluations = [
            make_evaluation(i, removal, retention)
            for i, (removal, retention) in enumerate(patterns)
        ]
        t, r, a = corpus_rates(evaluations)
        assert 0.0 <= a <= 1.0
        assert 0.0 <= t <= 1.0
        assert 0.0 <= r <= 1.0
        assert a <= t + 1e-12
        assert a <= r + 1e-12

    @given(patterns=VERDICT_PATTERNS)
    def test_success_is_conjunction(self, patterns):
        evaluations = [
            make_evaluation(i, removal, retention)
            for i, (removal, retention) in enumerate(patterns)
        ]
        for evaluation, (removal, retention) in zip(evaluations, patterns):
            assert evaluation.success == (removal and bool(retention))


WORD_POOL = sorted(STOPWORDS)[:20] + [
    "dog", "dogs", "cat", "cats", "couch", "couches", "horse", "horses",
    "person", "people", "child", "children", "photo", "photos",
]


class TestNormalizationProperties:
    @given(words=st.lists(st.sampled_from(WORD_POOL), min_size=1, max_size=8))
    def test_normalization_idempotent(self, words):
        caption = " ".join(words)
        first = normalize_caption(caption)
        assume(len(first) > 0)
        second = normalize_caption(" ".join(first.tokens))
        assert second.tokens == first.tokens

    @given(words=st.lists(st.sampled_from(WORD_POOL), min_size=1, max_size=8))
    def test_no_stopwords_survive(self, words):
        caption = " ".join(words)
        try:
            normalized = normalize_caption(caption)
        except Exception:
            return
        for token in normalized.tokens:
            assert token not in STOPWORDS
            assert token == token.lower()


class TestPresenceThresholdProperty:
    CAPTION_WORDS = ("puppy", "kitten", "sofa", "truck", "hill", "pony")
    OBJECTS = ("dog", "cat", "couch", "vehicle", "mountain", "horse")

    @given(
        word=st.sampled_from(CAPTION_WORDS),
        obj=st.sampled_from(OBJECTS),
        low=st.floats(-1.0, 1.0, allow_nan=False),
        high=st.floats(-1.0, 1.0, allow_nan=False),
    )
    def test_presence_monotone_in_threshold(self, table, word, obj, low, high):
        if low > high:
            low, high = high, low
        caption = f"a {word} outside"
        at_high = object_present(caption, obj, table, threshold=high)
        at_low = object_present(caption, obj, table, threshold=low)
        if at_high.present:
            assert at_low.present
