"""Gradient attacks that maximize a concealment objective.

Sign convention: both attacks ASCEND the objective, so steps move along
the positive gradient.  All budgets and step sizes are in [0, 1] pixel
units; L1 and L2 norms are measured over the whole image tensor.

Attacks are estimators: construct with hyperparameters, ``fit`` against
a bundle and a loss spec (this caches the text anchors), ``transform``
an image into its adversarial counterpart.  ``run`` wraps the whole
round trip and also captions the clean and adversarial images.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from sklearn.base import BaseEstimator

from .bundles.base import caption_image, embedding_loss_gradient, encode_image
from .exceptions import ConfigError, OptimizationError, ValidationError
from .objectives import build_objective
from .records import AttackResult
from .validation import check_image

METHODS = ("fgsm", "pgd")
NORMS = ("linf", "l1", "l2")

DEFAULT_ITERATIONS = 40

# (method, norm, variant) -> (alpha, epsilon), the best-performing settings.
_DEFAULT_BUDGETS = {
    ("fgsm", "linf", "cls"): (2.0 / 255.0, 0.03),
    ("fgsm", "linf", "cap"): (2.0 / 255.0, 0.03),
    ("pgd", "l1", "cls"): (500.0, 1000.0),
    ("pgd", "l1", "cap"): (500.0, 1000.0),
    ("pgd", "l2", "cls"): (5.0, 5.0),
    ("pgd", "l2", "cap"): (5.0, 10.0),
    ("pgd", "linf", "cls"): (2.0 / 255.0, 0.02),
    ("pgd", "linf", "cap"): (2.0 / 255.0, 0.06),
}


@dataclass(frozen=True)
class AttackConfig:
    """Method, ball and budgets for one attack run.

    ``seed`` is reserved for future randomized starts; runs are
    deterministic from the clean image.
    """

    method: str
    norm: str = "linf"
    epsilon: float = 0.03
    alpha: float = 2.0 / 255.0
    iterations: int = DEFAULT_ITERATIONS
    seed: int = 0

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"unknown attack method {self.method!r}")
        if self.norm not in NORMS:
            raise ConfigError(f"unknown norm {self.norm!r}")
        for name in ("epsilon", "alpha"):
            value = getattr(self, name)
            if not math.isfinite(value) or value <= 0:
                raise ConfigError(f"{name} must be finite and positive")
        if self.iterations < 1:
            raise ConfigError("iterations must be a positive integer")
        if self.method == "fgsm":
            # The single-step method has exactly one iteration by definition.
            object.__setattr__(self, "iterations", 1)

    def to_dict(self):
        return {
            "method": self.method,
            "norm": self.norm,
            "epsilon": self.epsilon,
            "alpha": self.alpha,
            "iterations": self.iterations,
            "seed": self.seed,
        }


def default_config(method, norm, variant):
    """Best-performing (alpha, epsilon) for a method/norm/variant cell."""
    key = (method, norm, variant)
    if key not in _DEFAULT_BUDGETS:
        raise ConfigError(
            f"no default configuration for method={method!r} norm={norm!r} "
            f"variant={variant!r}"
        )
    alpha, epsilon = _DEFAULT_BUDGETS[key]
    iterations = 1 if method == "fgsm" else DEFAULT_ITERATIONS
    return AttackConfig(
        method=method, norm=norm, epsilon=epsilon, alpha=alpha,
        iterations=iterations,
    )


def clamp_pixels(image):
    """Clip into the [0, 1] pixel range; idempotent."""
    return np.clip(np.asarray(image, dtype=np.float64), 0.0, 1.0)


def perturbation_norm(delta, norm):
    """Lp norm of a perturbation measured over the whole tensor."""
    flat = np.asarray(delta, dtype=np.float64).ravel()
    if norm == "linf":
        return float(np.max(np.abs(flat))) if flat.size else 0.0
    if norm == "l1":
        return float(np.sum(np.abs(flat)))
    if norm == "l2":
        return float(np.sqrt(np.sum(flat * flat)))
    raise ConfigError(f"unknown norm {norm!r}")


def step_direction(gradient, norm, alpha):
    """Ascent step of size alpha under the geometry of the chosen ball.

    linf moves every coordinate by the gradient sign; l2 moves along the
    normalized gradient; l1 moves only the single steepest coordinate
    (ties broken by lowest flat index).  A zero gradient yields a zero
    step for every norm.
    """
    g = np.asarray(gradient, dtype=np.float64)
    if not np.all(np.isfinite(g)):
        raise ValidationError("gradient contains non-finite values")
    if norm == "linf":
        return alpha * np.sign(g)
    if norm == "l2":
        length = np.sqrt(np.sum(g * g))
        if length == 0.0:
            return np.zeros_like(g)
        return (alpha / length) * g
    if norm == "l1":
        flat = g.ravel()
        magnitude = np.abs(flat)
        if not np.any(magnitude):
            return np.zeros_like(g)
        index = int(np.argmax(magnitude))
        step = np.zeros_like(flat)
        step[index] = alpha * np.sign(flat[index])
        return step.reshape(g.shape)
    raise ConfigError(f"unknown norm {norm!r}")


def _project_l1(flat, epsilon):
    # Sort-based simplex projection: soft-threshold the magnitudes by the
    # largest theta with sum(max(|d| - theta, 0)) = epsilon, keep signs.
    magnitude = np.abs(flat)
    if magnitude.sum() <= epsilon:
        return flat
    u = np.sort(magnitude)[::-1]
    cumulative = np.cumsum(u)
    positions = np.arange(1, u.size + 1)
    rho = np.nonzero(u * positions > cumulative - epsilon)[0][-1]
    theta = (cumulative[rho] - epsilon) / (rho + 1.0)
    return np.sign(flat) * np.maximum(magnitude - theta, 0.0)


def project(delta, norm, epsilon):
    """Euclidean projection onto the epsilon-ball of the chosen norm.

    Identity whenever delta is already feasible.
    """
    d = np.asarray(delta, dtype=np.float64)
    if not np.all(np.isfinite(d)):
        raise ValidationError("delta contains non-finite values")
    if epsilon <= 0:
        raise ValidationError("epsilon must be positive")
    if norm == "linf":
        return np.clip(d, -epsilon, epsilon)
    if norm == "l2":
        length = np.sqrt(np.sum(d * d))
        if length <= epsilon:
            return d
        return (epsilon / length) * d
    if norm == "l1":
        return _project_l1(d.ravel(), epsilon).reshape(d.shape)
    raise ConfigError(f"unknown norm {norm!r}")


class BaseAttack(BaseEstimator):
    """Shared fit/transform/run plumbing for the concrete attacks."""

    def fit(self, bundle, spec):
        """Bind a bundle and loss spec; encodes the text anchors once."""
        self.bundle_ = bundle
        self.spec_ = spec
        self.objective_ = build_objective(bundle, spec)
        return self

    def _check_fitted(self):
        if not hasattr(self, "objective_"):
            raise ValidationError(
                "attack is not fitted; call fit(bundle, spec) first"
            )

    def transform(self, image):
        """Adversarial counterpart of one image under the fitted objective."""
        self._check_fitted()
        image = check_image(image)
        adversarial, _ = self._perturb(image, on_iterate=None)
        return adversarial

    def run(self, bundle, image, spec, on_iterate=None):
        """Full attack round trip on one image.

        Captions the clean image, perturbs it, captions the result, and
        packages everything with the loss trace and the configuration
        echo.  ``on_iterate(step, image, loss)`` is called after each
        update when given.
        """
        self.fit(bundle, spec)
        image = check_image(image)
        caption_before = caption_image(bundle, image)
        adversarial, trace = self._perturb(image, on_iterate)
        caption_after = caption_image(bundle, adversarial)
        config_used = dict(self.config().to_dict())
        config_used["loss"] = spec.to_dict()
        return AttackResult(
            adversarial_image=adversarial,
            generated_caption_original=caption_before,
            generated_caption_adversarial=caption_after,
            loss_trace=tuple(trace),
            config_used=config_used,
        )

    def config(self):
        raise NotImplementedError

    def _perturb(self, image, on_iterate):
        raise NotImplementedError

    def _loss_at(self, image, iteration):
        value = self.objective_.value(encode_image(self.bundle_, image))
        if not math.isfinite(value):
            raise OptimizationError(
                f"non-finite objective value at iteration {iteration}"
            )
        return value


class FastGradientSign(BaseAttack):
    """Single-step sign-gradient attack, always L-infinity bounded."""

    def __init__(self, epsilon=0.03):
        self.epsilon = epsilon

    def config(self):
        return AttackConfig(
            method="fgsm", norm="linf", epsilon=self.epsilon,
            alpha=self.epsilon, iterations=1,
        )

    def _perturb(self, image, on_iterate):
        self.config()
        gradient = embedding_loss_gradient(self.bundle_, image, self.objective_)
        adversarial = clamp_pixels(image + self.epsilon * np.sign(gradient))
        value = self._loss_at(adversarial, iteration=1)
        if on_iterate is not None:
            on_iterate(0, adversarial, value)
        return adversarial, [value]


class ProjectedGradientDescent(BaseAttack):
    """Iterative ascent with per-step ball projection and pixel clamping.

    Starts from the clean image.  Each update takes a norm-shaped step,
    projects the accumulated perturbation back onto the epsilon-ball,
    then clips pixels to [0, 1]; clipping toward an interval containing
    the clean pixel can only shrink the perturbation, so every iterate
    stays feasible for all three norms.
    """

    def __init__(self, norm="linf", epsilon=0.02, alpha=2.0 / 255.0,
                 iterations=DEFAULT_ITERATIONS, seed=0):
        self.norm = norm
        self.epsilon = epsilon
        self.alpha = alpha
        self.iterations = iterations
        self.seed = seed

    def config(self):
        return AttackConfig(
            method="pgd", norm=self.norm, epsilon=self.epsilon,
            alpha=self.alpha, iterations=self.iterations, seed=self.seed,
        )

    def _perturb(self, image, on_iterate):
        config = self.config()
        current = image.copy()
        trace = []
        for step in range(config.iterations):
            gradient = embedding_loss_gradient(
                self.bundle_, current, self.objective_
            )
            moved = current + step_direction(gradient, config.norm, config.alpha)
            delta = project(moved - image, config.norm, config.epsilon)
            current = clamp_pixels(image + delta)
            value = self._loss_at(current, iteration=step + 1)
            trace.append(value)
            if on_iterate is not None:
                on_iterate(step, current, value)
        return current, trace


def attack_from_config(config):
    """Instantiate the estimator matching an AttackConfig."""
    if config.method == "fgsm":
        if config.norm != "linf":
            raise ConfigError("fgsm is only defined for the linf ball")
        return FastGradientSign(epsilon=config.epsilon)
    return ProjectedGradientDescent(
        norm=config.norm, epsilon=config.epsilon, alpha=config.alpha,
        iterations=config.iterations, seed=config.seed,
    )


def fgsm_attack(bundle, image, spec, epsilon):
    """One-call single-step attack: clamp(image + epsilon*sign(gradient))."""
    return FastGradientSign(epsilon=epsilon).run(bundle, image, spec)


def pgd_attack(bundle, image, spec, config):
    """One-call iterative attack under the given configuration."""
    if config.method != "pgd":
        raise ConfigError(f"pgd_attack needs method 'pgd', got {config.method!r}")
    return attack_from_config(config).run(bundle, image, spec)


def scaled_config(config, epsilon):
    """Copy of a configuration with a different budget (for sweeps)."""
    return replace(config, epsilon=epsilon)
