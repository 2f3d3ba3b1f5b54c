"""Concealment objectives the attacks ascend.

Two variants share one shape, -lambda1 * (score of what must vanish)
+ lambda2 * (score of what must survive):

* ``cls`` anchors on the object labels: push down the cosine between the
  image embedding and the target label while holding up the scores of
  every other label;
* ``cap`` anchors on a caption pair: push down the score of the original
  caption and pull up the score of the target caption that omits the
  object.

Both are MAXIMIZED by the attack engine; signs here already encode that
convention.  Text anchors are encoded once when an objective is built
and reused across every attack iteration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bundles.base import (
    EmbeddingObjective,
    cosine_grad,
    cosine_similarity,
    embedding_loss_gradient,
    encode_image,
    encode_text,
)
from .exceptions import ConfigError, ValidationError

VARIANTS = ("cls", "cap")

BASELINE_KINDS = {
    # kind -> (variant, lambda1, lambda2)
    "cls_targeted": ("cls", 1.0, 0.0),
    "cls_untargeted": ("cls", 0.0, 1.0),
    "cap_targeted": ("cap", 0.0, 1.0),
}


@dataclass(frozen=True)
class LossSpec:
    """Which objective variant to run, its weights and its text anchors."""

    variant: str
    lambda1: float = 1.0
    lambda2: float = 1.0
    labels: tuple = ()
    target_index: int = 0
    original_caption: str = ""
    target_caption: str = ""

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown loss variant {self.variant!r}")
        for name in ("lambda1", "lambda2"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise ValidationError(f"{name} must be finite and nonnegative")
        if self.variant == "cls":
            if len(self.labels) < 1:
                raise ValidationError("cls variant needs at least one label")
            if not 0 <= self.target_index < len(self.labels):
                raise ValidationError(
                    f"target_index out of range: {self.target_index} "
                    f"for {len(self.labels)} labels"
                )
        else:
            if not self.original_caption.strip() or not self.target_caption.strip():
                raise ValidationError("cap variant needs two nonempty captions")
            if self.original_caption == self.target_caption:
                raise ValidationError("cap variant needs two distinct captions")
        object.__setattr__(self, "labels", tuple(self.labels))

    def to_dict(self):
        d = {"variant": self.variant, "lambda1": self.lambda1, "lambda2": self.lambda2}
        if self.variant == "cls":
            d["labels"] = list(self.labels)
            d["target_index"] = self.target_index
        else:
            d["original_caption"] = self.original_caption
            d["target_caption"] = self.target_caption
        return d


def cls_spec(labels, target_index, lambda1=1.0, lambda2=1.0):
    return LossSpec(
        variant="cls", lambda1=lambda1, lambda2=lambda2,
        labels=tuple(labels), target_index=target_index,
    )


def cap_spec(original_caption, target_caption, lambda1=1.0, lambda2=1.0):
    return LossSpec(
        variant="cap", lambda1=lambda1, lambda2=lambda2,
        original_caption=original_caption, target_caption=target_caption,
    )


def spec_for_sample(variant, sample, lambda1=1.0, lambda2=1.0):
    """Build a LossSpec for one manifest record.

    The cap variant trains against ``adv_caption_train``; the eval
    caption is never part of the objective.
    """
    if variant == "cls":
        return cls_spec(sample.labels, sample.target_index, lambda1, lambda2)
    if variant == "cap":
        return cap_spec(
            sample.original_caption, sample.adv_caption_train, lambda1, lambda2
        )
    raise ConfigError(f"unknown loss variant {variant!r}")


def baseline_spec(kind, sample):
    """LossSpec for one of the reference baselines.

    ``cls_targeted`` weights only target removal (1, 0); ``cls_untargeted``
    only retention (0, 1); ``cap_targeted`` only similarity to the target
    caption (0, 1).
    """
    if kind not in BASELINE_KINDS:
        raise ConfigError(
            f"unknown baseline {kind!r}; expected one of {sorted(BASELINE_KINDS)}"
        )
    variant, lam1, lam2 = BASELINE_KINDS[kind]
    return spec_for_sample(variant, sample, lambda1=lam1, lambda2=lam2)


@dataclass(frozen=True)
class _WeightedAnchors:
    """Text anchors with their signed weights; zero-weight terms dropped."""

    anchors: tuple
    weights: tuple = field(default=())


def _anchor_terms(bundle, spec):
    if spec.variant == "cls":
        texts = list(spec.labels)
        weights = [
            -spec.lambda1 if i == spec.target_index else spec.lambda2
            for i in range(len(texts))
        ]
    else:
        texts = [spec.original_caption, spec.target_caption]
        weights = [-spec.lambda1, spec.lambda2]
    anchors, kept = [], []
    for text, w in zip(texts, weights):
        if w == 0.0:
            continue
        anchors.append(encode_text(bundle, text))
        kept.append(float(w))
    return _WeightedAnchors(anchors=tuple(anchors), weights=tuple(kept))


def build_objective(bundle, spec):
    """Compile a LossSpec into an embedding-space objective.

    Encodes every needed text anchor exactly once; the returned
    callables only touch the image embedding.
    """
    terms = _anchor_terms(bundle, spec)

    def value(z):
        return float(
            sum(w * cosine_similarity(z, a)
                for a, w in zip(terms.anchors, terms.weights))
        )

    def grad(z):
        g = np.zeros_like(np.asarray(z, dtype=np.float64))
        for a, w in zip(terms.anchors, terms.weights):
            g += w * cosine_grad(z, a)
        return g

    return EmbeddingObjective(value=value, grad=grad)


def concealment_loss(bundle, image, spec):
    """Objective value at ``image``; the attack drives this number up."""
    objective = build_objective(bundle, spec)
    return objective.value(encode_image(bundle, image))


def label_concealment_loss(bundle, image, spec):
    """cls-variant loss: -lambda1*S_target + lambda2 * sum of other scores."""
    if spec.variant != "cls":
        raise ConfigError(f"expected cls spec, got {spec.variant!r}")
    return concealment_loss(bundle, image, spec)


def caption_concealment_loss(bundle, image, spec):
    """cap-variant loss: -lambda1*S_original + lambda2*S_target_caption."""
    if spec.variant != "cap":
        raise ConfigError(f"expected cap spec, got {spec.variant!r}")
    return concealment_loss(bundle, image, spec)


def loss_gradient(bundle, image, spec):
    """Gradient of the concealment objective with respect to the pixels."""
    return embedding_loss_gradient(bundle, image, build_objective(bundle, spec))
