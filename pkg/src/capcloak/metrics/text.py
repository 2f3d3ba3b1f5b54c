"""Semantic presence checks and the corpus-level success metrics.

An object counts as present in a caption when its normalized form
matches a contiguous token n-gram directly, or failing that when the
cosine between its mean word embedding and some caption token's
embedding reaches the threshold.  On top of the per-object verdicts:

* removal rate: fraction of samples whose target object is absent from
  the adversarial caption;
* retention rate: fraction of samples whose every non-target label is
  still present (samples with no non-target labels are excluded);
* success rate: fraction of samples achieving both at once.

Success counts a missing retention set as a failure, so the success
rate never exceeds either of the other two rates on any corpus.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

from ..bundles.base import cosine_similarity, encode_text
from ..exceptions import CoverageError, ValidationError
from .embeddings import phrase_embedding
from .lexicon import NormalizedCaption, normalize_caption

DEFAULT_THRESHOLD = 0.7

DIRECT_MATCH = "direct_match"
EMBEDDING_SIMILARITY = "embedding_similarity"
NOT_FOUND = "not_found"


@dataclass(frozen=True)
class PresenceVerdict:
    """Outcome of one object-in-caption check.

    ``best_similarity`` is None for direct matches and for checks that
    never reached the embedding comparison; ``warning`` is None unless
    the check was degraded (for example by vocabulary gaps).
    """

    present: bool
    mechanism: str
    best_similarity: float = None
    warning: str = None

    def __post_init__(self):
        if self.mechanism not in (DIRECT_MATCH, EMBEDDING_SIMILARITY, NOT_FOUND):
            raise ValidationError(f"unknown mechanism {self.mechanism!r}")
        if self.mechanism == DIRECT_MATCH and self.best_similarity is not None:
            raise ValidationError("direct matches carry no similarity score")

    def to_dict(self):
        return {
            "present": self.present,
            "mechanism": self.mechanism,
            "best_similarity": self.best_similarity,
            "warning": self.warning,
        }


def _as_tokens(caption_tokens, backend):
    if isinstance(caption_tokens, NormalizedCaption):
        return caption_tokens.tokens
    if isinstance(caption_tokens, str):
        return normalize_caption(caption_tokens, backend=backend).tokens
    return tuple(caption_tokens)


def object_present(caption_tokens, object_phrase, table,
                   threshold=DEFAULT_THRESHOLD, use_direct_match=True,
                   backend=None):
    """Presence verdict for one object phrase against one caption.

    ``caption_tokens`` may be a NormalizedCaption, a raw caption string,
    or a pre-normalized token sequence.  ``use_direct_match=False``
    skips the n-gram check and forces the embedding route (useful only
    for boundary analysis).
    """
    tokens = _as_tokens(caption_tokens, backend)
    try:
        phrase_tokens = normalize_caption(object_phrase, backend=backend).tokens
    except ValidationError:
        phrase_tokens = ()
    if not phrase_tokens:
        return PresenceVerdict(
            present=False, mechanism=NOT_FOUND,
            warning=f"object phrase {object_phrase!r} normalized to nothing",
        )

    if use_direct_match:
        n = len(phrase_tokens)
        grams = (tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))
        if tuple(phrase_tokens) in grams:
            return PresenceVerdict(present=True, mechanism=DIRECT_MATCH)

    try:
        anchor = phrase_embedding(object_phrase, table, backend=backend)
    except CoverageError as exc:
        return PresenceVerdict(
            present=False, mechanism=NOT_FOUND, warning=str(exc)
        )

    best = None
    for token in tokens:
        vec = table.get(token)
        if vec is None:
            continue
        score = cosine_similarity(anchor, vec)
        if best is None or score > best:
            best = score
    if best is None:
        return PresenceVerdict(
            present=False, mechanism=NOT_FOUND,
            warning="no caption token covered by the embedding table",
        )
    if best >= threshold:
        return PresenceVerdict(
            present=True, mechanism=EMBEDDING_SIMILARITY, best_similarity=best
        )
    return PresenceVerdict(
        present=False, mechanism=NOT_FOUND, best_similarity=best
    )


@dataclass(frozen=True)
class SampleEvaluation:
    """Per-sample audit record behind the corpus rates.

    ``retention_ok`` is None when the record has no non-target labels;
    such samples are excluded from the retention rate and counted as
    failures by the success rate.
    """

    image_ref: str
    target_label: str
    target_verdict: PresenceVerdict
    retained_verdicts: tuple  # of (label, PresenceVerdict)
    removal_ok: bool
    retention_ok: bool = None

    @property
    def success(self):
        return self.removal_ok and bool(self.retention_ok)

    def to_dict(self):
        return {
            "image_ref": self.image_ref,
            "target_label": self.target_label,
            "target_verdict": self.target_verdict.to_dict(),
            "retained_verdicts": [
                {"label": label, **verdict.to_dict()}
                for label, verdict in self.retained_verdicts
            ],
            "removal_ok": self.removal_ok,
            "retention_ok": self.retention_ok,
            "success": self.success,
        }


def evaluate_sample(adv_caption, record, table,
                    threshold=DEFAULT_THRESHOLD, backend=None):
    """All presence verdicts for one adversarial caption."""
    tokens = normalize_caption(adv_caption, backend=backend)
    target_verdict = object_present(
        tokens, record.target_label, table, threshold, backend=backend
    )
    retained = []
    for label in record.retained_labels:
        retained.append(
            (label, object_present(tokens, label, table, threshold,
                                   backend=backend))
        )
    retention_ok = None
    if retained:
        retention_ok = all(v.present for _, v in retained)
    evaluation = SampleEvaluation(
        image_ref=record.image_ref,
        target_label=record.target_label,
        target_verdict=target_verdict,
        retained_verdicts=tuple(retained),
        removal_ok=not target_verdict.present,
        retention_ok=retention_ok,
    )
    _warn_on_degraded(evaluation)
    return evaluation


def _warn_on_degraded(evaluation):
    if evaluation.target_verdict.warning:
        warnings.warn(
            f"{evaluation.image_ref}: target check degraded: "
            f"{evaluation.target_verdict.warning}",
            stacklevel=3,
        )
    for label, verdict in evaluation.retained_verdicts:
        if verdict.warning:
            warnings.warn(
                f"{evaluation.image_ref}: retention check for {label!r} "
                f"degraded: {verdict.warning}",
                stacklevel=3,
            )
    if evaluation.retention_ok is None:
        warnings.warn(
            f"{evaluation.image_ref}: no non-target labels; excluded from "
            "the retention rate",
            stacklevel=3,
        )


def evaluate_corpus(samples, table, threshold=DEFAULT_THRESHOLD, backend=None):
    """SampleEvaluation per (adversarial caption, record) pair."""
    pairs = list(samples)
    if not pairs:
        raise ValidationError("empty sample list")
    return [
        evaluate_sample(caption, record, table, threshold, backend=backend)
        for caption, record in pairs
    ]


def _rates(evaluations):
    total = len(evaluations)
    removed = sum(e.removal_ok for e in evaluations)
    with_retention = [e for e in evaluations if e.retention_ok is not None]
    succeeded = sum(e.success for e in evaluations)
    retention_rate = None
    if with_retention:
        retention_rate = (
            sum(e.retention_ok for e in with_retention) / len(with_retention)
        )
    return removed / total, retention_rate, succeeded / total


def torr(samples, table, threshold=DEFAULT_THRESHOLD, backend=None):
    """Target-object removal rate in [0, 1]."""
    evaluations = evaluate_corpus(samples, table, threshold, backend)
    return _rates(evaluations)[0]


def rorr(samples, table, threshold=DEFAULT_THRESHOLD, backend=None):
    """Remaining-object retention rate in [0, 1]."""
    evaluations = evaluate_corpus(samples, table, threshold, backend)
    rate = _rates(evaluations)[1]
    if rate is None:
        raise ValidationError(
            "no record has a non-target label; retention rate undefined"
        )
    return rate


def asr(samples, table, threshold=DEFAULT_THRESHOLD, backend=None):
    """Attack success rate: removal and full retention at once."""
    evaluations = evaluate_corpus(samples, table, threshold, backend)
    return _rates(evaluations)[2]


def corpus_rates(evaluations):
    """(removal, retention, success) from precomputed evaluations."""
    if not evaluations:
        raise ValidationError("empty evaluation list")
    return _rates(evaluations)


def css(bundle, generated, reference):
    """Cosine between the generated and reference caption embeddings."""
    if not isinstance(generated, str) or not generated.strip():
        raise ValidationError("generated caption empty")
    if not isinstance(reference, str) or not reference.strip():
        raise ValidationError("reference caption empty")
    return cosine_similarity(
        encode_text(bundle, generated), encode_text(bundle, reference)
    )
