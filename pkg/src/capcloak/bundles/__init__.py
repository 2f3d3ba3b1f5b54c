"""Model bundles: the pluggable encoder/captioner backends."""

from __future__ import annotations

from ..exceptions import ConfigError
from .base import (
    EmbeddingObjective,
    ModelBundle,
    caption_image,
    cosine_grad,
    cosine_similarity,
    embedding_loss_gradient,
    encode_image,
    encode_text,
)
from .stub import (
    ChannelMeanEncoder,
    ConstantEncoder,
    FixedCaptioner,
    HashedBagTextEncoder,
    IdentityEncoder,
    LinearMapEncoder,
    LookupTextEncoder,
    NearestAnchorCaptioner,
    PatchMeanEncoder,
    SimilarityTemplateCaptioner,
    StubBundle,
    demo_bundle,
    random_linear_encoder,
    rigged_similarity_bundle,
)


def load_bundle(spec, labels=()):
    """Resolve a bundle selector string to a ModelBundle.

    ``"stub"`` builds the hermetic demo bundle (captioner vocabulary
    taken from ``labels``); ``"clip:<model-id-or-path>"`` loads the
    torch/transformers adapter, which needs the optional ``[torch]``
    dependencies installed.
    """
    if spec == "stub":
        return demo_bundle(labels=labels)
    if spec.startswith("clip:"):
        from .torch_clip import TorchClipBundle

        return TorchClipBundle(spec[len("clip:"):], vocabulary=labels)
    raise ConfigError(
        f"unknown bundle {spec!r}; expected 'stub' or 'clip:<model-id-or-path>'"
    )


__all__ = [
    "ChannelMeanEncoder",
    "ConstantEncoder",
    "EmbeddingObjective",
    "FixedCaptioner",
    "HashedBagTextEncoder",
    "IdentityEncoder",
    "LinearMapEncoder",
    "LookupTextEncoder",
    "ModelBundle",
    "NearestAnchorCaptioner",
    "PatchMeanEncoder",
    "SimilarityTemplateCaptioner",
    "StubBundle",
    "caption_image",
    "cosine_grad",
    "cosine_similarity",
    "demo_bundle",
    "embedding_loss_gradient",
    "encode_image",
    "encode_text",
    "load_bundle",
    "random_linear_encoder",
    "rigged_similarity_bundle",
]
