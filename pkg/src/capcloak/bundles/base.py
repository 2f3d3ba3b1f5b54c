"""Model bundle contract and the embedding-level primitives built on it.

A *bundle* packages the three frozen models an attack needs: an image
encoder and a text encoder sharing one embedding space, and a captioner
for the downstream task.  Adapters subclass :class:`ModelBundle` and
declare three capabilities up front:

* ``embedding_dim``: the shared dimension D of both encoders;
* ``input_shape``: the (H, W) the image encoder expects, or ``None``
  when any resolution is accepted (the adapter resizes internally);
* ``differentiable``: whether :meth:`image_embedding_vjp` is available.

Gradients are always taken with respect to the [0, 1] pixel tensor the
caller holds; any resize or normalization an adapter performs happens
inside the encoder, and its ``image_embedding_vjp`` must differentiate
through it.
"""

from __future__ import annotations

import abc
from dataclasses import dataclass

import numpy as np

from ..exceptions import CapabilityError, CaptionerError, EncoderError
from ..validation import check_embedding, check_image, check_nonempty_text


class ModelBundle(abc.ABC):
    """Frozen image encoder + text encoder + captioner behind one interface.

    Instances are not required to be safe for concurrent calls; callers
    that parallelize hold one bundle per worker.
    """

    name = "bundle"

    @property
    @abc.abstractmethod
    def embedding_dim(self):
        """Shared dimension D of image and text embeddings."""

    @property
    def input_shape(self):
        """(H, W) the image encoder expects, or None for any resolution."""
        return None

    @property
    def differentiable(self):
        """Whether image_embedding_vjp is implemented."""
        return False

    @abc.abstractmethod
    def encode_image(self, image):
        """Map an (H, W, 3) image in [0, 1] to a length-D vector."""

    @abc.abstractmethod
    def encode_text(self, text):
        """Map a string to a length-D vector."""

    @abc.abstractmethod
    def caption(self, image):
        """Generate a caption for an image (deterministic decoding)."""

    def image_embedding_vjp(self, image, cotangent):
        """Vector-Jacobian product of the image encoder at ``image``.

        Returns d(cotangent . encode_image(I))/dI as an image-shaped
        array, differentiating through any internal preprocessing.
        """
        raise CapabilityError(f"bundle {self.name!r} does not provide gradients")


def cosine_similarity(u, v):
    """Cosine of the angle between two nonzero vectors, in [-1, 1]."""
    u = check_embedding(u, name="u", require_nonzero=True)
    v = check_embedding(v, name="v", require_nonzero=True)
    value = float(np.dot(u, v) / (np.linalg.norm(u) * np.linalg.norm(v)))
    # guard against rounding just past the mathematical range
    return min(1.0, max(-1.0, value))


def cosine_grad(u, anchor):
    """Gradient of cos(u, anchor) with respect to u (anchor held fixed)."""
    u = check_embedding(u, name="u", require_nonzero=True)
    anchor = check_embedding(anchor, name="anchor", require_nonzero=True)
    nu = np.linalg.norm(u)
    a_hat = anchor / np.linalg.norm(anchor)
    u_hat = u / nu
    return (a_hat - np.dot(u_hat, a_hat) * u_hat) / nu


def encode_image(bundle, image):
    """Encode an image through the bundle, surfacing backend failures."""
    image = check_image(image)
    try:
        z = bundle.encode_image(image)
    except EncoderError:
        raise
    except Exception as exc:
        raise EncoderError(f"image encoder of {bundle.name!r} failed: {exc}") from exc
    z = check_embedding(z, name="image embedding")
    if z.shape[0] != bundle.embedding_dim:
        raise EncoderError(
            f"image encoder returned dimension {z.shape[0]}, "
            f"expected {bundle.embedding_dim}"
        )
    return z


def encode_text(bundle, text):
    """Encode a nonempty string through the bundle."""
    check_nonempty_text(text)
    try:
        z = bundle.encode_text(text)
    except EncoderError:
        raise
    except Exception as exc:
        raise EncoderError(f"text encoder of {bundle.name!r} failed: {exc}") from exc
    z = check_embedding(z, name="text embedding")
    if z.shape[0] != bundle.embedding_dim:
        raise EncoderError(
            f"text encoder returned dimension {z.shape[0]}, "
            f"expected {bundle.embedding_dim}"
        )
    return z


def caption_image(bundle, image):
    """Caption an image through the bundle; the result is a nonempty string."""
    image = check_image(image)
    try:
        text = bundle.caption(image)
    except CaptionerError:
        raise
    except Exception as exc:
        raise CaptionerError(f"captioner of {bundle.name!r} failed: {exc}") from exc
    if not isinstance(text, str) or not text.strip():
        raise CaptionerError(f"captioner of {bundle.name!r} returned an empty caption")
    return text


@dataclass(frozen=True)
class EmbeddingObjective:
    """Scalar objective over the image-embedding space.

    ``value(z)`` returns the objective at embedding z; ``grad(z)`` its
    gradient with respect to z.  Text anchors are baked in at
    construction, so evaluating the objective never re-encodes text.
    """

    value: callable
    grad: callable


def embedding_loss_gradient(bundle, image, objective):
    """Gradient of objective(encode_image(I)) with respect to the pixels.

    Chains the objective's embedding-space gradient through the bundle's
    vector-Jacobian product, so preprocessing inside the encoder is
    differentiated by the backend itself.
    """
    if not bundle.differentiable:
        raise CapabilityError(
            f"bundle {bundle.name!r} is not differentiable; gradients unavailable"
        )
    image = check_image(image)
    z = encode_image(bundle, image)
    gz = np.asarray(objective.grad(z), dtype=np.float64)
    grad = np.asarray(bundle.image_embedding_vjp(image, gz), dtype=np.float64)
    if grad.shape != image.shape:
        raise EncoderError(
            f"gradient shape {grad.shape} does not match image {image.shape}"
        )
    if not np.all(np.isfinite(grad)):
        raise EncoderError(f"bundle {bundle.name!r} returned a non-finite gradient")
    return grad
