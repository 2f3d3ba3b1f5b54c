"""Deterministic numeric bundles for hermetic tests and dry runs.

Every stub image encoder is a linear map of the pixels, so its
vector-Jacobian product is exact and the whole bundle is differentiable
without any autodiff backend.  Text encoders and captioners are plain
deterministic functions.
"""

from __future__ import annotations

import hashlib

import numpy as np

from ..exceptions import EncoderError
from ..validation import check_image
from .base import ModelBundle, cosine_similarity


def _token_split(text):
    return [t.strip(".,;:!?'\"()") for t in text.lower().split()]


class LinearMapEncoder:
    """z = W @ vec(image) + b for a fixed (H, W) input shape."""

    def __init__(self, weight, bias=None, input_shape=None):
        self.weight = np.asarray(weight, dtype=np.float64)
        self.bias = (
            np.zeros(self.weight.shape[0])
            if bias is None
            else np.asarray(bias, dtype=np.float64)
        )
        self.input_shape = input_shape

    @property
    def dim(self):
        return self.weight.shape[0]

    def _check(self, image):
        if image.size != self.weight.shape[1]:
            raise EncoderError(
                f"encoder expects {self.weight.shape[1]} pixels, got {image.size}"
            )

    def __call__(self, image):
        self._check(image)
        return self.weight @ image.ravel() + self.bias

    def vjp(self, image, cotangent):
        self._check(image)
        return (self.weight.T @ np.asarray(cotangent)).reshape(image.shape)


class IdentityEncoder:
    """z = vec(image); injective, D = H*W*3."""

    def __init__(self, shape):
        self.shape = tuple(shape)
        self.dim = int(np.prod(shape))
        self.input_shape = self.shape[:2]

    def __call__(self, image):
        return image.ravel().copy()

    def vjp(self, image, cotangent):
        return np.asarray(cotangent, dtype=np.float64).reshape(image.shape)


class ChannelMeanEncoder:
    """z = per-channel mean intensity; works at any resolution, D = 3."""

    dim = 3
    input_shape = None

    def __call__(self, image):
        return image.mean(axis=(0, 1))

    def vjp(self, image, cotangent):
        h, w, _ = image.shape
        grad = np.empty_like(image)
        grad[:] = np.asarray(cotangent, dtype=np.float64) / (h * w)
        return grad


class PatchMeanEncoder:
    """Per-channel mean over a g x g grid of cells; D = 3*g*g."""

    def __init__(self, grid=3):
        self.grid = int(grid)
        self.dim = 3 * self.grid * self.grid
        self.input_shape = None

    def _edges(self, n):
        return np.linspace(0, n, self.grid + 1).astype(int)

    def __call__(self, image):
        h, w, _ = image.shape
        re, ce = self._edges(h), self._edges(w)
        out = np.empty(self.dim)
        k = 0
        for c in range(3):
            for i in range(self.grid):
                for j in range(self.grid):
                    cell = image[re[i]:re[i + 1], ce[j]:ce[j + 1], c]
                    out[k] = cell.mean()
                    k += 1
        return out

    def vjp(self, image, cotangent):
        h, w, _ = image.shape
        re, ce = self._edges(h), self._edges(w)
        u = np.asarray(cotangent, dtype=np.float64)
        grad = np.zeros_like(image)
        k = 0
        for c in range(3):
            for i in range(self.grid):
                for j in range(self.grid):
                    area = (re[i + 1] - re[i]) * (ce[j + 1] - ce[j])
                    grad[re[i]:re[i + 1], ce[j]:ce[j + 1], c] += u[k] / area
                    k += 1
        return grad


class ConstantEncoder:
    """Image-independent embedding; gradient through it is zero."""

    def __init__(self, value):
        self.value = np.asarray(value, dtype=np.float64)
        self.dim = self.value.shape[0]
        self.input_shape = None

    def __call__(self, image):
        return self.value.copy()

    def vjp(self, image, cotangent):
        return np.zeros_like(image)


def random_linear_encoder(seed, dim, shape):
    """Seeded Gaussian linear encoder, scaled to keep embeddings O(1)."""
    rng = np.random.default_rng(seed)
    n = int(np.prod(shape))
    weight = rng.standard_normal((dim, n)) / np.sqrt(n)
    bias = 0.1 * rng.standard_normal(dim)
    return LinearMapEncoder(weight, bias, input_shape=tuple(shape[:2]))


class HashedBagTextEncoder:
    """Bag-of-tokens vector: each token adds a one-hot at a hashed index."""

    def __init__(self, dim):
        self.dim = int(dim)

    def _index(self, token):
        digest = hashlib.md5(token.encode("utf-8")).hexdigest()
        return int(digest, 16) % self.dim

    def __call__(self, text):
        vec = np.zeros(self.dim)
        for token in _token_split(text):
            if token:
                vec[self._index(token)] += 1.0
        return vec


class LookupTextEncoder:
    """Exact-phrase lookup into a fixed table of vectors."""

    def __init__(self, table):
        self.table = {k: np.asarray(v, dtype=np.float64) for k, v in table.items()}
        dims = {v.shape[0] for v in self.table.values()}
        if len(dims) != 1:
            raise ValueError("all table vectors must share one dimension")
        self.dim = dims.pop()

    def __call__(self, text):
        if text not in self.table:
            raise EncoderError(f"text {text!r} not in lookup table")
        return self.table[text].copy()


class FixedCaptioner:
    """Always returns the same caption."""

    def __init__(self, text):
        self.text = text

    def __call__(self, image):
        return self.text


class NearestAnchorCaptioner:
    """Caption chosen by the mean intensity nearest to a configured anchor.

    Robust to attack-scale perturbations as long as anchors are spaced
    wider than twice the attack budget, which makes it a convenient
    "echoes the clean caption" stub.
    """

    def __init__(self, anchors):
        self.anchors = dict(anchors)

    def __call__(self, image):
        mean = float(np.mean(image))
        key = min(self.anchors, key=lambda k: abs(k - mean))
        return self.anchors[key]


class SimilarityTemplateCaptioner:
    """Mentions every vocabulary phrase scoring above a threshold.

    The caption is assembled from the phrases whose image/text cosine
    similarity clears ``threshold``, so attacks that push a phrase's
    score below it remove the phrase from the caption.
    """

    def __init__(self, image_encoder, text_encoder, vocabulary, threshold,
                 fallback="a scene"):
        self.image_encoder = image_encoder
        self.text_encoder = text_encoder
        self.vocabulary = tuple(vocabulary)
        self.threshold = float(threshold)
        self.fallback = fallback
        self._anchors = {p: np.asarray(text_encoder(p), dtype=np.float64)
                         for p in self.vocabulary}

    def __call__(self, image):
        z = self.image_encoder(image)
        mention = []
        for phrase in self.vocabulary:
            anchor = self._anchors[phrase]
            if not np.any(anchor) or not np.any(z):
                continue
            if cosine_similarity(z, anchor) >= self.threshold:
                mention.append(phrase)
        if not mention:
            return self.fallback
        return "a photo of " + " and ".join("a " + p for p in mention)


class StubBundle(ModelBundle):
    """Bundle assembled from stub encoders and a captioner callable."""

    def __init__(self, image_encoder, text_encoder, captioner, name="stub"):
        self.image_encoder = image_encoder
        self.text_encoder = text_encoder
        self.captioner = captioner
        self.name = name

    @property
    def embedding_dim(self):
        return self.image_encoder.dim

    @property
    def input_shape(self):
        return getattr(self.image_encoder, "input_shape", None)

    @property
    def differentiable(self):
        return hasattr(self.image_encoder, "vjp")

    def encode_image(self, image):
        return self.image_encoder(check_image(image))

    def encode_text(self, text):
        return np.asarray(self.text_encoder(text), dtype=np.float64)

    def caption(self, image):
        return self.captioner(check_image(image))

    def image_embedding_vjp(self, image, cotangent):
        return self.image_encoder.vjp(check_image(image), cotangent)


def rigged_similarity_bundle(similarities, captioner=None, name="stub-rigged"):
    """Bundle with a constant image embedding and prescribed cosine scores.

    ``similarities`` maps each text anchor to the cosine it should score
    against every image.  Useful for checking loss arithmetic by hand.
    """
    table = {}
    for text, s in similarities.items():
        s = float(s)
        table[text] = np.array([s, np.sqrt(max(0.0, 1.0 - s * s))])
    return StubBundle(
        image_encoder=ConstantEncoder(np.array([1.0, 0.0])),
        text_encoder=LookupTextEncoder(table),
        captioner=captioner or FixedCaptioner("a scene"),
        name=name,
    )


def demo_bundle(labels=(), grid=3, caption_threshold=0.2, name="stub"):
    """Default hermetic bundle used by the harness for dry runs.

    Patch-mean image embeddings, hashed bag-of-words text embeddings and
    a similarity-threshold captioner over the given label vocabulary.
    """
    image_encoder = PatchMeanEncoder(grid=grid)
    text_encoder = HashedBagTextEncoder(image_encoder.dim)
    captioner = SimilarityTemplateCaptioner(
        image_encoder, text_encoder, vocabulary=labels, threshold=caption_threshold
    )
    return StubBundle(image_encoder, text_encoder, captioner, name=name)
