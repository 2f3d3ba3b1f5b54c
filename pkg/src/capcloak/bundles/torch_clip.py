"""Pretrained dual-encoder adapter backed by torch and transformers.

Wraps a CLIP-style contrastive model.  Preprocessing (bilinear resize
plus channel normalization) is implemented with torch ops so gradients
flow from the embedding all the way back to the raw [0, 1] pixels; the
vector-Jacobian product the attack engine needs is exact autograd, not
an approximation.

Captioning is retrieval-based: candidate object phrases are scored
through a prompt template and the best matches are slotted into a
fixed sentence.  That keeps the adapter free of any generative decoder
while still producing captions whose object mentions react to the
embedding geometry under attack.

This module imports torch lazily; install the ``[torch]`` extra to use
it.  Everything else in the package works without it.
"""

from __future__ import annotations

import numpy as np

from ..exceptions import CaptionerError, EncoderError
from ..validation import check_image
from .base import ModelBundle

# Channel statistics used by the reference CLIP preprocessing.
CLIP_IMAGE_MEAN = (0.48145466, 0.4578275, 0.40821073)
CLIP_IMAGE_STD = (0.26862954, 0.26130258, 0.27577711)

DEFAULT_PROMPT = "a photo of a {}"
DEFAULT_CAPTION_THRESHOLD = 0.2
FALLBACK_CAPTION = "a scene"


def _require_torch():
    try:
        import torch
    except ImportError as exc:
        raise EncoderError(
            "the torch extra is not installed; pip install 'capcloak[torch]'"
        ) from exc
    return torch


class TorchClipBundle(ModelBundle):
    """CLIP-style bundle with autograd pixel gradients.

    Construct from a model id or local path (downloads via transformers
    unless cached), or from already-built components through
    :meth:`from_components` for hermetic tests.
    """

    def __init__(self, model_id, vocabulary=(), device="cpu",
                 prompt=DEFAULT_PROMPT,
                 caption_threshold=DEFAULT_CAPTION_THRESHOLD,
                 max_mentions=2):
        torch = _require_torch()
        try:
            from transformers import AutoTokenizer, CLIPModel
        except ImportError as exc:
            raise EncoderError(
                "transformers is not installed; pip install 'capcloak[torch]'"
            ) from exc
        try:
            model = CLIPModel.from_pretrained(model_id)
            tokenizer = AutoTokenizer.from_pretrained(model_id)
        except Exception as exc:
            raise EncoderError(
                f"could not load pretrained bundle {model_id!r}: {exc}"
            ) from exc
        self._init_components(
            torch, model, tokenizer, name=f"clip:{model_id}", device=device,
            image_mean=CLIP_IMAGE_MEAN, image_std=CLIP_IMAGE_STD,
            resolution=model.config.vision_config.image_size,
            vocabulary=vocabulary, prompt=prompt,
            caption_threshold=caption_threshold, max_mentions=max_mentions,
        )

    @classmethod
    def from_components(cls, model, tokenizer, *, name="clip:components",
                        device="cpu", image_mean=CLIP_IMAGE_MEAN,
                        image_std=CLIP_IMAGE_STD, resolution=None,
                        vocabulary=(), prompt=DEFAULT_PROMPT,
                        caption_threshold=DEFAULT_CAPTION_THRESHOLD,
                        max_mentions=2):
        """Assemble a bundle from an in-memory model and tokenizer.

        ``tokenizer`` must be callable as ``tokenizer(text,
        return_tensors="pt", padding=True)`` and return input_ids (and
        optionally attention_mask).
        """
        torch = _require_torch()
        bundle = cls.__new__(cls)
        if resolution is None:
            resolution = model.config.vision_config.image_size
        bundle._init_components(
            torch, model, tokenizer, name=name, device=device,
            image_mean=image_mean, image_std=image_std, resolution=resolution,
            vocabulary=vocabulary, prompt=prompt,
            caption_threshold=caption_threshold, max_mentions=max_mentions,
        )
        return bundle

    def _init_components(self, torch, model, tokenizer, *, name, device,
                         image_mean, image_std, resolution, vocabulary,
                         prompt, caption_threshold, max_mentions):
        self._torch = torch
        self._model = model.to(device)
        self._model.eval()
        self._tokenizer = tokenizer
        self._device = device
        self._resolution = int(resolution)
        self.name = name
        self.vocabulary = tuple(vocabulary)
        self.prompt = prompt
        self.caption_threshold = float(caption_threshold)
        self.max_mentions = int(max_mentions)
        self._mean = torch.tensor(image_mean).view(1, 3, 1, 1).to(device)
        self._std = torch.tensor(image_std).view(1, 3, 1, 1).to(device)
        self._vocab_embeddings = None

    # -- ModelBundle surface -------------------------------------------------

    @property
    def embedding_dim(self):
        return int(self._model.config.projection_dim)

    @property
    def input_shape(self):
        return None  # arbitrary sizes accepted; resized internally

    @property
    def differentiable(self):
        return True

    def _dtype(self):
        return next(self._model.parameters()).dtype

    @staticmethod
    def _projected(output):
        # Feature helpers return a bare tensor on older transformers and
        # a pooling output (projection in .pooler_output) on newer ones.
        pooled = getattr(output, "pooler_output", None)
        return output if pooled is None else pooled

    def _image_tensor(self, image):
        torch = self._torch
        chw = np.ascontiguousarray(image.transpose(2, 0, 1))
        tensor = torch.from_numpy(chw).to(self._device, dtype=self._dtype())
        return tensor.unsqueeze(0)

    def _forward_features(self, batch):
        torch = self._torch
        functional = torch.nn.functional
        resized = functional.interpolate(
            batch, size=(self._resolution, self._resolution),
            mode="bilinear", align_corners=False, antialias=True,
        )
        normalized = (resized - self._mean.to(batch.dtype)) / self._std.to(
            batch.dtype
        )
        features = self._projected(
            self._model.get_image_features(pixel_values=normalized)
        )
        return features[0]

    def encode_image(self, image):
        torch = self._torch
        image = check_image(image)
        with torch.no_grad():
            features = self._forward_features(self._image_tensor(image))
        return features.detach().cpu().double().numpy()

    def image_embedding_vjp(self, image, cotangent):
        torch = self._torch
        image = check_image(image)
        tensor = self._image_tensor(image).requires_grad_(True)
        features = self._forward_features(tensor)
        cot = torch.from_numpy(
            np.asarray(cotangent, dtype=np.float64)
        ).to(self._device, dtype=features.dtype)
        (grad,) = torch.autograd.grad(features, tensor, grad_outputs=cot)
        out = grad[0].detach().cpu().double().numpy()
        return np.ascontiguousarray(out.transpose(1, 2, 0))

    def encode_text(self, text):
        torch = self._torch
        tokens = self._tokenizer(
            text, return_tensors="pt", padding=True, truncation=True
        )
        tokens = {k: v.to(self._device) for k, v in tokens.items()}
        with torch.no_grad():
            features = self._projected(self._model.get_text_features(**tokens))
        return features[0].detach().cpu().double().numpy()

    def caption(self, image):
        if not self.vocabulary:
            raise CaptionerError(
                "retrieval captioner needs a nonempty vocabulary"
            )
        z = self.encode_image(image)
        z = z / np.linalg.norm(z)
        scored = []
        for phrase, anchor in self._phrase_anchors():
            scored.append((float(z @ anchor), phrase))
        scored.sort(key=lambda pair: (-pair[0], pair[1]))
        mentions = [
            phrase for score, phrase in scored[: self.max_mentions]
            if score >= self.caption_threshold
        ]
        if not mentions:
            return FALLBACK_CAPTION
        body = " and a ".join(mentions)
        return f"a photo of a {body}"

    def _phrase_anchors(self):
        if self._vocab_embeddings is None:
            anchors = []
            for phrase in self.vocabulary:
                vec = self.encode_text(self.prompt.format(phrase))
                anchors.append((phrase, vec / np.linalg.norm(vec)))
            self._vocab_embeddings = anchors
        return self._vocab_embeddings
