"""Shared fixtures: demo corpus, embedding tables, rigged bundles."""

import numpy as np
import pytest

from capcloak.bundles.stub import (
    ConstantEncoder,
    FixedCaptioner,
    IdentityEncoder,
    LinearMapEncoder,
    LookupTextEncoder,
    StubBundle,
)
from capcloak.demo import build_demo_corpus
from capcloak.metrics.embeddings import bundled_table


@pytest.fixture(scope="session")
def demo_corpus(tmp_path_factory):
    """Synthetic corpus on disk; returns the manifest path."""
    root = tmp_path_factory.mktemp("demo_corpus")
    return build_demo_corpus(root)


@pytest.fixture(scope="session")
def table():
    return bundled_table()


@pytest.fixture
def random_image():
    rng = np.random.default_rng(7)
    return rng.uniform(0.05, 0.95, size=(16, 16, 3))


def linear_bundle(seed=0, dim=6, shape=(4, 4, 3), texts=None,
                  caption="a scene"):
    """Random linear image encoder plus a lookup text encoder.

    ``texts`` maps anchor strings to embedding vectors of length
    ``dim``; defaults to two fixed orthogonal-ish anchors.
    """
    rng = np.random.default_rng(seed)
    weight = rng.standard_normal((dim, int(np.prod(shape)))) / np.sqrt(
        np.prod(shape)
    )
    bias = 0.1 * rng.standard_normal(dim)
    if texts is None:
        texts = {
            "first anchor": rng.standard_normal(dim),
            "second anchor": rng.standard_normal(dim),
        }
    return StubBundle(
        image_encoder=LinearMapEncoder(weight, bias, input_shape=shape[:2]),
        text_encoder=LookupTextEncoder(texts),
        captioner=FixedCaptioner(caption),
        name=f"linear-{seed}",
    )


def monotone_bundle():
    """1-D rig whose objective strictly increases with the pixel mean.

    The image embedding is (mean, 1); "up" sits at cosine 1 along
    (1, 1)-ish direction so pushing the mean up always helps, making
    L-infinity iterates predictable from the step size alone.
    """
    shape = (2, 2, 3)
    n = int(np.prod(shape))
    weight = np.vstack([np.full(n, 1.0 / n), np.zeros(n)])
    bias = np.array([0.0, 1.0])
    return StubBundle(
        image_encoder=LinearMapEncoder(weight, bias, input_shape=shape[:2]),
        text_encoder=LookupTextEncoder(
            {"up": np.array([1.0, 0.0]), "flat": np.array([0.0, 1.0])}
        ),
        captioner=FixedCaptioner("a scene"),
        name="monotone",
    )


def identity_bundle(shape=(4, 4, 3)):
    """Embeddings are the raw pixels; VJP is the identity."""
    texts = {
        "ones": np.ones(int(np.prod(shape))),
        "axis": np.eye(int(np.prod(shape)))[0] + 1e-12,
    }
    return StubBundle(
        image_encoder=IdentityEncoder(shape),
        text_encoder=LookupTextEncoder(texts),
        captioner=FixedCaptioner("a scene"),
        name="identity",
    )


def constant_bundle(value, texts, caption="a scene"):
    """Image-independent embedding; loss values are pure arithmetic."""
    return StubBundle(
        image_encoder=ConstantEncoder(np.asarray(value, dtype=np.float64)),
        text_encoder=LookupTextEncoder(texts),
        captioner=FixedCaptioner(caption),
        name="constant",
    )
