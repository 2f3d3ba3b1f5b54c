"""Synthetic demo corpus for end-to-end runs without any model weights.

Images are built for the hermetic stub bundle: each object label lights
up exactly the patch/channel cells its hashed text embedding reads, with
the target object's intensity placed just above the stub captioner's
mention threshold.  Attacks at the default budgets push the target
below the threshold (so it drops out of the caption) while the other
object stays pinned at full intensity, giving a corpus where success is
analyzable by hand.

Build it from the command line::

    python3 -m capcloak.demo demo
    capcloak attack --manifest demo/manifest.jsonl --out runs/demo

Labels were chosen so that no two caption tokens share a hashed
embedding index under the demo bundle's 27-dimensional text encoder.
"""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np

from .bundles.stub import HashedBagTextEncoder, PatchMeanEncoder
from .records import SampleRecord, save_manifest

DEMO_IMAGE_SIZE = 48
DEMO_GRID = 3

# Intensity for the target object's cells: just above the captioner's
# 0.2 mention threshold, so default budgets can push it below.  Keyed by
# how many embedding cells the label occupies (multi-word labels light
# one cell per word).
TARGET_LEVELS = {1: 0.215, 2: 0.16}
OTHER_LEVEL = 1.0

DEMO_SAMPLES = (
    ("cat_couch", ("cat", "couch"), 0,
     "a photo of a cat and a couch",
     "a photo of a couch",
     "a photo of a couch."),
    ("frisbee_horse", ("frisbee", "horse"), 0,
     "a photo of a frisbee and a horse",
     "a photo of a horse",
     "a photo of a horse."),
    ("teddy_couch", ("teddy bear", "couch"), 0,
     "a photo of a couch and a teddy bear",
     "a photo of a couch",
     "a photo of a couch."),
    ("bird_car", ("bird", "car"), 0,
     "a photo of a bird and a car",
     "a photo of a car",
     "a photo of a car."),
)


def _paint_label(image, encoder, text_encoder, label, level):
    bag = text_encoder(label)
    cells = np.nonzero(bag)[0]
    h, w, _ = image.shape
    grid = encoder.grid
    row_edges = np.linspace(0, h, grid + 1).astype(int)
    col_edges = np.linspace(0, w, grid + 1).astype(int)
    for k in cells:
        channel, rest = divmod(int(k), grid * grid)
        i, j = divmod(rest, grid)
        image[row_edges[i]:row_edges[i + 1],
              col_edges[j]:col_edges[j + 1], channel] = level
    return len(cells)


def build_demo_corpus(directory, image_size=DEMO_IMAGE_SIZE):
    """Write the demo images and manifest; returns the manifest path."""
    directory = Path(directory)
    images_dir = directory / "images"
    images_dir.mkdir(parents=True, exist_ok=True)
    patch_encoder = PatchMeanEncoder(grid=DEMO_GRID)
    text_encoder = HashedBagTextEncoder(patch_encoder.dim)

    records = []
    for name, labels, target_index, original, train, evaluation in DEMO_SAMPLES:
        image = np.zeros((image_size, image_size, 3))
        target = labels[target_index]
        bag = text_encoder(target)
        level = TARGET_LEVELS[int(np.count_nonzero(bag))]
        _paint_label(image, patch_encoder, text_encoder, target, level)
        for index, label in enumerate(labels):
            if index != target_index:
                _paint_label(image, patch_encoder, text_encoder, label,
                             OTHER_LEVEL)
        ref = f"images/{name}.npy"
        np.save(directory / ref, image)
        records.append(
            SampleRecord(
                image_ref=ref, labels=tuple(labels),
                target_index=target_index, original_caption=original,
                adv_caption_train=train, adv_caption_eval=evaluation,
            )
        )
    manifest_path = directory / "manifest.jsonl"
    save_manifest(records, manifest_path)
    return manifest_path


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    target = argv[0] if argv else "demo"
    manifest = build_demo_corpus(target)
    print(f"wrote demo corpus: {manifest}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
