"""Dataset records and manifest I/O.

A manifest is a JSON-Lines file: one object per line with keys
``image_ref``, ``labels``, ``target_index``, ``original_caption``,
``adv_caption_train`` and ``adv_caption_eval``.  ``labels`` lists the
object phrases present in the image; ``target_index`` (zero-based)
selects the one the attack must erase from downstream captions.  The two
adversarial captions describe the scene without the target object; the
train one drives caption-variant attacks, the eval one is held out for
scoring.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, asdict, replace
from pathlib import Path

import numpy as np
from PIL import Image

from .exceptions import ManifestError, ValidationError
from .validation import check_image

MANIFEST_FIELDS = (
    "image_ref",
    "labels",
    "target_index",
    "original_caption",
    "adv_caption_train",
    "adv_caption_eval",
)


@dataclass(frozen=True)
class SampleRecord:
    """One dataset item: an image plus its object labels and captions."""

    image_ref: str
    labels: tuple
    target_index: int
    original_caption: str
    adv_caption_train: str
    adv_caption_eval: str

    @property
    def target_label(self):
        return self.labels[self.target_index]

    @property
    def retained_labels(self):
        """Labels the attack must leave intact (everything but the target)."""
        return tuple(
            lbl for i, lbl in enumerate(self.labels) if i != self.target_index
        )

    def to_dict(self):
        d = asdict(self)
        d["labels"] = list(self.labels)
        return d


def validate_sample(record):
    """Return ``record`` unchanged if every invariant holds.

    Each violated invariant raises ValidationError with a distinct,
    named message.
    """
    if len(record.labels) < 1:
        raise ValidationError("labels empty")
    for lbl in record.labels:
        if not isinstance(lbl, str) or not lbl.strip():
            raise ValidationError("empty label phrase")
    if len(set(record.labels)) != len(record.labels):
        raise ValidationError("duplicate labels")
    if not 0 <= record.target_index < len(record.labels):
        raise ValidationError(
            f"target_index out of range: {record.target_index} "
            f"for {len(record.labels)} labels"
        )
    for field in ("original_caption", "adv_caption_train", "adv_caption_eval"):
        if not str(getattr(record, field)).strip():
            raise ValidationError(f"{field} empty")
    if not record.image_ref:
        raise ValidationError("image_ref empty")
    return record


def record_from_dict(obj):
    """Build and validate a SampleRecord from a parsed manifest object."""
    missing = [k for k in MANIFEST_FIELDS if k not in obj]
    if missing:
        raise ValidationError(f"missing fields: {', '.join(missing)}")
    record = SampleRecord(
        image_ref=str(obj["image_ref"]),
        labels=tuple(obj["labels"]),
        target_index=int(obj["target_index"]),
        original_caption=str(obj["original_caption"]),
        adv_caption_train=str(obj["adv_caption_train"]),
        adv_caption_eval=str(obj["adv_caption_eval"]),
    )
    return validate_sample(record)


def load_manifest(path):
    """Read a JSON-Lines manifest into a list of validated SampleRecords.

    Blank lines are ignored.  A malformed line raises ManifestError with
    its 1-based line number; an invariant violation raises ValidationError
    naming the field.
    """
    path = Path(path)
    records = []
    with path.open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ManifestError(f"invalid JSON ({exc.msg})", line=lineno) from exc
            if not isinstance(obj, dict):
                raise ManifestError("expected a JSON object", line=lineno)
            try:
                records.append(record_from_dict(obj))
            except ValidationError as exc:
                raise ValidationError(f"line {lineno}: {exc}") from exc
    return records


def save_manifest(records, path):
    """Write records as JSON-Lines; inverse of load_manifest."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_dict()) + "\n")
    return path


def load_image(path):
    """Load an image file as an (H, W, 3) float array in [0, 1].

    8-bit formats are divided by 255; ``.npy`` files are taken as already
    normalized float tensors.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(path)
    if path.suffix == ".npy":
        arr = np.load(path)
    else:
        with Image.open(path) as img:
            arr = np.asarray(img.convert("RGB"), dtype=np.float64) / 255.0
    return check_image(arr, name=str(path))


def save_image(image, path):
    """Write an image losslessly as PNG (rounded to 8-bit)."""
    image = check_image(image)
    path = Path(path)
    data = np.round(image * 255.0).astype(np.uint8)
    Image.fromarray(data).save(path, format="PNG")
    return path


@dataclass(frozen=True)
class AttackResult:
    """Outcome of one attack run on one image."""

    adversarial_image: np.ndarray
    generated_caption_original: str
    generated_caption_adversarial: str
    loss_trace: tuple
    config_used: dict

    def replace(self, **kw):
        return replace(self, **kw)
