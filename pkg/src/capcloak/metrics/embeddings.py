"""Static word-embedding tables for semantic presence checks.

The on-disk format is one word per line followed by its vector
components, whitespace-separated (the common plain-text format for
distributing static vectors).  A small table generated for the demo
vocabulary ships with the package; any table in the same format can be
swapped in through configuration.
"""

from __future__ import annotations

from importlib import resources

import numpy as np

from ..exceptions import CoverageError, ValidationError
from .lexicon import normalize_caption

BUNDLED_TABLE = "wordvecs_demo.txt"


class WordEmbeddingTable:
    """Word -> fixed-dimension vector map with strict coverage semantics.

    Out-of-vocabulary lookups raise (or return None from :meth:`get`);
    they never silently produce zero vectors.
    """

    def __init__(self, vectors):
        if not vectors:
            raise ValidationError("embedding table is empty")
        self._vectors = {}
        dimension = None
        for word, vec in vectors.items():
            arr = np.asarray(vec, dtype=np.float64)
            if arr.ndim != 1:
                raise ValidationError(f"vector for {word!r} is not 1-D")
            if dimension is None:
                dimension = arr.shape[0]
            elif arr.shape[0] != dimension:
                raise ValidationError(
                    f"vector for {word!r} has dimension {arr.shape[0]}, "
                    f"expected {dimension}"
                )
            if not np.all(np.isfinite(arr)):
                raise ValidationError(f"vector for {word!r} is not finite")
            if not np.any(arr):
                raise ValidationError(f"vector for {word!r} is all zeros")
            self._vectors[str(word)] = arr
        self._dimension = dimension

    @property
    def dimension(self):
        return self._dimension

    def __len__(self):
        return len(self._vectors)

    def __contains__(self, word):
        return word in self._vectors

    def words(self):
        return sorted(self._vectors)

    def get(self, word):
        vec = self._vectors.get(word)
        return None if vec is None else vec.copy()

    def vector(self, word):
        vec = self._vectors.get(word)
        if vec is None:
            raise CoverageError(f"word {word!r} not in embedding table")
        return vec.copy()

    @classmethod
    def from_text_file(cls, path):
        vectors = {}
        with open(path, "r", encoding="utf-8") as handle:
            for lineno, line in enumerate(handle, start=1):
                line = line.strip()
                if not line:
                    continue
                parts = line.split()
                if len(parts) < 2:
                    raise ValidationError(
                        f"line {lineno}: expected 'word v1 v2 ...', got {line!r}"
                    )
                word = parts[0]
                try:
                    vec = [float(p) for p in parts[1:]]
                except ValueError as exc:
                    raise ValidationError(
                        f"line {lineno}: non-numeric component: {exc}"
                    ) from exc
                if word in vectors:
                    raise ValidationError(f"line {lineno}: duplicate word {word!r}")
                vectors[word] = vec
        return cls(vectors)

    def save_text_file(self, path):
        with open(path, "w", encoding="utf-8") as handle:
            for word in sorted(self._vectors):
                components = " ".join(
                    repr(float(v)) for v in self._vectors[word]
                )
                handle.write(f"{word} {components}\n")


_BUNDLED_CACHE = None


def bundled_table():
    """The demo table shipped inside the package, loaded once."""
    global _BUNDLED_CACHE
    if _BUNDLED_CACHE is None:
        source = resources.files("capcloak.data").joinpath(BUNDLED_TABLE)
        with resources.as_file(source) as path:
            _BUNDLED_CACHE = WordEmbeddingTable.from_text_file(path)
    return _BUNDLED_CACHE


def load_table(path=None):
    """Table at ``path``, or the bundled demo table when path is None."""
    if path is None:
        return bundled_table()
    return WordEmbeddingTable.from_text_file(path)


def phrase_embedding(phrase, table, backend=None):
    """Mean vector of a phrase's in-vocabulary content words.

    Multi-word objects are represented by the arithmetic mean of their
    word vectors.  Raises CoverageError naming the phrase when no word
    survives with coverage.
    """
    tokens = normalize_caption(phrase, backend=backend).tokens
    covered = [table.get(t) for t in tokens]
    covered = [v for v in covered if v is not None]
    if not covered:
        raise CoverageError(f"no vocabulary coverage for phrase {phrase!r}")
    return np.mean(np.stack(covered, axis=0), axis=0)
