"""Regenerate the frozen demo word-vector table.

Each semantic cluster occupies its own orthogonal coordinate 2-plane of
a 32-dimensional space; a word at angle phi in its plane is
cos(phi)*e_even + sin(phi)*e_odd.  Within-cluster similarity is then
exactly cos(phi_a - phi_b) and cross-cluster similarity is exactly 0,
so threshold tests have designed margins instead of trained ones.

Design targets:
* synonym pairs (puppy/dog, sofa/couch, ...) sit well above the 0.7
  presence threshold;
* hill/mountain sits at cos 56.6 deg = 0.5505, deliberately below it;
* mean(teddy, bear) vs bear is cos 37.8 deg = 0.790, so the two-word
  phrase matches "bear" through the mean embedding while teddy alone
  (cos 75.6 deg = 0.249) does not.

Deterministic; run from the repository root:

    python3 tools/make_demo_wordvecs.py
"""

import math
import pathlib

DIMENSION = 32

# cluster -> list of (word, angle within the cluster plane, degrees)
CLUSTERS = [
    [("dog", 0.0), ("puppy", 25.0), ("canine", 18.0)],
    [("cat", 0.0), ("kitten", 25.0), ("feline", 18.0)],
    [("person", 0.0), ("man", 20.0), ("woman", 28.0), ("child", 35.0),
     ("boy", 24.0), ("girl", 32.0)],
    [("couch", 0.0), ("sofa", 15.0)],
    [("car", 0.0), ("vehicle", 22.0), ("truck", 30.0)],
    [("bear", 0.0), ("teddy", 75.6)],
    [("mountain", 0.0), ("hill", 56.6)],
    [("frisbee", 0.0), ("disc", 25.0)],
    [("surfboard", 0.0), ("board", 20.0)],
    [("ball", 0.0), ("toy", 40.0)],
    [("table", 0.0), ("desk", 25.0)],
    [("tree", 0.0), ("bush", 40.0)],
    [("bird", 0.0), ("parrot", 25.0)],
    [("horse", 0.0), ("pony", 25.0)],
    [("pizza", 0.0), ("pie", 35.0)],
    [("beach", 0.0), ("ocean", 38.0), ("water", 50.0)],
]


def build_vectors():
    assert 2 * len(CLUSTERS) <= DIMENSION
    vectors = {}
    for plane, members in enumerate(CLUSTERS):
        for word, degrees in members:
            assert word not in vectors, word
            phi = math.radians(degrees)
            vec = [0.0] * DIMENSION
            vec[2 * plane] = math.cos(phi)
            vec[2 * plane + 1] = math.sin(phi)
            vectors[word] = vec
    return vectors


def main():
    out = (
        pathlib.Path(__file__).resolve().parent.parent
        / "src" / "capcloak" / "data" / "wordvecs_demo.txt"
    )
    vectors = build_vectors()
    with open(out, "w", encoding="utf-8") as handle:
        for word in sorted(vectors):
            components = " ".join(repr(v) for v in vectors[word])
            handle.write(f"{word} {components}\n")
    print(f"wrote {len(vectors)} vectors of dimension {DIMENSION} to {out}")


if __name__ == "__main__":
    main()
