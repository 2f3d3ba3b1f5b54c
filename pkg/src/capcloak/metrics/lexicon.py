"""Caption normalization: tokenize, drop function words, singularize.

The output of :func:`normalize_caption` is the list of lowercase,
singular-form content words that the presence checks and retention
metrics operate on.  The backend is pluggable behind a three-method
contract (``tokenize``, ``tag``, ``singularize``); the default is a
self-contained rule-based implementation with no external models, and
a frozen golden corpus in the test suite pins its behavior.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..exceptions import PipelineError, ValidationError

# Closed-class determiners, dropped from every caption.
DETERMINERS = frozenset("""
    a an the this that these those my your his her its our their some any
    no every each either neither both all several few many much most more
    less enough such what which whose another other
""".split())

# Closed-class pronouns, likewise dropped.
PRONOUNS = frozenset("""
    i me you he him she it we us they them mine yours hers ours theirs
    myself yourself himself herself itself ourselves yourselves themselves
    who whom someone somebody something anyone anybody anything everyone
    everybody everything nobody nothing oneself
""".split())

# Counts are not objects, so number words join the stopword list.
NUMBER_WORDS = frozenset("""
    zero one two three four five six seven eight nine ten eleven twelve
    thirteen fourteen fifteen sixteen seventeen eighteen nineteen twenty
    thirty forty fifty sixty seventy eighty ninety hundred thousand
    million billion dozen couple first second third fourth fifth sixth
    seventh eighth ninth tenth
""".split())

_FUNCTION_WORDS = frozenset("""
    and or but if then than as at by for from in into of off on onto out
    over under to up down with within without is am are was were be been
    being do does did done have has had having will would shall should can
    could may might must not nor so too very just there here where when
    while how why again once during before after above below between
    through about against because until unless near beside behind along
    across around among upon like also yes
""".split())

STOPWORDS = _FUNCTION_WORDS | NUMBER_WORDS

# Plural -> singular pairs the suffix rules get wrong.
_IRREGULAR_PLURALS = {
    "men": "man", "women": "woman", "children": "child", "people": "person",
    "mice": "mouse", "geese": "goose", "feet": "foot", "teeth": "tooth",
    "oxen": "ox", "wolves": "wolf", "knives": "knife", "wives": "wife",
    "lives": "life", "leaves": "leaf", "loaves": "loaf", "shelves": "shelf",
    "scarves": "scarf", "thieves": "thief", "halves": "half",
    "calves": "calf", "elves": "elf", "buses": "bus", "movies": "movie",
    "potatoes": "potato", "tomatoes": "tomato", "heroes": "hero",
    "echoes": "echo", "mosquitoes": "mosquito", "volcanoes": "volcano",
    "quizzes": "quiz", "skies": "sky",
}

# Words that look inflected but are already singular (or uncountable).
_UNINFLECTED = frozenset("""
    sheep deer fish series species news lens bus gas grass glass dress
    chess tennis analysis basis axis scissors pants shorts
""".split())

_TOKEN_RE = re.compile(r"[a-z0-9']+")


@dataclass(frozen=True)
class NormalizedCaption:
    """Content words of one caption plus the string they came from."""

    tokens: tuple
    source: str

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        if any(not t for t in self.tokens):
            raise ValidationError("normalized tokens must be nonempty strings")

    def __iter__(self):
        return iter(self.tokens)

    def __len__(self):
        return len(self.tokens)


class RuleBasedLexicon:
    """Default normalization backend: regex tokenizer, closed-class
    tagger, suffix-rule singularizer."""

    def tokenize(self, text):
        words = []
        for raw in _TOKEN_RE.findall(text.lower()):
            if raw.endswith("'s"):
                raw = raw[:-2]
            raw = raw.replace("'", "")
            # Pure digit runs carry no object information.
            if raw and not raw.isdigit():
                words.append(raw)
        return words

    def tag(self, tokens):
        tagged = []
        for token in tokens:
            if token in DETERMINERS:
                tag = "DET"
            elif token in PRONOUNS:
                tag = "PRON"
            elif token in NUMBER_WORDS:
                tag = "NUM"
            elif token in STOPWORDS:
                tag = "STOP"
            else:
                tag = "WORD"
            tagged.append((token, tag))
        return tagged

    def singularize(self, word):
        if word in _IRREGULAR_PLURALS:
            return _IRREGULAR_PLURALS[word]
        if word in _UNINFLECTED or len(word) <= 3:
            return word
        if word.endswith("ies") and len(word) > 4 and word[-4] not in "aeiou":
            return word[:-3] + "y"
        if word.endswith(("ches", "shes", "sses", "xes", "zes")):
            return word[:-2]
        if word.endswith("s") and not word.endswith(("ss", "us", "is")):
            return word[:-1]
        return word


_DEFAULT_LEXICON = RuleBasedLexicon()


def default_lexicon():
    return _DEFAULT_LEXICON


def normalize_caption(caption, backend=None):
    """Lowercase singular content words of a caption, in order.

    Drops stopwords, number words, punctuation, determiners, and
    pronouns; an empty token list is a legal outcome.
    """
    if not isinstance(caption, str):
        raise ValidationError("caption must be a string")
    if not caption.strip():
        raise ValidationError("caption empty")
    backend = backend or _DEFAULT_LEXICON
    try:
        tokens = backend.tokenize(caption)
        kept = [t for t in tokens if t not in STOPWORDS]
        singular = [backend.singularize(t) for t in kept]
        tagged = backend.tag(singular)
    except PipelineError:
        raise
    except Exception as exc:
        raise PipelineError(f"normalization backend failed: {exc}") from exc
    content = [t for t, tag in tagged if tag == "WORD"]
    return NormalizedCaption(tokens=tuple(content), source=caption)
