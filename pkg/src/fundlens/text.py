"""Lexicon-based word-category text features.

Each category score is the percentage of tokens that match any of the
category's entries, the classic word-count featurization. The bundled demo
lexicon is format-compatible with the full 92-category dictionary, which is
a drop-in replacement file.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

from .errors import SchemaError, SurrogateUnavailable

# Tokens are runs of letters/digits, with internal apostrophes kept ("don't").
_TOKEN = re.compile(r"[^\W_]+(?:'[^\W_]+)*", re.UNICODE)

#: Scale of the logistic map in the confidence-tone surrogate score.
CLOUT_SCALE = 2.0


def tokenize(text: str):
    """Lowercased tokens; split on anything that is not a letter, digit, or internal apostrophe."""
    return _TOKEN.findall(text.lower())


@dataclass
class LexiconEntry:
    pattern: str
    wildcard: bool
    categories: frozenset


@dataclass
class Lexicon:
    categories: list
    entries: list
    _exact: dict = field(default_factory=dict, repr=False)
    _prefixes: list = field(default_factory=list, repr=False)
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        for entry in self.entries:
            if entry.wildcard:
                self._prefixes.append((entry.pattern, entry.categories))
            else:
                prev = self._exact.get(entry.pattern, frozenset())
                self._exact[entry.pattern] = prev | entry.categories

    def category_index(self, name: str) -> Optional[int]:
        try:
            return self.categories.index(name)
        except ValueError:
            return None

    def match(self, token: str) -> frozenset:
        """Category indices the token counts toward."""
        hit = self._cache.get(token)
        if hit is not None:
            return hit
        cats = self._exact.get(token, frozenset())
        for prefix, idxs in self._prefixes:
            if token.startswith(prefix):
                cats = cats | idxs
        self._cache[token] = cats
        return cats


def load_lexicon(path=None) -> Lexicon:
    """Parse a %-delimited dictionary file.

    Header block: ``index<TAB>name`` lines between two ``%`` lines, then
    ``word[*]<TAB>index[,index...]`` entry lines. Category indices in the
    Lexicon follow file order of the header.
    """
    if path is None:
        raw = resources.files("fundlens.data").joinpath("demo_lexicon.dic").read_text("utf-8")
    else:
        raw = Path(path).read_text(encoding="utf-8")
    lines = raw.splitlines()
    delims = [i for i, ln in enumerate(lines) if ln.strip() == "%"]
    if len(delims) < 2:
        raise SchemaError("lexicon file lacks a %-delimited header block")
    header = lines[delims[0] + 1 : delims[1]]
    body = lines[delims[1] + 1 :]

    file_index_to_pos: dict = {}
    categories: list = []
    for ln in header:
        ln = ln.strip()
        if not ln:
            continue
        parts = ln.split("\t")
        if len(parts) != 2:
            raise SchemaError(f"bad lexicon header line: {ln!r}")
        idx, name = parts[0].strip(), parts[1].strip()
        if name in categories:
            raise SchemaError(f"duplicate category name: {name!r}")
        file_index_to_pos[idx] = len(categories)
        categories.append(name)

    entries: list = []
    for ln in body:
        ln = ln.strip()
        if not ln:
            continue
        parts = ln.split("\t", 1)
        if len(parts) != 2:
            raise SchemaError(f"bad lexicon entry line: {ln!r}")
        word = parts[0].strip().lower()
        if not word.rstrip("*"):
            raise SchemaError(f"empty lexicon pattern: {ln!r}")
        refs = [tok for tok in re.split(r"[,\t\s]+", parts[1].strip()) if tok]
        cats = set()
        for ref in refs:
            if ref not in file_index_to_pos:
                raise SchemaError(f"entry {word!r} references unknown category {ref!r}")
            cats.add(file_index_to_pos[ref])
        if not cats:
            raise SchemaError(f"entry {word!r} references no category")
        wildcard = word.endswith("*")
        entries.append(LexiconEntry(word.rstrip("*"), wildcard, frozenset(cats)))
    return Lexicon(categories=categories, entries=entries)


@dataclass
class TextFeatures:
    word_count: int
    percentages: dict  # category name -> 100 * hits / word_count
    clout_surrogate: Optional[float] = None  # flagged surrogate, never the licensed variable

    def validate(self) -> None:
        if self.word_count < 0:
            raise SchemaError("negative word_count")
        for name, pct in self.percentages.items():
            if not math.isfinite(pct) or not (0.0 <= pct <= 100.0):
                raise SchemaError(f"percentage out of range for {name!r}: {pct}")


def extract(text: str, lexicon: Lexicon) -> TextFeatures:
    """Per-category percentages of matching tokens.

    A token counting toward k categories adds one hit to each. Empty text
    yields word_count 0 and all-zero percentages.
    """
    tokens = tokenize(text)
    n = len(tokens)
    hits = [0] * len(lexicon.categories)
    for token in tokens:
        for ci in lexicon.match(token):
            hits[ci] += 1
    if n == 0:
        percentages = {name: 0.0 for name in lexicon.categories}
    else:
        percentages = {name: 100.0 * h / n for name, h in zip(lexicon.categories, hits)}
    feats = TextFeatures(word_count=n, percentages=percentages)
    feats.validate()
    return feats


def clout_surrogate(features: TextFeatures, scale: float = CLOUT_SCALE) -> float:
    """Confidence-tone score in [0, 100], a logistic map of we% + you% - i%.

    This stands in for the proprietary summary variable whose formula is
    unpublished; every report flags it as a surrogate.
    """
    for cat in ("we", "you", "i"):
        if cat not in features.percentages:
            raise SurrogateUnavailable(f"lexicon lacks required category {cat!r}")
    z = (features.percentages["we"] + features.percentages["you"] - features.percentages["i"]) / scale
    # Guard exp overflow for extreme inputs; limits are exactly 0 and 100.
    if z > 500:
        return 100.0
    if z < -500:
        return 0.0
    return 100.0 / (1.0 + math.exp(-z))


def campaign_text(title: str, description: str) -> str:
    """Title and description are featurized jointly, title first."""
    return f"{title} {description}".strip()
