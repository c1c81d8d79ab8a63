"""Deterministic text normalization feeding the indexers and extractors.

Text splits on runs of non-alphanumeric characters, so dotted
identifiers like ``java.lang.Error`` or ``org.apache.maven.plugins``
decompose into their constituent parts. Lowercasing, stopword removal,
and Porter stemming are configuration flags.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

from .stemmer import porter_stem

# Unicode alphanumeric runs; underscore is a separator, which also
# guarantees tokens never contain the bigram join character below.
_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)

BIGRAM_SEP = "_"

FIELDS = ("summary", "description")

DEFAULT_STOPWORDS = frozenset("""
a about above after again against all am an and any are as at be because been
before being below between both but by could did do does doing down during
each few for from further had has have having he her here hers herself him
himself his how i if in into is it its itself just me more most my myself no
nor not now of off on once only or other our ours ourselves out over own same
she should so some such than that the their theirs them themselves then there
these they this those through to too under until up very was we were what when
where which while who whom why will with you your yours yourself yourselves
""".split())


@dataclass(frozen=True)
class PrepConfig:
    """Normalization switches shared by every consumer of token streams."""

    lowercase: bool = True
    stopwords: frozenset[str] = field(default=DEFAULT_STOPWORDS)
    stemming: bool = False


DEFAULT_PREP = PrepConfig()


def load_stopwords(path: str | Path) -> frozenset[str]:
    """Read a stopword list, one term per line; blank lines ignored."""
    terms = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        term = line.strip()
        if term:
            terms.append(term.lower())
    return frozenset(terms)


def tokenize(text: str, cfg: PrepConfig = DEFAULT_PREP) -> list[str]:
    """Normalize text to a token list.

    Splitting keeps digits inside tokens; stopword membership is tested
    case-insensitively so the filter behaves the same whether or not
    lowercasing is enabled.
    """
    tokens = []
    for raw in _TOKEN_RE.findall(text):
        tok = raw.lower() if cfg.lowercase else raw
        if tok.lower() in cfg.stopwords:
            continue
        if cfg.stemming:
            tok = porter_stem(tok)
        if tok:
            tokens.append(tok)
    return tokens


def bigrams(tokens: list[str]) -> list[str]:
    """Adjacent token pairs joined by BIGRAM_SEP; n tokens give max(0, n-1)."""
    return [tokens[i] + BIGRAM_SEP + tokens[i + 1] for i in range(len(tokens) - 1)]
