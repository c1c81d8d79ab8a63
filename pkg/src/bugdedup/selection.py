"""Stage-1 rules choosing which query reports go through keyword extraction.

The content rule fires on descriptions containing dotted identifiers
(fully qualified class names, namespaced identifiers, stack-trace
frames) or URLs. The length rule fires on descriptions longer than a
word-count threshold, conventionally the 75th percentile of training
description lengths.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

from .corpus import BugReport

# \w pinned to [A-Za-z0-9_]; both patterns search unanchored.
DOTTED_IDENTIFIER_RE = re.compile(r"\w+\.\w+\.\w{1,}", re.ASCII)
URL_RE = re.compile(r"https?://\S+", re.ASCII)

RULE_KINDS = ("none", "content", "length", "length_or_content")


@dataclass(frozen=True)
class SelectionRule:
    kind: str = "none"
    length_threshold: int | None = None

    def __post_init__(self):
        if self.kind not in RULE_KINDS:
            raise ValueError(f"unknown selection rule kind: {self.kind}")
        needs_length = self.kind in ("length", "length_or_content")
        if needs_length and self.length_threshold is None:
            raise ValueError(f"rule {self.kind} requires a length_threshold")
        if not needs_length and self.length_threshold is not None:
            raise ValueError(f"rule {self.kind} takes no length_threshold")


def matches_content(description: str) -> bool:
    return bool(
        DOTTED_IDENTIFIER_RE.search(description) or URL_RE.search(description)
    )


def word_count(text: str) -> int:
    """Whitespace-delimited words, the unit of the length rule."""
    return len(text.split())


def length_threshold(train_reports: list[BugReport]) -> int:
    """Nearest-rank 75th percentile of description word counts."""
    lengths = sorted(word_count(r.description) for r in train_reports)
    if not lengths:
        raise ValueError("cannot compute a length threshold over no reports")
    rank = math.ceil(0.75 * len(lengths))
    return lengths[rank - 1]


def _matches(report: BugReport, rule: SelectionRule) -> bool:
    if rule.kind == "none":
        return True
    content = matches_content(report.description)
    if rule.kind == "content":
        return content
    long = word_count(report.description) > rule.length_threshold
    if rule.kind == "length":
        return long
    return long or content


def select(reports: list[BugReport], rule: SelectionRule) -> list[BugReport]:
    """Order-preserving filter; the ``none`` rule keeps everything."""
    return [r for r in reports if _matches(r, rule)]
