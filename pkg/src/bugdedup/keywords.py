"""Keyword extraction and report rewriting.

Three extractors share one output shape: an ordered keyword list per
text field plus the raw extractor output for audit.

* TF-IDF scores unigram terms by tf * log2(N / (1 + df)) against
  document frequencies from a reference index (conventionally built
  over the training-period reports).
* YAKE is single-document: five per-term statistics (casing, sentence
  position, normalized frequency, left/right neighbor dispersion,
  sentence spread) combine into a lower-is-better term score S(w), and
  1-3 gram sliding-window candidates score as
  prod(S) / (freq * (1 + sum(S))).
* The LLM extractor renders a prompt template, sends it through a
  chat-completions client, and parses "Summary: [...]" and
  "Description: [...]" lines. A response without the two labeled lines
  counts as a format failure; the query is repeated up to five times
  and, failing that, the mixed list is used for both fields.

Rewriting replaces only the summary and description of a report with
the comma-joined keywords; every other field is untouched.
"""

from __future__ import annotations

import json
import math
import re
import statistics
from collections import Counter
from dataclasses import dataclass, field, replace
from pathlib import Path

from .bm25f import FieldIndex
from .corpus import BugReport
from .llm import ApiError, TransportError
from .textprep import DEFAULT_STOPWORDS, tokenize


class ExtractionError(RuntimeError):
    """Extractor failed for a specific report (carries the report id)."""


@dataclass
class KeywordResult:
    summary_kw: list[str] = field(default_factory=list)
    description_kw: list[str] = field(default_factory=list)
    raw: str = ""

    def deduplicated(self) -> "KeywordResult":
        return KeywordResult(
            summary_kw=unique_keywords(self.summary_kw),
            description_kw=unique_keywords(self.description_kw),
            raw=self.raw,
        )


def unique_keywords(items: list[str]) -> list[str]:
    seen = set()
    out = []
    for item in items:
        if item not in seen:
            seen.add(item)
            out.append(item)
    return out


# ---------------------------------------------------------------------------
# Prompt templates

_PLACEHOLDERS = ("{{Summary}}", "{{Description}}")


@dataclass(frozen=True)
class PromptTemplate:
    name: str
    body: str

    def __post_init__(self):
        for ph in _PLACEHOLDERS:
            if self.body.count(ph) != 1:
                raise ValueError(f"template {self.name!r} must contain {ph} exactly once")

    def render(self, report: BugReport) -> str:
        return (
            self.body
            .replace("{{Summary}}", report.summary)
            .replace("{{Description}}", report.description)
        )


BUILTIN_TEMPLATES = {
    t.name: t
    for t in (
        PromptTemplate(
            name="final",
            body=(
                "Identify keywords from the summary and description of the bug "
                "report that can be used to detect duplicates.\n"
                "Output format:\n"
                "Summary: [Selected Keywords]\n"
                "Description: [Selected Keywords]\n"
                "\n"
                "Summary: {{Summary}}\n"
                "Description: {{Description}}"
            ),
        ),
        PromptTemplate(
            name="concise",
            body=(
                "Identify keywords from the bug report to detect duplicates.\n"
                "\n"
                "Output format:\n"
                "Summary: [Selected Keywords]\n"
                "Description: [Selected Keywords]\n"
                "\n"
                "Summary: {{Summary}}\n"
                "Description: {{Description}}"
            ),
        ),
        PromptTemplate(
            name="verbose",
            body=(
                "Review the summary and description of the bug report to "
                "identify specific keywords that can be used as criteria for "
                "detecting duplicate reports. Consider the language used, "
                "technical terms, and any unique identifiers mentioned in the "
                "report.\n"
                "\n"
                "Output format:\n"
                "Summary: [Selected Keywords]\n"
                "Description: [Selected Keywords]\n"
                "\n"
                "Summary: {{Summary}}\n"
                "Description: {{Description}}"
            ),
        ),
    )
}


def load_template(path: str | Path, name: str | None = None) -> PromptTemplate:
    path = Path(path)
    return PromptTemplate(name=name or path.stem, body=path.read_text(encoding="utf-8"))


# ---------------------------------------------------------------------------
# TF-IDF

def extract_tfidf(report: BugReport, stats: FieldIndex, n_best: int = 10) -> KeywordResult:
    """Top-n_best unigram terms per field by tf * log2(N / (1 + df)).

    df and N come from the reference index, so a term may score a
    negative idf (df + 1 > N) and sort last. Ties break toward the
    term's first occurrence in the field.
    """
    if stats.order != "unigram":
        raise ValueError("TF-IDF extraction needs a unigram reference index")
    n_docs = stats.n_docs

    def per_field(text: str) -> list[str]:
        toks = tokenize(text, stats.cfg)
        if not toks:
            return []
        tf = Counter(toks)
        first: dict[str, int] = {}
        for i, tok in enumerate(toks):
            first.setdefault(tok, i)
        scored = sorted(
            tf,
            key=lambda t: (
                -tf[t] * math.log2(n_docs / (1 + stats.doc_freq.get(t, 0))),
                first[t],
            ),
        )
        return scored[:n_best]

    return KeywordResult(
        summary_kw=per_field(report.summary),
        description_kw=per_field(report.description),
    )


def tfidf_score(tf: int, df: int, n_docs: int) -> float:
    """The raw extractor score, exposed for verification."""
    return tf * math.log2(n_docs / (1 + df))


# ---------------------------------------------------------------------------
# YAKE

_WORD_RE = re.compile(r"[^\W_]+", re.UNICODE)
# Sentence boundary: ./!/? runs followed by whitespace or end (so dotted
# identifiers survive), or newlines.
_SENT_RE = re.compile(r"[.!?]+(?=\s|$)|\n+")

_YAKE_WINDOW = 1
_YAKE_MAX_NGRAM = 3


def _yake_sentences(text: str) -> list[list[str]]:
    sentences = []
    for chunk in _SENT_RE.split(text):
        toks = _WORD_RE.findall(chunk)
        if toks:
            sentences.append(toks)
    return sentences


def yake_term_scores(text: str) -> dict[str, float]:
    """Lower-is-better S(w) for each distinct (lowercased) term."""
    sentences = _yake_sentences(text)
    if not sentences:
        return {}

    tf: Counter = Counter()
    tf_upper: Counter = Counter()
    tf_acronym: Counter = Counter()
    sent_of: dict[str, set[int]] = {}
    left: dict[str, Counter] = {}
    right: dict[str, Counter] = {}

    for s_idx, sent in enumerate(sentences):
        for i, raw in enumerate(sent):
            term = raw.lower()
            tf[term] += 1
            if len(raw) > 1 and raw.isupper():
                tf_acronym[term] += 1
            elif raw[0].isupper() and i > 0:
                tf_upper[term] += 1
            sent_of.setdefault(term, set()).add(s_idx)
            lo = max(0, i - _YAKE_WINDOW)
            for j in range(lo, i):
                left.setdefault(term, Counter())[sent[j].lower()] += 1
            hi = min(len(sent), i + 1 + _YAKE_WINDOW)
            for j in range(i + 1, hi):
                right.setdefault(term, Counter())[sent[j].lower()] += 1

    counts = list(tf.values())
    mean_tf = statistics.fmean(counts)
    std_tf = statistics.pstdev(counts)
    max_tf = max(counts)
    n_sentences = len(sentences)

    scores = {}
    for term, freq in tf.items():
        w_case = max(tf_upper[term], tf_acronym[term]) / (1.0 + math.log(freq))
        median_sent = statistics.median(sorted(sent_of[term]))
        w_pos = math.log(math.log(3.0 + median_sent))
        w_freq = freq / (mean_tf + std_tf)
        l_counter = left.get(term, Counter())
        r_counter = right.get(term, Counter())
        wl = len(l_counter) / sum(l_counter.values()) if l_counter else 0.0
        wr = len(r_counter) / sum(r_counter.values()) if r_counter else 0.0
        w_rel = 1.0 + (wl + wr) * freq / max_tf
        w_dif = len(sent_of[term]) / n_sentences
        scores[term] = (w_rel * w_pos) / (w_case + w_freq / w_rel + w_dif / w_rel)
    return scores


def yake_candidates(
    text: str, stopwords: frozenset[str] = DEFAULT_STOPWORDS
) -> list[tuple[str, float]]:
    """All 1-3 gram candidates as (phrase, score), best (lowest) first.

    Ties break toward the earlier first occurrence in the text.
    """
    sentences = _yake_sentences(text)
    if not sentences:
        return []
    term_scores = yake_term_scores(text)

    cand_tf: Counter = Counter()
    first_seen: dict[tuple[str, ...], int] = {}
    offset = 0
    for sent in sentences:
        lowered = [t.lower() for t in sent]
        for i in range(len(lowered)):
            for n in range(1, _YAKE_MAX_NGRAM + 1):
                if i + n > len(lowered):
                    break
                gram = tuple(lowered[i:i + n])
                if gram[0] in stopwords or gram[-1] in stopwords:
                    continue
                cand_tf[gram] += 1
                first_seen.setdefault(gram, offset + i)
        offset += len(sent)

    def cand_score(gram: tuple[str, ...]) -> float:
        member = [term_scores[t] for t in gram]
        return math.prod(member) / (cand_tf[gram] * (1.0 + sum(member)))

    ordered = sorted(cand_tf, key=lambda g: (cand_score(g), first_seen[g]))
    return [(" ".join(g), cand_score(g)) for g in ordered]


def _yake_field(text: str, n_best: int, stopwords: frozenset[str]) -> list[str]:
    return [phrase for phrase, _ in yake_candidates(text, stopwords)[:n_best]]


def extract_yake(
    report: BugReport,
    n_best: int = 10,
    stopwords: frozenset[str] = DEFAULT_STOPWORDS,
) -> KeywordResult:
    """Single-document extraction; independent of any corpus statistics.

    Candidates never start or end with a stopword; interior stopwords
    are allowed and contribute their term scores.
    """
    return KeywordResult(
        summary_kw=_yake_field(report.summary, n_best, stopwords),
        description_kw=_yake_field(report.description, n_best, stopwords),
    )


# ---------------------------------------------------------------------------
# LLM response parsing and extraction

_LABEL_RE = re.compile(r"^\s*(summary|description)\s*:\s*(.*)$", re.IGNORECASE)
_MIXED_LABEL_RE = re.compile(r"^\s*key\s*words?\s*:\s*", re.IGNORECASE)


def parse_keyword_list(text: str) -> list[str]:
    """Comma-separated keywords, with or without surrounding brackets."""
    text = text.strip()
    if text.startswith("[") and text.endswith("]"):
        text = text[1:-1]
    items = [item.strip().strip("[]").strip() for item in text.split(",")]
    return [item for item in items if item]


def parse_labeled_response(text: str) -> tuple[list[str] | None, list[str] | None]:
    """First "Summary:" and "Description:" lines of a response, parsed
    as keyword lists; None for a label that never appears."""
    summary = description = None
    for line in text.splitlines():
        m = _LABEL_RE.match(line)
        if not m:
            continue
        items = parse_keyword_list(m.group(2))
        if m.group(1).lower() == "summary":
            if summary is None:
                summary = items
        elif description is None:
            description = items
    return summary, description


def parse_mixed_list(text: str) -> list[str]:
    """Best-effort keyword list from a response that ignored the format."""
    parts = []
    for line in text.splitlines():
        line = _MIXED_LABEL_RE.sub("", line.strip())
        if line:
            parts.append(line)
    return parse_keyword_list(", ".join(parts))


LLM_FORMAT_ATTEMPTS = 5


def extract_llm(
    report: BugReport,
    template: PromptTemplate,
    client,
    max_format_attempts: int = LLM_FORMAT_ATTEMPTS,
) -> KeywordResult:
    """Prompt the client and parse its response.

    A response with both labeled lines parses directly. Otherwise the
    same query is repeated, max_format_attempts requests in total, and
    if every response stays mixed (or empty) the mixed list is used as
    both the summary and the description keywords.
    """
    last = ""
    for _ in range(max_format_attempts):
        try:
            last = client.complete(template.render(report))
        except (TransportError, ApiError) as exc:
            raise ExtractionError(
                f"extraction failed for report {report.id}: {exc}"
            ) from exc
        summary, description = parse_labeled_response(last)
        if summary is not None and description is not None:
            return KeywordResult(summary_kw=summary, description_kw=description, raw=last)
    mixed = parse_mixed_list(last)
    return KeywordResult(summary_kw=list(mixed), description_kw=list(mixed), raw=last)


# ---------------------------------------------------------------------------
# Rewriting and the on-disk cache

def rewrite_report(report: BugReport, kw: KeywordResult, dedup: bool = True) -> BugReport:
    """Replace summary/description with comma-joined keywords; every
    other field stays byte-identical."""
    effective = kw.deduplicated() if dedup else kw
    return replace(
        report,
        summary=", ".join(effective.summary_kw),
        description=", ".join(effective.description_kw),
    )


class KeywordCache:
    """Append-only JSONL cache keyed by (report id, template, run index)."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._data: dict[tuple[str, str, int], KeywordResult] = {}
        if self.path.exists():
            with open(self.path, encoding="utf-8") as fh:
                for line in fh:
                    if not line.strip():
                        continue
                    rec = json.loads(line)
                    key = (rec["report_id"], rec["template"], int(rec["run"]))
                    self._data[key] = KeywordResult(
                        summary_kw=list(rec["summary_kw"]),
                        description_kw=list(rec["description_kw"]),
                        raw=rec.get("raw", ""),
                    )

    def __len__(self) -> int:
        return len(self._data)

    def get(self, report_id: str, template: str, run: int) -> KeywordResult | None:
        return self._data.get((report_id, template, run))

    def put(self, report_id: str, template: str, run: int, result: KeywordResult) -> None:
        self._data[(report_id, template, run)] = result
        record = {
            "report_id": report_id,
            "template": template,
            "run": run,
            "summary_kw": result.summary_kw,
            "description_kw": result.description_kw,
            "raw": result.raw,
        }
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with open(self.path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(record) + "\n")
