"""Per-field corpus statistics and field-weighted textual similarity.

The similarity is document-side BM25F (per-field weights, per-field
length normalization, document term-frequency saturation) extended with
a query-side saturation factor, so repeated query terms also saturate::

    score(d, q) = sum over terms t shared by d and q of
                  idf(t) * TFD(d,t) / (k1 + TFD(d,t)) * WQ(q,t)

    TFD(d,t) = sum_f  w_f * tf(d,f,t) / (1 - b_f + b_f * len(d,f) / avg_len(f))
    WQ(q,t)  = (k3 + 1) * TFQ(q,t) / (k3 + TFQ(q,t))
    TFQ(q,t) = sum_f  w_f * tf(q,f,t)

with fields f in {summary, description}. idf is the natural log of
n_docs over document frequency; a term unseen at index time is treated
as occurring in every document and contributes nothing. When a field is
empty across the whole index its length normalization denominator is
taken as 1.

Analytic partial derivatives of the score with respect to the six
parameters are provided for the gradient-descent tuner; they are exact
for the formula above.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable

from .corpus import BugReport, Corpus
from .textprep import FIELDS, PrepConfig, DEFAULT_PREP, bigrams, tokenize

ORDERS = ("unigram", "bigram")


@dataclass
class Bm25fParams:
    """Six free parameters of one similarity instance."""

    k1: float = 2.0
    k3: float = 1.0
    w_summary: float = 3.0
    w_description: float = 1.0
    b_summary: float = 0.5
    b_description: float = 0.5

    def validate(self) -> None:
        if self.k1 < 0 or self.k3 < 0:
            raise ValueError("k1 and k3 must be non-negative")
        if self.w_summary < 0 or self.w_description < 0:
            raise ValueError("field weights must be non-negative")
        for b in (self.b_summary, self.b_description):
            if not 0.0 <= b <= 1.0:
                raise ValueError("b parameters must lie in [0, 1]")

    def as_list(self) -> list[float]:
        return [self.k1, self.k3, self.w_summary, self.w_description,
                self.b_summary, self.b_description]

    @classmethod
    def from_list(cls, values) -> "Bm25fParams":
        k1, k3, ws, wd, bs, bd = values
        return cls(k1=k1, k3=k3, w_summary=ws, w_description=wd,
                   b_summary=bs, b_description=bd)


def report_ngrams(report: BugReport, order: str, cfg: PrepConfig) -> tuple[list[str], list[str]]:
    """Token streams for (summary, description) at the given n-gram order."""
    if order not in ORDERS:
        raise ValueError(f"unknown n-gram order: {order}")
    streams = []
    for text in (report.summary, report.description):
        toks = tokenize(text, cfg)
        streams.append(bigrams(toks) if order == "bigram" else toks)
    return streams[0], streams[1]


class FieldIndex:
    """Corpus statistics for one n-gram order.

    doc_freq counts documents containing a term in either field;
    postings map each term to (doc id, tf in summary, tf in description)
    rows for the sparse ranking path.
    """

    def __init__(self, order: str, cfg: PrepConfig):
        self.order = order
        self.cfg = cfg
        self.n_docs = 0
        self.doc_freq: dict[str, int] = {}
        self.avg_len: dict[str, float] = {f: 0.0 for f in FIELDS}
        self.doc_len: dict[str, tuple[int, int]] = {}
        self.doc_tf: dict[str, tuple[Counter, Counter]] = {}
        self.postings: dict[str, list[tuple[str, int, int]]] = {}

    def add(self, report: BugReport) -> None:
        summary_toks, desc_toks = report_ngrams(report, self.order, self.cfg)
        tf_s, tf_d = Counter(summary_toks), Counter(desc_toks)
        self.doc_tf[report.id] = (tf_s, tf_d)
        self.doc_len[report.id] = (len(summary_toks), len(desc_toks))
        self.n_docs += 1
        for term in tf_s.keys() | tf_d.keys():
            self.doc_freq[term] = self.doc_freq.get(term, 0) + 1
            self.postings.setdefault(term, []).append(
                (report.id, tf_s.get(term, 0), tf_d.get(term, 0))
            )

    def finalize(self) -> None:
        if self.n_docs == 0:
            raise ValueError("cannot build an index over an empty corpus")
        total_s = sum(l for l, _ in self.doc_len.values())
        total_d = sum(l for _, l in self.doc_len.values())
        self.avg_len = {
            "summary": total_s / self.n_docs,
            "description": total_d / self.n_docs,
        }


def build_index(
    corpus: Corpus,
    order: str = "unigram",
    cfg: PrepConfig = DEFAULT_PREP,
    doc_ids: Iterable[str] | None = None,
) -> FieldIndex:
    """Index statistics over the corpus (or a subset) at one n-gram order."""
    index = FieldIndex(order, cfg)
    wanted = None if doc_ids is None else set(doc_ids)
    for rid in corpus.order:
        if wanted is not None and rid not in wanted:
            continue
        index.add(corpus.reports[rid])
    index.finalize()
    return index


def idf(index: FieldIndex, term: str) -> float:
    df = index.doc_freq.get(term, index.n_docs)
    if df <= 0 or df >= index.n_docs:
        return 0.0
    return math.log(index.n_docs / df)


@dataclass
class PairStats:
    """Parameter-independent statistics of one (document, query) pair.

    terms holds one row per term shared by both reports:
    (idf, tf in d.summary, tf in d.description, tf in q.summary,
    tf in q.description). ratio_* are the document's field lengths over
    the index averages (1.0 when the average is zero).
    """

    terms: list[tuple[float, int, int, int, int]]
    ratio_summary: float
    ratio_description: float


def collect_pair_stats(index: FieldIndex, d: BugReport, q: BugReport) -> PairStats:
    d_s, d_d = report_ngrams(d, index.order, index.cfg)
    q_s, q_d = report_ngrams(q, index.order, index.cfg)
    tf_ds, tf_dd = Counter(d_s), Counter(d_d)
    tf_qs, tf_qd = Counter(q_s), Counter(q_d)

    avg_s, avg_d = index.avg_len["summary"], index.avg_len["description"]
    ratio_s = len(d_s) / avg_s if avg_s > 0 else 1.0
    ratio_d = len(d_d) / avg_d if avg_d > 0 else 1.0

    shared = (tf_ds.keys() | tf_dd.keys()) & (tf_qs.keys() | tf_qd.keys())
    terms = []
    for term in shared:
        w = idf(index, term)
        if w <= 0.0:
            continue
        terms.append((
            w,
            tf_ds.get(term, 0), tf_dd.get(term, 0),
            tf_qs.get(term, 0), tf_qd.get(term, 0),
        ))
    return PairStats(terms=terms, ratio_summary=ratio_s, ratio_description=ratio_d)


def _norms(params: Bm25fParams, stats: PairStats) -> tuple[float, float]:
    bs, bd = params.b_summary, params.b_description
    return (
        1.0 - bs + bs * stats.ratio_summary,
        1.0 - bd + bd * stats.ratio_description,
    )


def score_from_stats(params: Bm25fParams, stats: PairStats) -> float:
    ws, wd = params.w_summary, params.w_description
    k1, k3 = params.k1, params.k3
    norm_s, norm_d = _norms(params, stats)
    total = 0.0
    for idf_t, tds, tdd, tqs, tqd in stats.terms:
        doc_mass = 0.0
        if tds and norm_s > 0:
            doc_mass += ws * tds / norm_s
        if tdd and norm_d > 0:
            doc_mass += wd * tdd / norm_d
        query_mass = ws * tqs + wd * tqd
        if doc_mass <= 0.0 or query_mass <= 0.0:
            continue
        saturated = doc_mass / (k1 + doc_mass)
        query_weight = (k3 + 1.0) * query_mass / (k3 + query_mass)
        total += idf_t * saturated * query_weight
    return total


def score_and_grad_from_stats(
    params: Bm25fParams, stats: PairStats
) -> tuple[float, list[float]]:
    """Score plus d(score)/d(k1, k3, w_summary, w_description, b_summary, b_description)."""
    ws, wd = params.w_summary, params.w_description
    k1, k3 = params.k1, params.k3
    norm_s, norm_d = _norms(params, stats)
    total = 0.0
    grad = [0.0] * 6
    for idf_t, tds, tdd, tqs, tqd in stats.terms:
        ds = ws * tds / norm_s if tds and norm_s > 0 else 0.0
        dd = wd * tdd / norm_d if tdd and norm_d > 0 else 0.0
        doc_mass = ds + dd
        query_mass = ws * tqs + wd * tqd
        if doc_mass <= 0.0 or query_mass <= 0.0:
            continue
        denom_doc = k1 + doc_mass
        denom_q = k3 + query_mass
        saturated = doc_mass / denom_doc
        query_weight = (k3 + 1.0) * query_mass / denom_q
        total += idf_t * saturated * query_weight

        # d(saturated)/d(doc_mass) and d(query_weight)/d(query_mass)
        dsat = k1 / (denom_doc * denom_doc)
        dqw = (k3 + 1.0) * k3 / (denom_q * denom_q)

        grad[0] += idf_t * query_weight * (-doc_mass / (denom_doc * denom_doc))
        grad[1] += idf_t * saturated * (
            query_mass * (query_mass - 1.0) / (denom_q * denom_q)
        )
        # field weights act on both sides
        d_doc_ws = tds / norm_s if tds and norm_s > 0 else 0.0
        d_doc_wd = tdd / norm_d if tdd and norm_d > 0 else 0.0
        grad[2] += idf_t * (query_weight * dsat * d_doc_ws + saturated * dqw * tqs)
        grad[3] += idf_t * (query_weight * dsat * d_doc_wd + saturated * dqw * tqd)
        # b parameters act through the document length normalization
        if tds and norm_s > 0:
            d_doc_bs = -ds / norm_s * (stats.ratio_summary - 1.0)
            grad[4] += idf_t * query_weight * dsat * d_doc_bs
        if tdd and norm_d > 0:
            d_doc_bd = -dd / norm_d * (stats.ratio_description - 1.0)
            grad[5] += idf_t * query_weight * dsat * d_doc_bd
    return total, grad


def score(index: FieldIndex, params: Bm25fParams, d: BugReport, q: BugReport) -> float:
    """Similarity of candidate d to query q under the index statistics.

    Both reports are tokenized fresh, so q may be a rewritten variant of
    an indexed report; corpus-level statistics (idf, average lengths)
    always come from the index.
    """
    return score_from_stats(params, collect_pair_stats(index, d, q))
