"""Seven-feature duplicate ranker with gradient-descent parameter tuning.

A (candidate, query) report pair is scored by a weighted sum of seven
features: textual similarity over unigrams, textual similarity over
bigrams, product/component/type equality, and reciprocal rank distance
of priority and version. The 7 feature weights plus the 6 similarity
parameters per n-gram order give 19 free parameters.

Tuning runs stochastic gradient descent on a pairwise logistic loss:
labeled duplicate pairs are randomly matched with labeled non-duplicate
pairs (re-matched every epoch from a seeded generator) and each couple
contributes log(1 + exp(-(s_dup - s_nondup))). After every update the
parameters are projected back to their valid ranges, and the parameter
vector with the best validation loss across epochs is returned.
"""

from __future__ import annotations

import math
import random
import re
from collections import Counter
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, NamedTuple

from . import bm25f
from .bm25f import Bm25fParams, FieldIndex, PairStats
from .corpus import BugReport, Corpus, LabeledPair, candidates_before
from .textprep import DEFAULT_PREP, PrepConfig

# Conventional Jira severity ladder; lookups are case-insensitive and
# unknown labels fall back to the missing-field convention (feature 0).
JIRA_PRIORITY_RANKS = {
    "blocker": 1,
    "critical": 2,
    "major": 3,
    "minor": 4,
    "trivial": 5,
}

PARAM_NAMES = (
    "w1", "w2", "w3", "w4", "w5", "w6", "w7",
    "uni.k1", "uni.k3", "uni.w_summary", "uni.w_description",
    "uni.b_summary", "uni.b_description",
    "bi.k1", "bi.k3", "bi.w_summary", "bi.w_description",
    "bi.b_summary", "bi.b_description",
)

N_PARAMS = len(PARAM_NAMES)


class FeatureVector(NamedTuple):
    f1: float
    f2: float
    f3: float
    f4: float
    f5: float
    f6: float
    f7: float


@dataclass
class RankerParams:
    """The 19 free parameters: 7 feature weights + 2x6 similarity params."""

    w: list[float] = field(default_factory=lambda: [1.0] * 7)
    uni: Bm25fParams = field(default_factory=Bm25fParams)
    bi: Bm25fParams = field(default_factory=Bm25fParams)

    def validate(self) -> None:
        if len(self.w) != 7:
            raise ValueError("expected exactly 7 feature weights")
        self.uni.validate()
        self.bi.validate()

    def copy(self) -> "RankerParams":
        return RankerParams(w=list(self.w), uni=replace(self.uni), bi=replace(self.bi))


def params_to_vector(params: RankerParams) -> list[float]:
    return list(params.w) + params.uni.as_list() + params.bi.as_list()


def vector_to_params(vec) -> RankerParams:
    if len(vec) != N_PARAMS:
        raise ValueError(f"expected {N_PARAMS} values, got {len(vec)}")
    return RankerParams(
        w=list(vec[:7]),
        uni=Bm25fParams.from_list(vec[7:13]),
        bi=Bm25fParams.from_list(vec[13:19]),
    )


def save_params(params: RankerParams, path: str | Path) -> None:
    """Flat key-value text file, one named parameter per line."""
    lines = [
        f"{name} = {value!r}"
        for name, value in zip(PARAM_NAMES, params_to_vector(params))
    ]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_params(path: str | Path) -> RankerParams:
    values: dict[str, float] = {}
    for line_no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"bad parameter line {line_no}: {line!r}")
        name, _, raw = line.partition("=")
        values[name.strip()] = float(raw.strip())
    missing = [n for n in PARAM_NAMES if n not in values]
    if missing:
        raise ValueError("parameter file missing entries: " + ", ".join(missing))
    extra = [n for n in values if n not in PARAM_NAMES]
    if extra:
        raise ValueError("parameter file has unknown entries: " + ", ".join(extra))
    params = vector_to_params([values[n] for n in PARAM_NAMES])
    params.validate()
    return params


def _natural_key(text: str):
    parts = re.split(r"(\d+)", text)
    return tuple(
        (0, int(p)) if p.isdigit() else (1, p.lower())
        for p in parts
        if p != ""
    )


@dataclass(frozen=True)
class CategoricalCodec:
    """Numeric interpretation of the priority and version labels."""

    priority_order: dict[str, int]
    version_order: dict[str, int]

    @classmethod
    def from_corpus(
        cls,
        corpus: Corpus,
        priority_table: dict[str, int] | None = None,
    ) -> "CategoricalCodec":
        table = priority_table if priority_table is not None else JIRA_PRIORITY_RANKS
        priority_order = {label.casefold(): rank for label, rank in table.items()}
        versions = sorted(
            {r.version for r in corpus.reports.values() if r.version},
            key=_natural_key,
        )
        version_order = {v: rank for rank, v in enumerate(versions, start=1)}
        return cls(priority_order=priority_order, version_order=version_order)

    def priority_rank(self, label: str | None) -> int | None:
        if not label:
            return None
        return self.priority_order.get(label.casefold())

    def version_rank(self, label: str | None) -> int | None:
        if not label:
            return None
        return self.version_order.get(label)


def _categorical_features(codec: CategoricalCodec, d: BugReport, q: BugReport):
    def equal(a, b):
        return 1.0 if a is not None and b is not None and a == b else 0.0

    f3 = equal(d.product, q.product)
    f4 = equal(d.component, q.component)
    f5 = equal(d.type, q.type)

    def reciprocal(rank_d, rank_q):
        if rank_d is None or rank_q is None:
            return 0.0
        return 1.0 / (1.0 + abs(rank_d - rank_q))

    f6 = reciprocal(codec.priority_rank(d.priority), codec.priority_rank(q.priority))
    f7 = reciprocal(codec.version_rank(d.version), codec.version_rank(q.version))
    return f3, f4, f5, f6, f7


@dataclass
class RankingContext:
    """Immutable indices and codec shared by ranking, tuning, and evaluation."""

    corpus: Corpus
    uni_index: FieldIndex
    bi_index: FieldIndex
    codec: CategoricalCodec
    cfg: PrepConfig = DEFAULT_PREP

    @classmethod
    def build(
        cls,
        corpus: Corpus,
        cfg: PrepConfig = DEFAULT_PREP,
        priority_table: dict[str, int] | None = None,
    ) -> "RankingContext":
        return cls(
            corpus=corpus,
            uni_index=bm25f.build_index(corpus, "unigram", cfg),
            bi_index=bm25f.build_index(corpus, "bigram", cfg),
            codec=CategoricalCodec.from_corpus(corpus, priority_table),
            cfg=cfg,
        )


def features(
    ctx: RankingContext, params: RankerParams, d: BugReport, q: BugReport
) -> FeatureVector:
    f1 = bm25f.score(ctx.uni_index, params.uni, d, q)
    f2 = bm25f.score(ctx.bi_index, params.bi, d, q)
    f3, f4, f5, f6, f7 = _categorical_features(ctx.codec, d, q)
    return FeatureVector(f1, f2, f3, f4, f5, f6, f7)


def weighted_score(params: RankerParams, fv: FeatureVector) -> float:
    return sum(w * f for w, f in zip(params.w, fv))


def _length_norms(index: FieldIndex, bparams: Bm25fParams):
    """Per-document length normalization denominators for one index."""
    avg_s = index.avg_len["summary"]
    avg_d = index.avg_len["description"]
    bs, bd = bparams.b_summary, bparams.b_description
    norms = {}
    for doc, (ls, ld) in index.doc_len.items():
        rs = ls / avg_s if avg_s > 0 else 1.0
        rd = ld / avg_d if avg_d > 0 else 1.0
        norms[doc] = (1.0 - bs + bs * rs, 1.0 - bd + bd * rd)
    return norms


def _accumulate_text_scores(
    index: FieldIndex,
    bparams: Bm25fParams,
    query: BugReport,
    cand_set: set[str],
    weight: float,
    acc: dict[str, float],
) -> None:
    """Add weight * similarity(candidate, query) for every candidate
    sharing at least one term with the query, via the postings lists."""
    q_s, q_d = bm25f.report_ngrams(query, index.order, index.cfg)
    tf_qs, tf_qd = Counter(q_s), Counter(q_d)
    ws, wd = bparams.w_summary, bparams.w_description
    k1, k3 = bparams.k1, bparams.k3
    norms = _length_norms(index, bparams)

    for term in tf_qs.keys() | tf_qd.keys():
        idf_t = bm25f.idf(index, term)
        if idf_t <= 0.0:
            continue
        query_mass = ws * tf_qs.get(term, 0) + wd * tf_qd.get(term, 0)
        if query_mass <= 0.0:
            continue
        factor = weight * idf_t * (k3 + 1.0) * query_mass / (k3 + query_mass)
        for doc, tds, tdd in index.postings.get(term, ()):
            if doc not in cand_set:
                continue
            norm_s, norm_d = norms[doc]
            doc_mass = 0.0
            if tds and norm_s > 0:
                doc_mass += ws * tds / norm_s
            if tdd and norm_d > 0:
                doc_mass += wd * tdd / norm_d
            if doc_mass <= 0.0:
                continue
            acc[doc] = acc.get(doc, 0.0) + factor * doc_mass / (k1 + doc_mass)


def rank(
    ctx: RankingContext,
    params: RankerParams,
    query: str,
    k: int,
    *,
    query_report: BugReport | None = None,
    bucket_score: str = "max",
) -> list[tuple[str, float]]:
    """Top-k candidate buckets for a query, as (master id, score) pairs.

    Candidates are every report strictly earlier than the query. A
    bucket scores as the max over its candidate members ("max", the
    default) or as its master's score alone ("master"). Ties break
    toward the bucket with the earlier master.

    query_report, when given, substitutes the query's text (e.g. a
    keyword-rewritten variant); candidate-side reports always keep their
    indexed text.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if bucket_score not in ("max", "master"):
        raise ValueError(f"unknown bucket_score mode: {bucket_score}")
    corpus = ctx.corpus
    qrep = query_report if query_report is not None else corpus.report(query)
    cands = candidates_before(corpus, query)
    if not cands:
        return []
    cand_set = set(cands)

    text_acc: dict[str, float] = {}
    _accumulate_text_scores(ctx.uni_index, params.uni, qrep, cand_set, params.w[0], text_acc)
    _accumulate_text_scores(ctx.bi_index, params.bi, qrep, cand_set, params.w[1], text_acc)

    w_cat = params.w[2:7]
    best: dict[str, float] = {}
    for cid in cands:
        crep = corpus.reports[cid]
        cat = _categorical_features(ctx.codec, crep, qrep)
        total = text_acc.get(cid, 0.0) + sum(w * f for w, f in zip(w_cat, cat))
        master = corpus.bucket_of[cid]
        if bucket_score == "master":
            if cid == master:
                best[master] = total
        elif master not in best or total > best[master]:
            best[master] = total

    ordered = sorted(
        best.items(),
        key=lambda item: (-item[1], corpus.reports[item[0]].sort_key),
    )
    return ordered[:k]


# ---------------------------------------------------------------------------
# Tuning


@dataclass
class TuneOptions:
    learning_rate: float = 1e-3
    epochs: int = 30
    seed: int = 42


@dataclass
class PairData:
    """Parameter-independent statistics of one labeled pair, oriented
    with the earlier report on the document side."""

    uni: PairStats
    bi: PairStats
    cat: tuple[float, float, float, float, float]


def build_pair_data(ctx: RankingContext, pair: LabeledPair) -> PairData:
    a = ctx.corpus.report(pair.a)
    b = ctx.corpus.report(pair.b)
    d, q = (a, b) if a.sort_key <= b.sort_key else (b, a)
    return PairData(
        uni=bm25f.collect_pair_stats(ctx.uni_index, d, q),
        bi=bm25f.collect_pair_stats(ctx.bi_index, d, q),
        cat=_categorical_features(ctx.codec, d, q),
    )


def pair_score_and_grad(data: PairData, params: RankerParams) -> tuple[float, list[float]]:
    s_uni, g_uni = bm25f.score_and_grad_from_stats(params.uni, data.uni)
    s_bi, g_bi = bm25f.score_and_grad_from_stats(params.bi, data.bi)
    fv = (s_uni, s_bi) + data.cat
    score = sum(w * f for w, f in zip(params.w, fv))
    grad = list(fv)
    grad += [params.w[0] * g for g in g_uni]
    grad += [params.w[1] * g for g in g_bi]
    return score, grad


def _softplus(x: float) -> float:
    if x > 30.0:
        return x
    return math.log1p(math.exp(x))


def _sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def pairwise_loss_and_grad(
    couples: Iterable[tuple[PairData, PairData]], params: RankerParams
) -> tuple[float, list[float]]:
    """Mean pairwise logistic loss over (duplicate, non-duplicate)
    couples and its gradient in all 19 parameters."""
    couples = list(couples)
    if not couples:
        raise ValueError("no couples to evaluate")
    total = 0.0
    grad = [0.0] * N_PARAMS
    for pos, neg in couples:
        s_pos, g_pos = pair_score_and_grad(pos, params)
        s_neg, g_neg = pair_score_and_grad(neg, params)
        margin = s_pos - s_neg
        total += _softplus(-margin)
        coef = -_sigmoid(-margin)
        for j in range(N_PARAMS):
            grad[j] += coef * (g_pos[j] - g_neg[j])
    n = len(couples)
    return total / n, [g / n for g in grad]


def _project(params: RankerParams) -> None:
    for bp in (params.uni, params.bi):
        bp.k1 = max(0.0, bp.k1)
        bp.k3 = max(0.0, bp.k3)
        bp.w_summary = max(0.0, bp.w_summary)
        bp.w_description = max(0.0, bp.w_description)
        bp.b_summary = min(1.0, max(0.0, bp.b_summary))
        bp.b_description = min(1.0, max(0.0, bp.b_description))


def _matched_couples(dups: list, nons: list, rng: random.Random):
    d = list(dups)
    n = list(nons)
    rng.shuffle(d)
    rng.shuffle(n)
    m = min(len(d), len(n))
    return list(zip(d[:m], n[:m]))


def tune(
    ctx: RankingContext,
    params: RankerParams,
    train: list[LabeledPair],
    valid: list[LabeledPair],
    opts: TuneOptions = TuneOptions(),
) -> RankerParams:
    """SGD over matched pair couples; returns the best-on-validation
    parameters (the starting point counts as a candidate).

    Validation couples are matched once from the seed and held fixed so
    epoch losses are comparable; training couples are re-matched every
    epoch. When the validation pairs lack one of the two classes, the
    training pairs stand in for checkpoint selection.
    """
    params = params.copy()
    params.validate()

    dups = [build_pair_data(ctx, p) for p in train if p.is_duplicate]
    nons = [build_pair_data(ctx, p) for p in train if not p.is_duplicate]
    if not dups or not nons:
        raise ValueError("training pairs must include both classes")

    vdups = [build_pair_data(ctx, p) for p in valid if p.is_duplicate]
    vnons = [build_pair_data(ctx, p) for p in valid if not p.is_duplicate]
    if not vdups or not vnons:
        vdups, vnons = dups, nons

    valid_couples = _matched_couples(vdups, vnons, random.Random(opts.seed))

    best = params.copy()
    best_loss, _ = pairwise_loss_and_grad(valid_couples, params)

    lr = opts.learning_rate
    for epoch in range(opts.epochs):
        rng = random.Random(opts.seed * 1_000_003 + epoch + 1)
        for pos, neg in _matched_couples(dups, nons, rng):
            _, grad = pairwise_loss_and_grad([(pos, neg)], params)
            vec = params_to_vector(params)
            params = vector_to_params([v - lr * g for v, g in zip(vec, grad)])
            _project(params)
        loss, _ = pairwise_loss_and_grad(valid_couples, params)
        if loss < best_loss:
            best_loss = loss
            best = params.copy()
    return best
