"""Three-stage orchestration: select, extract and rewrite, rank.

Only query (test) reports are ever rewritten; repository-side reports
keep their original text and the index statistics are computed once
from the originals. A failed extraction logs a warning and the query
falls back to its original text, so the evaluation denominator never
shrinks. With several runs configured the final report averages RR@k
across runs and preserves each run's ranked lists.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from . import keywords as kw_mod
from .bm25f import FieldIndex, build_index
from .corpus import Corpus
from .evaluation import EvalReport, RankedPrediction, average_reports, build_report
from .keywords import ExtractionError, KeywordCache, KeywordResult
from .ranker import RankerParams, RankingContext, rank
from .selection import SelectionRule, select
from .textprep import DEFAULT_PREP, PrepConfig

log = logging.getLogger("bugdedup.pipeline")

EXTRACTORS = ("none", "tfidf", "yake", "llm")


@dataclass
class PipelineConfig:
    rule: SelectionRule = field(default_factory=SelectionRule)
    extractor: str = "none"
    template: str = "final"
    runs: int | None = None
    k_max: int = 10
    n_best: int = 10
    dedup: bool = True
    bucket_score: str = "max"
    # Index statistics are never recomputed from rewritten queries;
    # the flag records that choice.
    reindex_queries: bool = False

    def __post_init__(self):
        if self.extractor not in EXTRACTORS:
            raise ValueError(f"unknown extractor: {self.extractor}")
        if self.k_max < 1:
            raise ValueError("k_max must be >= 1")
        if self.runs is not None and self.runs < 1:
            raise ValueError("runs must be >= 1")
        if self.reindex_queries:
            raise ValueError("reindex_queries is not supported; statistics are static")

    @property
    def resolved_runs(self) -> int:
        if self.runs is not None:
            return self.runs
        return 5 if self.extractor == "llm" else 1


def evaluate_queries(
    ctx: RankingContext,
    params: RankerParams,
    queries: list[str] | None = None,
    k_max: int = 10,
    *,
    bucket_score: str = "max",
    query_overrides: dict | None = None,
    jobs: int = 1,
) -> list[RankedPrediction]:
    """Rank every query against its prior candidates; top-k_max masters."""
    corpus = ctx.corpus
    if queries is None:
        queries = corpus.test_queries
    if not queries:
        raise ValueError("no queries to evaluate")
    overrides = query_overrides or {}

    def one(query: str) -> RankedPrediction:
        ranked = rank(
            ctx, params, query, k_max,
            query_report=overrides.get(query),
            bucket_score=bucket_score,
        )
        return RankedPrediction(
            query=query,
            ranked_masters=[master for master, _ in ranked],
            truth_master=corpus.bucket_of[query],
        )

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(one, queries))
    return [one(q) for q in queries]


def _extract_one(
    report,
    cfg: PipelineConfig,
    stats: FieldIndex | None,
    client,
    cache: KeywordCache | None,
    run: int,
    template=None,
) -> KeywordResult:
    if cfg.extractor == "tfidf":
        return kw_mod.extract_tfidf(report, stats, cfg.n_best)
    if cfg.extractor == "yake":
        return kw_mod.extract_yake(report, cfg.n_best)
    if template is None:
        template = kw_mod.BUILTIN_TEMPLATES[cfg.template]
    if cache is not None:
        hit = cache.get(report.id, template.name, run)
        if hit is not None:
            return hit
    result = kw_mod.extract_llm(report, template, client)
    if cache is not None:
        cache.put(report.id, template.name, run, result)
    return result


def run_pipeline(
    corpus: Corpus,
    cfg: PipelineConfig,
    params: RankerParams,
    *,
    client=None,
    cache: KeywordCache | None = None,
    prep: PrepConfig = DEFAULT_PREP,
    ctx: RankingContext | None = None,
    jobs: int = 1,
    template=None,
) -> EvalReport:
    """Run selection, extraction and ranked evaluation over the test queries.

    template, when given, overrides the built-in prompt template named
    by cfg.template (e.g. one loaded from a file).
    """
    if cfg.extractor == "llm" and client is None:
        raise ValueError("the llm extractor needs a client")
    if ctx is None:
        ctx = RankingContext.build(corpus, prep)
    queries = corpus.test_queries
    if not queries:
        raise ValueError("corpus has no test queries")

    query_reports = [corpus.report(q) for q in queries]
    selected = {r.id for r in select(query_reports, cfg.rule)}

    stats: FieldIndex | None = None
    if cfg.extractor == "tfidf":
        train_ids = corpus.train_report_ids or frozenset(corpus.reports)
        stats = build_index(corpus, "unigram", prep, doc_ids=train_ids)

    runs = []
    for run in range(1, cfg.resolved_runs + 1):
        overrides = {}

        def extract(qid: str):
            report = corpus.report(qid)
            try:
                result = _extract_one(report, cfg, stats, client, cache, run,
                                      template=template)
            except ExtractionError as exc:
                log.warning("run %d: %s; using original text", run, exc)
                return qid, None
            return qid, kw_mod.rewrite_report(report, result, cfg.dedup)

        to_extract = [q for q in queries if q in selected and cfg.extractor != "none"]
        if jobs > 1 and cfg.extractor == "llm":
            with ThreadPoolExecutor(max_workers=jobs) as pool:
                results = list(pool.map(extract, to_extract))
        else:
            results = [extract(q) for q in to_extract]
        for qid, rewritten in results:
            if rewritten is not None:
                overrides[qid] = rewritten

        preds = evaluate_queries(
            ctx, params, queries, cfg.k_max,
            bucket_score=cfg.bucket_score,
            query_overrides=overrides,
            jobs=jobs,
        )
        runs.append(build_report(preds, cfg.k_max))
    return average_reports(runs)
