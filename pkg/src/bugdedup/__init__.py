"""Duplicate bug report retrieval.

Rule-based selection of hard reports, keyword-extraction preprocessing
(statistical or LLM-backed), field-weighted textual ranking with
gradient-tuned parameters, and a recall-rate evaluation harness.
"""

from .corpus import BugReport, Bucket, Corpus, CorpusError, LabeledPair, load_corpus
from .textprep import PrepConfig
from .bm25f import Bm25fParams, FieldIndex, build_index
from .ranker import (
    CategoricalCodec,
    FeatureVector,
    RankerParams,
    RankingContext,
    TuneOptions,
    rank,
    tune,
)
from .selection import SelectionRule, matches_content, select
from .keywords import (
    KeywordResult,
    PromptTemplate,
    extract_llm,
    extract_tfidf,
    extract_yake,
    rewrite_report,
)
from .llm import LlmClient, LlmConfig, MockLlmClient
from .pipeline import PipelineConfig, run_pipeline
from .evaluation import EvalReport, RankedPrediction, overlap_counts, recall_rate

__version__ = "0.1.0"

__all__ = [
    "BugReport", "Bucket", "Corpus", "CorpusError", "LabeledPair", "load_corpus",
    "PrepConfig", "Bm25fParams", "FieldIndex", "build_index",
    "CategoricalCodec", "FeatureVector", "RankerParams", "RankingContext",
    "TuneOptions", "rank", "tune",
    "SelectionRule", "matches_content", "select",
    "KeywordResult", "PromptTemplate", "extract_llm", "extract_tfidf",
    "extract_yake", "rewrite_report",
    "LlmClient", "LlmConfig", "MockLlmClient",
    "PipelineConfig", "run_pipeline",
    "EvalReport", "RankedPrediction", "overlap_counts", "recall_rate",
]
