"""Command-line front end.

Subcommands: ingest, stats, select, extract, tune, rank, eval,
pipeline. Machine-readable output (JSON lines, report files) goes to
stdout and files; diagnostics and the effective-config header go to
stderr. Usage errors (bad flags, missing files) exit 2; runtime
failures exit 1.

Flag precedence for the pipeline command: CLI flag > config file >
built-in default.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__, evaluation, keywords, ranker
from .bm25f import build_index
from .corpus import Corpus, CorpusError, load_corpus
from .llm import ApiError, LlmClient, LlmConfig, TransportError
from .pipeline import PipelineConfig, evaluate_queries, run_pipeline
from .ranker import RankerParams, RankingContext, TuneOptions, load_params, save_params, tune
from .selection import SelectionRule, length_threshold, select
from .textprep import DEFAULT_PREP, PrepConfig, load_stopwords

RULE_NAMES = {"none": "none", "content": "content", "length": "length",
              "both": "length_or_content"}


class UsageError(Exception):
    """Bad invocation (missing files, inconsistent flags); exits 2."""


def _echo_config(command: str, values: dict, label: str = "config") -> None:
    print(f"# {command} {label}: " + json.dumps(values, sort_keys=True, default=str),
          file=sys.stderr)


def _require_file(path: str | Path, what: str) -> Path:
    path = Path(path)
    if not path.exists():
        raise UsageError(f"{what} not found: {path}")
    return path


def _prep_from_args(args) -> PrepConfig:
    if getattr(args, "stopwords", None):
        return PrepConfig(stopwords=load_stopwords(_require_file(args.stopwords, "stopword list")))
    return DEFAULT_PREP


def _load_corpus_from_args(args) -> Corpus:
    return load_corpus(
        _require_file(args.corpus, "corpus"),
        train_pairs_path=args.train_pairs,
        valid_pairs_path=args.valid_pairs,
        queries_path=args.queries,
        test_reports_path=args.test_reports,
    )


def _add_corpus_flags(sub, required: bool = True) -> None:
    sub.add_argument("--corpus", required=required,
                     help="reports JSONL file or dataset directory")
    sub.add_argument("--train-pairs", default=None)
    sub.add_argument("--valid-pairs", default=None)
    sub.add_argument("--queries", default=None)
    sub.add_argument("--test-reports", default=None)
    sub.add_argument("--stopwords", default=None, help="stopword list, one term per line")


def _resolve_rule(name: str, corpus: Corpus) -> SelectionRule:
    kind = RULE_NAMES[name]
    if kind in ("length", "length_or_content"):
        train_ids = corpus.train_report_ids or frozenset(corpus.reports)
        train = [corpus.reports[i] for i in corpus.order if i in train_ids]
        return SelectionRule(kind, length_threshold(train))
    return SelectionRule(kind)


def _scope_reports(corpus: Corpus, scope: str):
    if scope == "all" or not corpus.test_report_ids:
        return [corpus.reports[i] for i in corpus.order]
    return [corpus.reports[i] for i in corpus.order if i in corpus.test_report_ids]


def _corpus_stats(corpus: Corpus) -> dict:
    return {
        "reports": len(corpus),
        "buckets": len(corpus.buckets),
        "duplicates": sum(len(b.members) - 1 for b in corpus.buckets),
        "train_pairs": len(corpus.train_pairs),
        "valid_pairs": len(corpus.valid_pairs),
        "test_queries": len(corpus.test_queries),
        "test_reports": len(corpus.test_report_ids),
    }


# ---------------------------------------------------------------------------
# Commands

def cmd_ingest(args) -> int:
    corpus = _load_corpus_from_args(args)
    print(json.dumps(_corpus_stats(corpus)))
    return 0


def cmd_stats(args) -> int:
    corpus = _load_corpus_from_args(args)
    stats = _corpus_stats(corpus)
    sizes = sorted(len(b.members) for b in corpus.buckets)
    hist: dict[int, int] = {}
    for s in sizes:
        hist[s] = hist.get(s, 0) + 1
    stats["bucket_size_histogram"] = {str(k): v for k, v in sorted(hist.items())}
    train_ids = corpus.train_report_ids or frozenset(corpus.reports)
    train = [corpus.reports[i] for i in corpus.order if i in train_ids]
    if train:
        stats["description_p75_words"] = length_threshold(train)
    print(json.dumps(stats))
    return 0


def cmd_select(args) -> int:
    corpus = _load_corpus_from_args(args)
    reports = _scope_reports(corpus, args.scope)
    rules = list(RULE_NAMES) if args.rule == "all" else [args.rule]
    for name in rules:
        rule = _resolve_rule(name, corpus)
        picked = select(reports, rule)
        row = {"rule": name, "selected": len(picked), "total": len(reports)}
        if rule.length_threshold is not None:
            row["length_threshold"] = rule.length_threshold
        print(json.dumps(row))
    return 0


def _make_client(args) -> LlmClient:
    if not args.endpoint:
        raise UsageError("the llm extractor requires --endpoint")
    cfg = LlmConfig(
        endpoint=args.endpoint,
        model_name=args.model,
        temperature=args.temperature,
        seed=args.seed,
        timeout=args.timeout,
    )
    return LlmClient(cfg)


def _resolve_template(args) -> keywords.PromptTemplate:
    if getattr(args, "template_file", None):
        return keywords.load_template(
            _require_file(args.template_file, "template file"))
    return keywords.BUILTIN_TEMPLATES[args.template]


def cmd_extract(args) -> int:
    corpus = _load_corpus_from_args(args)
    prep = _prep_from_args(args)
    rule = _resolve_rule(args.rule, corpus)
    reports = select(_scope_reports(corpus, args.scope), rule)
    template = _resolve_template(args)

    workspace = Path(args.workspace)
    cache = keywords.KeywordCache(
        workspace / f"keywords-{args.extractor}-{template.name}.jsonl"
    )
    stats_index = None
    client = None
    if args.extractor == "tfidf":
        train_ids = corpus.train_report_ids or frozenset(corpus.reports)
        stats_index = build_index(corpus, "unigram", prep, doc_ids=train_ids)
    elif args.extractor == "llm":
        client = _make_client(args)

    runs = args.runs if args.runs else (5 if args.extractor == "llm" else 1)
    fresh = cached = failed = 0
    for run in range(1, runs + 1):
        for report in reports:
            if cache.get(report.id, template.name, run) is not None:
                cached += 1
                continue
            try:
                if args.extractor == "tfidf":
                    result = keywords.extract_tfidf(report, stats_index, args.n_best)
                elif args.extractor == "yake":
                    result = keywords.extract_yake(report, args.n_best)
                else:
                    result = keywords.extract_llm(report, template, client)
            except keywords.ExtractionError as exc:
                print(f"warning: {exc}", file=sys.stderr)
                failed += 1
                continue
            cache.put(report.id, template.name, run, result)
            fresh += 1
    print(json.dumps({
        "extractor": args.extractor, "template": template.name,
        "selected": len(reports), "runs": runs,
        "extracted": fresh, "cached": cached, "failed": failed,
        "cache": str(cache.path),
    }))
    return 0


def cmd_tune(args) -> int:
    corpus = _load_corpus_from_args(args)
    if not corpus.train_pairs:
        raise UsageError("corpus has no training pairs")
    ctx = RankingContext.build(corpus, _prep_from_args(args))
    params = load_params(_require_file(args.init, "initial parameters")) \
        if args.init else RankerParams()
    opts = TuneOptions(learning_rate=args.lr, epochs=args.epochs, seed=args.seed)
    tuned = tune(ctx, params, corpus.train_pairs, corpus.valid_pairs, opts)
    out = Path(args.out) if args.out else Path(args.workspace) / "model.params"
    out.parent.mkdir(parents=True, exist_ok=True)
    save_params(tuned, out)
    print(json.dumps({"written": str(out), "epochs": args.epochs}))
    return 0


def _load_model(args) -> RankerParams:
    if args.model_path:
        return load_params(_require_file(args.model_path, "model parameters"))
    print("# no --model-path given; using default parameters", file=sys.stderr)
    return RankerParams()


def cmd_rank(args) -> int:
    corpus = _load_corpus_from_args(args)
    ctx = RankingContext.build(corpus, _prep_from_args(args))
    params = _load_model(args)
    ranked = ranker.rank(ctx, params, args.query, args.k,
                         bucket_score=args.bucket_score)
    for master, score in ranked:
        print(f"{master}\t{score:.6f}")
    return 0


def cmd_eval(args) -> int:
    if args.compare:
        a = evaluation.read_report(_require_file(args.compare[0], "report"))
        b = evaluation.read_report(_require_file(args.compare[1], "report"))
        counts = evaluation.overlap_counts(a.per_query, b.per_query, args.k)
        if args.out:
            evaluation.write_overlap_csv(counts, args.out)
        print(json.dumps(counts._asdict()))
        return 0

    if not args.corpus:
        raise UsageError("eval needs --corpus (or --compare with two reports)")
    corpus = _load_corpus_from_args(args)
    if not corpus.test_queries:
        raise UsageError("corpus has no test queries to evaluate")
    ctx = RankingContext.build(corpus, _prep_from_args(args))
    params = _load_model(args)
    preds = evaluate_queries(ctx, params, k_max=args.k_max,
                             bucket_score=args.bucket_score, jobs=args.jobs)
    report = evaluation.build_report(preds, args.k_max)
    out = Path(args.out) if args.out else Path(args.workspace) / "eval-report.json"
    evaluation.write_report(report, out)
    print(json.dumps({
        "report": str(out),
        "n_total": report.n_total,
        "rr_at_k": {str(k): round(v, 6) for k, v in sorted(report.rr_at_k.items())},
    }))
    return 0


def _load_kv_config(path: Path) -> dict[str, str]:
    values = {}
    for line_no, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"bad config line {line_no} in {path}: {line!r}")
        key, _, raw = line.partition("=")
        values[key.strip()] = raw.strip()
    return values


def cmd_pipeline(args) -> int:
    file_cfg: dict[str, str] = {}
    if args.config:
        file_cfg = _load_kv_config(_require_file(args.config, "config file"))

    def setting(flag_value, key, default, cast=str):
        if flag_value is not None:
            return flag_value
        if key in file_cfg:
            return cast(file_cfg[key])
        return default

    rule_name = setting(args.rule, "rule", "none")
    extractor = setting(args.extractor, "extractor", "none")
    template_name = setting(args.template, "template", "final")
    runs = setting(args.runs, "runs", None, int)
    k_max = setting(args.k_max, "k_max", 10, int)
    n_best = setting(args.n_best, "n_best", 10, int)
    bucket_score = setting(args.bucket_score, "bucket_score", "max")
    dedup = setting(args.dedup, "dedup", "on") == "on"
    model_path = setting(args.model_path, "model_path", None)
    args.model_path = model_path
    args.template = template_name
    template = _resolve_template(args)

    corpus = _load_corpus_from_args(args)
    prep = _prep_from_args(args)
    cfg = PipelineConfig(
        rule=_resolve_rule(rule_name, corpus),
        extractor=extractor,
        template=template.name,
        runs=runs,
        k_max=k_max,
        n_best=n_best,
        dedup=dedup,
        bucket_score=bucket_score,
    )
    _echo_config("pipeline", {
        "rule": rule_name, "extractor": extractor, "template": template.name,
        "runs": cfg.resolved_runs, "k_max": k_max, "n_best": n_best,
        "dedup": dedup, "bucket_score": bucket_score, "model_path": model_path,
        "corpus": args.corpus, "workspace": args.workspace, "jobs": args.jobs,
    })

    params = _load_model(args)
    client = _make_client(args) if extractor == "llm" else None
    cache = None
    if extractor == "llm":
        cache = keywords.KeywordCache(
            Path(args.workspace) / f"keywords-llm-{template.name}.jsonl"
        )
    report = run_pipeline(corpus, cfg, params, client=client, cache=cache,
                          prep=prep, jobs=args.jobs, template=template)
    out = Path(args.out) if args.out else Path(args.workspace) / "pipeline-report.json"
    evaluation.write_report(report, out)
    print(json.dumps({
        "report": str(out),
        "n_total": report.n_total,
        "runs_averaged": report.runs_averaged,
        "rr_at_k": {str(k): round(v, 6) for k, v in sorted(report.rr_at_k.items())},
    }))
    return 0


# ---------------------------------------------------------------------------
# Parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bugdedup",
        description="Duplicate bug report retrieval and evaluation.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    def common(sub, corpus_required=True):
        _add_corpus_flags(sub, required=corpus_required)
        sub.add_argument("--workspace", default="workspace",
                         help="directory for caches, models, and reports")
        sub.add_argument("--jobs", type=int, default=1,
                         help="worker parallelism cap for ranking/extraction")

    p = subs.add_parser("ingest", help="validate and load a corpus, print stats")
    common(p)
    p.set_defaults(func=cmd_ingest)

    p = subs.add_parser("stats", help="corpus statistics")
    common(p)
    p.set_defaults(func=cmd_stats)

    p = subs.add_parser("select", help="selection-rule counts")
    common(p)
    p.add_argument("--rule", default="all", choices=[*RULE_NAMES, "all"])
    p.add_argument("--scope", default="test", choices=["test", "all"])
    p.set_defaults(func=cmd_select)

    p = subs.add_parser("extract", help="run a keyword extractor into the cache")
    common(p)
    p.add_argument("--extractor", required=True, choices=["tfidf", "yake", "llm"])
    p.add_argument("--template", default="final", choices=sorted(keywords.BUILTIN_TEMPLATES))
    p.add_argument("--template-file", default=None,
                   help="custom prompt template file (overrides --template)")
    p.add_argument("--rule", "--select", dest="rule", default="content",
                   choices=list(RULE_NAMES))
    p.add_argument("--scope", default="test", choices=["test", "all"])
    p.add_argument("--runs", type=int, default=None)
    p.add_argument("--n-best", type=int, default=10)
    p.add_argument("--endpoint", default=None, help="chat-completions base URL")
    p.add_argument("--model", default="gpt-3.5-turbo", help="LLM model name")
    p.add_argument("--temperature", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--timeout", type=float, default=60.0)
    p.set_defaults(func=cmd_extract)

    p = subs.add_parser("tune", help="fit ranker parameters on labeled pairs")
    common(p)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--init", default=None, help="starting parameter file")
    p.add_argument("--out", default=None, help="parameter file to write")
    p.set_defaults(func=cmd_tune)

    p = subs.add_parser("rank", help="top-k candidate masters for one query")
    common(p)
    p.add_argument("--query", required=True)
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--model-path", default=None)
    p.add_argument("--bucket-score", default="max", choices=["max", "master"])
    p.set_defaults(func=cmd_rank)

    p = subs.add_parser("eval", help="evaluate over test queries, or compare reports")
    common(p, corpus_required=False)
    p.add_argument("--model-path", default=None)
    p.add_argument("--k-max", type=int, default=10)
    p.add_argument("--k", type=int, default=10, help="k for --compare overlap")
    p.add_argument("--bucket-score", default="max", choices=["max", "master"])
    p.add_argument("--compare", nargs=2, metavar=("REPORT_A", "REPORT_B"),
                   default=None, help="overlap counts between two report files")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_eval)

    p = subs.add_parser("pipeline", help="select, extract, rank, evaluate")
    common(p)
    p.add_argument("--config", default=None, help="key=value config file")
    p.add_argument("--rule", "--select", dest="rule", default=None,
                   choices=list(RULE_NAMES))
    p.add_argument("--extractor", default=None, choices=["none", "tfidf", "yake", "llm"])
    p.add_argument("--template", default=None, choices=sorted(keywords.BUILTIN_TEMPLATES))
    p.add_argument("--template-file", default=None,
                   help="custom prompt template file (overrides --template)")
    p.add_argument("--dedup", default=None, choices=["on", "off"],
                   help="deduplicate extracted keywords before rewriting")
    p.add_argument("--runs", type=int, default=None)
    p.add_argument("--k-max", type=int, default=None)
    p.add_argument("--n-best", type=int, default=None)
    p.add_argument("--bucket-score", default=None, choices=["max", "master"])
    p.add_argument("--model-path", default=None)
    p.add_argument("--endpoint", default=None)
    p.add_argument("--model", default="gpt-3.5-turbo")
    p.add_argument("--temperature", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--timeout", type=float, default=60.0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_pipeline)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    effective = {k: v for k, v in vars(args).items() if k not in ("func", "command")}
    _echo_config(args.command, effective, label="args")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (CorpusError, TransportError, ApiError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
