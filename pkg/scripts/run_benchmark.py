#!/usr/bin/env python3
"""Tune and evaluate on a real dataset directory (no extraction).

Expects the ingestible layout: reports.jsonl, train_pairs.jsonl,
valid_pairs.jsonl, test_queries.txt, and optionally test_reports.txt.
Prints selection-rule counts over the test window and the plain-ranker
RR@k table; writes the tuned parameters and the evaluation report under
the workspace directory.
"""

import argparse
from pathlib import Path

from bugdedup.corpus import load_corpus
from bugdedup.evaluation import build_report, write_report
from bugdedup.pipeline import evaluate_queries
from bugdedup.ranker import (
    RankerParams,
    RankingContext,
    TuneOptions,
    save_params,
    tune,
)
from bugdedup.selection import SelectionRule, length_threshold, select


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--data", required=True, help="dataset directory")
    parser.add_argument("--workspace", default="workspace")
    parser.add_argument("--epochs", type=int, default=30)
    parser.add_argument("--lr", type=float, default=1e-3)
    parser.add_argument("--seed", type=int, default=42)
    args = parser.parse_args()

    corpus = load_corpus(args.data)
    print(f"loaded {len(corpus)} reports, {len(corpus.test_queries)} test queries")

    test_reports = [corpus.reports[i] for i in corpus.order
                    if i in corpus.test_report_ids]
    train_reports = [corpus.reports[i] for i in corpus.order
                     if i in corpus.train_report_ids]
    threshold = length_threshold(train_reports) if train_reports else 0
    for name, rule in (
        ("none", SelectionRule("none")),
        ("length", SelectionRule("length", threshold)),
        ("content", SelectionRule("content")),
        ("length+content", SelectionRule("length_or_content", threshold)),
    ):
        picked = select(test_reports, rule)
        print(f"selection {name:<15} {len(picked):>6} of {len(test_reports)}")

    ctx = RankingContext.build(corpus)
    params = tune(ctx, RankerParams(), corpus.train_pairs, corpus.valid_pairs,
                  TuneOptions(learning_rate=args.lr, epochs=args.epochs,
                              seed=args.seed))
    workspace = Path(args.workspace)
    workspace.mkdir(parents=True, exist_ok=True)
    save_params(params, workspace / "benchmark-model.params")

    preds = evaluate_queries(ctx, params, k_max=10)
    report = build_report(preds, 10)
    write_report(report, workspace / "benchmark-report.json")
    for k in (1, 2, 3, 4, 5, 10):
        print(f"RR@{k:<2} = {report.rr_at_k[k]:.3f}")


if __name__ == "__main__":
    main()
