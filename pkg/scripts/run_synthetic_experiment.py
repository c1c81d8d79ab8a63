#!/usr/bin/env python3
"""Compare extractors on a seeded synthetic corpus.

Runs the full pipeline once per extractor (none, tfidf, yake, and llm
when an endpoint is given) over the same corpus, ranking context, and
parameters, then prints an RR@k table. The synthetic corpus buries the
duplicate signal under topic noise, so the "none" row is the floor the
extractors have to beat.
"""

import argparse

from bugdedup import synth
from bugdedup.keywords import KeywordCache
from bugdedup.llm import LlmClient, LlmConfig
from bugdedup.pipeline import PipelineConfig, run_pipeline
from bugdedup.ranker import RankerParams, RankingContext, TuneOptions, tune


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--unique", type=int, default=120)
    parser.add_argument("--pairs", type=int, default=40)
    parser.add_argument("--tune", action="store_true",
                        help="tune parameters on the synthetic pairs first")
    parser.add_argument("--epochs", type=int, default=10)
    parser.add_argument("--endpoint", default=None,
                        help="chat-completions base URL; enables the llm row")
    parser.add_argument("--model", default="gpt-3.5-turbo")
    parser.add_argument("--cache", default="workspace/synthetic-llm-cache.jsonl")
    args = parser.parse_args()

    corpus = synth.generate_corpus(seed=args.seed, n_unique=args.unique,
                                   n_pairs=args.pairs)
    ctx = RankingContext.build(corpus)
    params = RankerParams()
    if args.tune:
        params = tune(ctx, params, corpus.train_pairs, corpus.valid_pairs,
                      TuneOptions(epochs=args.epochs))
        print(f"tuned on {len(corpus.train_pairs)} pairs for {args.epochs} epochs")

    extractors = ["none", "tfidf", "yake"]
    if args.endpoint:
        extractors.append("llm")

    rows = {}
    for extractor in extractors:
        cfg = PipelineConfig(extractor=extractor,
                             runs=1 if extractor != "llm" else None)
        client = cache = None
        if extractor == "llm":
            client = LlmClient(LlmConfig(endpoint=args.endpoint,
                                         model_name=args.model))
            cache = KeywordCache(args.cache)
        report = run_pipeline(corpus, cfg, params, client=client, cache=cache,
                              ctx=ctx)
        rows[extractor] = report.rr_at_k

    ks = [1, 2, 3, 4, 5, 10]
    print()
    print("extractor  " + "".join(f"RR@{k:<5}" for k in ks))
    for extractor, rr in rows.items():
        print(f"{extractor:<10}" + "".join(f"{rr[k]:<8.3f}" for k in ks))


if __name__ == "__main__":
    main()
