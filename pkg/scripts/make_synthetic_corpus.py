#!/usr/bin/env python3
"""Generate a seeded synthetic corpus in the ingestible JSONL layout."""

import argparse

from bugdedup import synth


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--unique", type=int, default=120,
                        help="singleton reports")
    parser.add_argument("--pairs", type=int, default=40,
                        help="planted duplicate pairs (the test queries)")
    args = parser.parse_args()

    corpus = synth.generate_corpus(seed=args.seed, n_unique=args.unique,
                                   n_pairs=args.pairs)
    out = synth.write_corpus_files(corpus, args.out)
    print(f"wrote {len(corpus)} reports, {len(corpus.test_queries)} queries -> {out}")


if __name__ == "__main__":
    main()
