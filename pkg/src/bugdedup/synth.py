"""Seeded synthetic corpora with planted duplicate pairs.

The generator buries a weak signal in heavy, realistic-looking noise:

* every description carries ~35 dotted identifiers drawn from one of a
  dozen topic vocabularies, so unrelated reports on the same topic look
  highly similar to a bag-of-terms ranker (decoys);
* a block of common filler words appears in every report, pinning their
  document frequency to the corpus size;
* each report gets a few junk tokens unique to it;
* each planted duplicate pair shares three rare signal identifiers that
  appear nowhere else.

Plain textual ranking is dominated by the topic noise, while frequency
statistics identify the signal tokens immediately, which is exactly the
regime keyword-extraction preprocessing is supposed to rescue.
"""

from __future__ import annotations

import json
import random
from datetime import datetime, timedelta
from pathlib import Path

from .corpus import (
    Corpus,
    BugReport,
    LabeledPair,
    QUERIES_FILE,
    REPORTS_FILE,
    TRAIN_PAIRS_FILE,
    VALID_PAIRS_FILE,
)

COMMON_WORDS = (
    "system job output process cluster node task worker config startup "
    "runtime service daemon request response logging build testing deploy "
    "running"
).split()

_NAMESPACES = ("org", "com", "io")


def _topic_vocab(topic: int, size: int = 40) -> list[str]:
    return [
        f"{_NAMESPACES[j % len(_NAMESPACES)]}.lib{topic}.u{topic}x{j}"
        for j in range(size)
    ]


def generate_corpus(
    seed: int = 7,
    n_unique: int = 120,
    n_pairs: int = 40,
    n_topics: int = 12,
    noise_identifiers: int = 35,
    train_fraction: float = 0.85,
) -> Corpus:
    """Corpus of n_unique singleton reports plus n_pairs (master, dup)
    pairs; the duplicates are the test queries and arrive last."""
    rng = random.Random(seed)
    topics = [_topic_vocab(t) for t in range(n_topics)]
    base = datetime(2021, 1, 1)
    counter = 0

    def next_id() -> str:
        nonlocal counter
        counter += 1
        return f"BUG-{counter:04d}"

    def make_report(rid, minute, topic, signal=None, duplicate_of=None):
        junk = [f"j{rid.lower().replace('-', '')}q{j}" for j in range(8)]
        summary_words = rng.sample(COMMON_WORDS, 6) + junk[:2]
        rng.shuffle(summary_words)

        desc: list[str] = list(COMMON_WORDS)
        desc += [rng.choice(topics[topic]) for _ in range(noise_identifiers)]
        desc += junk
        if signal:
            for ident in signal:
                desc += [ident] * 3
        rng.shuffle(desc)
        return BugReport(
            id=rid,
            created_at=base + timedelta(minutes=minute),
            summary=" ".join(summary_words),
            description=" ".join(desc),
            duplicate_of=duplicate_of,
        )

    reports: list[BugReport] = []
    masters: dict[int, str] = {}
    signals = [
        [f"err.trace.s{i}a", f"err.trace.s{i}b", f"err.trace.s{i}c"]
        for i in range(n_pairs)
    ]

    # Early period: singletons and the pair masters, interleaved.
    early: list[tuple[int | None, int]] = [(None, i % n_topics) for i in range(n_unique)]
    early += [(i, i % n_topics) for i in range(n_pairs)]
    rng.shuffle(early)
    for minute, (pair_idx, topic) in enumerate(early):
        rid = next_id()
        signal = signals[pair_idx] if pair_idx is not None else None
        reports.append(make_report(rid, minute, topic, signal))
        if pair_idx is not None:
            masters[pair_idx] = rid

    # Late period: the duplicate queries, on a different topic than
    # their master so topic noise points at decoys.
    queries = []
    for i in range(n_pairs):
        rid = next_id()
        topic = (i + n_topics // 2) % n_topics
        reports.append(
            make_report(rid, len(early) + i, topic, signals[i], duplicate_of=masters[i])
        )
        queries.append(rid)

    dup_pairs = [LabeledPair(masters[i], queries[i], True) for i in range(n_pairs)]
    all_ids = [r.id for r in reports]
    bucket: dict[str, int] = {}
    for i in range(n_pairs):
        bucket[masters[i]] = i
        bucket[queries[i]] = i
    non_dup_pairs = []
    while len(non_dup_pairs) < n_pairs:
        a, b = rng.sample(all_ids, 2)
        if a in bucket and bucket.get(a) == bucket.get(b):
            continue
        non_dup_pairs.append(LabeledPair(a, b, False))

    cut = max(1, int(train_fraction * n_pairs))
    train_pairs = dup_pairs[:cut] + non_dup_pairs[:cut]
    valid_pairs = dup_pairs[cut:] + non_dup_pairs[cut:]

    threshold = min(r.sort_key for r in reports if r.id in set(queries))
    return Corpus(
        reports={r.id: r for r in reports},
        train_pairs=train_pairs,
        valid_pairs=valid_pairs,
        test_queries=queries,
        test_report_ids=frozenset(
            r.id for r in reports if r.sort_key >= threshold
        ),
    )


def write_corpus_files(corpus: Corpus, directory: str | Path) -> Path:
    """Write a corpus in the ingestible JSONL layout; returns the directory."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)

    with open(directory / REPORTS_FILE, "w", encoding="utf-8") as fh:
        for rid in corpus.order:
            r = corpus.reports[rid]
            fh.write(json.dumps({
                "bug_id": r.id,
                "created_at": r.created_at.isoformat(),
                "summary": r.summary,
                "description": r.description,
                "product": r.product,
                "component": r.component,
                "type": r.type,
                "priority": r.priority,
                "version": r.version,
                "duplicate_of": r.duplicate_of,
            }) + "\n")

    def write_pairs(pairs, name):
        with open(directory / name, "w", encoding="utf-8") as fh:
            for p in pairs:
                fh.write(json.dumps({"a": p.a, "b": p.b, "label": int(p.is_duplicate)}) + "\n")

    write_pairs(corpus.train_pairs, TRAIN_PAIRS_FILE)
    write_pairs(corpus.valid_pairs, VALID_PAIRS_FILE)
    (directory / QUERIES_FILE).write_text(
        "".join(q + "\n" for q in corpus.test_queries), encoding="utf-8"
    )
    return directory
