"""Independent straight-line evaluators used as test oracles.

Everything here re-derives statistics from raw token lists with plain
loops and the written-out formulas. None of it calls into the package's
indexing, scoring, or metric code, so an agreement between an oracle
and the engine is evidence, not a tautology.
"""

from __future__ import annotations

import math

FIELDS = ("summary", "description")


def straightline_bm25f(docs: dict, d_id: str, q_tokens: dict, params: dict) -> float:
    """Field-weighted similarity with query-side saturation, evaluated
    naively.

    docs: {doc_id: {"summary": [tokens], "description": [tokens]}}
    q_tokens: {"summary": [...], "description": [...]}
    params: k1, k3, w_summary, w_description, b_summary, b_description
    """
    n = len(docs)
    df: dict[str, int] = {}
    for toks in docs.values():
        for t in set(toks["summary"]) | set(toks["description"]):
            df[t] = df.get(t, 0) + 1
    avg = {f: sum(len(toks[f]) for toks in docs.values()) / n for f in FIELDS}

    d = docs[d_id]
    d_vocab = set(d["summary"]) | set(d["description"])
    q_vocab = set(q_tokens["summary"]) | set(q_tokens["description"])

    total = 0.0
    for t in sorted(d_vocab & q_vocab):
        if t not in df or df[t] >= n:
            continue
        idf = math.log(n / df[t])

        tfd = 0.0
        for f, w_key, b_key in (
            ("summary", "w_summary", "b_summary"),
            ("description", "w_description", "b_description"),
        ):
            tf = d[f].count(t)
            if tf == 0:
                continue
            if avg[f] > 0:
                denom = 1.0 - params[b_key] + params[b_key] * (len(d[f]) / avg[f])
            else:
                denom = 1.0
            tfd += params[w_key] * tf / denom

        tfq = (
            params["w_summary"] * q_tokens["summary"].count(t)
            + params["w_description"] * q_tokens["description"].count(t)
        )
        if tfd <= 0 or tfq <= 0:
            continue
        wq = (params["k3"] + 1.0) * tfq / (params["k3"] + tfq)
        total += idf * (tfd / (params["k1"] + tfd)) * wq
    return total


def brute_recall_rate(preds, k: int) -> float:
    """Recall via explicit index scanning rather than slicing."""
    hits = 0
    for p in preds:
        found = False
        for position, master in enumerate(p.ranked_masters):
            if position < k and master == p.truth_master:
                found = True
        if found:
            hits += 1
    return hits / len(preds)


def brute_overlap_counts(a, b, k: int) -> tuple[int, int, int, int]:
    """Overlap partition via set arithmetic over success sets."""
    def successes(preds):
        return {p.query for p in preds if p.truth_master in set(p.ranked_masters[:k])}

    queries = {p.query for p in a}
    sa, sb = successes(a), successes(b)
    only_a = len(sa - sb)
    only_b = len(sb - sa)
    both = len(sa & sb)
    neither = len(queries - sa - sb)
    return only_a, only_b, both, neither


def straightline_tfidf_scores(field_tokens: list[str], df: dict[str, int], n_docs: int):
    """tf * log2(N / (1 + df)) per distinct term of one field."""
    scores = {}
    for term in set(field_tokens):
        tf = field_tokens.count(term)
        scores[term] = tf * math.log2(n_docs / (1 + df.get(term, 0)))
    return scores
