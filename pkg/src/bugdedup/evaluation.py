"""Recall-rate computation, method overlap counts, and report files.

A prediction is successful at k when the master of the query's bucket
appears among the first k suggested masters. Reports serialize to a
single JSON object plus a companion CSV with one row per k.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple


@dataclass
class RankedPrediction:
    query: str
    ranked_masters: list[str]
    truth_master: str


@dataclass
class EvalReport:
    rr_at_k: dict[int, float]
    n_total: int
    n_recalled_at_k: dict[int, float]
    per_query: list[RankedPrediction] = field(default_factory=list)
    runs_averaged: int = 1
    per_run: list[list[RankedPrediction]] | None = None


def recall_rate(preds: list[RankedPrediction], k: int) -> float:
    """Fraction of predictions whose truth appears in the top k."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if not preds:
        raise ValueError("no predictions to evaluate")
    hits = sum(1 for p in preds if p.truth_master in p.ranked_masters[:k])
    return hits / len(preds)


def build_report(preds: list[RankedPrediction], k_max: int = 10) -> EvalReport:
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    if not preds:
        raise ValueError("no predictions to evaluate")
    counts = {}
    for k in range(1, k_max + 1):
        counts[k] = sum(1 for p in preds if p.truth_master in p.ranked_masters[:k])
    n = len(preds)
    return EvalReport(
        rr_at_k={k: c / n for k, c in counts.items()},
        n_total=n,
        n_recalled_at_k=dict(counts),
        per_query=list(preds),
        runs_averaged=1,
    )


def average_reports(reports: list[EvalReport]) -> EvalReport:
    """Mean RR@k across runs; per-run prediction lists are preserved."""
    if not reports:
        raise ValueError("no reports to average")
    if len(reports) == 1:
        return reports[0]
    first = reports[0]
    for other in reports[1:]:
        if other.n_total != first.n_total or set(other.rr_at_k) != set(first.rr_at_k):
            raise ValueError("reports to average must share n_total and k range")
    n_runs = len(reports)
    ks = sorted(first.rr_at_k)
    return EvalReport(
        rr_at_k={k: sum(r.rr_at_k[k] for r in reports) / n_runs for k in ks},
        n_total=first.n_total,
        n_recalled_at_k={
            k: sum(r.n_recalled_at_k[k] for r in reports) / n_runs for k in ks
        },
        per_query=list(first.per_query),
        runs_averaged=n_runs,
        per_run=[list(r.per_query) for r in reports],
    )


class OverlapCounts(NamedTuple):
    only_a: int
    only_b: int
    both: int
    neither: int


def overlap_counts(
    a: list[RankedPrediction], b: list[RankedPrediction], k: int
) -> OverlapCounts:
    """Partition the shared query set by success-at-k of two methods."""
    if k < 1:
        raise ValueError("k must be >= 1")
    by_a = {p.query: p for p in a}
    by_b = {p.query: p for p in b}
    if len(by_a) != len(a) or len(by_b) != len(b):
        raise ValueError("duplicate query in a prediction list")
    if by_a.keys() != by_b.keys():
        raise ValueError("prediction lists cover different query sets")
    only_a = only_b = both = neither = 0
    for query, pa in by_a.items():
        hit_a = pa.truth_master in pa.ranked_masters[:k]
        pb = by_b[query]
        hit_b = pb.truth_master in pb.ranked_masters[:k]
        if hit_a and hit_b:
            both += 1
        elif hit_a:
            only_a += 1
        elif hit_b:
            only_b += 1
        else:
            neither += 1
    return OverlapCounts(only_a, only_b, both, neither)


def _preds_to_json(preds: list[RankedPrediction]) -> list[dict]:
    return [
        {
            "query": p.query,
            "ranked_masters": p.ranked_masters,
            "truth_master": p.truth_master,
        }
        for p in preds
    ]


def _preds_from_json(rows) -> list[RankedPrediction]:
    return [
        RankedPrediction(
            query=row["query"],
            ranked_masters=list(row["ranked_masters"]),
            truth_master=row["truth_master"],
        )
        for row in rows
    ]


def write_report(report: EvalReport, path: str | Path) -> Path:
    """Serialize to JSON and a companion CSV (same stem, .csv suffix).

    Returns the CSV path.
    """
    path = Path(path)
    payload = {
        "rr_at_k": {str(k): v for k, v in sorted(report.rr_at_k.items())},
        "n_total": report.n_total,
        "n_recalled_at_k": {str(k): v for k, v in sorted(report.n_recalled_at_k.items())},
        "runs_averaged": report.runs_averaged,
        "per_query": _preds_to_json(report.per_query),
    }
    if report.per_run is not None:
        payload["per_run"] = [_preds_to_json(run) for run in report.per_run]
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")

    csv_path = path.with_suffix(".csv") if path.suffix else path.with_name(path.name + ".csv")
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "rr", "n_recalled", "n_total"])
        for k in sorted(report.rr_at_k):
            writer.writerow([k, report.rr_at_k[k], report.n_recalled_at_k[k], report.n_total])
    return csv_path


def read_report(path: str | Path) -> EvalReport:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    per_run = None
    if "per_run" in data:
        per_run = [_preds_from_json(run) for run in data["per_run"]]
    counts = {int(k): v for k, v in data["n_recalled_at_k"].items()}
    if data["runs_averaged"] == 1:
        counts = {k: int(v) for k, v in counts.items()}
    return EvalReport(
        rr_at_k={int(k): v for k, v in data["rr_at_k"].items()},
        n_total=data["n_total"],
        n_recalled_at_k=counts,
        per_query=_preds_from_json(data["per_query"]),
        runs_averaged=data["runs_averaged"],
        per_run=per_run,
    )


def write_overlap_csv(counts: OverlapCounts, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["only_a", "only_b", "both", "neither"])
        writer.writerow(list(counts))
