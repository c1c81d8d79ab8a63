"""Bug report corpus: data model, JSONL ingestion, buckets, candidates.

A corpus is immutable once loaded. Reports carry an opaque id, a
creation timestamp, two text fields, five optional categorical fields,
and an optional ``duplicate_of`` link. Reports that are duplicates of
each other (directly or transitively) form a bucket whose master is the
chronologically earliest member; unique reports form singleton buckets.

Chronological order is the strict total order (created_at, id); ties on
the timestamp are broken by id so every corpus has one deterministic
ordering.
"""

from __future__ import annotations

import json
from bisect import bisect_left
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path


class CorpusError(ValueError):
    """Malformed corpus file or inconsistent duplicate links."""


REQUIRED_KEYS = ("bug_id", "created_at", "summary", "description")
OPTIONAL_KEYS = ("product", "component", "type", "priority", "version")

REPORTS_FILE = "reports.jsonl"
TRAIN_PAIRS_FILE = "train_pairs.jsonl"
VALID_PAIRS_FILE = "valid_pairs.jsonl"
QUERIES_FILE = "test_queries.txt"
TEST_REPORTS_FILE = "test_reports.txt"


@dataclass(frozen=True)
class BugReport:
    id: str
    created_at: datetime
    summary: str
    description: str
    product: str | None = None
    component: str | None = None
    type: str | None = None
    priority: str | None = None
    version: str | None = None
    duplicate_of: str | None = None

    @property
    def sort_key(self) -> tuple[datetime, str]:
        return (self.created_at, self.id)


@dataclass(frozen=True)
class Bucket:
    master: str
    members: frozenset[str]


@dataclass(frozen=True)
class LabeledPair:
    a: str
    b: str
    is_duplicate: bool


@dataclass
class Corpus:
    """Immutable after construction; safe for concurrent reads."""

    reports: dict[str, BugReport]
    order: list[str] = field(default_factory=list)
    buckets: list[Bucket] = field(default_factory=list)
    bucket_of: dict[str, str] = field(default_factory=dict)
    train_pairs: list[LabeledPair] = field(default_factory=list)
    valid_pairs: list[LabeledPair] = field(default_factory=list)
    test_queries: list[str] = field(default_factory=list)
    test_report_ids: frozenset[str] = frozenset()

    def __post_init__(self):
        if not self.order:
            self.order = sorted(self.reports, key=lambda i: self.reports[i].sort_key)
        if not self.buckets:
            self.buckets = build_buckets(self.reports.values())
        if not self.bucket_of:
            self.bucket_of = {
                m: b.master for b in self.buckets for m in b.members
            }
        self._order_keys = [self.reports[i].sort_key for i in self.order]

    def __len__(self) -> int:
        return len(self.reports)

    def report(self, report_id: str) -> BugReport:
        try:
            return self.reports[report_id]
        except KeyError:
            raise KeyError(f"unknown report id: {report_id}") from None

    @property
    def train_report_ids(self) -> frozenset[str]:
        """Reports outside the test window."""
        return frozenset(self.reports) - self.test_report_ids


def parse_timestamp(value: str) -> datetime:
    """ISO-8601 to a naive-UTC datetime (aware inputs are converted)."""
    if not isinstance(value, str):
        raise ValueError(f"created_at must be an ISO-8601 string, got {value!r}")
    text = value.strip()
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    dt = datetime.fromisoformat(text)
    if dt.tzinfo is not None:
        dt = dt.astimezone(timezone.utc).replace(tzinfo=None)
    return dt


def _parse_report(record: dict, line_no: int) -> BugReport:
    for key in REQUIRED_KEYS:
        if key not in record or record[key] is None:
            raise CorpusError(f"missing field {key} at line {line_no}")
    try:
        created = parse_timestamp(record["created_at"])
    except ValueError as exc:
        raise CorpusError(f"bad created_at at line {line_no}: {exc}") from exc

    def opt(key):
        value = record.get(key)
        if value is None:
            return None
        value = str(value).strip()
        return value or None

    return BugReport(
        id=str(record["bug_id"]),
        created_at=created,
        summary=str(record["summary"]),
        description=str(record["description"]),
        duplicate_of=opt("duplicate_of"),
        **{key: opt(key) for key in OPTIONAL_KEYS},
    )


def _iter_jsonl(path: Path):
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(
                    f"malformed record at line {line_no} of {path.name}: {exc.msg}"
                ) from exc
            if not isinstance(record, dict):
                raise CorpusError(
                    f"malformed record at line {line_no} of {path.name}: not an object"
                )
            yield line_no, record


def load_reports(path: str | Path) -> list[BugReport]:
    path = Path(path)
    reports = []
    seen: dict[str, int] = {}
    for line_no, record in _iter_jsonl(path):
        report = _parse_report(record, line_no)
        if report.id in seen:
            raise CorpusError(
                f"duplicate bug_id {report.id} at line {line_no}"
                f" (first seen at line {seen[report.id]})"
            )
        seen[report.id] = line_no
        reports.append(report)

    known = set(seen)
    dangling = sorted(
        {r.duplicate_of for r in reports if r.duplicate_of and r.duplicate_of not in known}
    )
    if dangling:
        raise CorpusError(
            "duplicate_of references unknown ids: " + ", ".join(dangling)
        )
    return reports


def load_pairs(path: str | Path) -> list[LabeledPair]:
    pairs = []
    for line_no, record in _iter_jsonl(Path(path)):
        for key in ("a", "b", "label"):
            if key not in record or record[key] is None:
                raise CorpusError(f"missing field {key} at line {line_no}")
        label = record["label"]
        if label not in (0, 1, True, False):
            raise CorpusError(f"label must be 0 or 1 at line {line_no}")
        a, b = str(record["a"]), str(record["b"])
        if a == b:
            raise CorpusError(f"pair with identical ids at line {line_no}")
        pairs.append(LabeledPair(a=a, b=b, is_duplicate=bool(label)))
    return pairs


def load_queries(path: str | Path) -> list[str]:
    out = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        qid = line.strip()
        if qid:
            out.append(qid)
    return out


def build_buckets(reports) -> list[Bucket]:
    """Union-find closure over duplicate_of links.

    A bucket in which every member carries a duplicate_of link has no
    terminal report, which only happens when the links form a cycle;
    that is rejected.
    """
    reports = list(reports)
    by_id = {r.id: r for r in reports}
    parent = {r.id: r.id for r in reports}

    def find(x: str) -> str:
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    for r in reports:
        if r.duplicate_of:
            if r.duplicate_of not in parent:
                raise CorpusError(
                    f"duplicate_of references unknown ids: {r.duplicate_of}"
                )
            ra, rb = find(r.id), find(r.duplicate_of)
            if ra != rb:
                parent[ra] = rb

    groups: dict[str, list[str]] = {}
    for r in reports:
        groups.setdefault(find(r.id), []).append(r.id)

    buckets = []
    for members in groups.values():
        if all(by_id[m].duplicate_of for m in members):
            raise CorpusError(
                "cycle in duplicate_of links among: " + ", ".join(sorted(members))
            )
        master = min(members, key=lambda m: by_id[m].sort_key)
        buckets.append(Bucket(master=master, members=frozenset(members)))
    buckets.sort(key=lambda b: by_id[b.master].sort_key)
    return buckets


def candidates_before(corpus: Corpus, query: str) -> list[str]:
    """Ids of all reports strictly earlier than the query, oldest first."""
    q = corpus.report(query)
    cut = bisect_left(corpus._order_keys, q.sort_key)
    return corpus.order[:cut]


def _validate_pairs(pairs: list[LabeledPair], reports: dict, name: str) -> None:
    missing = sorted(
        {i for p in pairs for i in (p.a, p.b) if i not in reports}
    )
    if missing:
        raise CorpusError(f"{name} pairs reference unknown ids: " + ", ".join(missing))


def load_corpus(
    path: str | Path,
    *,
    train_pairs_path: str | Path | None = None,
    valid_pairs_path: str | Path | None = None,
    queries_path: str | Path | None = None,
    test_reports_path: str | Path | None = None,
) -> Corpus:
    """Load a corpus from a reports file or a dataset directory.

    Given a directory, the conventional file names are reports.jsonl,
    train_pairs.jsonl, valid_pairs.jsonl, test_queries.txt, and
    test_reports.txt; all but the reports file are optional. Explicit
    side-file paths override the conventions.

    The test window (used to scope selection and extractor statistics)
    is the explicit test_reports file when present, otherwise every
    report created at or after the earliest test query.
    """
    path = Path(path)
    if not path.exists():
        raise CorpusError(f"no such file or directory: {path}")
    if path.is_dir():
        reports_path = path / REPORTS_FILE
        if not reports_path.exists():
            raise CorpusError(f"{REPORTS_FILE} not found in {path}")

        def default(p, name):
            if p is not None:
                return Path(p)
            candidate = path / name
            return candidate if candidate.exists() else None

        train_pairs_path = default(train_pairs_path, TRAIN_PAIRS_FILE)
        valid_pairs_path = default(valid_pairs_path, VALID_PAIRS_FILE)
        queries_path = default(queries_path, QUERIES_FILE)
        test_reports_path = default(test_reports_path, TEST_REPORTS_FILE)
    else:
        reports_path = path

    reports = {r.id: r for r in load_reports(reports_path)}
    train_pairs = load_pairs(train_pairs_path) if train_pairs_path else []
    valid_pairs = load_pairs(valid_pairs_path) if valid_pairs_path else []
    test_queries = load_queries(queries_path) if queries_path else []

    _validate_pairs(train_pairs, reports, "train")
    _validate_pairs(valid_pairs, reports, "valid")

    unknown_queries = sorted(q for q in test_queries if q not in reports)
    if unknown_queries:
        raise CorpusError("test queries not in corpus: " + ", ".join(unknown_queries))

    corpus = Corpus(
        reports=reports,
        train_pairs=train_pairs,
        valid_pairs=valid_pairs,
        test_queries=test_queries,
    )

    not_dup = sorted(
        q for q in test_queries
        if corpus.bucket_of[q] == q
    )
    if not_dup:
        raise CorpusError(
            "test queries with no earlier master: " + ", ".join(not_dup)
        )

    if test_reports_path:
        ids = load_queries(test_reports_path)
        unknown = sorted(i for i in ids if i not in reports)
        if unknown:
            raise CorpusError("test_reports lists unknown ids: " + ", ".join(unknown))
        corpus.test_report_ids = frozenset(ids)
    elif test_queries:
        threshold = min(reports[q].sort_key for q in test_queries)
        corpus.test_report_ids = frozenset(
            i for i, r in reports.items() if r.sort_key >= threshold
        )
    return corpus
