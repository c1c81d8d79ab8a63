from __future__ import annotations

from datetime import datetime, timedelta

import pytest

from bugdedup.corpus import BugReport, Corpus

BASE_TIME = datetime(2022, 1, 1)


def make_report(rid: str, minute: int = 0, summary: str = "", description: str = "",
                **fields) -> BugReport:
    return BugReport(
        id=rid,
        created_at=BASE_TIME + timedelta(minutes=minute),
        summary=summary,
        description=description,
        **fields,
    )


def make_corpus(reports, **kwargs) -> Corpus:
    return Corpus(reports={r.id: r for r in reports}, **kwargs)


@pytest.fixture
def trio_corpus() -> Corpus:
    """Three singleton reports with plain-word texts."""
    return make_corpus([
        make_report("d1", 0, "spark crash", "executor crash jvm heap"),
        make_report("d2", 1, "ui button", "button click render"),
        make_report("d3", 2, "crash executor", "heap dump jvm executor executor"),
    ])
