import pytest
from hypothesis import given, settings, strategies as st

from bugdedup.selection import (
    SelectionRule,
    length_threshold,
    matches_content,
    select,
    word_count,
)
from conftest import make_report


class TestContentRule:
    # Representative snippets a triage tool sees in hard descriptions.
    def test_sql_dotted_identifier(self):
        assert matches_content("SELECT * FROM database.schema.table;")

    def test_maven_error_message(self):
        text = (
            "[ERROR] Failed to execute goal "
            "org.apache.maven.plugins:maven-javadoc-plugin:3.0.1:javadoc "
            "(default-cli) on project hadoop-hdfs: An error has occurred "
            "in Javadoc report generation:"
        )
        assert matches_content(text)

    def test_stack_trace(self):
        text = (
            "java.lang.NullPointerException at "
            "com.example.MyClass.myMethod(MyClass.java:42)"
        )
        assert matches_content(text)

    def test_plain_english(self):
        assert not matches_content("the button does not work")

    def test_url(self):
        assert matches_content("see https://example.com/x for details")

    def test_http_url(self):
        assert matches_content("see http://tracker/issue?id=1")

    def test_two_part_identifier_not_enough(self):
        assert not matches_content("call foo.bar here")


class TestLengthThreshold:
    def test_nearest_rank_small(self):
        reports = [make_report(f"r{i}", i, "", " ".join(["w"] * n))
                   for i, n in enumerate([1, 2, 3, 4])]
        assert length_threshold(reports) == 3

    def test_all_equal(self):
        reports = [make_report(f"r{i}", i, "", "one two three")
                   for i in range(5)]
        assert length_threshold(reports) == 3

    def test_eight_values(self):
        lengths = [10, 20, 30, 40, 50, 60, 70, 80]
        reports = [make_report(f"r{i}", i, "", " ".join(["w"] * n))
                   for i, n in enumerate(lengths)]
        assert length_threshold(reports) == 60

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            length_threshold([])


class TestSelect:
    def reports(self):
        return [
            make_report("plain", 0, "s", "just words here"),
            make_report("dotted", 1, "s", "at java.lang.Error somewhere"),
            make_report("long", 2, "s", " ".join(["word"] * 50)),
            make_report("both", 3, "s", "x.y.z " + " ".join(["word"] * 50)),
        ]

    def test_none_keeps_all(self):
        reports = self.reports()
        assert select(reports, SelectionRule("none")) == reports

    def test_content_rule(self):
        picked = select(self.reports(), SelectionRule("content"))
        assert [r.id for r in picked] == ["dotted", "both"]

    def test_length_rule(self):
        rule = SelectionRule("length", length_threshold=10)
        picked = select(self.reports(), rule)
        assert [r.id for r in picked] == ["long", "both"]

    def test_union_rule(self):
        rule = SelectionRule("length_or_content", length_threshold=10)
        picked = select(self.reports(), rule)
        assert [r.id for r in picked] == ["dotted", "long", "both"]

    def test_rule_validation(self):
        with pytest.raises(ValueError):
            SelectionRule("length")
        with pytest.raises(ValueError):
            SelectionRule("content", length_threshold=5)
        with pytest.raises(ValueError):
            SelectionRule("sometimes")


descriptions = st.lists(
    st.sampled_from([
        "plain words only",
        "a.b.c dotted",
        "https://x.io/y",
        " ".join(["w"] * 30),
        "short",
        "x.y.z " + " ".join(["w"] * 40),
    ]),
    min_size=0, max_size=12,
)


@given(descriptions)
@settings(max_examples=60)
def test_union_equals_length_or_content(descs):
    reports = [make_report(f"r{i}", i, "", d) for i, d in enumerate(descs)]
    thr = 20
    by_content = {r.id for r in select(reports, SelectionRule("content"))}
    by_length = {r.id for r in select(reports, SelectionRule("length", thr))}
    both = {r.id for r in select(reports, SelectionRule("length_or_content", thr))}
    assert both == by_content | by_length


@given(descriptions)
@settings(max_examples=60)
def test_select_is_an_idempotent_order_preserving_filter(descs):
    reports = [make_report(f"r{i}", i, "", d) for i, d in enumerate(descs)]
    rule = SelectionRule("content")
    picked = select(reports, rule)
    ids = [r.id for r in reports]
    assert [r.id for r in picked] == [i for i in ids if i in {r.id for r in picked}]
    assert select(picked, rule) == picked


def test_word_count_consistency():
    text = "  several   words\nacross lines "
    assert word_count(text) == 4
