import string

import pytest
from hypothesis import given, strategies as st

from bugdedup.stemmer import porter_stem
from bugdedup.textprep import (
    BIGRAM_SEP,
    DEFAULT_PREP,
    PrepConfig,
    bigrams,
    load_stopwords,
    tokenize,
)


class TestTokenize:
    def test_stopword_and_lowercase(self):
        cfg = PrepConfig(lowercase=True, stopwords=frozenset({"at"}), stemming=False)
        assert tokenize("NullPointerException at MyClass", cfg) == [
            "nullpointerexception", "myclass",
        ]

    def test_empty(self):
        assert tokenize("", DEFAULT_PREP) == []

    def test_dot_is_separator(self):
        cfg = PrepConfig(stopwords=frozenset())
        assert tokenize("java.lang.Error", cfg) == ["java", "lang", "error"]

    def test_digits_kept(self):
        cfg = PrepConfig(stopwords=frozenset())
        assert tokenize("jdk11 v2.3", cfg) == ["jdk11", "v2", "3"]

    def test_underscore_is_separator(self):
        cfg = PrepConfig(stopwords=frozenset())
        assert tokenize("snake_case_name", cfg) == ["snake", "case", "name"]

    def test_stopword_filter_is_case_insensitive(self):
        cfg = PrepConfig(lowercase=False, stopwords=frozenset({"the"}))
        assert tokenize("The THE the Parser", cfg) == ["Parser"]

    def test_stemming_flag(self):
        cfg = PrepConfig(stopwords=frozenset(), stemming=True)
        assert tokenize("connections failing", cfg) == ["connect", "fail"]


class TestPorterStem:
    # Full-pipeline outputs (all steps applied), not the per-step examples.
    VECTORS = [
        ("caresses", "caress"), ("ponies", "poni"), ("cats", "cat"),
        ("feed", "feed"), ("agreed", "agre"), ("plastered", "plaster"),
        ("motoring", "motor"), ("sing", "sing"), ("conflated", "conflat"),
        ("hopping", "hop"), ("falling", "fall"), ("hissing", "hiss"),
        ("filing", "file"), ("happy", "happi"), ("sky", "sky"),
        ("relational", "relat"), ("conditional", "condit"),
        ("rational", "ration"), ("digitizer", "digit"),
        ("operator", "oper"), ("feudalism", "feudal"),
        ("decisiveness", "decis"), ("hopefulness", "hope"),
        ("formaliti", "formal"), ("formative", "form"), ("formalize", "formal"),
        ("electriciti", "electr"), ("electrical", "electr"),
        ("hopeful", "hope"), ("goodness", "good"), ("revival", "reviv"),
        ("allowance", "allow"), ("inference", "infer"), ("airliner", "airlin"),
        ("adjustable", "adjust"), ("defensible", "defens"),
        ("replacement", "replac"), ("adjustment", "adjust"),
        ("dependent", "depend"), ("adoption", "adopt"), ("communism", "commun"),
        ("activate", "activ"), ("effective", "effect"), ("roll", "roll"),
        ("controll", "control"), ("probate", "probat"), ("rate", "rate"),
        ("cease", "ceas"),
    ]

    @pytest.mark.parametrize("word,expected", VECTORS)
    def test_known_vectors(self, word, expected):
        assert porter_stem(word) == expected

    def test_short_words_unchanged(self):
        assert porter_stem("io") == "io"
        assert porter_stem("a") == "a"


class TestBigrams:
    def test_three_tokens(self):
        assert bigrams(["a", "b", "c"]) == [f"a{BIGRAM_SEP}b", f"b{BIGRAM_SEP}c"]

    def test_single_token(self):
        assert bigrams(["a"]) == []

    def test_empty(self):
        assert bigrams([]) == []

    @given(st.lists(st.text(alphabet=string.ascii_lowercase, min_size=1)))
    def test_length_law(self, tokens):
        assert len(bigrams(tokens)) == max(0, len(tokens) - 1)

    @given(st.lists(st.text(alphabet=string.ascii_lowercase, min_size=1), min_size=2))
    def test_disjoint_from_unigrams(self, tokens):
        assert not set(bigrams(tokens)) & set(tokens)


@given(st.text())
def test_tokenize_deterministic(text):
    assert tokenize(text, DEFAULT_PREP) == tokenize(text, DEFAULT_PREP)


@given(st.text())
def test_tokenize_idempotent_without_stemming(text):
    first = tokenize(text, DEFAULT_PREP)
    assert tokenize(" ".join(first), DEFAULT_PREP) == first


@given(st.text())
def test_tokens_have_no_whitespace(text):
    for tok in tokenize(text, DEFAULT_PREP):
        assert tok
        assert not any(c.isspace() for c in tok)


def test_load_stopwords(tmp_path):
    path = tmp_path / "stop.txt"
    path.write_text("the\n\n  AND \nof\n", encoding="utf-8")
    assert load_stopwords(path) == frozenset({"the", "and", "of"})
