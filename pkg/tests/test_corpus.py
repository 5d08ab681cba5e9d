import io
import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from key2text.corpus import (
    CleaningConfig,
    Document,
    KeywordSet,
    KeywordTextPair,
    clean_text,
    pair_to_line,
    parse_documents,
    parse_keyword_file,
    parse_pairs,
    write_documents,
    write_pairs,
)
from key2text.errors import ParseError

BANGLA_SENTENCE = "গতকাল শুক্রবার মেলা জমজমাট হয়েছে।"


class TestCleanText:
    def test_strips_tags(self):
        assert clean_text("<p>abc</p>") == "abc"

    def test_collapses_whitespace(self):
        assert clean_text("a   b") == "a b"

    def test_removes_special_characters_from_bangla(self):
        # Hand-applied whitelist: braces and @#$ go, words and danda stay.
        raw = "{" + BANGLA_SENTENCE + "}@#$ suffix"
        assert clean_text(raw) == BANGLA_SENTENCE + " suffix"

    def test_preserves_digits_punctuation_and_hyphen(self):
        assert clean_text("সহজ-সরল 3.5, কম?") == "সহজ-সরল 3.5, কম?"

    def test_tag_spans_do_not_nest(self):
        assert clean_text("a <b <i>x</i> c") == "a b x c"

    def test_custom_config(self):
        config = CleaningConfig(remove_pattern=r"[^a-z ]")
        assert clean_text("abC1 d!", config) == "ab d"

    @given(st.text(max_size=200))
    @settings(max_examples=200, deadline=None)
    def test_idempotent(self, raw):
        once = clean_text(raw)
        assert clean_text(once) == once


class TestParseDocuments:
    def test_valid_lines_in_order(self):
        stream = io.BytesIO(
            '{"id":"a","text":"one"}\n{"id":"b","text":"two"}\n'.encode()
        )
        docs = parse_documents(stream)
        assert [d.id for d in docs] == ["a", "b"]
        assert [d.text for d in docs] == ["one", "two"]

    def test_missing_text_field_names_line(self):
        stream = io.BytesIO(b'{"id":"a","text":"one"}\n{"id":"b"}\n')
        with pytest.raises(ParseError, match="line 2"):
            parse_documents(stream)

    def test_empty_stream(self):
        assert parse_documents(io.BytesIO(b"")) == []

    def test_duplicate_id(self):
        stream = io.BytesIO(b'{"id":"a","text":"x"}\n{"id":"a","text":"y"}\n')
        with pytest.raises(ParseError, match="duplicate id"):
            parse_documents(stream)

    def test_invalid_json_names_line(self):
        with pytest.raises(ParseError, match="line 1"):
            parse_documents(io.BytesIO(b"not json\n"))


class TestDomainTypes:
    def test_document_rejects_empty(self):
        with pytest.raises(ValueError):
            Document("", "text")
        with pytest.raises(ValueError):
            Document("id", "")

    def test_keywordset_rejects_duplicates_and_blank(self):
        with pytest.raises(ValueError):
            KeywordSet(["a", "a"])
        with pytest.raises(ValueError):
            KeywordSet(["a", "  "])

    def test_pair_requires_keywords_and_text(self):
        with pytest.raises(ValueError):
            KeywordTextPair("p", KeywordSet([]), "text")


def _pair(id_, keywords, text):
    return KeywordTextPair(id=id_, keywords=KeywordSet(keywords), text=text)


class TestPairSerialization:
    def test_single_pair_round_trip(self):
        pair = _pair("p1", ["মেলা", "গতকাল"], BANGLA_SENTENCE)
        sink = io.StringIO()
        write_pairs([pair], sink)
        assert parse_pairs(io.StringIO(sink.getvalue())) == [pair]

    def test_zero_pairs_empty_output(self):
        sink = io.StringIO()
        write_pairs([], sink)
        assert sink.getvalue() == ""

    def test_three_keywords_keep_order(self):
        pair = _pair("p1", ["c", "a", "b"], "c a b")
        obj = json.loads(pair_to_line(pair))
        assert obj["keywords"] == ["c", "a", "b"]
        assert list(obj.keys()) == ["id", "keywords", "text"]

    def test_utf8_not_escaped(self):
        line = pair_to_line(_pair("p", ["মেলা"], "মেলা"))
        assert "মেলা" in line

    def test_keyword_file_round_trip(self):
        rows = parse_keyword_file(io.StringIO('{"id":"q","keywords":["x","y"]}\n'))
        assert rows == [("q", ("x", "y"))]

    def test_document_file_round_trip(self):
        docs = [Document("a", "এক দুই"), Document("b", "three")]
        sink = io.StringIO()
        write_documents(docs, sink)
        assert parse_documents(io.StringIO(sink.getvalue())) == docs


_keyword = st.text(
    alphabet=st.characters(blacklist_categories=("Cs", "Zs", "Zl", "Zp", "Cc")),
    min_size=1,
    max_size=8,
)
_text = st.text(
    alphabet=st.characters(blacklist_categories=("Cs",)), min_size=1, max_size=40
)


@st.composite
def _pairs(draw):
    n = draw(st.integers(min_value=1, max_value=5))
    out = []
    for i in range(n):
        keywords = draw(
            st.lists(_keyword, min_size=1, max_size=5, unique=True)
        )
        out.append(_pair(f"id{i}", keywords, draw(_text)))
    return out


@given(_pairs())
@settings(max_examples=150, deadline=None)
def test_round_trip_property(pairs):
    sink = io.StringIO()
    write_pairs(pairs, sink)
    assert parse_pairs(io.StringIO(sink.getvalue())) == pairs
