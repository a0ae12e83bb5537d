import json

import pytest
from hypothesis import given, strategies as st

from desmine import corpus
from desmine.corpus import CleanOptions, clean, preprocess, remove_stopwords, tokenize
from desmine.errors import DataError

from conftest import make_dataset


def _jsonl(tmp_path, rows, name="d.jsonl"):
    p = tmp_path / name
    p.write_text("".join(json.dumps(r) + "\n" for r in rows), encoding="utf-8")
    return p


def _row(i, label=0, text="some text", **extra):
    return {"id": str(i), "text": text, "label": label, "source": "x", **extra}


def test_load_jsonl_counts(tmp_path):
    rows = [_row(i, int(i < 3), artifact_kind="pull_request") for i in range(10)]
    ds = corpus.load_jsonl(_jsonl(tmp_path, rows))
    assert (len(ds), ds.design_count) == (10, 3)
    assert ds.name == "d"
    assert ds.prevalence == pytest.approx(0.3)


@pytest.mark.parametrize("line, msg", [
    ("{not json", "malformed JSON"),
    ('{"id": "1", "text": "a", "label": 0}', "missing keys"),
    ('{"id": "1", "text": "  ", "label": 0, "source": "x"}', "empty text"),
    ('{"id": "1", "text": "a", "label": 2, "source": "x"}', "label must be 0 or 1"),
    ('{"id": "1", "text": "a", "label": 0, "source": "x", "artifact_kind": "tweet"}', "artifact_kind"),
])
def test_load_jsonl_errors_name_the_line(tmp_path, line, msg):
    p = tmp_path / "bad.jsonl"
    p.write_text(json.dumps(_row(0)) + "\n" + line + "\n", encoding="utf-8")
    with pytest.raises(DataError, match=msg) as e:
        corpus.load_jsonl(p)
    assert "bad.jsonl:2" in str(e.value)


def test_duplicate_id_rejected(tmp_path):
    with pytest.raises(DataError, match="duplicate id"):
        corpus.load_jsonl(_jsonl(tmp_path, [_row(1), _row(1)]))


def test_empty_file_gives_empty_dataset_and_stats_error(tmp_path):
    p = tmp_path / "empty.jsonl"
    p.write_text("", encoding="utf-8")
    ds = corpus.load_jsonl(p)
    assert len(ds) == 0
    with pytest.raises(DataError):
        corpus.stats(ds)
    with pytest.raises(DataError):
        ds.prevalence


def test_jsonl_round_trip(tmp_path):
    ds = make_dataset(["héllo wörld", "b"], [1, 0])
    p = tmp_path / "rt.jsonl"
    corpus.dump_jsonl(ds, p)
    back = corpus.load_jsonl(p, name="toy")
    assert back == ds


def test_csv_label_words(tmp_path):
    p = tmp_path / "two.csv"
    p.write_text('text,label\n"a, quoted ""thing""",design\nother,non-design\n', encoding="utf-8")
    ds = corpus.load_csv(p)
    assert (len(ds), ds.design_count) == (2, 1)
    assert ds.discussions[0].text == 'a, quoted "thing"'


def test_csv_custom_columns(tmp_path):
    p = tmp_path / "c.csv"
    p.write_text("msg,is_design\nx,1\ny,0\n", encoding="utf-8")
    ds = corpus.load_dataset(p, text_col="msg", label_col="is_design")
    assert ds.labels == [1, 0]


def test_csv_missing_column(tmp_path):
    p = tmp_path / "c.csv"
    p.write_text("text,y\nx,1\n", encoding="utf-8")
    with pytest.raises(DataError, match="column not found"):
        corpus.load_csv(p)


def test_missing_file():
    with pytest.raises(DataError, match="not found"):
        corpus.load_dataset("/nonexistent/x.jsonl")


@pytest.mark.parametrize("text, expected", [
    ("<code>x=1</code> My Design!", "my design"),
    ("design", "design"),
    ("<b>Move saveCallback</b>", "move savecallback"),
    ("a  b\n\tc", "a b c"),
    ("<<b>b>x", "b x"),
    ("snake_case&amp;more", "snake case more"),
])
def test_clean(text, expected):
    assert clean(text) == expected


def test_clean_options_off():
    opts = CleanOptions(lowercase=False, strip_html_and_code=False, strip_punctuation=False)
    assert clean("<b>Hi</b>  There", opts) == "<b>Hi</b> There"


@given(st.text(max_size=80))
def test_clean_idempotent(text):
    once = clean(text)
    assert clean(once) == once


@given(st.text(max_size=80))
def test_clean_output_shape(text):
    out = clean(text)
    assert out == out.lower()
    assert "  " not in out and out == out.strip()
    assert "<" not in out


@pytest.mark.parametrize("text, expected", [
    ("move savecallback", ["move", "savecallback"]),
    ("", []),
    ("a  b", ["a", "b"]),
])
def test_tokenize(text, expected):
    assert tokenize(text) == expected


@pytest.mark.parametrize("tokens, stopset, expected", [
    (["lgtm", "nice", "design"], "english_plus_domain", ["nice", "design"]),
    (["design"], "none", ["design"]),
    (["the", "design"], "english", ["design"]),
    (["lgtm", "design"], "english", ["lgtm", "design"]),
])
def test_remove_stopwords(tokens, stopset, expected):
    assert remove_stopwords(tokens, CleanOptions(stopword_set=stopset)) == expected


def test_stop_lists():
    eng = corpus.english_stopwords()
    assert len(eng) == 318 and len(set(eng)) == 318
    assert {"the", "and", "of"} <= set(eng)
    assert corpus.default_domain_stopwords() == ("lgtm", "pinging", "ping", "ptal", "cc")


def test_unknown_stopword_set():
    with pytest.raises(DataError, match="unknown stopword_set"):
        CleanOptions(stopword_set="klingon")


@given(st.lists(st.sampled_from(["the", "lgtm", "design", "api", "ping", "of", "class"]), max_size=20))
def test_stopword_removal_is_order_preserving_filter(tokens):
    out = remove_stopwords(tokens, CleanOptions(stopword_set="english_plus_domain"))
    it = iter(tokens)
    assert all(any(t == u for u in it) for t in out)
    assert not set(out) & CleanOptions(stopword_set="english_plus_domain").stop_set()


def test_preprocess_pipeline():
    assert preprocess("<p>The API is LGTM</p>", CleanOptions(stopword_set="english_plus_domain")) == ["api"]


@pytest.mark.parametrize("texts, mean_length, vocab", [
    (["a b"], 2.0, 2),
    (["a", "a b c"], 2.0, 3),
    (["The design", "the THE"], 2.0, 2),
])
def test_stats(texts, mean_length, vocab):
    s = corpus.stats(make_dataset(texts, [0] * len(texts)))
    assert (s.mean_length, s.vocab_size) == (mean_length, vocab)
    assert s.total == len(texts)
