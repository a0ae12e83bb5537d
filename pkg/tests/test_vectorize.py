import math
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from desmine import vectorize as vz
from desmine.errors import DataError

words = st.sampled_from(list("abcdefg"))
docs_st = st.lists(st.lists(words, min_size=1, max_size=8), min_size=1, max_size=10)


def _vocab(*tokens):
    return vz.Vocabulary({t: i for i, t in enumerate(tokens)})


@pytest.mark.parametrize("docs, min_df, max_features, expected", [
    ([["a", "b"], ["a"]], 2, None, {"a": 0}),
    ([["a"], ["b"]], 1, 1, {"a": 0}),
    ([["b", "b"], ["a"], ["c"]], 1, 2, {"a": 0, "b": 1}),
    ([["z", "y"], ["x"]], 1, None, {"x": 0, "y": 1, "z": 2}),
])
def test_build_vocabulary(docs, min_df, max_features, expected):
    assert vz.build_vocabulary(docs, min_df, max_features).index == expected


def test_empty_vocabulary_errors():
    with pytest.raises(DataError):
        vz.build_vocabulary([["a"]], min_df=2)
    with pytest.raises(DataError):
        vz.build_vocabulary([])


@given(docs_st, st.integers(1, 3), st.one_of(st.none(), st.integers(1, 5)))
def test_vocabulary_oracle(docs, min_df, max_features):
    df = Counter(t for d in docs for t in set(d))
    tf = Counter(t for d in docs for t in d)
    keep = sorted(t for t in df if df[t] >= min_df)
    if max_features is not None:
        keep = sorted(sorted(keep, key=lambda t: (-tf[t], t))[:max_features])
    if not keep:
        with pytest.raises(DataError):
            vz.build_vocabulary(docs, min_df, max_features)
        return
    vocab = vz.build_vocabulary(docs, min_df, max_features)
    assert vocab.tokens == keep
    assert sorted(vocab.index.values()) == list(range(len(keep)))


def test_top_bigrams():
    docs = [["pull", "request"]] * 5 + [["a", "b", "c"]]
    assert vz.top_bigrams(docs, k=1).pairs == (("pull", "request"),)
    assert len(vz.top_bigrams([["only"]], k=3)) == 0
    with pytest.raises(DataError):
        vz.top_bigrams(docs, k=0)


@given(docs_st, st.integers(1, 6))
def test_top_bigrams_ranked(docs, k):
    counts = Counter(p for d in docs for p in zip(d, d[1:]))
    got = vz.top_bigrams(docs, k).pairs
    assert len(got) == min(k, len(counts))
    keys = [(-counts[p], p) for p in got]
    assert keys == sorted(keys)
    if got and len(counts) > len(got):
        worst = (-counts[got[-1]], got[-1])
        assert all((-counts[p], p) > worst for p in counts if p not in got)


@pytest.mark.parametrize("tokens, vocab, bigrams, pairs", [
    (["a", "a", "b"], ("a", "b"), None, [(0, 2.0), (1, 1.0)]),
    (["z"], ("a",), None, []),
    (["pull", "request"], ("pull", "request"), (("pull", "request"),), [(0, 1.0), (1, 1.0), (2, 1.0)]),
    (["pull", "request", "pull", "request"], ("pull", "request"), (("pull", "request"),), [(0, 2.0), (1, 2.0), (2, 1.0)]),
])
def test_count_vectorize(tokens, vocab, bigrams, pairs):
    bs = vz.BigramSet(bigrams, 1) if bigrams else None
    v = vz.count_vectorize(tokens, _vocab(*vocab), bs)
    assert v.to_pairs() == pairs
    assert v.dim == len(vocab) + (len(bigrams) if bigrams else 0)


def test_count_matrix_matches_rows():
    docs = [["a", "b", "a"], ["c"], []]
    vocab = _vocab("a", "b")
    m = vz.count_matrix(docs, vocab)
    assert m.shape == (3, 2)
    np.testing.assert_array_equal(m.toarray(), [[2, 1], [0, 0], [0, 0]])


@pytest.mark.parametrize("docs, token, expected", [
    ([["a"]], "a", 1.0),
    ([["a"], ["b"], ["c"]], "a", math.log(2) + 1),
])
def test_idf_values(docs, token, expected):
    vocab = vz.build_vocabulary(docs)
    assert vz.fit_tfidf(docs, vocab).weight(vocab, token) == pytest.approx(expected, abs=1e-12)


def test_idf_three_docs_df_one_value():
    assert math.log(4 / 2) + 1 == pytest.approx(1.6931, abs=1e-4)


@given(docs_st)
def test_idf_monotone_in_df(docs):
    vocab = vz.build_vocabulary(docs)
    idf = vz.fit_tfidf(docs, vocab)
    df = Counter(t for d in docs for t in set(d))
    for s in vocab.index:
        for t in vocab.index:
            if df[s] < df[t]:
                assert idf.weight(vocab, s) > idf.weight(vocab, t)


def test_tfidf_hand_example():
    vocab = _vocab("a", "b")
    idf = vz.IdfModel(np.array([1.0, 2.0]), 3)
    v = vz.tfidf_vectorize(["a", "a", "b"], vocab, idf)
    np.testing.assert_allclose(v.to_dense(), [2 ** -0.5, 2 ** -0.5], atol=1e-12)
    single = vz.tfidf_vectorize(["b"], vocab, idf)
    assert single.to_pairs() == [(1, 1.0)]
    assert len(vz.tfidf_vectorize(["q"], vocab, idf)) == 0


@given(docs_st)
def test_tfidf_rows_unit_or_empty(docs):
    vocab = vz.build_vocabulary(docs[:3])
    idf = vz.fit_tfidf(docs[:3], vocab)
    m = vz.tfidf_matrix(docs, vocab, idf).toarray()
    norms = np.linalg.norm(m, axis=1)
    assert np.all((np.abs(norms - 1) < 1e-12) | (norms == 0))
    assert np.all(m >= 0)


def test_load_embeddings(tmp_path):
    p = tmp_path / "e.vec"
    p.write_text("2 3\na 1 0 0\nb 0 1 0\n", encoding="utf-8")
    t = vz.load_embeddings(p)
    assert (len(t), t.dim) == (2, 3)
    assert len(vz.load_embeddings(p, restrict_to={"a"})) == 1
    assert len(vz.load_embeddings(p, restrict_to=_vocab("b"))) == 1


def test_load_embeddings_without_header(tmp_path):
    p = tmp_path / "e.vec"
    p.write_text("a 1 0\nb 0 1\n", encoding="utf-8")
    assert vz.load_embeddings(p).dim == 2


@pytest.mark.parametrize("content, where", [
    ("2 3\na 1 0 0\nb 0 1\n", ":3:"),
    ("a 1 x\n", ":1:"),
])
def test_load_embeddings_errors(tmp_path, content, where):
    p = tmp_path / "e.vec"
    p.write_text(content, encoding="utf-8")
    with pytest.raises(DataError, match=where):
        vz.load_embeddings(p)


def test_embeddings_write_read_round_trip(tmp_path, rng):
    t = vz.EmbeddingTable(["x", "y", "z"], rng.normal(size=(3, 4)))
    vz.write_embeddings(t, tmp_path / "t.vec")
    back = vz.load_embeddings(tmp_path / "t.vec")
    assert back.tokens == t.tokens
    np.testing.assert_array_equal(back.vectors, t.vectors)


@pytest.fixture
def abc_table():
    return vz.EmbeddingTable(["a", "b", "c"], np.array([[1.0, 0, 0], [0, 1.0, 0], [0, 0, 1.0]]))


@pytest.mark.parametrize("tokens, expected", [
    (["a"], [1, 0, 0]),
    (["a", "b"], [0.5, 0.5, 0]),
    (["q", "r"], [0, 0, 0]),
    (["a", "q"], [1, 0, 0]),
])
def test_embed_average(abc_table, tokens, expected):
    np.testing.assert_allclose(vz.embed_average(tokens, abc_table), expected, atol=1e-15)


@given(st.lists(st.sampled_from(["a", "b", "c", "oov"]), max_size=12), st.randoms())
def test_embed_average_permutation_invariant(tokens, rnd):
    table = vz.EmbeddingTable(["a", "b", "c"], np.array([[0.1, 0.7], [0.3, -0.2], [1e-9, 3.3]]))
    shuffled = list(tokens)
    rnd.shuffle(shuffled)
    assert np.array_equal(vz.embed_average(tokens, table), vz.embed_average(shuffled, table))


def test_expand_vocabulary():
    table = vz.EmbeddingTable(
        ["library", "framework", "banana"],
        np.array([[1.0, 0.0], [0.9, math.sqrt(1 - 0.81)], [0.0, 1.0]]),
    )
    assert vz.expand_vocabulary(["library"], table, n=1, tau=0.5) == ["library", "framework"]
    assert vz.expand_vocabulary(["library"], table, n=1, tau=1.0) == ["library"]
    assert vz.expand_vocabulary(["oov"], table) == ["oov"]
    with pytest.raises(DataError):
        vz.expand_vocabulary(["library"], table, n=0)


@settings(max_examples=50)
@given(st.lists(st.sampled_from(list("abcdef")), max_size=6), st.integers(1, 3), st.floats(-1, 1))
def test_expand_vocabulary_oracle(tokens, n, tau):
    rng = np.random.default_rng(7)
    names = list("abcdef")
    vecs = rng.normal(size=(6, 3))
    table = vz.EmbeddingTable(names, vecs)
    unit = vecs / np.linalg.norm(vecs, axis=1, keepdims=True)
    out = list(tokens)
    for t in tokens:
        i = names.index(t)
        ranked = sorted(((-float(unit[i] @ unit[j]), names[j]) for j in range(6) if j != i))[:n]
        for negsim, nb in ranked:
            if -negsim >= tau and nb not in out:
                out.append(nb)
    assert vz.expand_vocabulary(tokens, table, n, tau) == out
    assert vz.expand_vocabulary(tokens, table, n, tau)[:len(tokens)] == tokens
