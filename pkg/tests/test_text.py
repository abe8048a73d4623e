import pytest
from hypothesis import given, settings, strategies as st

from fundlens.errors import SchemaError, SurrogateUnavailable
from fundlens.text import (
    Lexicon,
    LexiconEntry,
    campaign_text,
    clout_surrogate,
    extract,
    load_lexicon,
    tokenize,
)


def test_tokenize_basic():
    assert tokenize("We think, we KNOW!") == ["we", "think", "we", "know"]
    assert tokenize("don't stop") == ["don't", "stop"]
    assert tokenize("snake_case under_scores") == ["snake", "case", "under", "scores"]
    assert tokenize("a1 2b 3") == ["a1", "2b", "3"]
    assert tokenize("") == []
    assert tokenize("  \n\t ") == []


def test_bundled_lexicon_loads(lexicon):
    assert "i" in lexicon.categories
    assert "we" in lexicon.categories
    assert "you" in lexicon.categories
    assert len(lexicon.categories) >= 10


def test_lexicon_wildcard_and_multi_category(lexicon):
    # "think*" is a wildcard entry under insight; inflections must match.
    insight = lexicon.category_index("insight")
    assert insight in lexicon.match("think")
    assert insight in lexicon.match("thinking")
    assert lexicon.match("zzzz-not-a-word") == frozenset()


def test_exact_beats_nothing_and_is_case_insensitive(lexicon):
    we = lexicon.category_index("we")
    assert we in lexicon.match("we")
    feats_upper = extract("WE THINK", lexicon)
    feats_lower = extract("we think", lexicon)
    assert feats_upper.percentages == feats_lower.percentages


def test_extract_hand_counts(lexicon):
    # 4 words; "we" appears twice (we-category), "think" once (insight).
    feats = extract("we think we can", lexicon)
    assert feats.word_count == 4
    assert feats.percentages["we"] == pytest.approx(50.0)
    assert feats.percentages["insight"] == pytest.approx(25.0)
    assert feats.percentages["you"] == 0.0


def test_extract_empty_text(lexicon):
    feats = extract("", lexicon)
    assert feats.word_count == 0
    assert all(v == 0.0 for v in feats.percentages.values())


def test_multi_category_token_counts_in_each():
    lex = Lexicon(
        categories=["a", "b"],
        entries=[LexiconEntry("hello", False, frozenset({0, 1}))],
    )
    feats = extract("hello world", lex)
    assert feats.percentages["a"] == pytest.approx(50.0)
    assert feats.percentages["b"] == pytest.approx(50.0)


def test_load_lexicon_rejects_bad_files(tmp_path):
    bad = tmp_path / "bad.dic"
    bad.write_text("%\n1\ti\n2\ti\n%\nme\t1\n")  # duplicate category name
    with pytest.raises(SchemaError):
        load_lexicon(bad)
    bad2 = tmp_path / "bad2.dic"
    bad2.write_text("%\n1\ti\n%\nme\t9\n")  # unknown category reference
    with pytest.raises(SchemaError):
        load_lexicon(bad2)


def test_clout_surrogate_values(lexicon):
    # Balanced we/you vs i gives the logistic midpoint.
    feats = extract("", lexicon)
    assert clout_surrogate(feats) == pytest.approx(50.0)
    # All-"we" text pushes the score above 50; all-"I" below.
    high = extract("we we we we", lexicon)
    low = extract("i i i i", lexicon)
    assert clout_surrogate(high) > 50.0 > clout_surrogate(low)
    assert 0.0 <= clout_surrogate(low) <= 100.0


def test_clout_surrogate_requires_pronoun_categories():
    lex = Lexicon(categories=["misc"], entries=[LexiconEntry("x", False, frozenset({0}))])
    with pytest.raises(SurrogateUnavailable):
        clout_surrogate(extract("x", lex))


def test_campaign_text_joins_title_first():
    assert campaign_text("Help us", "we need support") == "Help us we need support"
    assert campaign_text("", "body only") == "body only"


@settings(max_examples=50, deadline=None)
@given(st.lists(st.sampled_from(["we", "think", "you", "i", "about", "zebra"]),
                min_size=1, max_size=40),
       st.randoms())
def test_extract_permutation_invariance(words, rnd):
    lexicon = load_lexicon()
    shuffled = list(words)
    rnd.shuffle(shuffled)
    a = extract(" ".join(words), lexicon)
    b = extract(" ".join(shuffled), lexicon)
    assert a.word_count == b.word_count
    assert a.percentages == b.percentages


@settings(max_examples=50, deadline=None)
@given(st.text(alphabet=st.characters(max_codepoint=127), max_size=200))
def test_extract_never_crashes_and_stays_in_range(text):
    lexicon = load_lexicon()
    feats = extract(text, lexicon)
    assert feats.word_count >= 0
    for v in feats.percentages.values():
        assert 0.0 <= v <= 100.0


def test_duplicating_text_preserves_percentages(lexicon):
    text = "we think you know about family money"
    a = extract(text, lexicon)
    b = extract(text + " " + text, lexicon)
    assert b.word_count == 2 * a.word_count
    for k in a.percentages:
        assert b.percentages[k] == pytest.approx(a.percentages[k], abs=1e-12)
